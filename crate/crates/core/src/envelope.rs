//! Geometry of the complementarity set `D = {z ∈ ℝ²₊ : z1·z2 = 0}` and the
//! closed forms of its Moreau and Lasry–Lions envelopes.
//!
//! The double envelope of the indicator of `D` with parameters `λ > μ > 0`
//! equals `r_β(z) / λ` where `β = μ/λ`. Everything in this module is written
//! in terms of the scaled function `r_β` and its gradient `R_β`, which only
//! depend on `β`.
//!
//! The plane is split into four regions (see [`Region`]); `r_β` is quadratic
//! on each of them and `R_β` is piecewise linear and globally Lipschitz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the plane, typically the value `(G_i(x), H_i(x))` of one
/// complementarity pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub z1: f64,
    pub z2: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { z1: 0.0, z2: 0.0 };

    #[inline]
    pub const fn new(z1: f64, z2: f64) -> Self {
        Self { z1, z2 }
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.z1 * self.z1 + self.z2 * self.z2
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.z1.hypot(self.z2)
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Self::new(s * self.z1, s * self.z2)
    }

    #[inline]
    pub fn sub(self, other: Point2) -> Self {
        Self::new(self.z1 - other.z1, self.z2 - other.z2)
    }

    pub fn is_finite(self) -> bool {
        self.z1.is_finite() && self.z2.is_finite()
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((z1, z2): (f64, f64)) -> Self {
        Self::new(z1, z2)
    }
}

/// Validated ratio `β = μ/λ ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Beta(f64);

impl Beta {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta < 1.0 {
            Ok(Self(beta))
        } else {
            Err(Error::Parameter(format!("beta must lie in (0,1), got {beta}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 - β`
    #[inline]
    fn gap(self) -> f64 {
        1.0 - self.0
    }
}

impl TryFrom<f64> for Beta {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Beta::new(v)
    }
}

impl From<Beta> for f64 {
    fn from(b: Beta) -> f64 {
        b.0
    }
}

/// The envelope parameters `(λ, β)`; `μ = β·λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    lambda: f64,
    beta: Beta,
}

impl EnvelopeParams {
    pub fn new(lambda: f64, beta: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { lambda, beta: Beta::new(beta)? })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.beta.get() * self.lambda
    }
}

/// Pieces of the piecewise definition of `r_β`.
///
/// * `OMinus`: the closed negative orthant.
/// * `TBeta`: the wedge `(1-β)z1 ≤ z2 ≤ z1/(1-β)`, `z1 > 0`.
/// * `HPlus`: `z2 ≥ [z1]₊/(1-β)` outside the two above.
/// * `HMinus`: everything else, i.e. `z1 ≥ [z2]₊/(1-β)` up to boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    OMinus,
    HPlus,
    HMinus,
    TBeta,
}

/// Region of `z` for the given `β`. Boundary points are assigned in the order
/// `OMinus`, `TBeta`, `HPlus`, `HMinus`.
pub fn classify_region(z: Point2, beta: Beta) -> Region {
    let g = beta.gap();
    if z.z1 <= 0.0 && z.z2 <= 0.0 {
        Region::OMinus
    } else if z.z1 > 0.0 && g * z.z1 <= z.z2 && z.z2 <= z.z1 / g {
        Region::TBeta
    } else if z.z2 >= z.z1.max(0.0) / g {
        Region::HPlus
    } else {
        Region::HMinus
    }
}

/// Whether `z` lies in the interior of the wedge `T_β`.
pub fn in_interior_t(z: Point2, beta: Beta) -> bool {
    let g = beta.gap();
    z.z1 > 0.0 && g * z.z1 < z.z2 && z.z2 < z.z1 / g
}

/// Euclidean projection onto `D`. On the tie `z1 = z2 > 0` the point `(z1, 0)`
/// is returned.
pub fn project_d(z: Point2) -> Point2 {
    if z.z1 > 0.0 && z.z2 > 0.0 {
        if z.z1 >= z.z2 {
            Point2::new(z.z1, 0.0)
        } else {
            Point2::new(0.0, z.z2)
        }
    } else {
        Point2::new(z.z1.max(0.0), z.z2.max(0.0))
    }
}

pub fn dist_to_d(z: Point2) -> f64 {
    z.sub(project_d(z)).norm()
}

/// Whether `z ∈ D` up to an absolute tolerance.
pub fn in_d(z: Point2, tol: f64) -> bool {
    z.z1 >= -tol && z.z2 >= -tol && z.z1.abs().min(z.z2.abs()) <= tol
}

/// Moreau envelope of the indicator of `D`: `dist(z, D)² / (2λ)`.
pub fn moreau_env(z: Point2, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    let d = dist_to_d(z);
    Ok(d * d / (2.0 * lambda))
}

/// The unique maximizer in the definition of the double envelope with
/// parameters `λ > μ > 0`.
pub fn p_lambda_mu(z: Point2, lambda: f64, mu: f64) -> Result<Point2> {
    if !(mu > 0.0 && mu < lambda) {
        return Err(Error::Parameter(format!(
            "require 0 < mu < lambda, got lambda={lambda}, mu={mu}"
        )));
    }
    let beta = Beta::new(mu / lambda)?;
    let stretch = lambda / (lambda - mu);
    Ok(match classify_region(z, beta) {
        Region::OMinus => z.scale(stretch),
        Region::HPlus => Point2::new(stretch * z.z1, z.z2),
        Region::HMinus => Point2::new(z.z1, stretch * z.z2),
        Region::TBeta => {
            let s = lambda / (2.0 * lambda - mu) * (z.z1 + z.z2);
            Point2::new(s, s)
        }
    })
}

/// `r_β(z) = λ·env_{λ,βλ} δ_D(z)`.
pub fn r_beta(z: Point2, beta: Beta) -> f64 {
    let b = beta.get();
    let g = beta.gap();
    match classify_region(z, beta) {
        Region::OMinus => z.norm_sq() / (2.0 * g),
        Region::TBeta => {
            // (z1+z2)²/(2β(2-β)) - ‖z‖²/(2β), regrouped to avoid the 1/β blow-up
            (2.0 * z.z1 * z.z2 - g * z.norm_sq()) / (2.0 * b * (2.0 - b))
        }
        Region::HPlus | Region::HMinus => {
            let m = z.z1.min(z.z2);
            m * m / (2.0 * g)
        }
    }
}

/// Gradient of [`r_beta`].
pub fn big_r_beta(z: Point2, beta: Beta) -> Point2 {
    let b = beta.get();
    let g = beta.gap();
    match classify_region(z, beta) {
        Region::OMinus => z.scale(1.0 / g),
        Region::TBeta => {
            let d = b * (2.0 - b);
            Point2::new((z.z2 - g * z.z1) / d, (z.z1 - g * z.z2) / d)
        }
        Region::HPlus => Point2::new(z.z1 / g, 0.0),
        Region::HMinus => Point2::new(0.0, z.z2 / g),
    }
}

/// Value and gradient of `r_β` from a single classification.
pub fn r_beta_with_grad(z: Point2, beta: Beta) -> (f64, Point2) {
    (r_beta(z, beta), big_r_beta(z, beta))
}

/// Global Lipschitz modulus of `R_β`: `max{1/β, 1/(1-β)}`.
pub fn lipschitz_modulus(beta: Beta) -> f64 {
    (1.0 / beta.get()).max(1.0 / beta.gap())
}

/// PL constant `min{1/(1-β), (1-β)/(β(2-β))}`.
///
/// Only a valid PL constant for `β ≥ 1/2`: on the diagonal of `T_β` the
/// ratio `½‖R_β‖²/r_β` equals `1/(2-β)`, which is smaller than `1/(1-β)`
/// whenever the first branch is active.
pub fn pl_constant(beta: Beta) -> f64 {
    let b = beta.get();
    let g = beta.gap();
    (1.0 / g).min(g / (b * (2.0 - b)))
}

/// `Π_D` outside the interior of `T_β`, the origin inside it.
pub fn project_d_c_beta(z: Point2, beta: Beta) -> Point2 {
    if in_interior_t(z, beta) {
        Point2::ORIGIN
    } else {
        project_d(z)
    }
}

/// Normal cones of `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cone {
    /// Regular (Fréchet) normal cone.
    Regular,
    /// Limiting (Mordukhovich) normal cone.
    Limiting,
    /// Clarke limiting cone: limiting cone at nonzero points, `N_D(0) ∪ ℝ²₊` at the origin.
    Clarke,
}

/// Default absolute tolerance for cone tests.
pub const CONE_TOL: f64 = 1e-8;

/// Whether `y` belongs to the given normal cone of `D` at `zbar`, with every
/// `= 0`, `> 0` and sign test relaxed by the absolute tolerance `tol`.
pub fn cone_membership(y: Point2, zbar: Point2, cone: Cone, tol: f64) -> Result<bool> {
    if !in_d(zbar, tol) {
        return Err(Error::Domain(format!(
            "base point ({}, {}) is not in D",
            zbar.z1, zbar.z2
        )));
    }
    if zbar.z1 > tol {
        return Ok(y.z1.abs() <= tol);
    }
    if zbar.z2 > tol {
        return Ok(y.z2.abs() <= tol);
    }
    let nonpositive = y.z1 <= tol && y.z2 <= tol;
    Ok(match cone {
        Cone::Regular => nonpositive,
        Cone::Limiting => nonpositive || in_d(y, tol),
        Cone::Clarke => nonpositive || (y.z1 >= -tol && y.z2 >= -tol),
    })
}
