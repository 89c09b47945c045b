//! Brute-force references for testing. Quadratic cost; not part of the
//! shipped library.

use crate::envelope::Point2;

/// A uniform axis grid `lo, lo + h, …, hi` with `steps` nodes, used on both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        assert!(lo < hi, "empty grid [{lo}, {hi}]");
        assert!(steps >= 3, "grid needs at least 3 nodes");
        Self { lo, hi, steps }
    }

    /// Square grid of half-width `‖z‖/(1-β) + 3` centred on `z`, wide enough
    /// to hold the maximizer of the double envelope with `μ = βλ`.
    pub fn around(z: Point2, beta: f64, steps: usize) -> (Self, Self) {
        assert!(0.0 < beta && beta < 1.0);
        let r = (z.z1 * z.z1 + z.z2 * z.z2).sqrt() / (1.0 - beta) + 3.0;
        (Self::new(z.z1 - r, z.z1 + r, steps), Self::new(z.z2 - r, z.z2 + r, steps))
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.steps - 1) as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        (0..self.steps).map(move |i| if i + 1 == self.steps { self.hi } else { self.lo + i as f64 * h })
    }
}

fn sq(v: f64) -> f64 {
    v * v
}

/// Squared distance from `w` to the union of the two nonnegative axes, by
/// comparing against each ray separately.
fn dist_sq_to_axes(w: Point2) -> f64 {
    let to_first = sq(w.z1 - w.z1.max(0.0)) + sq(w.z2);
    let to_second = sq(w.z1) + sq(w.z2 - w.z2.max(0.0));
    to_first.min(to_second)
}

/// `min_{t} ‖z - w(t)‖²/(2λ)` over `w = (t,0)` and `w = (0,t)` with `t ≥ 0`
/// taken from the grid nodes together with the exact foot points of `z`.
pub fn brute_moreau(z: Point2, lambda: f64, grid: GridSpec) -> f64 {
    let mut ts: Vec<f64> = grid.nodes().filter(|t| *t >= 0.0).collect();
    ts.extend([0.0, z.z1.max(0.0), z.z2.max(0.0)]);
    let mut best = f64::INFINITY;
    for &t in &ts {
        best = best.min(sq(z.z1 - t) + sq(z.z2)).min(sq(z.z1) + sq(z.z2 - t));
    }
    best / (2.0 * lambda)
}

/// `sup_w dist²(w, D)/(2λ) - ‖w - z‖²/(2μ)` over a 2-D grid. Every local
/// maximum of the grid is then refined by repeated zooming onto `±2h`.
pub fn brute_double_envelope(z: Point2, lambda: f64, mu: f64, grid: (GridSpec, GridSpec)) -> f64 {
    assert!(0.0 < mu && mu < lambda, "need 0 < mu < lambda");
    let value = |w: Point2| dist_sq_to_axes(w) / (2.0 * lambda) - (sq(w.z1 - z.z1) + sq(w.z2 - z.z2)) / (2.0 * mu);
    let (gx, gy) = grid;
    let xs: Vec<f64> = gx.nodes().collect();
    let ys: Vec<f64> = gy.nodes().collect();
    let (nx, ny) = (xs.len(), ys.len());
    let vals: Vec<f64> = xs.iter().flat_map(|&a| ys.iter().map(move |&b| (a, b))).map(|(a, b)| value(Point2::new(a, b))).collect();
    let at = |i: usize, j: usize| vals[i * ny + j];

    let mut best = f64::NEG_INFINITY;
    for i in 0..nx {
        for j in 0..ny {
            let v = at(i, j);
            let peak = (i.saturating_sub(1)..(i + 2).min(nx))
                .all(|a| (j.saturating_sub(1)..(j + 2).min(ny)).all(|b| at(a, b) <= v));
            if !peak {
                continue;
            }
            let mut local = v;
            let (mut cx, mut cy, mut hx, mut hy) = (xs[i], ys[j], gx.step(), gy.step());
            for _ in 0..ZOOM_LEVELS {
                let fx = GridSpec::new(cx - 2.0 * hx, cx + 2.0 * hx, ZOOM_STEPS);
                let fy = GridSpec::new(cy - 2.0 * hy, cy + 2.0 * hy, ZOOM_STEPS);
                for a in fx.nodes() {
                    for b in fy.nodes() {
                        let v = value(Point2::new(a, b));
                        if v > local {
                            local = v;
                            (cx, cy) = (a, b);
                        }
                    }
                }
                (hx, hy) = (fx.step(), fy.step());
            }
            best = best.max(local);
        }
    }
    best
}

const ZOOM_LEVELS: usize = 4;
const ZOOM_STEPS: usize = 41;

/// Central differences `(f(x + h e_j) - f(x - h e_j)) / 2h`.
pub fn finite_diff_grad<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0);
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            probe[j] = x[j] + h;
            let up = f(&probe);
            probe[j] = x[j] - h;
            let down = f(&probe);
            probe[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::EnvelopeParams;
    use crate::generators::kth3;
    use crate::smoothing::SmoothedProblem;
    use approx::assert_relative_eq;

    fn fine() -> GridSpec {
        GridSpec::new(-5.0, 5.0, 1001)
    }

    #[test]
    fn moreau_examples() {
        assert!((brute_moreau(Point2::new(1.0, 1.0), 1.0, fine()) - 0.5).abs() < 1e-6);
        assert_eq!(brute_moreau(Point2::new(2.0, 0.0), 1.0, fine()), 0.0);
        assert!((brute_moreau(Point2::new(-1.0, -2.0), 0.5, fine()) - 5.0).abs() < 1e-6);
    }

    #[test]
    fn double_envelope_examples() {
        for z in [Point2::new(0.0, 2.0), Point2::new(1.5, 0.0), Point2::ORIGIN] {
            let v = brute_double_envelope(z, 1.0, 0.5, GridSpec::around(z, 0.5, 81));
            assert!(v.abs() < 5e-3, "{z:?}: {v}");
        }
        let z = Point2::new(1.0, 1.0);
        let v = brute_double_envelope(z, 1.0, 0.5, GridSpec::around(z, 0.5, 81));
        assert!((v - 2.0 / 3.0).abs() < 5e-3);
        let z = Point2::new(-1.0, -1.0);
        let v = brute_double_envelope(z, 1.0, 0.5, GridSpec::around(z, 0.5, 81));
        assert!((v - 2.0).abs() < 5e-3);
    }

    #[test]
    fn finite_differences() {
        let g = finite_diff_grad(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]), &[1.0, 2.0], 1e-6);
        assert!((g[0] - 1.0).abs() < 1e-8 && (g[1] - 2.0).abs() < 1e-8);
        let g = finite_diff_grad(|x| 3.0 * x[0] - 2.0 * x[1], &[0.4, -7.0], 1e-3);
        assert_relative_eq!(g[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(g[1], -2.0, max_relative = 1e-12);
    }

    #[test]
    fn smoothed_kth3_gradient() {
        let p = kth3();
        let sp = SmoothedProblem::new(&p, EnvelopeParams::new(1.0, 0.9).unwrap());
        let x = [0.3, 0.7];
        let fd = finite_diff_grad(|x| sp.s_eval(x), &x, 1e-6);
        let g = sp.s_grad(&x);
        for j in 0..2 {
            assert_relative_eq!(fd[j], g[j], max_relative = 1e-6);
        }
    }
}
