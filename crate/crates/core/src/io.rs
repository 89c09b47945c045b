//! JSON problem files for quadratic MPCCs.
//!
//! ```json
//! {"n0": 0, "p": 1, "Q": [[0, 0, 1.0], [1, 1, 2.0]], "g": [-1.0, -2.0],
//!  "l0": null, "u0": null, "cc_pairs": [[0, 1]]}
//! ```
//!
//! `l0`/`u0` bound the first `n0` variables; `null` (for the whole array or an
//! element) means unbounded. The remaining variables are free. Supplying
//! `N`, `M` and `q` selects the linearly constrained form with `n = n0 + p`
//! variables; otherwise `n = n0 + 2p`. `A`/`a` add `A x₀ ≤ a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{gen_bound_qpcc, BoundQpccSpec, KTH3_CONSTANT};
use crate::model::{BoxSet, LinearCc, LinearIneq, QuadraticMpcc};
use crate::sparse::{SymTriplets, Triplets};

pub type Triplet = (usize, usize, f64);

/// On-disk form of a [`QuadraticMpcc`]. Field order is the canonical key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub n0: usize,
    pub p: usize,
    #[serde(rename = "Q")]
    pub q: Vec<Triplet>,
    pub g: Vec<f64>,
    pub l0: Option<Vec<Option<f64>>>,
    pub u0: Option<Vec<Option<f64>>>,
    pub cc_pairs: Vec<(usize, usize)>,
    /// Constant added to the objective when reporting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a_mat: Option<Vec<Triplet>>,
    #[serde(rename = "a", default, skip_serializing_if = "Option::is_none")]
    pub a_vec: Option<Vec<f64>>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_mat: Option<Vec<Triplet>>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m_mat: Option<Vec<Triplet>>,
    #[serde(rename = "q", default, skip_serializing_if = "Option::is_none")]
    pub q_vec: Option<Vec<f64>>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Compact JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("problem files always serialize");
        s.push('\n');
        s
    }

    pub fn is_linear_form(&self) -> bool {
        self.n_mat.is_some() || self.m_mat.is_some() || self.q_vec.is_some()
    }

    pub fn dim(&self) -> usize {
        if self.is_linear_form() {
            self.n0 + self.p
        } else {
            self.n0 + 2 * self.p
        }
    }

    pub fn to_problem(&self) -> Result<QuadraticMpcc> {
        let n = self.dim();
        let lower = expand_bounds(self.l0.as_deref(), self.n0, n, f64::NEG_INFINITY, "l0")?;
        let upper = expand_bounds(self.u0.as_deref(), self.n0, n, f64::INFINITY, "u0")?;
        let linear_ineq = match (&self.a_mat, &self.a_vec) {
            (None, None) => None,
            (Some(a), Some(b)) => {
                Some(LinearIneq { a_mat: Triplets::new(b.len(), self.n0, a.clone())?, a_vec: b.clone() })
            }
            _ => return Err(Error::Schema("\"A\" and \"a\" must be given together".into())),
        };
        let linear_cc = match (&self.n_mat, &self.m_mat, &self.q_vec) {
            (None, None, None) => None,
            (Some(nm), Some(mm), Some(q)) => {
                if q.len() != self.p {
                    return Err(Error::Schema(format!("\"q\" has length {} but p = {}", q.len(), self.p)));
                }
                Some(LinearCc {
                    n_mat: Triplets::new(self.p, self.n0, nm.clone())?,
                    m_mat: Triplets::new(self.p, self.p, mm.clone())?,
                    q_vec: q.clone(),
                })
            }
            _ => return Err(Error::Schema("\"N\", \"M\" and \"q\" must be given together".into())),
        };
        let problem = QuadraticMpcc {
            n0: self.n0,
            q: SymTriplets::new(n, self.q.clone())?,
            g: self.g.clone(),
            bounds: BoxSet::new(lower, upper)?,
            cc_pairs: self.cc_pairs.clone(),
            linear_ineq,
            linear_cc,
        };
        problem.validate()?;
        if problem.g.len() != n {
            return Err(Error::Schema(format!("\"g\" has length {} but n = {n}", problem.g.len())));
        }
        Ok(problem)
    }

    /// Inverse of [`ProblemFile::to_problem`]; `p` is taken from the pair count.
    pub fn from_problem(q: &QuadraticMpcc) -> Self {
        let n0 = q.n0;
        let first = |v: &[f64]| -> Option<Vec<Option<f64>>> {
            let vals: Vec<Option<f64>> = v[..n0].iter().map(|b| b.is_finite().then_some(*b)).collect();
            vals.iter().any(Option::is_some).then_some(vals)
        };
        let (n_mat, m_mat, q_vec, p) = match &q.linear_cc {
            Some(lc) => (
                Some(lc.n_mat.entries().to_vec()),
                Some(lc.m_mat.entries().to_vec()),
                Some(lc.q_vec.clone()),
                lc.q_vec.len(),
            ),
            None => (None, None, None, q.cc_pairs.len()),
        };
        ProblemFile {
            name: None,
            seed: None,
            n0,
            p,
            q: q.q.upper().to_vec(),
            g: q.g.clone(),
            l0: first(q.bounds.lower()),
            u0: first(q.bounds.upper()),
            cc_pairs: q.cc_pairs.clone(),
            constant: None,
            a_mat: q.linear_ineq.as_ref().map(|li| li.a_mat.entries().to_vec()),
            a_vec: q.linear_ineq.as_ref().map(|li| li.a_vec.clone()),
            n_mat,
            m_mat,
            q_vec,
        }
    }

    /// The file written for a generated bound-constrained instance.
    pub fn generated(spec: BoundQpccSpec) -> Self {
        ProblemFile {
            name: Some(format!("bound-qpcc-n0{}-p{}-s{}", spec.n0, spec.p, spec.seed)),
            seed: Some(spec.seed),
            ..Self::from_problem(&gen_bound_qpcc(spec))
        }
    }

    /// kth3 with its objective constant, so reported values match `0.5(x₁-1)² + (x₂-1)²`.
    pub fn kth3() -> Self {
        ProblemFile {
            name: Some("kth3".into()),
            constant: Some(KTH3_CONSTANT),
            ..Self::from_problem(&crate::generators::kth3_quadratic())
        }
    }
}

fn expand_bounds(given: Option<&[Option<f64>]>, n0: usize, n: usize, free: f64, key: &str) -> Result<Vec<f64>> {
    let mut out = vec![free; n];
    if let Some(vals) = given {
        if vals.len() != n0 {
            return Err(Error::Schema(format!("\"{key}\" has length {} but n0 = {n0}", vals.len())));
        }
        for (slot, v) in out.iter_mut().zip(vals) {
            if let Some(b) = v {
                if !b.is_finite() {
                    return Err(Error::Schema(format!("\"{key}\" contains a non-finite value")));
                }
                *slot = *b;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kth3_round_trip() {
        let file = ProblemFile::kth3();
        let text = file.to_json();
        let back = ProblemFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_json(), text);
        let q = back.to_problem().unwrap();
        assert_eq!(q, crate::generators::kth3_quadratic());
        assert!(text.find("\"n0\"").unwrap() < text.find("\"Q\"").unwrap());
        assert!(text.find("\"Q\"").unwrap() < text.find("\"cc_pairs\"").unwrap());
    }

    #[test]
    fn generated_round_trip() {
        let spec = BoundQpccSpec { n0: 10, p: 20, seed: 0 };
        let file = ProblemFile::generated(spec);
        let text = file.to_json();
        assert_eq!(ProblemFile::from_json(&text).unwrap().to_json(), text);
        let q = file.to_problem().unwrap();
        assert_eq!(q.dim(), 50);
        assert_eq!(q, gen_bound_qpcc(spec));
    }

    #[test]
    fn hand_written_file() {
        let text = r#"{"n0": 1, "p": 1, "Q": [[0, 0, 2], [1, 2, -1]], "g": [1, 0, 0],
            "l0": [null], "u0": [3], "cc_pairs": [[1, 2]]}"#;
        let q = ProblemFile::from_json(text).unwrap().to_problem().unwrap();
        assert_eq!(q.bounds.lower(), &[f64::NEG_INFINITY; 3]);
        assert_eq!(q.bounds.upper()[0], 3.0);
        assert_eq!(q.bounds.upper()[1], f64::INFINITY);
    }

    #[test]
    fn schema_errors() {
        let bad = [
            r#"{"n0": 1, "p": 0, "Q": [], "g": [1, 2], "l0": null, "u0": null, "cc_pairs": []}"#,
            r#"{"n0": 2, "p": 0, "Q": [], "g": [1, 2], "l0": [0], "u0": null, "cc_pairs": []}"#,
            r#"{"n0": 2, "p": 0, "Q": [[1, 0, 1]], "g": [1, 2], "l0": null, "u0": null, "cc_pairs": []}"#,
            r#"{"n0": 2, "p": 0, "Q": [], "g": [1, 2], "l0": null, "u0": null, "cc_pairs": [], "A": []}"#,
            r#"{"n0": 2, "p": 0, "Q": [], "g": [1, 2], "l0": null, "u0": null, "cc_pairs": [], "extra": 1}"#,
        ];
        for text in bad {
            let res = ProblemFile::from_json(text).and_then(|f| f.to_problem());
            assert!(matches!(res, Err(Error::Schema(_))), "{text}");
        }
    }

    #[test]
    fn linear_form() {
        let text = r#"{"n0": 1, "p": 1, "Q": [[0, 0, 1], [1, 1, 1]], "g": [0, 0],
            "l0": null, "u0": null, "cc_pairs": [], "A": [[0, 0, 1]], "a": [2],
            "N": [[0, 0, 1]], "M": [[0, 0, 1]], "q": [-1]}"#;
        let file = ProblemFile::from_json(text).unwrap();
        let q = file.to_problem().unwrap();
        assert_eq!(q.dim(), 2);
        assert_eq!(q.num_cc(), 1);
        assert_eq!(ProblemFile::from_problem(&q).to_problem().unwrap(), q);
    }
}
