//! Window-frequency bounds for `(v,k)`-persistent episodes and the top-k
//! approximation error bound.
//!
//! For a window of `m` batches with per-batch top-k frequencies `f_k^s` and
//! maximum batch-to-batch change `delta`:
//!
//! - every `(v,k)`-persistent episode has window frequency at least
//!   `f_L = sum(f_k^s) - (m-v)(m-v+1) * delta`,
//! - every episode that is not `(v,k)`-persistent stays below
//!   `f_U = sum(f_k^s) + v(v+1) * delta`.
//!
//! `f_U > f_L` for every `v`, so persistence alone cannot separate the two
//! classes; under a top-k separation of `(phi, epsilon)` the number of
//! top-k errors is at most `epsilon * k * m / mu` with
//! `mu = min(m - v + 1, phi/2, (sqrt(1 + 2 m phi) - 1) / 2)`, provided
//! `phi/2 > max(1, (1 - v/m)(m - v + 1))` and at least `k` persistent
//! episodes exist. Three special cases have closed forms, computed here in
//! exact rational arithmetic.

use num::rational::Ratio;

use crate::{Error, Result};

/// Inputs of the bound calculator.
#[derive(Debug, Clone)]
pub struct BoundsInput {
    pub k: u64,
    pub m: u32,
    pub v: u32,
    pub delta: f64,
    pub phi: f64,
    pub epsilon: f64,
    /// Per-batch top-k frequencies, one per window batch.
    pub fk_per_batch: Vec<u64>,
    /// Number of persistent episodes found, when known; the error bound
    /// additionally requires this to be at least `k`.
    pub persistent_count: Option<u64>,
}

/// The special-case closed forms of the error bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorollaryCase {
    /// `v = 1`: at most `epsilon k m / (m-1)` errors if `phi/2 > m-1`.
    DeepestMining,
    /// `v = m`: at most `epsilon k m` errors if `phi/2 > 1`.
    BatchTopK,
    /// `v = floor((m+1)/2)`: at most `4 epsilon k m^2 / (m^2-1)` errors if
    /// `phi/2 > ceil((m-1)/2) * ceil((m+1)/2) / m`.
    Midpoint,
}

/// A closed-form error bound in exact rational arithmetic: the maximum
/// number of errors is `epsilon * k * error_factor`, valid when
/// `phi / 2 > min_phi_over_2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorollaryBound {
    pub case: CorollaryCase,
    pub error_factor: Ratio<i64>,
    pub min_phi_over_2: Ratio<i64>,
}

impl CorollaryBound {
    /// The bound as a float, for a given `epsilon` and `k`.
    pub fn max_errors(&self, epsilon: f64, k: u64) -> f64 {
        epsilon * k as f64 * *self.error_factor.numer() as f64
            / *self.error_factor.denom() as f64
    }
}

#[derive(Debug, Clone)]
pub struct BoundsReport {
    /// Lower bound on window frequencies of `(v,k)`-persistent episodes.
    pub f_l: f64,
    /// Upper bound on window frequencies of non-persistent episodes.
    pub f_u: f64,
    /// Minimum number of band-gap batches of a potentially mixing episode.
    pub mu: f64,
    /// `epsilon * k * m / mu`.
    pub max_errors: f64,
    /// Whether the guarantee's preconditions hold for these inputs.
    pub valid: bool,
    /// Closed forms applying to this `v` (two entries when cases coincide,
    /// e.g. `v = 1` at `m = 2`).
    pub corollary: Vec<CorollaryBound>,
}

/// Closed-form error bounds that apply at this `(m, v)`, in exact rationals.
pub fn corollary_bounds(m: u32, v: u32) -> Vec<CorollaryBound> {
    let m_i = m as i64;
    let mut out = Vec::new();
    if v == 1 && m >= 2 {
        out.push(CorollaryBound {
            case: CorollaryCase::DeepestMining,
            error_factor: Ratio::new(m_i, m_i - 1),
            min_phi_over_2: Ratio::from_integer(m_i - 1),
        });
    }
    if v == m {
        out.push(CorollaryBound {
            case: CorollaryCase::BatchTopK,
            error_factor: Ratio::from_integer(m_i),
            min_phi_over_2: Ratio::from_integer(1),
        });
    }
    if m >= 2 && v == (m + 1) / 2 {
        let half_down = m_i / 2; // ceil((m-1)/2)
        let half_up = (m_i + 2) / 2; // ceil((m+1)/2)
        out.push(CorollaryBound {
            case: CorollaryCase::Midpoint,
            error_factor: Ratio::new(4 * m_i * m_i, m_i * m_i - 1),
            min_phi_over_2: Ratio::new(half_down * half_up, m_i),
        });
    }
    out
}

/// Evaluates the frequency bounds and the top-k approximation error bound.
pub fn bounds(input: &BoundsInput) -> Result<BoundsReport> {
    let BoundsInput {
        k,
        m,
        v,
        delta,
        phi,
        epsilon,
        ref fk_per_batch,
        persistent_count,
    } = *input;
    if m < 1 || v < 1 || v > m {
        return Err(Error::Config(format!("need 1 <= v <= m, got v={v}, m={m}")));
    }
    if k < 1 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if !(delta >= 0.0) || !(phi >= 0.0) || !(epsilon >= 0.0) {
        return Err(Error::Config(
            "delta, phi and epsilon must be non-negative".into(),
        ));
    }
    if fk_per_batch.len() != m as usize {
        return Err(Error::Config(format!(
            "need one f_k per window batch: got {} for m={m}",
            fk_per_batch.len()
        )));
    }

    let sum_fk: u64 = fk_per_batch.iter().sum();
    let mf = m as f64;
    let vf = v as f64;
    let f_l = sum_fk as f64 - (mf - vf) * (mf - vf + 1.0) * delta;
    let f_u = sum_fk as f64 + vf * (vf + 1.0) * delta;

    let condition = phi / 2.0 > f64::max(1.0, (1.0 - vf / mf) * (mf - vf + 1.0));
    let enough_persistent = persistent_count.map_or(true, |p| p >= k);
    let valid = condition && enough_persistent;

    let mu = (mf - vf + 1.0)
        .min(phi / 2.0)
        .min(0.5 * ((1.0 + 2.0 * mf * phi).sqrt() - 1.0));
    let max_errors = if mu > 0.0 {
        epsilon * k as f64 * mf / mu
    } else {
        f64::INFINITY
    };

    Ok(BoundsReport {
        f_l,
        f_u,
        mu,
        max_errors,
        valid,
        corollary: corollary_bounds(m, v),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(m: u32, v: u32, delta: f64, fk: u64) -> BoundsInput {
        BoundsInput {
            k: 25,
            m,
            v,
            delta,
            phi: 12.0,
            epsilon: 0.1,
            fk_per_batch: vec![fk; m as usize],
            persistent_count: None,
        }
    }

    #[test]
    fn frequency_bounds_example() {
        let rep = bounds(&input(10, 5, 2.0, 100)).unwrap();
        assert_eq!(rep.f_l, 940.0);
        assert_eq!(rep.f_u, 1060.0);
    }

    #[test]
    fn error_bound_example() {
        // m=10, v=5, phi=12: mu = min(6, 6, (sqrt(241)-1)/2 ~ 7.26) = 6
        let rep = bounds(&input(10, 5, 2.0, 100)).unwrap();
        assert_eq!(rep.mu, 6.0);
        assert!((rep.max_errors - 0.1 * 25.0 * 10.0 / 6.0).abs() < 1e-12);
        assert!(rep.valid);
    }

    #[test]
    fn corollary_v1_form() {
        let m = 10;
        let rep = bounds(&BoundsInput {
            phi: 2.0 * (m - 1) as f64 + 0.5,
            ..input(m, 1, 2.0, 100)
        })
        .unwrap();
        let c = rep
            .corollary
            .iter()
            .find(|c| c.case == CorollaryCase::DeepestMining)
            .unwrap();
        assert_eq!(c.error_factor, Ratio::new(10, 9));
        assert_eq!(c.min_phi_over_2, Ratio::from_integer(9));
        assert!(rep.valid);
    }

    #[test]
    fn f_u_exceeds_f_l_for_all_v() {
        for m in 1..=20u32 {
            for v in 1..=m {
                let rep = bounds(&input(m, v, 1.5, 50)).unwrap();
                assert!(rep.f_u > rep.f_l, "f_U > f_L must hold at m={m}, v={v}");
            }
        }
    }

    #[test]
    fn persistent_count_gates_validity() {
        let mut inp = input(10, 5, 2.0, 100);
        inp.persistent_count = Some(10);
        assert!(!bounds(&inp).unwrap().valid);
        inp.persistent_count = Some(25);
        assert!(bounds(&inp).unwrap().valid);
    }

    #[test]
    fn rejects_wrong_fk_length() {
        let mut inp = input(10, 5, 2.0, 100);
        inp.fk_per_batch.pop();
        assert!(bounds(&inp).is_err());
    }
}
