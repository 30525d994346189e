//! Mixing diagnostics for Gaussian displacement fields indexed by the lattice.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fields::{gaussian_pair_tv_bound, mixing_sum_check, CovarianceModel, MixingSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingVerdict {
    ConditionHolds,
    RegimeViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagBound {
    pub y: Vec<i64>,
    /// Spectral norm of `Cov(Z(y), Z(0))`.
    pub cov_norm: f64,
    /// Total variation bound; `1` where the bound's regime does not apply.
    pub tv_bound: f64,
    pub regime_violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub dim: usize,
    pub cutoff: usize,
    /// `Σ_{‖y‖∞ ≤ cutoff} bound(y)`, including the trivial bound `1` at `y = 0`.
    pub lattice_sum: f64,
    /// Bound on the contribution of lags beyond the cutoff.
    pub tail_bound: f64,
    pub covariance_sum: MixingSum,
    pub per_lag: Vec<LagBound>,
    pub verdict: MixingVerdict,
}

impl MixingReport {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

fn lags(dim: usize, cutoff: usize) -> Vec<Vec<i64>> {
    let c = cutoff as i64;
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|y| {
                (-c..=c).map(move |v| {
                    let mut y = y.clone();
                    y.push(v);
                    y
                })
            })
            .collect();
    }
    out
}

/// Bounds the mixing coefficient of the field `Z` at every lattice lag with
/// `‖y‖∞ ≤ cutoff`.
///
/// The components of `Z` are iid with covariance `C`, so after whitening the
/// pair `(Z(0), Z(y))` has cross-covariance `ρ(|y|)·I_d`. Lags with
/// `|ρ| > 1/2` fall outside the bound's regime; they are flagged and counted
/// with the trivial bound `1`. The lag `y = 0` always carries `1` and is not
/// part of the regime check.
pub fn kappa_bound_lattice(model: &CovarianceModel, dim: usize, cutoff: usize) -> Result<MixingReport> {
    model.validate()?;
    if !(model.variance > 0.0) {
        return Err(invalid("variance", "must be positive"));
    }
    if !(1..=3).contains(&dim) {
        return Err(invalid("dim", format!("must be 1, 2 or 3, got {dim}")));
    }
    let covariance_sum = mixing_sum_check(model, dim, cutoff)?;
    let per_lag: Vec<LagBound> = lags(dim, cutoff)
        .into_par_iter()
        .map(|y| {
            let h = (y.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt();
            let c = model.cov(h);
            if y.iter().all(|&v| v == 0) {
                return LagBound {
                    y,
                    cov_norm: c.abs(),
                    tv_bound: 1.0,
                    regime_violated: false,
                };
            }
            let a = DMatrix::<f64>::identity(dim, dim) * (c / model.variance);
            let (tv_bound, regime_violated) = match gaussian_pair_tv_bound(&a) {
                Ok(b) => (b, false),
                Err(_) => (1.0, true),
            };
            LagBound {
                y,
                cov_norm: c.abs(),
                tv_bound,
                regime_violated,
            }
        })
        .collect();
    let lattice_sum = per_lag.iter().map(|l| l.tv_bound).sum();
    // beyond the cutoff |ρ| ≤ 1/2 and sqrt(-d·log(1-ρ²)) ≤ sqrt(4d/3)·|ρ|
    let tail_bound = (4.0 * dim as f64 / 3.0).sqrt() * covariance_sum.tail_bound / model.variance;
    let verdict = if per_lag.iter().any(|l| l.regime_violated) {
        MixingVerdict::RegimeViolated
    } else {
        MixingVerdict::ConditionHolds
    };
    Ok(MixingReport {
        dim,
        cutoff,
        lattice_sum,
        tail_bound,
        covariance_sum,
        per_lag,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::CovarianceKind;

    #[test]
    fn white_field_only_has_the_origin() {
        let m = CovarianceModel::new(CovarianceKind::White, 1.0, 1.0).unwrap();
        let r = kappa_bound_lattice(&m, 2, 4).unwrap();
        assert_eq!(r.verdict, MixingVerdict::ConditionHolds);
        assert_eq!(r.lattice_sum, 1.0);
        assert_eq!(r.per_lag.len(), 81);
        assert_eq!(r.tail_bound, 0.0);
    }

    #[test]
    fn spherical_lags_beyond_range_vanish() {
        let m = CovarianceModel::new(CovarianceKind::Spherical, 1.0, 3.0).unwrap();
        let r = kappa_bound_lattice(&m, 2, 6).unwrap();
        for l in &r.per_lag {
            let h = (l.y.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt();
            if h >= 3.0 {
                assert_eq!(l.tv_bound, 0.0);
            }
        }
        assert_eq!(r.tail_bound, 0.0);
        // lag 1 has ρ = 1 - 1.5/3 + 0.5/27 > 1/2
        assert_eq!(r.verdict, MixingVerdict::RegimeViolated);
    }

    #[test]
    fn squared_exponential_sums_settle() {
        let m = CovarianceModel::new(CovarianceKind::SquaredExponential, 0.1, 1.0).unwrap();
        let sums: Vec<f64> = (1..=12)
            .map(|c| kappa_bound_lattice(&m, 1, c).unwrap().lattice_sum)
            .collect();
        for w in sums.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(sums[10] - sums[9] < 1e-9);
        let r = kappa_bound_lattice(&m, 1, 10).unwrap();
        assert_eq!(r.verdict, MixingVerdict::ConditionHolds);
        assert!(r.tail_bound < 1e-9);
    }

    #[test]
    fn report_serializes() {
        let m = CovarianceModel::new(CovarianceKind::Exponential, 1.0, 0.5).unwrap();
        let r = kappa_bound_lattice(&m, 1, 3).unwrap();
        let mut buf = Vec::new();
        r.write_json(&mut buf).unwrap();
        let back: MixingReport = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, r);
    }
}
