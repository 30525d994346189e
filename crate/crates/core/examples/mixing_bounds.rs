//! Total variation bounds for Gaussian pairs and the lattice mixing report.

use nalgebra::DMatrix;

use hul::fields::{gaussian_pair_tv_bound, gaussian_pair_tv_logdet_bound, CovarianceKind, CovarianceModel};
use hul::mixing::kappa_bound_lattice;

fn main() -> hul::Result<()> {
    for rho in [0.0, 0.1, 0.3, 0.5] {
        let a = DMatrix::from_element(1, 1, rho);
        println!(
            "rho={rho:.1}: bound {:.4}, log-det form {:.4}",
            gaussian_pair_tv_bound(&a)?,
            gaussian_pair_tv_logdet_bound(&a)?
        );
    }
    for (kind, var, range) in [
        (CovarianceKind::White, 1.0, 1.0),
        (CovarianceKind::SquaredExponential, 0.1, 1.0),
        (CovarianceKind::Exponential, 1.0, 0.5),
        (CovarianceKind::Spherical, 1.0, 3.0),
    ] {
        let m = CovarianceModel::new(kind, var, range)?;
        let r = kappa_bound_lattice(&m, 2, 8)?;
        println!(
            "{kind:?}: Σ bound = {:.6} (+ tail ≤ {:.2e}), verdict {:?}",
            r.lattice_sum, r.tail_bound, r.verdict
        );
    }
    Ok(())
}
