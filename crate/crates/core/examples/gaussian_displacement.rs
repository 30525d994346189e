//! Lattice perturbed by a correlated Gaussian field versus iid kernels.

use hul::fields::{CovarianceKind, CovarianceModel, IidKernel};
use hul::generators::gen_lattice;
use hul::rng::RngStream;
use hul::spectral::{s_theory_radial, scattering_intensity, TheoryModel};
use hul::torus::{KGrid, TorusBox};
use hul::transports::{displace, Displacement};

fn main() -> hul::Result<()> {
    let torus = TorusBox::new(2, 24.0)?;
    let kgrid = KGrid::new(torus, 10)?;
    let iid = Displacement::Iid {
        kernel: IidKernel::Gaussian { sigma: 0.3 },
    };
    let field = Displacement::Field {
        model: CovarianceModel::new(CovarianceKind::SquaredExponential, 0.09, 2.0)?,
    };
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..20 {
        let lat = gen_lattice(torus, RngStream::new(9, i), true)?;
        a.push(displace(&lat, &iid, RngStream::new(10, i))?);
        b.push(displace(&lat, &field, RngStream::new(11, i))?);
    }
    let sa = scattering_intensity(&a, &kgrid)?;
    let sb = scattering_intensity(&b, &kgrid)?;
    let th = s_theory_radial(&TheoryModel::PerturbedLattice { displacement: iid }, &kgrid)?;
    println!("{:>7} {:>8} {:>8} {:>8}", "k", "iid", "theory", "field");
    for i in 0..kgrid.max_index {
        println!(
            "{:7.3} {:8.4} {:8.4} {:8.4}",
            sa.radial_bins[i].k_mid, sa.radial_bins[i].mean, th[i], sb.radial_bins[i].mean
        );
    }
    Ok(())
}
