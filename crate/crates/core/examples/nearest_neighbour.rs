//! Mass transported to k-th nearest neighbours, and volumes of k-th order cells.

use hul::generators::{gen_matern2, gen_poisson};
use hul::rng::RngStream;
use hul::spectral::scattering_intensity;
use hul::torus::{KGrid, TorusBox};
use hul::transports::{nn_transport, nn_volume_measure, NnTarget};

fn main() -> hul::Result<()> {
    let torus = TorusBox::new(2, 32.0)?;
    let kgrid = KGrid::new(torus, 4)?;
    for k in 1..=3 {
        let mut to_nn = Vec::new();
        let mut volumes = Vec::new();
        for i in 0..8 {
            let s = gen_poisson(torus, 1.0, RngStream::new(12, i))?;
            to_nn.push(nn_transport(&s, NnTarget::SelfExcluded, k)?);
            let m = gen_matern2(torus, 2.0, 0.4, RngStream::new(13, i))?;
            volumes.push(nn_volume_measure(&m, k, 384)?);
        }
        let a = scattering_intensity(&to_nn, &kgrid)?;
        let b = scattering_intensity(&volumes, &kgrid)?;
        println!(
            "k={k}: poisson→nn S(k_min) = {:.3}, matérn cell volumes S(k_min) = {:.4}, mass {:.1}",
            a.radial_bins[0].mean,
            b.radial_bins[0].mean,
            volumes[0].total_weight()
        );
    }
    Ok(())
}
