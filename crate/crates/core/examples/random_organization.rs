//! A few sweeps of random organization leave the low-k structure factor of
//! a Poisson sample close to 1.

use hul::generators::gen_poisson;
use hul::rng::RngStream;
use hul::spectral::scattering_intensity;
use hul::torus::{KGrid, TorusBox};
use hul::transports::random_organization_step;

fn main() -> hul::Result<()> {
    let torus = TorusBox::new(2, 32.0)?;
    let kgrid = KGrid::new(torus, 4)?;
    let mut samples: Vec<_> = (0..20)
        .map(|i| gen_poisson(torus, 1.0, RngStream::new(1, i)))
        .collect::<hul::Result<_>>()?;
    for step in 0..=5u64 {
        let s = scattering_intensity(&samples, &kgrid)?;
        println!(
            "step {step}: S(k_min) = {:.3} ± {:.3}",
            s.radial_bins[0].mean, s.radial_bins[0].stderr
        );
        samples = samples
            .iter()
            .enumerate()
            .map(|(i, x)| random_organization_step(x, 0.5, 0.25, RngStream::new(2, i as u64).derive(step)))
            .collect::<hul::Result<_>>()?;
    }
    Ok(())
}
