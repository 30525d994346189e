use hul::generators::gen_poisson;
use hul::rng::RngStream;
use hul::spectral::scattering_intensity;
use hul::torus::{KGrid, TorusBox};
use hul::transports::lloyd_step;

fn main() -> hul::Result<()> {
    let torus = TorusBox::new(2, 32.0)?;
    let kgrid = KGrid::new(torus, 6)?;
    let mut samples: Vec<_> = (0..20)
        .map(|i| gen_poisson(torus, 1.0, RngStream::new(4, i)))
        .collect::<hul::Result<_>>()?;
    for step in 0..=6 {
        let s = scattering_intensity(&samples, &kgrid)?;
        let bins: Vec<String> = s.radial_bins.iter().map(|b| format!("{:.3}", b.mean)).collect();
        println!("lloyd {step}: {}", bins.join(" "));
        samples = samples.iter().map(|x| lloyd_step(x, 256)).collect::<hul::Result<_>>()?;
    }
    Ok(())
}
