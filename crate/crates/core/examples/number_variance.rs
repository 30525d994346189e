use hul::generators::{gen_cloaked_lattice, gen_poisson};
use hul::rng::RngStream;
use hul::spectral::variance_curve;
use hul::torus::TorusBox;

fn main() -> hul::Result<()> {
    let torus = TorusBox::new(2, 40.0)?;
    let radii = [1.0, 2.0, 4.0, 8.0, 12.0];
    let pois: Vec<_> = (0..10)
        .map(|i| gen_poisson(torus, 1.0, RngStream::new(8, i)))
        .collect::<hul::Result<_>>()?;
    let cl: Vec<_> = (0..10)
        .map(|i| gen_cloaked_lattice(torus, RngStream::new(9, i)))
        .collect::<hul::Result<_>>()?;
    let a = variance_curve(&pois, &radii, 500, RngStream::new(10, 0))?;
    let b = variance_curve(&cl, &radii, 500, RngStream::new(10, 1))?;
    println!("{:>5} {:>14} {:>14}", "r", "poisson", "cloaked");
    for i in 0..radii.len() {
        println!(
            "{:5.1} {:8.3} ±{:.3} {:8.3} ±{:.3}",
            radii[i], a.normalized_variance[i], a.stderr[i], b.normalized_variance[i], b.stderr[i]
        );
    }
    Ok(())
}
