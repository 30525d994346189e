//! Draws one sample from every generator and writes CSV + JSON sidecars.
//!
//! cargo run --release --example generators -- [out_dir]

use std::path::PathBuf;

use hul::generators::GeneratorSpec;
use hul::rng::RngStream;
use hul::torus::TorusBox;

fn main() -> hul::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/generators".into()));
    std::fs::create_dir_all(&out)?;
    let torus = TorusBox::new(2, 20.0)?;
    let specs = [
        GeneratorSpec::Poisson { intensity: 1.0 },
        GeneratorSpec::Binomial { intensity: 1.0 },
        GeneratorSpec::Lattice { stationarize: true },
        GeneratorSpec::CloakedLattice,
        GeneratorSpec::Matern2 {
            intensity: 2.0,
            hardcore_radius: 0.4,
        },
        GeneratorSpec::Phip {
            intensity: Some(1.0),
            line_intensity: None,
        },
    ];
    for (i, spec) in specs.iter().enumerate() {
        spec.validate(&torus)?;
        let s = spec.generate(torus, RngStream::new(7, i as u64))?;
        s.save(&out, spec.name())?;
        println!(
            "{:<16} {:>5} points (nominal intensity {:.3})",
            spec.name(),
            s.len(),
            spec.intensity(torus.dim())
        );
    }
    Ok(())
}
