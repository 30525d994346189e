//! Runs a TOML experiment; defaults to the hyperuniformerer config.
//!
//! cargo run --release --example pipeline -- examples/configs/matern_voronoi.toml

use std::path::PathBuf;

use hul::pipeline::{run_pipeline, PipelineConfig};

fn main() -> hul::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/examples/configs/poisson_hyperuniformerer.toml"
        ))
    });
    let cfg = PipelineConfig::load(&path)?;
    let run = run_pipeline(&cfg)?;
    println!("{} files in {}", run.manifest.outputs.len(), run.dir.display());
    if let (Some(b), Some(a)) = (&run.spectrum_before, &run.spectrum_after) {
        for (x, y) in b.radial_bins.iter().zip(&a.radial_bins) {
            println!("k={:.3}  before {:.3}  after {:.3}", x.k_mid, x.mean, y.mean);
        }
    }
    if let Some(idx) = run.summary.index_after.or(run.summary.index_before) {
        println!("S(0) ≈ {:.3} ± {:.3} ({:?})", idx.estimate, idx.stderr, idx.class);
    }
    Ok(())
}
