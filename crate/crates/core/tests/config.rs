use std::path::Path;

use hul::pipeline::{PipelineConfig, TransportStep};

fn example(name: &str) -> PipelineConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples/configs")
        .join(name);
    PipelineConfig::load(&path).unwrap()
}

#[test]
fn example_configs_round_trip() {
    for name in [
        "poisson_hyperuniformerer.toml",
        "cloaked_lattice.toml",
        "matern_voronoi.toml",
        "dispersion.toml",
    ] {
        let cfg = example(name);
        let again = PipelineConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again, "{name}");
        assert_eq!(cfg.hash().unwrap(), again.hash().unwrap());
    }
}

#[test]
fn hash_ignores_output_dir_only() {
    let a = example("poisson_hyperuniformerer.toml");
    let mut b = a.clone();
    b.output_dir = "somewhere/else".into();
    assert_eq!(a.hash().unwrap(), b.hash().unwrap());
    b.replication.master_seed += 1;
    assert_ne!(a.hash().unwrap(), b.hash().unwrap());
}

#[test]
fn dispersion_must_be_last() {
    let mut cfg = example("dispersion.toml");
    cfg.transports.push(TransportStep::Lloyd {
        resolution: 64,
        steps: 1,
    });
    assert!(cfg.validate().is_err());
}

#[test]
fn rejects_bad_values() {
    let base = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/poisson_hyperuniformerer.toml"),
    )
    .unwrap();
    for (from, to) in [
        ("side = 32.0", "side = -1.0"),
        ("dim = 2", "dim = 4"),
        ("n_samples = 10", "n_samples = 0"),
        ("intensity = 1.0", "intensity = 0.0"),
        ("resolution = 128", "resolution = 0"),
    ] {
        let text = base.replace(from, to);
        assert_ne!(text, base);
        assert!(PipelineConfig::from_toml_str(&text).is_err(), "{to} accepted");
    }
    assert!(PipelineConfig::from_toml_str("output_dir = 3").is_err());
}
