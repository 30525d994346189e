use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use hul::fields::IidKernel;
use hul::generators::GeneratorSpec;
use hul::pgm::PixelImage;
use hul::pipeline::{
    apply_step, run_pipeline_in, verify, verify_run, with_worker_pool, PipelineConfig, Suite, TransportStep,
};
use hul::rng::RngStream;
use hul::sample::PointSample;
use hul::spectral::{hyperuniformity_index, pixel_spectrum, scattering_intensity, variance_curve, ExtrapolationFit};
use hul::torus::{KGrid, TorusBox};
use hul::transports::{CellPlacement, Displacement, HyperuniformererVariant, TransportStats};
use hul::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hul",
    version,
    about = "Invariant transports of stationary point processes on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one sample from a generator.
    Generate(GenerateArgs),
    /// Apply a transport step to a sample CSV.
    Transform(TransformArgs),
    /// Structure factor, variance curve and hyperuniformity index of samples.
    Analyze(AnalyzeArgs),
    /// Run a TOML-configured experiment.
    Pipeline(PipelineArgs),
    /// Run a property suite at pinned seeds.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Poisson,
    Binomial,
    Lattice,
    CloakedLattice,
    Matern2,
    Phip,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[arg(long, default_value_t = 1.0)]
    intensity: f64,
    #[arg(long, default_value_t = 0.4)]
    hardcore_radius: f64,
    #[arg(long)]
    line_intensity: Option<f64>,
    #[arg(long, default_value_t = 64.0)]
    side: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Take box, generator and seed from a pipeline config instead.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    Hyperuniformerer,
    WeightedCells,
    Displace,
    RandomOrganization,
    Lloyd,
    NnTransport,
    NnVolume,
    Dispersion,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    transport: Option<Transport>,
    /// TOML file with `[[transports]]` tables, applied in order.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    resolution: usize,
    #[arg(long, default_value_t = 1)]
    resamples: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    #[arg(long, default_value_t = 0.25)]
    kick: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Sample CSVs or PGM images (all of one kind).
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long, default_value_t = 16)]
    max_index: usize,
    /// Box side for PGM inputs; CSV inputs carry their own box.
    #[arg(long)]
    side: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    n_windows: usize,
    #[arg(long)]
    fit_k_max: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    side: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    max_index: Option<usize>,
    /// Rerun and compare hashes, check theory overlays, write verify_report.json.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn generate(a: GenerateArgs) -> Result<()> {
    let (torus, spec, stream) = match &a.config {
        Some(path) => {
            let cfg = PipelineConfig::load(path)?;
            (
                cfg.torus()?,
                cfg.generator.clone(),
                RngStream::new(cfg.replication.master_seed, a.stream),
            )
        }
        None => {
            let model = a.model.ok_or_else(|| Error::InvalidParameter {
                name: "model".into(),
                reason: "--model or --config is required".into(),
            })?;
            let spec = match model {
                Model::Poisson => GeneratorSpec::Poisson { intensity: a.intensity },
                Model::Binomial => GeneratorSpec::Binomial { intensity: a.intensity },
                Model::Lattice => GeneratorSpec::Lattice { stationarize: true },
                Model::CloakedLattice => GeneratorSpec::CloakedLattice,
                Model::Matern2 => GeneratorSpec::Matern2 {
                    intensity: a.intensity,
                    hardcore_radius: a.hardcore_radius,
                },
                Model::Phip => GeneratorSpec::Phip {
                    intensity: a.line_intensity.is_none().then_some(a.intensity),
                    line_intensity: a.line_intensity,
                },
            };
            (TorusBox::new(a.dim, a.side)?, spec, RngStream::new(a.seed, a.stream))
        }
    };
    spec.validate(&torus)?;
    let s = spec.generate(torus, stream)?;
    fs::create_dir_all(&a.out)?;
    s.save(&a.out, "sample")?;
    println!("{} points -> {}", s.len(), a.out.join("sample.csv").display());
    Ok(())
}

#[derive(Deserialize)]
struct StepFile {
    transports: Vec<TransportStep>,
}

fn transform(a: TransformArgs) -> Result<()> {
    let input = PointSample::load(&a.input)?;
    let steps = match (&a.config, a.transport) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)?;
            toml::from_str::<StepFile>(&text)?.transports
        }
        (None, Some(t)) => vec![match t {
            Transport::Hyperuniformerer => TransportStep::Hyperuniformerer {
                resolution: a.resolution,
                variant: HyperuniformererVariant::Single,
                resamples: a.resamples,
            },
            Transport::WeightedCells => TransportStep::WeightedCells {
                resolution: a.resolution,
                partition: Default::default(),
                placement: CellPlacement::UniformInCell,
            },
            Transport::Displace => TransportStep::Displace {
                law: Displacement::Iid {
                    kernel: IidKernel::Gaussian { sigma: a.sigma },
                },
            },
            Transport::RandomOrganization => TransportStep::RandomOrganization {
                radius: a.radius,
                kick: a.kick,
                steps: a.steps,
            },
            Transport::Lloyd => TransportStep::Lloyd {
                resolution: a.resolution,
                steps: a.steps,
            },
            Transport::NnTransport => TransportStep::NnTransport { k: a.k },
            Transport::NnVolume => TransportStep::NnVolume {
                k: a.k,
                resolution: a.resolution,
            },
            Transport::Dispersion => TransportStep::Dispersion {
                alpha: a.alpha,
                resolution: a.resolution,
            },
        }],
        (None, None) => {
            return Err(Error::InvalidParameter {
                name: "transport".into(),
                reason: "--transport or --config is required".into(),
            })
        }
    };
    let stream = RngStream::new(a.seed, input.meta.stream);
    let mut current = vec![input];
    let mut images: Vec<PixelImage> = Vec::new();
    let mut stats = TransportStats::default();
    for (j, step) in steps.iter().enumerate() {
        step.validate(&current.first().map(|s| s.torus).ok_or(Error::Empty("sample set"))?)?;
        let st = stream.derive(j as u64 + 1);
        let mut next = Vec::new();
        for (c, s) in current.iter().enumerate() {
            apply_step(step, s, st.derive(c as u64), &mut next, &mut images, &mut stats)?;
        }
        current = next;
    }
    fs::create_dir_all(&a.out)?;
    for (c, s) in current.iter().enumerate() {
        s.save(&a.out, &format!("out_{c:04}"))?;
    }
    for (c, im) in images.iter().enumerate() {
        im.write_pgm(BufWriter::new(File::create(a.out.join(format!("out_{c:04}.pgm")))?))?;
    }
    println!(
        "{} samples, {} images -> {} ({} empty cells, {} atoms moved outside)",
        current.len(),
        images.len(),
        a.out.display(),
        stats.empty_cells,
        stats.moved_outside
    );
    Ok(())
}

fn is_pgm(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    fs::create_dir_all(&a.out)?;
    let spec = if a.input.iter().all(|p| is_pgm(p)) {
        let side = a.side.ok_or_else(|| Error::InvalidParameter {
            name: "side".into(),
            reason: "required for PGM inputs".into(),
        })?;
        let images = a
            .input
            .iter()
            .map(|p| PixelImage::read_pgm(File::open(p)?))
            .collect::<Result<Vec<_>>>()?;
        pixel_spectrum(&images, &KGrid::new(TorusBox::new(2, side)?, a.max_index)?)?
    } else {
        let samples = a
            .input
            .iter()
            .map(|p| PointSample::load(p))
            .collect::<Result<Vec<_>>>()?;
        let kgrid = KGrid::new(samples[0].torus, a.max_index)?;
        if !a.radii.is_empty() {
            variance_curve(&samples, &a.radii, a.n_windows, RngStream::new(a.seed, 0))?
                .write_csv(BufWriter::new(File::create(a.out.join("variance.csv"))?))?;
        }
        scattering_intensity(&samples, &kgrid)?
    };
    spec.write_vectors_csv(BufWriter::new(File::create(a.out.join("spectrum_vectors.csv"))?))?;
    spec.write_radial_csv(BufWriter::new(File::create(a.out.join("spectrum_radial.csv"))?))?;
    let k_fit = a.fit_k_max.unwrap_or(5.0 * spec.kgrid.dk());
    match hyperuniformity_index(&spec, k_fit, ExtrapolationFit::Linear) {
        Ok(idx) => {
            fs::write(a.out.join("index.json"), serde_json::to_string_pretty(&idx)?)?;
            println!("S(0) ≈ {:.4} ± {:.4} ({:?})", idx.estimate, idx.stderr, idx.class);
        }
        Err(e) => log::warn!("no hyperuniformity index: {e}"),
    }
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = a.seed {
        cfg.replication.master_seed = seed;
    }
    if let Some(side) = a.side {
        cfg.torus.side = side;
    }
    if let Some(dim) = a.dim {
        cfg.torus.dim = dim;
    }
    if let Some(m) = a.max_index {
        if let Some(sp) = cfg.analysis.spectrum.as_mut() {
            sp.max_index = m;
        }
    }
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    let run = run_pipeline_in(&cfg, &dir)?;
    println!(
        "{} sources, {} outputs -> {}",
        run.summary.n_sources,
        run.summary.n_outputs,
        dir.display()
    );
    if a.verify {
        let report = verify_run(&cfg, &run)?;
        report.write_json(&dir.join("verify_report.json"))?;
        print_report(&report);
        if !report.passed {
            return Err(Error::Verification("pipeline checks failed".into()));
        }
    }
    Ok(())
}

fn print_report(r: &hul::pipeline::VerifyReport) {
    for c in &r.checks {
        println!(
            "{} {:<40} measured {:.6} (threshold {}) {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.threshold,
            c.detail
        );
    }
}

fn run_verify(a: VerifyArgs) -> Result<()> {
    let suite: Suite = a.suite.parse()?;
    let report = verify(suite)?;
    print_report(&report);
    match &a.out {
        Some(p) => report.write_json(p)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    if !report.passed {
        return Err(Error::Verification(format!("suite {suite} failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => with_worker_pool(|| generate(a)),
        Command::Transform(a) => with_worker_pool(|| transform(a)),
        Command::Analyze(a) => with_worker_pool(|| analyze(a)),
        Command::Pipeline(a) => pipeline(a).map(Ok),
        Command::Verify(a) => run_verify(a).map(Ok),
    }
    .and_then(|r| r);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Verification(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e @ (Error::InvalidParameter { .. } | Error::DimensionMismatch { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
