use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Partition, PipelineConfig, TransportStep};
use crate::error::{Error, Result};
use crate::pgm::PixelImage;
use crate::rng::RngStream;
use crate::sample::PointSample;
use crate::spectral::{
    hyperuniformity_index, pixel_spectrum, s_theory_radial, scattering_intensity, variance_curve, HyperuniformityIndex,
    SpectrumEstimate,
};
use crate::torus::{KGrid, TorusBox};
use crate::transports::{
    displace, equal_volume_dispersion, hyperuniformerer, lloyd_step, nn_transport, nn_volume_measure,
    random_organization_step, stable_allocation, weighted_cell_measure, Allocation, NnTarget, TransportStats,
};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "HUL_THREADS";

/// Worker count requested through [`THREADS_ENV`], if set to a positive integer.
pub fn worker_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` on a pool sized by [`THREADS_ENV`] (all cores when unset).
pub fn with_worker_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_threads() {
        b = b.num_threads(n);
    }
    let pool = b
        .build()
        .map_err(|e| Error::Unsupported(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub crate_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub n_samples: usize,
    /// Stream id of every source sample; transport steps derive child streams from it.
    pub sample_streams: Vec<u64>,
    pub dim: usize,
    pub side: f64,
    pub generator: String,
    pub transports: Vec<String>,
    /// Relative path → SHA-256 of every file written by the run.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunSummary {
    pub n_sources: usize,
    pub n_outputs: usize,
    pub mean_source_points: f64,
    pub mean_output_mass: f64,
    pub empty_cells: usize,
    pub moved_outside: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index_before: Option<HyperuniformityIndex>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index_after: Option<HyperuniformityIndex>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub summary: RunSummary,
    pub spectrum_before: Option<SpectrumEstimate>,
    pub spectrum_after: Option<SpectrumEstimate>,
}

/// Everything produced from one source sample.
#[derive(Debug, Clone)]
pub struct SourceRun {
    pub source: PointSample,
    pub outputs: Vec<PointSample>,
    pub images: Vec<PixelImage>,
    pub stats: TransportStats,
}

fn add_stats(acc: &mut TransportStats, s: TransportStats) {
    acc.empty_cells += s.empty_cells;
    acc.moved_outside += s.moved_outside;
}

/// Applies one step to one sample, appending results to `out` / `images`.
pub fn apply_step(
    step: &TransportStep,
    s: &PointSample,
    stream: RngStream,
    out: &mut Vec<PointSample>,
    images: &mut Vec<PixelImage>,
    stats: &mut TransportStats,
) -> Result<()> {
    match step {
        TransportStep::Hyperuniformerer {
            resolution,
            variant,
            resamples,
        } => {
            let alloc = stable_allocation(s, *resolution)?;
            for r in 0..*resamples {
                let (t, st) = hyperuniformerer(s, &alloc, *variant, stream.derive(r as u64))?;
                add_stats(stats, st);
                out.push(t);
            }
        }
        TransportStep::WeightedCells {
            resolution,
            partition,
            placement,
        } => {
            let alloc = match partition {
                Partition::Stable => stable_allocation(s, *resolution)?,
                Partition::Voronoi => Allocation::voronoi(s, *resolution)?,
            };
            let (t, st) = weighted_cell_measure(s, &alloc, *placement, stream)?;
            add_stats(stats, st);
            out.push(t);
        }
        TransportStep::Displace { law } => out.push(displace(s, law, stream)?),
        TransportStep::RandomOrganization { radius, kick, steps } => {
            let mut cur = s.clone();
            for t in 0..*steps {
                cur = random_organization_step(&cur, *radius, *kick, stream.derive(t as u64))?;
            }
            out.push(cur);
        }
        TransportStep::Lloyd { resolution, steps } => {
            let mut cur = s.clone();
            for _ in 0..*steps {
                cur = lloyd_step(&cur, *resolution)?;
            }
            out.push(cur);
        }
        TransportStep::NnTransport { k } => out.push(nn_transport(s, NnTarget::SelfExcluded, *k)?),
        TransportStep::NnVolume { k, resolution } => out.push(nn_volume_measure(s, *k, *resolution)?),
        TransportStep::Dispersion { alpha, resolution } => {
            images.push(equal_volume_dispersion(s, *alpha, *resolution)?.image);
        }
    }
    Ok(())
}

/// Generates source sample `index` and pushes it through the transport chain.
pub fn run_source(cfg: &PipelineConfig, torus: TorusBox, index: usize) -> Result<SourceRun> {
    let stream = RngStream::new(cfg.replication.master_seed, index as u64);
    let source = cfg.generator.generate(torus, stream)?;
    let mut current = vec![source.clone()];
    let mut images = Vec::new();
    let mut stats = TransportStats::default();
    for (j, step) in cfg.transports.iter().enumerate() {
        let st = stream.derive(j as u64 + 1);
        let mut next = Vec::new();
        for (c, s) in current.iter().enumerate() {
            apply_step(step, s, st.derive(c as u64), &mut next, &mut images, &mut stats)?;
        }
        current = next;
    }
    Ok(SourceRun {
        source,
        outputs: current,
        images,
        stats,
    })
}

struct Writer {
    root: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn create(&mut self, rel: &str) -> Result<BufWriter<File>> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(rel.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    fn sample(&mut self, s: &PointSample, stem: &str) -> Result<()> {
        s.write_csv(self.create(&format!("samples/{stem}.csv"))?)?;
        serde_json::to_writer_pretty(self.create(&format!("samples/{stem}.json"))?, &s.manifest())?;
        Ok(())
    }
}

fn spectrum_of(groups: &[Vec<PointSample>], kgrid: &KGrid) -> Result<SpectrumEstimate> {
    if groups.iter().all(|g| g.len() <= 1) {
        let flat: Vec<PointSample> = groups.iter().flatten().cloned().collect();
        return scattering_intensity(&flat, kgrid);
    }
    let per: Vec<SpectrumEstimate> = groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| scattering_intensity(g, kgrid))
        .collect::<Result<_>>()?;
    SpectrumEstimate::pool(&per)
}

fn pixel_spectrum_of(groups: &[Vec<PixelImage>], kgrid: &KGrid) -> Result<SpectrumEstimate> {
    if groups.iter().all(|g| g.len() <= 1) {
        let flat: Vec<PixelImage> = groups.iter().flatten().cloned().collect();
        return pixel_spectrum(&flat, kgrid);
    }
    let per: Vec<SpectrumEstimate> = groups.iter().map(|g| pixel_spectrum(g, kgrid)).collect::<Result<_>>()?;
    SpectrumEstimate::pool(&per)
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Runs the pipeline into `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutput> {
    run_pipeline_in(cfg, &cfg.output_dir)
}

/// Runs the pipeline into `dir`, overriding the configured output directory.
pub fn run_pipeline_in(cfg: &PipelineConfig, dir: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    let torus = cfg.torus()?;
    let n = cfg.replication.n_samples;
    log::info!("running {n} samples of {} into {}", cfg.generator.name(), dir.display());
    let runs: Vec<SourceRun> = with_worker_pool(|| {
        (0..n)
            .into_par_iter()
            .map(|i| run_source(cfg, torus, i))
            .collect::<Result<Vec<_>>>()
    })??;
    fs::create_dir_all(dir)?;
    let mut w = Writer {
        root: dir.to_path_buf(),
        files: Vec::new(),
    };
    let has_transports = !cfg.transports.is_empty();
    if cfg.write_samples {
        for (i, r) in runs.iter().enumerate() {
            w.sample(&r.source, &format!("source_{i:04}"))?;
            if has_transports {
                for (c, s) in r.outputs.iter().enumerate() {
                    w.sample(s, &format!("out_{i:04}_{c:04}"))?;
                }
                for (c, im) in r.images.iter().enumerate() {
                    im.write_pgm(w.create(&format!("images/out_{i:04}_{c:04}.pgm"))?)?;
                }
            }
        }
    }

    let mut summary = RunSummary {
        n_sources: n,
        n_outputs: runs.iter().map(|r| r.outputs.len() + r.images.len()).sum(),
        mean_source_points: runs.iter().map(|r| r.source.len() as f64).sum::<f64>() / n as f64,
        ..Default::default()
    };
    let outs: Vec<&PointSample> = runs.iter().flat_map(|r| r.outputs.iter()).collect();
    if !outs.is_empty() {
        summary.mean_output_mass = outs.iter().map(|s| s.total_weight()).sum::<f64>() / outs.len() as f64;
    }
    for r in &runs {
        summary.empty_cells += r.stats.empty_cells;
        summary.moved_outside += r.stats.moved_outside;
    }

    let mut spectrum_before = None;
    let mut spectrum_after = None;
    if let Some(sp) = &cfg.analysis.spectrum {
        let kgrid = KGrid::new(torus, sp.max_index)?;
        let k_fit = sp.fit_k_max.unwrap_or(5.0 * kgrid.dk());
        let sources: Vec<Vec<PointSample>> = runs.iter().map(|r| vec![r.source.clone()]).collect();
        let before = spectrum_of(&sources, &kgrid)?;
        before.write_vectors_csv(w.create("spectrum_before_vectors.csv")?)?;
        before.write_radial_csv(w.create("spectrum_before_radial.csv")?)?;
        summary.index_before = hyperuniformity_index(&before, k_fit, sp.fit).ok();
        if has_transports {
            let after = if runs.iter().any(|r| !r.images.is_empty()) {
                let groups: Vec<Vec<PixelImage>> = runs.iter().map(|r| r.images.clone()).collect();
                pixel_spectrum_of(&groups, &kgrid)?
            } else {
                let groups: Vec<Vec<PointSample>> = runs.iter().map(|r| r.outputs.clone()).collect();
                spectrum_of(&groups, &kgrid)?
            };
            after.write_vectors_csv(w.create("spectrum_after_vectors.csv")?)?;
            after.write_radial_csv(w.create("spectrum_after_radial.csv")?)?;
            summary.index_after = hyperuniformity_index(&after, k_fit, sp.fit).ok();
            spectrum_after = Some(after);
        }
        for (j, model) in cfg.analysis.theory_overlays.iter().enumerate() {
            let vals = s_theory_radial(model, &kgrid)?;
            let mut wr = csv::Writer::from_writer(w.create(&format!("theory_{j:02}.csv"))?);
            wr.write_record(["k", "S"])?;
            for (s, v) in vals.iter().enumerate() {
                wr.write_record([((s + 1) as f64 * kgrid.dk()).to_string(), v.to_string()])?;
            }
            wr.flush()?;
        }
        spectrum_before = Some(before);
    }
    if let Some(vc) = &cfg.analysis.variance {
        let vstream = RngStream::new(cfg.replication.master_seed, u64::MAX);
        let sources: Vec<PointSample> = runs.iter().map(|r| r.source.clone()).collect();
        variance_curve(&sources, &vc.radii, vc.n_windows, vstream)?.write_csv(w.create("variance_before.csv")?)?;
        if !outs.is_empty() {
            let outs: Vec<PointSample> = outs.iter().map(|s| (*s).clone()).collect();
            variance_curve(&outs, &vc.radii, vc.n_windows, vstream.derive(1))?
                .write_csv(w.create("variance_after.csv")?)?;
        }
    }
    serde_json::to_writer_pretty(w.create("summary.json")?, &summary)?;

    let mut outputs = BTreeMap::new();
    for rel in &w.files {
        outputs.insert(rel.clone(), sha256_file(&dir.join(rel))?);
    }
    let manifest = RunManifest {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash()?,
        master_seed: cfg.replication.master_seed,
        n_samples: n,
        sample_streams: (0..n as u64).collect(),
        dim: torus.dim(),
        side: torus.side(),
        generator: cfg.generator.name().to_string(),
        transports: runs
            .first()
            .and_then(|r| r.outputs.first())
            .map(|s| s.meta.transports.clone())
            .unwrap_or_default(),
        outputs,
    };
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("manifest.json"))?), &manifest)?;
    fs::write(dir.join("config.toml"), cfg.to_toml_string()?)?;
    Ok(RunOutput {
        dir: dir.to_path_buf(),
        manifest,
        summary,
        spectrum_before,
        spectrum_after,
    })
}
