//! Property suites run by `hul verify` at pinned seeds.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::run::{run_pipeline_in, with_worker_pool, RunOutput};
use crate::error::{invalid, Error, Result};
use crate::fields::{gaussian_pair_tv_bound, IidKernel};
use crate::generators::{gen_binomial, gen_cloaked_lattice, gen_matern2, gen_phip, gen_poisson};
use crate::rng::RngStream;
use crate::sample::PointSample;
use crate::spectral::{
    hyperuniformity_index, pixel_spectrum, s_hyperuniformerer_conditional, s_hyperuniformerer_mc, s_theory_radial,
    scattering_intensity, ExtrapolationFit, SpectrumEstimate, TheoryModel,
};
use crate::torus::{KGrid, TorusBox};
use crate::transports::{
    displace, equal_volume_dispersion, find_blocking_pair, hyperuniformerer, lloyd_step, nn_transport,
    nn_volume_measure, random_organization_step, stable_allocation, weighted_cell_measure, Allocation, CellPlacement,
    Displacement, HyperuniformererVariant, NnTarget,
};

const SEED: u64 = 20240611;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Fairness,
    Stability,
    Spectra,
    Bounds,
    Conservation,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fairness" => Self::Fairness,
            "stability" => Self::Stability,
            "spectra" => Self::Spectra,
            "bounds" => Self::Bounds,
            "conservation" => Self::Conservation,
            "all" => Self::All,
            _ => return Err(invalid("suite", format!("unknown suite '{s}'"))),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Fairness => "fairness",
            Self::Stability => "stability",
            Self::Spectra => "spectra",
            Self::Bounds => "bounds",
            Self::Conservation => "conservation",
            Self::All => "all",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            measured,
            threshold,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn new(suite: impl Into<String>, checks: Vec<Check>) -> Self {
        Self {
            suite: suite.into(),
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Runs one suite (or all of them) on the worker pool.
pub fn verify(suite: Suite) -> Result<VerifyReport> {
    with_worker_pool(|| {
        let checks = match suite {
            Suite::Fairness => fairness()?,
            Suite::Stability => stability()?,
            Suite::Spectra => spectra()?,
            Suite::Bounds => bounds()?,
            Suite::Conservation => conservation()?,
            Suite::All => {
                let mut all = fairness()?;
                all.extend(stability()?);
                all.extend(bounds()?);
                all.extend(conservation()?);
                all.extend(spectra()?);
                all
            }
        };
        Ok(VerifyReport::new(suite.to_string(), checks))
    })?
}

fn balanced(n: usize) -> Result<(PointSample, Allocation)> {
    let torus = TorusBox::new(1, n as f64)?;
    let s = gen_binomial(torus, 1.0, RngStream::new(SEED, n as u64))?;
    let a = stable_allocation(&s, 100 * n)?;
    Ok((s, a))
}

fn fairness() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in [5, 10, 20] {
        let (_, a) = balanced(n)?;
        let t = a.cell_table();
        let dev = (0..n).map(|p| t.sites_of(p).len().abs_diff(100)).max().unwrap_or(0);
        out.push(Check::new(
            format!("fairness N={n}"),
            dev == 0 && a.outside_count() == 0,
            dev as f64,
            0.0,
            "max |sites - M/N|",
        ));
    }
    Ok(out)
}

fn stability() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in [5, 10, 20] {
        let (s, a) = balanced(n)?;
        let bp = find_blocking_pair(&a, &s);
        out.push(Check::new(
            format!("stability N={n}"),
            bp.is_none(),
            bp.is_some() as u8 as f64,
            0.0,
            "blocking pairs",
        ));
    }
    let torus = TorusBox::new(2, 15f64.sqrt())?;
    let s = gen_binomial(torus, 1.0, RngStream::new(SEED, 15))?;
    let a = stable_allocation(&s, 39)?;
    let bp = find_blocking_pair(&a, &s);
    out.push(Check::new(
        "stability N=15 d=2 unbalanced",
        bp.is_none(),
        bp.is_some() as u8 as f64,
        0.0,
        "blocking pairs",
    ));
    Ok(out)
}

/// `∫∫ |p_ρ − p_0|` for the standard bivariate normal, by the midpoint rule.
pub fn gaussian_pair_l1_quadrature(rho: f64, half_width: f64, n: usize) -> f64 {
    let h = 2.0 * half_width / n as f64;
    let det = 1.0 - rho * rho;
    let c_rho = 1.0 / (std::f64::consts::TAU * det.sqrt());
    let c0 = 1.0 / std::f64::consts::TAU;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let x = -half_width + (i as f64 + 0.5) * h;
            let mut acc = 0.0;
            for j in 0..n {
                let y = -half_width + (j as f64 + 0.5) * h;
                let p = c_rho * (-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det)).exp();
                let q = c0 * (-(x * x + y * y) / 2.0).exp();
                acc += (p - q).abs();
            }
            acc
        })
        .sum::<f64>()
        * h
        * h
}

fn bounds() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut prev = -1.0;
    let mut monotone = true;
    for rho in [0.1, 0.3, 0.5] {
        let b = gaussian_pair_tv_bound(&DMatrix::from_element(1, 1, rho))?;
        let tv = gaussian_pair_l1_quadrature(rho, 9.0, 1200);
        monotone &= b > prev;
        prev = b;
        out.push(Check::new(
            format!("tv bound rho={rho}"),
            b >= tv,
            b - tv,
            0.0,
            format!("bound {b:.6} vs quadrature {tv:.6}"),
        ));
    }
    out.push(Check::new(
        "tv bound monotone",
        monotone,
        0.0,
        0.0,
        "rho in {0.1, 0.3, 0.5}",
    ));
    let zero = gaussian_pair_tv_bound(&DMatrix::zeros(1, 1))?;
    out.push(Check::new("tv bound at A=0", zero == 0.0, zero, 0.0, "exact zero"));
    Ok(out)
}

fn conservation() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let torus = TorusBox::new(2, 16.0)?;
    let s = gen_poisson(torus, 1.0, RngStream::new(SEED, 1))?;
    let vor = Allocation::voronoi(&s, 128)?;
    let (w, _) = weighted_cell_measure(&s, &vor, CellPlacement::UniformInCell, RngStream::new(SEED, 2))?;
    let err = (w.total_weight() - torus.volume()).abs();
    out.push(Check::new("voronoi cell mass", err < 1e-9, err, 1e-9, "|Σ w - side²|"));
    let v = nn_volume_measure(&s, 2, 128)?;
    let err = (v.total_weight() - torus.volume()).abs();
    out.push(Check::new(
        "second-order cell mass",
        err < 1e-9,
        err,
        1e-9,
        "|Σ w - side²|",
    ));
    let t = nn_transport(&s, NnTarget::SelfExcluded, 1)?;
    let err = (t.total_weight() - s.len() as f64).abs();
    out.push(Check::new("nearest-neighbour mass", err < 1e-9, err, 1e-9, "|Σ w - N|"));
    let d = equal_volume_dispersion(&s, 0.3, 256)?;
    let worst = d
        .cells
        .iter()
        .map(|c| (c.covered as f64 - 0.3 * c.pixels as f64).abs())
        .fold(0.0, f64::max);
    out.push(Check::new(
        "dispersion per-cell fraction",
        worst <= 1.0,
        worst,
        1.0,
        "pixels",
    ));
    Ok(out)
}

fn samples_of(n: usize, f: impl Fn(usize) -> Result<PointSample> + Sync + Send) -> Result<Vec<PointSample>> {
    (0..n).into_par_iter().map(f).collect()
}

fn lowest(spec: &SpectrumEstimate) -> f64 {
    spec.radial_bins[0].mean
}

fn spectra() -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let torus = TorusBox::new(2, 64.0)?;
    let kgrid = KGrid::new(torus, 32)?;
    let pois = samples_of(50, |i| gen_poisson(torus, 1.0, RngStream::new(SEED, i as u64)))?;
    let spec = scattering_intensity(&pois, &kgrid)?;
    let worst = spec
        .radial_bins
        .iter()
        .map(|b| (b.mean - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(Check::new(
        "poisson flatness",
        worst <= 0.1,
        worst,
        0.1,
        "max |S - 1| over bins",
    ));
    let idx = hyperuniformity_index(&spec, 5.0 * kgrid.dk(), ExtrapolationFit::Linear)?;
    out.push(Check::new(
        "poisson index contains 1",
        idx.ci_low <= 1.0 && 1.0 <= idx.ci_high,
        idx.estimate,
        1.0,
        format!("ci [{:.3}, {:.3}]", idx.ci_low, idx.ci_high),
    ));

    let law = Displacement::Iid {
        kernel: IidKernel::Gaussian { sigma: 1.0 },
    };
    let moved = pois
        .par_iter()
        .enumerate()
        .map(|(i, s)| displace(s, &law, RngStream::new(SEED, 1000 + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let spec = scattering_intensity(&moved, &kgrid)?;
    let worst = spec
        .radial_bins
        .iter()
        .map(|b| (b.mean - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(Check::new(
        "displacement invariance",
        worst <= 0.1,
        worst,
        0.1,
        "max |S - 1| over bins",
    ));

    for (dim, max_index) in [(1, 128), (2, 32)] {
        let torus = TorusBox::new(dim, 64.0)?;
        let kgrid = KGrid::new(torus, max_index)?;
        let cl = samples_of(50, |i| gen_cloaked_lattice(torus, RngStream::new(SEED, i as u64)))?;
        let spec = scattering_intensity(&cl, &kgrid)?;
        let th = s_theory_radial(&TheoryModel::CloakedLattice, &kgrid)?;
        let worst = spec
            .radial_bins
            .iter()
            .zip(&th)
            .map(|(b, t)| (b.mean - t).abs() / b.stderr.max(1e-300))
            .fold(0.0, f64::max);
        out.push(Check::new(
            format!("cloaked lattice d={dim}"),
            worst < 3.0,
            worst,
            3.0,
            "max |S - theory| / stderr",
        ));
    }

    let torus = TorusBox::new(2, 32.0)?;
    let kgrid = KGrid::new(torus, 8)?;
    let runs = (0..20)
        .into_par_iter()
        .map(|i| -> Result<(SpectrumEstimate, SpectrumEstimate, SpectrumEstimate)> {
            let s = gen_poisson(torus, 1.0, RngStream::new(SEED, i as u64))?;
            let a = stable_allocation(&s, 128)?;
            let reps = (0..50)
                .map(|r| {
                    hyperuniformerer(
                        &s,
                        &a,
                        HyperuniformererVariant::Single,
                        RngStream::new(SEED, i as u64).derive(r),
                    )
                    .map(|x| x.0)
                })
                .collect::<Result<Vec<_>>>()?;
            let emp = scattering_intensity(&reps, &kgrid)?;
            let t = a.cell_table();
            let mc = s_hyperuniformerer_mc(&t, &kgrid, usize::MAX, RngStream::new(SEED, 5000 + i as u64))?;
            let cond = s_hyperuniformerer_conditional(&t, &kgrid)?;
            Ok((emp, mc, cond))
        })
        .collect::<Result<Vec<_>>>()?;
    let emp = SpectrumEstimate::pool(&runs.iter().map(|r| r.0.clone()).collect::<Vec<_>>())?;
    let mc = SpectrumEstimate::pool(&runs.iter().map(|r| r.1.clone()).collect::<Vec<_>>())?;
    let b = &emp.radial_bins;
    out.push(Check::new(
        "hyperuniformerer lowest bin",
        b[0].mean < 0.25,
        b[0].mean,
        0.25,
        "S at k_min",
    ));
    out.push(Check::new(
        "hyperuniformerer low-k trend",
        b[0].mean < b[1].mean && b[1].mean < b[2].mean,
        b[2].mean - b[0].mean,
        0.0,
        format!("{:.3} < {:.3} < {:.3}", b[0].mean, b[1].mean, b[2].mean),
    ));
    let worst = b
        .iter()
        .zip(&mc.radial_bins)
        .map(|(e, m)| (e.mean - m.mean).abs() / (e.stderr.powi(2) + m.stderr.powi(2)).sqrt())
        .fold(0.0, f64::max);
    out.push(Check::new(
        "hyperuniformerer vs cell route",
        worst < 3.0,
        worst,
        3.0,
        "max |Δ| / combined stderr",
    ));
    let cond = SpectrumEstimate::pool(&runs.iter().map(|r| r.2.clone()).collect::<Vec<_>>())?;
    let worst = b
        .iter()
        .zip(&cond.radial_bins)
        .map(|(e, c)| (e.mean - c.mean).abs() / (e.stderr.powi(2) + c.stderr.powi(2)).sqrt())
        .fold(0.0, f64::max);
    out.push(Check::new(
        "hyperuniformerer vs conditional route",
        worst < 3.0,
        worst,
        3.0,
        "max |Δ| / combined stderr, window losses included",
    ));

    let pois = samples_of(40, |i| gen_poisson(torus, 1.0, RngStream::new(SEED, 100 + i as u64)))?;
    let lloyd = pois
        .par_iter()
        .map(|s| {
            let mut c = s.clone();
            for _ in 0..3 {
                c = lloyd_step(&c, 256)?;
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let v = lowest(&scattering_intensity(&lloyd, &kgrid)?);
    out.push(Check::new(
        "lloyd x3 lowest bin",
        (0.75..=1.25).contains(&v),
        v,
        0.25,
        "S at k_min in [0.75, 1.25]",
    ));
    let ro = pois
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut c = s.clone();
            for t in 0..5 {
                c = random_organization_step(&c, 0.5, 0.25, RngStream::new(SEED, 200 + i as u64).derive(t))?;
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let v = lowest(&scattering_intensity(&ro, &kgrid)?);
    out.push(Check::new(
        "random organization x5 lowest bin",
        (0.75..=1.25).contains(&v),
        v,
        0.25,
        "S at k_min in [0.75, 1.25]",
    ));

    let images = (0..10)
        .into_par_iter()
        .map(|i| {
            let s = gen_poisson(torus, 1.0, RngStream::new(SEED, 300 + i as u64))?;
            equal_volume_dispersion(&s, 0.3, 1024)
        })
        .collect::<Result<Vec<_>>>()?;
    let g = images.iter().map(|d| d.global_fraction).sum::<f64>() / images.len() as f64;
    out.push(Check::new(
        "dispersion global fraction",
        (g - 0.3).abs() <= 0.01,
        g,
        0.01,
        "mean covered fraction",
    ));
    let imgs: Vec<_> = images.into_iter().map(|d| d.image).collect();
    let ps = pixel_spectrum(&imgs, &kgrid)?;
    let (s1, s5) = (ps.radial_bins[0].mean, ps.radial_bins[4].mean);
    out.push(Check::new(
        "dispersion low-k suppression",
        s1 < s5,
        s1,
        s5,
        "S(bin 1) < S(bin 5)",
    ));

    let mat = (0..10)
        .into_par_iter()
        .map(|i| {
            let s = gen_matern2(torus, 2.0, 0.4, RngStream::new(SEED, 400 + i as u64))?;
            nn_volume_measure(&s, 1, 512)
        })
        .collect::<Result<Vec<_>>>()?;
    let err = mat
        .iter()
        .map(|m| (m.total_weight() - torus.volume()).abs())
        .fold(0.0, f64::max);
    out.push(Check::new(
        "weighted voronoi mass",
        err < 1e-6,
        err,
        1e-6,
        "|Σ w - side²|",
    ));
    let v = lowest(&scattering_intensity(&mat, &kgrid)?);
    out.push(Check::new("weighted voronoi lowest bin", v < 0.3, v, 0.3, "S at k_min"));

    let phip = samples_of(20, |i| {
        gen_phip(
            torus,
            (std::f64::consts::PI).sqrt(),
            RngStream::new(SEED, 500 + i as u64),
        )
    })?;
    let before = lowest(&scattering_intensity(&phip, &kgrid)?);
    let weighted = phip
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let a = Allocation::voronoi(s, 256)?;
            weighted_cell_measure(
                s,
                &a,
                CellPlacement::UniformInCell,
                RngStream::new(SEED, 600 + i as u64),
            )
            .map(|x| x.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let after = lowest(&scattering_intensity(&weighted, &kgrid)?);
    out.push(Check::new(
        "phip weighted cells",
        after < before,
        after,
        before,
        "S at k_min after < before",
    ));
    Ok(out)
}

/// Checks a pipeline run: a rerun into a scratch directory must reproduce
/// every output hash, and theory overlays must match the final spectrum.
pub fn verify_run(cfg: &PipelineConfig, first: &RunOutput) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let scratch = std::env::temp_dir().join(format!(
        "hul-rerun-{}-{}",
        std::process::id(),
        &first.manifest.config_hash[..12]
    ));
    let second = run_pipeline_in(cfg, &scratch);
    let second = second.inspect_err(|_| {
        let _ = std::fs::remove_dir_all(&scratch);
    })?;
    let differing: Vec<&String> = first
        .manifest
        .outputs
        .iter()
        .filter(|(k, v)| second.manifest.outputs.get(*k) != Some(*v))
        .map(|(k, _)| k)
        .collect();
    let _ = std::fs::remove_dir_all(&scratch);
    checks.push(Check::new(
        "determinism",
        differing.is_empty() && first.manifest.outputs.len() == second.manifest.outputs.len(),
        differing.len() as f64,
        0.0,
        format!("{} files compared", first.manifest.outputs.len()),
    ));
    let spec = first.spectrum_after.as_ref().or(first.spectrum_before.as_ref());
    if let Some(spec) = spec {
        for (j, model) in cfg.analysis.theory_overlays.iter().enumerate() {
            let th = s_theory_radial(model, &spec.kgrid)?;
            let worst = spec
                .radial_bins
                .iter()
                .zip(&th)
                .filter(|(b, _)| b.stderr > 0.0)
                .map(|(b, t)| (b.mean - t).abs() / b.stderr)
                .fold(0.0, f64::max);
            checks.push(Check::new(
                format!("theory overlay {j}"),
                worst < 3.0,
                worst,
                3.0,
                "max |S - theory| / stderr",
            ));
        }
    }
    Ok(VerifyReport::new("pipeline", checks))
}
