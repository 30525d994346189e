//! Scattering intensities, radial structure factors, number-variance curves,
//! closed-form spectral predictions, and the extrapolated hyperuniformity index.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{sinc, IidKernel};
use crate::neighbors::CellGrid;
use crate::pgm::PixelImage;
use crate::rng::RngStream;
use crate::sample::PointSample;
use crate::torus::{Coord, KGrid, TorusBox};
use crate::transports::{CellTable, Displacement};

/// Points processed per block in the exponential sums; fixed so results do
/// not depend on the thread count.
const BLOCK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBin {
    pub k_mid: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n_vectors: usize,
}

/// Scattering intensity on a wavevector grid with shell averages.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    pub kgrid: KGrid,
    /// Mean over replicates, one value per grid vector.
    pub values: Vec<f64>,
    pub radial_bins: Vec<RadialBin>,
    pub n_samples: usize,
    /// Per-replicate shell means, kept so estimates can be pooled.
    pub replicate_bins: Vec<Vec<f64>>,
}

/// Shell of vector `i`: `round(|m|)`; shells beyond `max_index` are incomplete and skipped.
fn shell_of(kgrid: &KGrid, i: usize) -> Option<usize> {
    let s = kgrid.index_norm(i).round() as usize;
    (1..=kgrid.max_index).contains(&s).then_some(s - 1)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl SpectrumEstimate {
    /// Builds an estimate from per-replicate values on every grid vector.
    pub fn from_replicates(kgrid: KGrid, replicates: &[Vec<f64>]) -> Result<Self> {
        if replicates.is_empty() {
            return Err(Error::Empty("replicate set"));
        }
        let nv = kgrid.len();
        let nshell = kgrid.max_index;
        let mut shell_counts = vec![0usize; nshell];
        for i in 0..nv {
            if let Some(s) = shell_of(&kgrid, i) {
                shell_counts[s] += 1;
            }
        }
        let replicate_bins: Vec<Vec<f64>> = replicates
            .iter()
            .map(|vals| {
                let mut acc = vec![0.0; nshell];
                for (i, v) in vals.iter().enumerate() {
                    if let Some(s) = shell_of(&kgrid, i) {
                        acc[s] += v;
                    }
                }
                acc.iter().zip(&shell_counts).map(|(a, c)| a / *c as f64).collect()
            })
            .collect();
        let n = replicates.len() as f64;
        let mut values = vec![0.0; nv];
        for vals in replicates {
            for (acc, v) in values.iter_mut().zip(vals) {
                *acc += v / n;
            }
        }
        let radial_bins = (0..nshell)
            .map(|s| {
                let k_mid = (s + 1) as f64 * kgrid.dk();
                let stderr = if replicates.len() > 1 {
                    let col: Vec<f64> = replicate_bins.iter().map(|r| r[s]).collect();
                    mean_sd(&col).1 / n.sqrt()
                } else {
                    // conjugate vectors carry identical values, so halve the count
                    let col: Vec<f64> = (0..nv)
                        .filter(|&i| shell_of(&kgrid, i) == Some(s))
                        .map(|i| values[i])
                        .collect();
                    mean_sd(&col).1 / (0.5 * col.len() as f64).max(1.0).sqrt()
                };
                RadialBin {
                    k_mid,
                    mean: replicate_bins.iter().map(|r| r[s]).sum::<f64>() / n,
                    stderr,
                    n_vectors: shell_counts[s],
                }
            })
            .collect();
        Ok(Self {
            kgrid,
            values,
            radial_bins,
            n_samples: replicates.len(),
            replicate_bins,
        })
    }

    /// Treats each estimate as one replicate (e.g. one source sample with its resamples).
    pub fn pool(estimates: &[SpectrumEstimate]) -> Result<Self> {
        let first = estimates.first().ok_or(Error::Empty("estimate set"))?;
        if estimates.iter().any(|e| e.kgrid != first.kgrid) {
            return Err(Error::MismatchedBoxes);
        }
        let reps: Vec<Vec<f64>> = estimates.iter().map(|e| e.values.clone()).collect();
        Self::from_replicates(first.kgrid.clone(), &reps)
    }

    pub fn write_vectors_csv<W: Write>(&self, w: W) -> Result<()> {
        let dim = self.kgrid.torus.dim();
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = ["kx", "ky", "kz"][..dim].to_vec();
        header.push("S");
        wr.write_record(&header)?;
        for (i, v) in self.values.iter().enumerate() {
            let k = self.kgrid.vector(i);
            let mut rec: Vec<String> = k[..dim].iter().map(|c| c.to_string()).collect();
            rec.push(v.to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_radial_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["k", "S_mean", "S_stderr", "n"])?;
        for b in &self.radial_bins {
            wr.write_record([
                b.k_mid.to_string(),
                b.mean.to_string(),
                b.stderr.to_string(),
                b.n_vectors.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `|Σ_j w_j exp(-i k·x_j)|²` for every vector of `kgrid`.
pub fn structure_sums(torus: &TorusBox, points: &[Coord], weights: &[f64], kgrid: &KGrid) -> Vec<f64> {
    fourier_sums(torus, points, weights, kgrid)
        .into_iter()
        .map(|c| c.norm_sqr())
        .collect()
}

/// `Σ_j w_j exp(-i k·x_j)` for every vector of `kgrid`.
pub fn fourier_sums(torus: &TorusBox, points: &[Coord], weights: &[f64], kgrid: &KGrid) -> Vec<Complex64> {
    let dim = torus.dim();
    let m = kgrid.max_index as i32;
    let width = (2 * m + 1) as usize;
    let dk = kgrid.dk();
    let idx = kgrid.indices();
    let blocks: Vec<Vec<Complex64>> = points
        .par_chunks(BLOCK)
        .zip(weights.par_chunks(BLOCK))
        .map(|(pts, ws)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); idx.len()];
            let mut table = vec![Complex64::new(1.0, 0.0); 3 * width];
            for (p, &w) in pts.iter().zip(ws) {
                for a in 0..dim {
                    for j in -m..=m {
                        let (s, c) = (-dk * j as f64 * p[a]).sin_cos();
                        table[a * width + (j + m) as usize] = Complex64::new(c, s);
                    }
                }
                for (slot, mi) in acc.iter_mut().zip(idx) {
                    let mut z = table[(mi[0] + m) as usize];
                    if dim > 1 {
                        z *= table[width + (mi[1] + m) as usize];
                    }
                    if dim > 2 {
                        z *= table[2 * width + (mi[2] + m) as usize];
                    }
                    *slot += z * w;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Complex64::new(0.0, 0.0); idx.len()];
    for b in &blocks {
        for (t, v) in total.iter_mut().zip(b) {
            *t += v;
        }
    }
    total
}

/// Scattering intensity averaged over samples, normalized by the mean total mass.
pub fn scattering_intensity(samples: &[PointSample], kgrid: &KGrid) -> Result<SpectrumEstimate> {
    let first = samples.first().ok_or(Error::Empty("sample set"))?;
    if samples.iter().any(|s| s.torus != first.torus) || kgrid.torus != first.torus {
        return Err(Error::MismatchedBoxes);
    }
    let mean_mass = samples.iter().map(PointSample::total_weight).sum::<f64>() / samples.len() as f64;
    if mean_mass <= 0.0 {
        return Err(Error::Empty("total sample mass"));
    }
    let reps: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            structure_sums(&s.torus, s.points(), s.weights(), kgrid)
                .into_iter()
                .map(|v| v / mean_mass)
                .collect()
        })
        .collect();
    SpectrumEstimate::from_replicates(kgrid.clone(), &reps)
}

/// Normalized number variance `Var[Φ(B_r)] / |B_r|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCurve {
    pub radii: Vec<f64>,
    pub normalized_variance: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl VarianceCurve {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "var_norm", "stderr"])?;
        for ((r, v), e) in self.radii.iter().zip(&self.normalized_variance).zip(&self.stderr) {
            wr.write_record([r.to_string(), v.to_string(), e.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn variance_curve(
    samples: &[PointSample],
    radii: &[f64],
    n_windows: usize,
    stream: RngStream,
) -> Result<VarianceCurve> {
    let first = samples.first().ok_or(Error::Empty("sample set"))?;
    let torus = first.torus;
    if samples.iter().any(|s| s.torus != torus) {
        return Err(Error::MismatchedBoxes);
    }
    if n_windows < 2 {
        return Err(invalid("n_windows", "need at least two windows"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|r| *r <= 0.0) {
        return Err(invalid("radii", "must be positive and increasing"));
    }
    if let Some(&r) = radii.iter().find(|&&r| r >= 0.5 * torus.side()) {
        return Err(Error::RadiusTooLarge {
            radius: r,
            half_side: 0.5 * torus.side(),
        });
    }
    // counts[sample][radius][window]
    let counts: Vec<Vec<Vec<f64>>> = samples
        .par_iter()
        .enumerate()
        .map(|(si, s)| {
            let grid = CellGrid::new(torus, s.points(), 2.0);
            let mut rng = stream.derive(si as u64).rng();
            let centers: Vec<Coord> = (0..n_windows)
                .map(|_| crate::generators::uniform_point(&torus, &mut rng))
                .collect();
            radii
                .iter()
                .map(|&r| {
                    centers
                        .iter()
                        .map(|c| {
                            let mut m = 0.0;
                            grid.for_each_within(c, r, |i, _| m += s.weights()[i as usize]);
                            m
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut normalized_variance = Vec::with_capacity(radii.len());
    let mut stderr = Vec::with_capacity(radii.len());
    for (ri, &r) in radii.iter().enumerate() {
        let vol = torus.unit_ball_volume() * r.powi(torus.dim() as i32);
        let all: Vec<f64> = counts.iter().flat_map(|c| c[ri].iter().copied()).collect();
        let (_, sd) = mean_sd(&all);
        let v = sd * sd / vol;
        let se = if samples.len() > 1 {
            let per: Vec<f64> = counts
                .iter()
                .map(|c| {
                    let (_, s) = mean_sd(&c[ri]);
                    s * s / vol
                })
                .collect();
            mean_sd(&per).1 / (per.len() as f64).sqrt()
        } else {
            v * (2.0 / (all.len() as f64 - 1.0)).sqrt()
        };
        normalized_variance.push(v);
        stderr.push(se);
    }
    Ok(VarianceCurve {
        radii: radii.to_vec(),
        normalized_variance,
        stderr,
    })
}

/// Models with closed-form structure factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TheoryModel {
    Poisson {
        intensity: f64,
    },
    CloakedLattice,
    /// Base process smoothed by a probability kernel `Q`: `S = |q̂|²·S_base`.
    Smoothed {
        kernel: IidKernel,
        base: Box<TheoryModel>,
    },
    /// Stationary integer lattice displaced by independent draws.
    PerturbedLattice {
        displacement: Displacement,
    },
}

/// Continuous spectral density at `k` plus the Bragg atom weight located at `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryValue {
    pub continuous: f64,
    pub bragg_weight: f64,
}

fn is_reciprocal_lattice_point(k: &Coord, dim: usize) -> bool {
    let tau = 2.0 * std::f64::consts::PI;
    let nonzero = k[..dim].iter().any(|v| v.abs() > 1e-9);
    nonzero && k[..dim].iter().all(|v| (v / tau - (v / tau).round()).abs() < 1e-9)
}

pub fn s_theory(model: &TheoryModel, k: &Coord, dim: usize) -> Result<TheoryValue> {
    match model {
        TheoryModel::Poisson { intensity } => {
            if *intensity <= 0.0 {
                return Err(invalid("intensity", "must be positive"));
            }
            Ok(TheoryValue {
                continuous: 1.0,
                bragg_weight: 0.0,
            })
        }
        TheoryModel::CloakedLattice => s_theory(
            &TheoryModel::PerturbedLattice {
                displacement: Displacement::Iid {
                    kernel: IidKernel::UniformCube,
                },
            },
            k,
            dim,
        ),
        TheoryModel::Smoothed { kernel, base } => {
            kernel.validate()?;
            let q = kernel.char_fn_sq(k, dim);
            let b = s_theory(base, k, dim)?;
            Ok(TheoryValue {
                continuous: q * b.continuous,
                bragg_weight: q * b.bragg_weight,
            })
        }
        TheoryModel::PerturbedLattice { displacement } => {
            let kernel = match displacement {
                Displacement::Iid { kernel } => kernel,
                Displacement::Field { .. } => {
                    return Err(Error::Unsupported(
                        "correlated displacement fields have no closed-form spectrum here".into(),
                    ))
                }
            };
            kernel.validate()?;
            let q = kernel.char_fn_sq(k, dim);
            Ok(TheoryValue {
                continuous: 1.0 - q,
                bragg_weight: if is_reciprocal_lattice_point(k, dim) { q } else { 0.0 },
            })
        }
    }
}

/// Shell averages of the continuous part of `model` over `kgrid`.
pub fn s_theory_radial(model: &TheoryModel, kgrid: &KGrid) -> Result<Vec<f64>> {
    let dim = kgrid.torus.dim();
    let mut acc = vec![0.0; kgrid.max_index];
    let mut cnt = vec![0usize; kgrid.max_index];
    for i in 0..kgrid.len() {
        if let Some(s) = shell_of(kgrid, i) {
            acc[s] += s_theory(model, &kgrid.vector(i), dim)?.continuous;
            cnt[s] += 1;
        }
    }
    Ok(acc.iter().zip(&cnt).map(|(a, c)| a / *c as f64).collect())
}

/// Cell-based route for the hyperuniformerer structure factor:
/// `S(k) = E[v - |1̂_C(k)|²/v]` over fair cells of volume `v`.
///
/// Only saturated cells are used; fewer than half of the points being
/// saturated is treated as an unfair allocation.
pub fn s_hyperuniformerer_mc(
    cells: &CellTable,
    kgrid: &KGrid,
    n_cells_sampled: usize,
    stream: RngStream,
) -> Result<SpectrumEstimate> {
    let torus = cells.torus();
    let fair = cells.saturated_cells();
    if fair.is_empty() {
        return Err(Error::UnfairAllocation("no saturated cells".into()));
    }
    let sat_frac = fair.len() as f64 / cells.n_points().max(1) as f64;
    if sat_frac < 0.5 {
        return Err(Error::UnfairAllocation(format!(
            "only {:.1}% of points are saturated",
            100.0 * sat_frac
        )));
    }
    let chosen: Vec<usize> = if n_cells_sampled >= fair.len() {
        fair.clone()
    } else {
        let mut rng = stream.rng();
        (0..n_cells_sampled)
            .map(|_| fair[rng.random_range(0..fair.len())])
            .collect()
    };
    let h = cells.voxel();
    let dim = torus.dim();
    let vox_vol = h.powi(dim as i32);
    let vol = cells.capacity() as f64 * vox_vol;
    let form: Vec<f64> = kgrid
        .vectors()
        .map(|k| k[..dim].iter().map(|&c| sinc(0.5 * c * h).powi(2)).product())
        .collect();
    let reps: Vec<Vec<f64>> = chosen
        .par_iter()
        .map(|&p| {
            let sites = cells.site_centers(p);
            let w = vec![vox_vol; sites.len()];
            structure_sums(&torus, &sites, &w, kgrid)
                .into_iter()
                .zip(&form)
                .map(|(ft2, f)| vol - ft2 * f / vol)
                .collect()
        })
        .collect();
    SpectrumEstimate::from_replicates(kgrid.clone(), &reps)
}

/// Exact structure factor of the single-point hyperuniformerer output given
/// its allocation, window losses included.
///
/// A point with `n` of `capacity` sites is kept with probability
/// `n/capacity` and then lies uniformly in its cell, so with `v` the nominal
/// cell volume
/// `E|F(k)|² = Σ_p (|C_p|/v − |1̂_{C_p}(k)|²/v²) + |Σ_p 1̂_{C_p}(k)|²/v²`,
/// normalized by the expected mass `Σ_p |C_p|/v`. Radial stderrs are zero.
pub fn s_hyperuniformerer_conditional(cells: &CellTable, kgrid: &KGrid) -> Result<SpectrumEstimate> {
    let torus = cells.torus();
    if kgrid.torus != torus {
        return Err(Error::MismatchedBoxes);
    }
    if cells.capacity() == 0 {
        return Err(Error::UnfairAllocation("allocation has no capacity".into()));
    }
    let dim = torus.dim();
    let h = cells.voxel();
    let vox_vol = h.powi(dim as i32);
    let v = cells.capacity() as f64 * vox_vol;
    let amp: Vec<f64> = kgrid
        .vectors()
        .map(|k| k[..dim].iter().map(|&c| sinc(0.5 * c * h)).product())
        .collect();
    let nk = kgrid.len();
    let per_cell: Vec<(f64, Vec<Complex64>)> = (0..cells.n_points())
        .into_par_iter()
        .filter(|&p| !cells.sites_of(p).is_empty())
        .map(|p| {
            let sites = cells.site_centers(p);
            let w = vec![vox_vol; sites.len()];
            (cells.volume(p), fourier_sums(&torus, &sites, &w, kgrid))
        })
        .collect();
    let mut mass = 0.0;
    let mut diag = vec![0.0; nk];
    let mut total = vec![Complex64::new(0.0, 0.0); nk];
    for (vol, ft) in &per_cell {
        mass += vol / v;
        for i in 0..nk {
            let f = ft[i] * amp[i];
            diag[i] += vol / v - f.norm_sqr() / (v * v);
            total[i] += f;
        }
    }
    if mass <= 0.0 {
        return Err(Error::Empty("allocated cells"));
    }
    let values: Vec<f64> = (0..nk)
        .map(|i| (diag[i] + total[i].norm_sqr() / (v * v)) / mass)
        .collect();
    let mut est = SpectrumEstimate::from_replicates(kgrid.clone(), &[values])?;
    for b in &mut est.radial_bins {
        b.stderr = 0.0;
    }
    Ok(est)
}

/// Outcome of extrapolating the radial structure factor to `k = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperuniformityClass {
    /// Confidence interval reaches 0.
    HyperuniformConsistent,
    /// Interval strictly between 0 and 1.
    SubPoisson,
    /// Interval contains 1.
    PoissonLike,
    /// Interval strictly above 1.
    AntiHyperuniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationFit {
    #[default]
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperuniformityIndex {
    pub estimate: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_bins: usize,
    pub class: HyperuniformityClass,
}

/// Weighted least-squares extrapolation of the shell means with `k_mid ≤ k_max` to `k = 0`.
/// The interval is ±1.96 standard errors.
pub fn hyperuniformity_index(
    spec: &SpectrumEstimate,
    k_max: f64,
    fit: ExtrapolationFit,
) -> Result<HyperuniformityIndex> {
    let bins: Vec<&RadialBin> = spec
        .radial_bins
        .iter()
        .filter(|b| b.k_mid <= k_max * (1.0 + 1e-12))
        .collect();
    if bins.len() < 3 {
        return Err(Error::InsufficientBins {
            needed: 3,
            got: bins.len(),
        });
    }
    let p = match fit {
        ExtrapolationFit::Linear => 2,
        ExtrapolationFit::Quadratic => 3,
    };
    let weighted = bins.iter().all(|b| b.stderr > 0.0);
    let n = bins.len();
    let x = nalgebra::DMatrix::from_fn(n, p, |i, j| bins[i].k_mid.powi(j as i32));
    let y = nalgebra::DVector::from_fn(n, |i, _| bins[i].mean);
    let w = nalgebra::DVector::from_fn(n, |i, _| {
        if weighted {
            1.0 / (bins[i].stderr * bins[i].stderr)
        } else {
            1.0
        }
    });
    let xtw = nalgebra::DMatrix::from_fn(p, n, |j, i| x[(i, j)] * w[i]);
    let normal = &xtw * &x;
    let inv = normal
        .try_inverse()
        .ok_or_else(|| invalid("radial bins", "degenerate design for the extrapolation fit"))?;
    let beta = &inv * (&xtw * &y);
    let resid = &y - &x * &beta;
    let rss: f64 = (0..n).map(|i| w[i] * resid[i] * resid[i]).sum();
    let dof = (n - p) as f64;
    let scale = if weighted {
        if dof > 0.0 {
            (rss / dof).max(1.0)
        } else {
            1.0
        }
    } else if dof > 0.0 {
        rss / dof
    } else {
        0.0
    };
    let estimate = beta[0];
    let stderr = (inv[(0, 0)] * scale).max(0.0).sqrt();
    let (ci_low, ci_high) = (estimate - 1.96 * stderr, estimate + 1.96 * stderr);
    let class = if ci_low > 1.0 {
        HyperuniformityClass::AntiHyperuniform
    } else if ci_high >= 1.0 {
        HyperuniformityClass::PoissonLike
    } else if ci_low <= 0.0 {
        HyperuniformityClass::HyperuniformConsistent
    } else {
        HyperuniformityClass::SubPoisson
    };
    Ok(HyperuniformityIndex {
        estimate,
        stderr,
        ci_low,
        ci_high,
        n_bins: n,
        class,
    })
}

/// Scattering intensity of pixel indicator sets drawn on a `R×R` grid over a 2D box.
///
/// Set pixels become atoms of mass `h²` at pixel centres. The result is
/// normalized by the mean covered mass; subtracting the mean density does not
/// change the values at nonzero commensurable wavevectors.
pub fn pixel_spectrum(images: &[PixelImage], kgrid: &KGrid) -> Result<SpectrumEstimate> {
    let torus = kgrid.torus;
    if torus.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: torus.dim(),
        });
    }
    if images.is_empty() {
        return Err(Error::Empty("image set"));
    }
    let res = images[0].width;
    if images.iter().any(|im| im.width != res || im.height != res) {
        return Err(invalid("image", "pixel grids must be square and share one resolution"));
    }
    let h = torus.side() / res as f64;
    let masses: Vec<f64> = images.iter().map(|im| im.count_set() as f64 * h * h).collect();
    if masses.iter().any(|m| *m == 0.0) {
        return Err(Error::Empty("pixel indicator"));
    }
    let mean_mass = masses.iter().sum::<f64>() / masses.len() as f64;
    let reps: Vec<Vec<f64>> = images
        .iter()
        .map(|im| {
            let mut pts = Vec::with_capacity(im.count_set());
            for y in 0..res {
                for x in 0..res {
                    if im.is_set(x, y) {
                        pts.push([(x as f64 + 0.5) * h, (y as f64 + 0.5) * h, 0.0]);
                    }
                }
            }
            let w = vec![h * h; pts.len()];
            structure_sums(&torus, &pts, &w, kgrid)
                .into_iter()
                .map(|v| v / mean_mass)
                .collect()
        })
        .collect();
    SpectrumEstimate::from_replicates(kgrid.clone(), &reps)
}
