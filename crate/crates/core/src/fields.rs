//! Stationary Gaussian displacement fields, iid displacement laws, and the
//! total-variation bound for pairs of jointly Gaussian vectors.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{Rng, RngStream};
use crate::sample::PointSample;
use crate::torus::Coord;

/// Largest sample size accepted by the dense Cholesky field sampler.
pub const MAX_FIELD_POINTS: usize = 4096;

/// Relative diagonal jitter added before factorization.
pub const FIELD_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    /// `σ²·1{h = 0}`
    White,
    /// `σ²·exp(-(h/ℓ)²)`
    SquaredExponential,
    /// `σ²·exp(-h/ℓ)`
    Exponential,
    /// `σ²·(1 - 3h/(2ℓ) + h³/(2ℓ³))` for `h < ℓ`, zero beyond.
    Spherical,
}

/// Scalar covariance `C(h)` shared by the iid components of a displacement field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    pub kind: CovarianceKind,
    pub variance: f64,
    #[serde(default = "default_range")]
    pub range: f64,
}

fn default_range() -> f64 {
    1.0
}

impl CovarianceModel {
    pub fn new(kind: CovarianceKind, variance: f64, range: f64) -> Result<Self> {
        let m = Self { kind, variance, range };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(invalid("variance", format!("must be >= 0, got {}", self.variance)));
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(invalid("range", format!("must be > 0, got {}", self.range)));
        }
        Ok(())
    }

    pub fn cov(&self, h: f64) -> f64 {
        let s2 = self.variance;
        let r = h / self.range;
        match self.kind {
            CovarianceKind::White => {
                if h == 0.0 {
                    s2
                } else {
                    0.0
                }
            }
            CovarianceKind::SquaredExponential => s2 * (-r * r).exp(),
            CovarianceKind::Exponential => s2 * (-r).exp(),
            CovarianceKind::Spherical => {
                if r < 1.0 {
                    s2 * (1.0 - 1.5 * r + 0.5 * r * r * r)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn correlation(&self, h: f64) -> f64 {
        if self.variance == 0.0 {
            0.0
        } else {
            self.cov(h) / self.variance
        }
    }
}

/// Draws one Gaussian displacement vector per point of `sample`.
///
/// Each coordinate is an independent centred Gaussian vector with covariance
/// `[C(dist(x_i, x_j))]`, using torus distances.
pub fn sample_field_displacements(
    sample: &PointSample,
    model: &CovarianceModel,
    stream: RngStream,
) -> Result<Vec<Coord>> {
    model.validate()?;
    let n = sample.len();
    let dim = sample.torus.dim();
    if n > MAX_FIELD_POINTS {
        return Err(Error::TooManyFieldPoints {
            limit: MAX_FIELD_POINTS,
            got: n,
        });
    }
    if model.range > sample.torus.side() / 4.0 && model.kind != CovarianceKind::White {
        log::warn!(
            "covariance range {} exceeds side/4 = {}; wraparound bias expected",
            model.range,
            sample.torus.side() / 4.0
        );
    }
    let mut out = vec![[0.0; 3]; n];
    if model.variance == 0.0 || n == 0 {
        return Ok(out);
    }
    let mut rng = stream.rng();
    if model.kind == CovarianceKind::White {
        let sd = model.variance.sqrt();
        for d in out.iter_mut() {
            for v in d.iter_mut().take(dim) {
                *v = sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
        return Ok(out);
    }
    let pts = sample.points();
    let jitter = FIELD_JITTER * model.variance;
    let cov = DMatrix::from_fn(n, n, |i, j| {
        let c = model.cov(sample.torus.distance(&pts[i], &pts[j]));
        if i == j {
            c + jitter
        } else {
            c
        }
    });
    let chol = match cov.clone().cholesky() {
        Some(c) => c,
        None => {
            let min_eig = cov.symmetric_eigenvalues().min();
            return Err(Error::NotPositiveSemidefinite { n, min_eig });
        }
    };
    let lower = chol.l();
    for a in 0..dim {
        let xi = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let z = &lower * xi;
        for (d, v) in out.iter_mut().zip(z.iter()) {
            d[a] = *v;
        }
    }
    Ok(out)
}

/// Law of an iid displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum IidKernel {
    PointMass,
    UniformBall {
        radius: f64,
    },
    Gaussian {
        sigma: f64,
    },
    /// Uniform on the unit cube `[0,1)^d`.
    UniformCube,
}

impl IidKernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::UniformBall { radius } if !(radius > 0.0) => {
                Err(invalid("radius", format!("must be > 0, got {radius}")))
            }
            Self::Gaussian { sigma } if !(sigma >= 0.0) => Err(invalid("sigma", format!("must be >= 0, got {sigma}"))),
            _ => Ok(()),
        }
    }

    pub fn sample(&self, dim: usize, rng: &mut Rng) -> Coord {
        let mut v = [0.0; 3];
        match *self {
            Self::PointMass => {}
            Self::UniformBall { radius } => v = uniform_in_ball(dim, radius, rng),
            Self::Gaussian { sigma } => {
                for c in v.iter_mut().take(dim) {
                    *c = sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
            Self::UniformCube => {
                for c in v.iter_mut().take(dim) {
                    *c = rng.random::<f64>();
                }
            }
        }
        v
    }

    /// Squared modulus of the characteristic function, `|q̂(k)|²`.
    pub fn char_fn_sq(&self, k: &Coord, dim: usize) -> f64 {
        match *self {
            Self::PointMass => 1.0,
            Self::UniformCube => k[..dim].iter().map(|&ki| sinc(0.5 * ki).powi(2)).product(),
            Self::Gaussian { sigma } => {
                let k2: f64 = k[..dim].iter().map(|v| v * v).sum();
                (-sigma * sigma * k2).exp()
            }
            Self::UniformBall { radius } => {
                let x = k[..dim].iter().map(|v| v * v).sum::<f64>().sqrt() * radius;
                ball_form_factor(dim, x).powi(2)
            }
        }
    }
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Bessel function of the first kind, order one, from its integral representation.
pub fn bessel_j1(x: f64) -> f64 {
    // the integrand is smooth and periodic, so the trapezoid rule converges geometrically
    let n = 256 + (x.abs() as usize) * 4;
    let h = PI / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let t = i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += w * (t - x * t.sin()).cos();
    }
    acc * h / PI
}

/// Fourier transform of the uniform law on the unit ball, at `|k|·radius = x`.
pub fn ball_form_factor(dim: usize, x: f64) -> f64 {
    if x.abs() < 1e-6 {
        return 1.0;
    }
    match dim {
        1 => x.sin() / x,
        2 => 2.0 * bessel_j1(x) / x,
        3 => 3.0 * (x.sin() - x * x.cos()) / (x * x * x),
        _ => unreachable!(),
    }
}

pub(crate) fn uniform_in_ball(dim: usize, radius: f64, rng: &mut Rng) -> Coord {
    loop {
        let mut v = [0.0; 3];
        for c in v.iter_mut().take(dim) {
            *c = 2.0 * rng.random::<f64>() - 1.0;
        }
        if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            return [v[0] * radius, v[1] * radius, v[2] * radius];
        }
    }
}

fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

fn check_square(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    Ok(())
}

/// Bound on the total variation distance between the law of a whitened
/// Gaussian pair `(X₁, X₂)` with cross-covariance `A` and the product of its
/// marginals: `sqrt(-d·log(1 - ‖A‖²))`, valid for spectral norm `‖A‖ ≤ 1/2`.
pub fn gaussian_pair_tv_bound(cross_cov: &DMatrix<f64>) -> Result<f64> {
    check_square(cross_cov)?;
    let d = cross_cov.nrows() as f64;
    let norm = spectral_norm(cross_cov);
    if norm > 0.5 + 1e-12 {
        return Err(Error::BoundRegimeViolated { norm });
    }
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok((-d * (-norm * norm).ln_1p()).sqrt().min(1.0))
}

/// The intermediate (tighter) step of the same chain, `sqrt(-log det(I - AᵀA))`.
pub fn gaussian_pair_tv_logdet_bound(cross_cov: &DMatrix<f64>) -> Result<f64> {
    check_square(cross_cov)?;
    let norm = spectral_norm(cross_cov);
    if norm > 0.5 + 1e-12 {
        return Err(Error::BoundRegimeViolated { norm });
    }
    let d = cross_cov.nrows();
    let m = DMatrix::<f64>::identity(d, d) - cross_cov.transpose() * cross_cov;
    Ok((-m.determinant().ln()).max(0.0).sqrt())
}

/// Scalar convenience form for `d = 1`.
pub fn gaussian_pair_tv_bound_scalar(rho: f64) -> Result<f64> {
    gaussian_pair_tv_bound(&DMatrix::from_element(1, 1, rho))
}

/// Lattice sum `Σ_{‖y‖∞ ≤ cutoff} |C(y)|` with a tail bound for the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingSum {
    pub cutoff: usize,
    pub partial_sum: f64,
    pub tail_bound: f64,
    pub convergent: bool,
}

/// Number of integer points with `‖y‖∞ = n` in dimension `dim`.
pub fn shell_size(dim: usize, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let d = dim as i32;
    ((2 * n + 1) as f64).powi(d) - ((2 * n - 1) as f64).powi(d)
}

/// Sum over lattice points of `f(‖y‖₂)` restricted to `‖y‖∞ ≤ cutoff`.
pub(crate) fn lattice_sum(dim: usize, cutoff: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let c = cutoff as i64;
    let range = |a: usize| if a < dim { -c..=c } else { 0..=0 };
    let mut acc = 0.0;
    for i in range(0) {
        for j in range(1) {
            for l in range(2) {
                acc += f(((i * i + j * j + l * l) as f64).sqrt());
            }
        }
    }
    acc
}

/// Bound on `Σ_{n > cutoff} shell(n)·g(n)` for a nonincreasing `g ≥ 0` whose
/// shell-weighted terms eventually have a decreasing ratio.
pub(crate) fn shell_tail_bound(dim: usize, cutoff: usize, support: Option<f64>, g: impl Fn(f64) -> f64) -> f64 {
    let term = |n: usize| shell_size(dim, n) * g(n as f64);
    let mut acc = 0.0;
    let mut n = cutoff + 1;
    loop {
        if support.is_some_and(|s| n as f64 >= s) {
            return acc;
        }
        let t = term(n);
        if t == 0.0 {
            return acc;
        }
        let q = term(n + 1) / t;
        acc += t;
        if q < 0.5 && t * q / (1.0 - q) < 1e-300_f64.max(acc * 1e-16) {
            return acc + t * q / (1.0 - q);
        }
        n += 1;
        if n > cutoff + 1_000_000 {
            return f64::INFINITY;
        }
    }
}

pub fn mixing_sum_check(model: &CovarianceModel, dim: usize, cutoff: usize) -> Result<MixingSum> {
    model.validate()?;
    if cutoff < 1 {
        return Err(invalid("cutoff", "must be at least 1"));
    }
    let partial_sum = lattice_sum(dim, cutoff, |h| model.cov(h).abs());
    let tail_bound = match model.kind {
        CovarianceKind::White => 0.0,
        CovarianceKind::Spherical => shell_tail_bound(dim, cutoff, Some(model.range), |h| model.cov(h).abs()),
        _ => shell_tail_bound(dim, cutoff, None, |h| model.cov(h).abs()),
    };
    Ok(MixingSum {
        cutoff,
        partial_sum,
        tail_bound,
        convergent: tail_bound.is_finite(),
    })
}
