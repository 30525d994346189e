//! Seeded samplers for the source processes.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::neighbors::CellGrid;
use crate::rng::{Rng, RngStream};
use crate::sample::{PointSample, SampleMeta};
use crate::torus::{unit_ball_volume, Coord, TorusBox};

/// Source process and its parameters, as written in pipeline configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Poisson {
        intensity: f64,
    },
    /// Fixed count `round(intensity * volume)`, iid uniform.
    Binomial {
        intensity: f64,
    },
    /// Integer lattice of intensity 1.
    Lattice {
        #[serde(default = "default_true")]
        stationarize: bool,
    },
    CloakedLattice,
    /// Matérn type II hard-core thinning of a Poisson proposal.
    Matern2 {
        intensity: f64,
        hardcore_radius: f64,
    },
    /// Intersections of an isotropic Poisson line process (d = 2).
    /// `line_intensity` is the mean line length per unit area; when absent it is
    /// chosen so that the point intensity equals `intensity`.
    Phip {
        #[serde(default)]
        intensity: Option<f64>,
        #[serde(default)]
        line_intensity: Option<f64>,
    },
}

fn default_true() -> bool {
    true
}

fn check_intensity(v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid("intensity", format!("must be positive, got {v}")))
    }
}

impl GeneratorSpec {
    pub fn validate(&self, torus: &TorusBox) -> Result<()> {
        match *self {
            Self::Poisson { intensity } | Self::Binomial { intensity } => check_intensity(intensity),
            Self::Lattice { .. } | Self::CloakedLattice => lattice_side(torus).map(|_| ()),
            Self::Matern2 {
                intensity,
                hardcore_radius,
            } => {
                check_intensity(intensity)?;
                check_hardcore(torus, hardcore_radius)
            }
            Self::Phip {
                intensity,
                line_intensity,
            } => {
                if torus.dim() != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        got: torus.dim(),
                    });
                }
                match (intensity, line_intensity) {
                    (_, Some(l)) => check_intensity(l),
                    (Some(g), None) => check_intensity(g),
                    (None, None) => Err(invalid("phip", "needs intensity or line_intensity")),
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Poisson { .. } => "poisson",
            Self::Binomial { .. } => "binomial",
            Self::Lattice { .. } => "lattice",
            Self::CloakedLattice => "cloaked_lattice",
            Self::Matern2 { .. } => "matern2",
            Self::Phip { .. } => "phip",
        }
    }

    /// Nominal intensity of the generated process.
    pub fn intensity(&self, dim: usize) -> f64 {
        match *self {
            Self::Poisson { intensity } | Self::Binomial { intensity } => intensity,
            Self::Lattice { .. } | Self::CloakedLattice => 1.0,
            Self::Matern2 {
                intensity,
                hardcore_radius,
            } => matern2_intensity(intensity, hardcore_radius, dim),
            Self::Phip {
                intensity,
                line_intensity,
            } => match line_intensity {
                Some(l) => l * l / PI,
                None => intensity.unwrap_or(0.0),
            },
        }
    }

    pub fn generate(&self, torus: TorusBox, stream: RngStream) -> Result<PointSample> {
        self.validate(&torus)?;
        match *self {
            Self::Poisson { intensity } => gen_poisson(torus, intensity, stream),
            Self::Binomial { intensity } => gen_binomial(torus, intensity, stream),
            Self::Lattice { stationarize } => gen_lattice(torus, stream, stationarize),
            Self::CloakedLattice => gen_cloaked_lattice(torus, stream),
            Self::Matern2 {
                intensity,
                hardcore_radius,
            } => gen_matern2(torus, intensity, hardcore_radius, stream),
            Self::Phip {
                intensity,
                line_intensity,
            } => {
                let l = line_intensity.unwrap_or_else(|| (PI * intensity.unwrap_or(0.0)).sqrt());
                gen_phip(torus, l, stream)
            }
        }
    }
}

pub(crate) fn uniform_point(torus: &TorusBox, rng: &mut Rng) -> Coord {
    let mut c = [0.0; 3];
    for v in c.iter_mut().take(torus.dim()) {
        *v = rng.random::<f64>() * torus.side();
    }
    torus.wrap(c)
}

fn uniform_points(torus: &TorusBox, n: usize, rng: &mut Rng) -> Vec<Coord> {
    (0..n).map(|_| uniform_point(torus, rng)).collect()
}

fn poisson_count(mean: f64, rng: &mut Rng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

pub fn gen_poisson(torus: TorusBox, intensity: f64, stream: RngStream) -> Result<PointSample> {
    check_intensity(intensity)?;
    let mut rng = stream.rng();
    let n = poisson_count(intensity * torus.volume(), &mut rng);
    let points = uniform_points(&torus, n, &mut rng);
    Ok(PointSample::new(
        torus,
        points,
        SampleMeta::new(stream, "poisson", intensity),
    ))
}

pub fn gen_binomial(torus: TorusBox, intensity: f64, stream: RngStream) -> Result<PointSample> {
    check_intensity(intensity)?;
    let mut rng = stream.rng();
    let n = (intensity * torus.volume()).round() as usize;
    let points = uniform_points(&torus, n, &mut rng);
    Ok(PointSample::new(
        torus,
        points,
        SampleMeta::new(stream, "binomial", intensity),
    ))
}

fn lattice_side(torus: &TorusBox) -> Result<usize> {
    let s = torus.side();
    if (s - s.round()).abs() > 1e-9 || s.round() < 1.0 {
        return Err(Error::IncommensurableSide { side: s });
    }
    Ok(s.round() as usize)
}

fn lattice_points(torus: &TorusBox) -> Result<Vec<Coord>> {
    let n = lattice_side(torus)?;
    let dim = torus.dim();
    let total = n.pow(dim as u32);
    Ok((0..total)
        .map(|mut code| {
            let mut c = [0.0; 3];
            for v in c.iter_mut().take(dim) {
                *v = (code % n) as f64;
                code /= n;
            }
            c
        })
        .collect())
}

/// `Z^d ∩ box`, optionally shifted by one uniform vector in `[0,1)^d`.
pub fn gen_lattice(torus: TorusBox, stream: RngStream, stationarize: bool) -> Result<PointSample> {
    let mut points = lattice_points(&torus)?;
    if stationarize {
        let mut rng = stream.rng();
        let mut u = [0.0; 3];
        for v in u.iter_mut().take(torus.dim()) {
            *v = rng.random::<f64>();
        }
        for p in &mut points {
            for a in 0..torus.dim() {
                p[a] += u[a];
            }
        }
    }
    let name = if stationarize { "lattice" } else { "lattice(fixed)" };
    Ok(PointSample::new(torus, points, SampleMeta::new(stream, name, 1.0)))
}

/// Stationarized lattice with iid uniform unit-cube displacements.
pub fn gen_cloaked_lattice(torus: TorusBox, stream: RngStream) -> Result<PointSample> {
    let mut points = lattice_points(&torus)?;
    let mut rng = stream.rng();
    let mut shift = [0.0; 3];
    for v in shift.iter_mut().take(torus.dim()) {
        *v = rng.random::<f64>();
    }
    for p in &mut points {
        for a in 0..torus.dim() {
            p[a] += shift[a] + rng.random::<f64>();
        }
    }
    Ok(PointSample::new(
        torus,
        points,
        SampleMeta::new(stream, "cloaked_lattice", 1.0),
    ))
}

fn check_hardcore(torus: &TorusBox, r: f64) -> Result<()> {
    if !(r > 0.0 && r < 0.5 * torus.side()) {
        return Err(invalid("hardcore_radius", format!("must lie in (0, side/2), got {r}")));
    }
    Ok(())
}

/// Retained intensity of Matérn II thinning with proposal intensity `lambda`.
pub fn matern2_intensity(lambda: f64, r: f64, dim: usize) -> f64 {
    let v = unit_ball_volume(dim) * r.powi(dim as i32);
    (1.0 - (-lambda * v).exp()) / v
}

pub fn gen_matern2(torus: TorusBox, lambda: f64, r: f64, stream: RngStream) -> Result<PointSample> {
    check_intensity(lambda)?;
    check_hardcore(&torus, r)?;
    let mut rng = stream.rng();
    let n = poisson_count(lambda * torus.volume(), &mut rng);
    let proposals = uniform_points(&torus, n, &mut rng);
    let marks: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let grid = CellGrid::new(torus, &proposals, 2.0);
    let points = proposals
        .iter()
        .enumerate()
        .filter(|&(i, p)| {
            let mut dominated = false;
            grid.for_each_within(p, r, |j, _| {
                dominated |= j as usize != i && marks[j as usize] < marks[i];
            });
            !dominated
        })
        .map(|(_, p)| *p)
        .collect();
    let meta = SampleMeta::new(stream, "matern2", matern2_intensity(lambda, r, torus.dim()));
    Ok(PointSample::new(torus, points, meta))
}

/// A line `{x : <x - c, u(θ)> = p}` through the box's circumscribed disk.
#[derive(Debug, Clone, Copy)]
pub struct Line {
    pub angle: f64,
    pub offset: f64,
}

/// Isotropic Poisson lines hitting the disk of radius `side/√2` around the box centre.
pub fn sample_lines(torus: &TorusBox, line_intensity: f64, rng: &mut Rng) -> Vec<Line> {
    let radius = torus.side() * std::f64::consts::FRAC_1_SQRT_2;
    // lines hitting a disk of radius R: Poisson with mean 2 R L_A
    let n = poisson_count(2.0 * radius * line_intensity, rng);
    (0..n)
        .map(|_| Line {
            angle: rng.random::<f64>() * PI,
            offset: (2.0 * rng.random::<f64>() - 1.0) * radius,
        })
        .collect()
}

pub fn line_intersection(torus: &TorusBox, a: &Line, b: &Line) -> Option<Coord> {
    let (s1, c1) = a.angle.sin_cos();
    let (s2, c2) = b.angle.sin_cos();
    let det = c1 * s2 - s1 * c2;
    if det.abs() < 1e-14 {
        return None;
    }
    let x = (a.offset * s2 - b.offset * s1) / det;
    let y = (c1 * b.offset - c2 * a.offset) / det;
    let h = 0.5 * torus.side();
    Some([x + h, y + h, 0.0])
}

/// Poisson line intersection process in a 2D box; lines are clipped to the box, not wrapped.
pub fn gen_phip(torus: TorusBox, line_intensity: f64, stream: RngStream) -> Result<PointSample> {
    if torus.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: torus.dim(),
        });
    }
    check_intensity(line_intensity)?;
    let mut rng = stream.rng();
    let lines = sample_lines(&torus, line_intensity, &mut rng);
    let mut points = Vec::new();
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            if let Some(p) = line_intersection(&torus, a, b).filter(|p| torus.contains(p)) {
                points.push(p);
            }
        }
    }
    let meta = SampleMeta::new(stream, "phip", line_intensity * line_intensity / PI);
    Ok(PointSample::new(torus, points, meta))
}
