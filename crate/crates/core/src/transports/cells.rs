//! Point processes built by placing mass inside allocated cells.

use rand::Rng as _;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::allocation::{Allocation, CellTable};
use crate::error::{invalid, Error, Result};
use crate::rng::{Rng, RngStream};
use crate::sample::PointSample;
use crate::torus::Coord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum HyperuniformererVariant {
    /// One uniform point per cell.
    #[default]
    Single,
    /// `m` iid uniform points per cell.
    MPoints { m: usize },
    /// Truncated stick-breaking draw from a Dirichlet process with the
    /// normalized cell volume as base measure.
    Dirichlet {
        #[serde(default = "default_sticks")]
        sticks: usize,
    },
}

fn default_sticks() -> usize {
    256
}

impl HyperuniformererVariant {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::MPoints { m: 0 } => Err(invalid("m", "must be at least 1")),
            Self::Dirichlet { sticks: 0 } => Err(invalid("sticks", "must be at least 1")),
            _ => Ok(()),
        }
    }

    fn label(&self) -> String {
        match self {
            Self::Single => "hyperuniformerer".into(),
            Self::MPoints { m } => format!("hyperuniformerer(m={m})"),
            Self::Dirichlet { sticks } => format!("hyperuniformerer(dirichlet,{sticks})"),
        }
    }
}

/// Bookkeeping for mass lost at the window boundary.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TransportStats {
    /// Points whose cell holds no sites.
    pub empty_cells: usize,
    /// Atoms discarded because they fell in the part of an unsaturated cell
    /// lying outside the discretized window.
    pub moved_outside: usize,
}

fn uniform_in_voxel(cells: &CellTable, site: u32, rng: &mut Rng) -> Coord {
    let grid = cells.site_grid();
    let h = grid.voxel();
    let mut c = grid.center(site as usize);
    for v in c.iter_mut().take(grid.torus.dim()) {
        *v += (rng.random::<f64>() - 0.5) * h;
    }
    grid.torus.wrap(c)
}

fn uniform_in_cell(cells: &CellTable, point: usize, rng: &mut Rng) -> Coord {
    let sites = cells.sites_of(point);
    let s = sites[rng.random_range(0..sites.len())];
    uniform_in_voxel(cells, s, rng)
}

/// Replaces each point with uniform mass inside its allocated cell.
///
/// For a cell holding fewer than `capacity` sites each atom is kept with
/// probability `sites/capacity`, which is the chance that a uniform point of
/// the full cell lands inside the window.
pub fn hyperuniformerer(
    sample: &PointSample,
    alloc: &Allocation,
    variant: HyperuniformererVariant,
    stream: RngStream,
) -> Result<(PointSample, TransportStats)> {
    variant.validate()?;
    if alloc.sites.torus != sample.torus || alloc.n_points != sample.len() {
        return Err(Error::MismatchedBoxes);
    }
    let cap = alloc
        .capacity
        .ok_or_else(|| invalid("allocation", "hyperuniformerer needs a capacitated allocation"))?;
    let cells = alloc.cell_table();
    let mut rng = stream.rng();
    let mut stats = TransportStats::default();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let beta = Beta::new(1.0, 1.0).expect("valid beta");
    for p in 0..sample.len() {
        let owned = cells.sites_of(p).len();
        if owned == 0 {
            stats.empty_cells += 1;
            continue;
        }
        let keep = owned as f64 / cap as f64;
        let mut place = |w: f64, rng: &mut Rng, points: &mut Vec<Coord>, weights: &mut Vec<f64>| {
            let x = uniform_in_cell(&cells, p, rng);
            if owned < cap && rng.random::<f64>() >= keep {
                stats.moved_outside += 1;
            } else {
                points.push(x);
                weights.push(w);
            }
        };
        match variant {
            HyperuniformererVariant::Single => place(1.0, &mut rng, &mut points, &mut weights),
            HyperuniformererVariant::MPoints { m } => {
                for _ in 0..m {
                    place(1.0, &mut rng, &mut points, &mut weights);
                }
            }
            HyperuniformererVariant::Dirichlet { sticks } => {
                let mut rest = 1.0;
                for t in 0..sticks {
                    let w = if t + 1 == sticks {
                        rest
                    } else {
                        let v: f64 = beta.sample(&mut rng);
                        let w = rest * v;
                        rest -= w;
                        w
                    };
                    place(w, &mut rng, &mut points, &mut weights);
                }
            }
        }
    }
    if stats.empty_cells + stats.moved_outside > 0 {
        log::debug!(
            "hyperuniformerer: {} empty cells, {} atoms moved outside",
            stats.empty_cells,
            stats.moved_outside
        );
    }
    let out = sample.transported(points, weights, variant.label())?;
    Ok((out, stats))
}

/// Where the atom of a weighted cell measure sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CellPlacement {
    #[default]
    UniformInCell,
    AtPoint,
}

/// One atom per non-empty cell carrying the cell's volume as weight.
pub fn weighted_cell_measure(
    sample: &PointSample,
    alloc: &Allocation,
    placement: CellPlacement,
    stream: RngStream,
) -> Result<(PointSample, TransportStats)> {
    if alloc.sites.torus != sample.torus || alloc.n_points != sample.len() {
        return Err(Error::MismatchedBoxes);
    }
    let cells = alloc.cell_table();
    let mut rng = stream.rng();
    let mut stats = TransportStats::default();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for p in 0..sample.len() {
        if cells.sites_of(p).is_empty() {
            stats.empty_cells += 1;
            continue;
        }
        points.push(match placement {
            CellPlacement::UniformInCell => uniform_in_cell(&cells, p, &mut rng),
            CellPlacement::AtPoint => sample.points()[p],
        });
        weights.push(cells.volume(p));
    }
    let label = match placement {
        CellPlacement::UniformInCell => "weighted_cells(uniform)",
        CellPlacement::AtPoint => "weighted_cells(at_point)",
    };
    Ok((sample.transported(points, weights, label)?, stats))
}
