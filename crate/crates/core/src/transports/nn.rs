//! Nearest-neighbour transports.

use rayon::prelude::*;

use super::allocation::{assign_kth_nearest, SiteGrid};
use crate::error::{invalid, Error, Result};
use crate::neighbors::CellGrid;
use crate::sample::PointSample;

/// Where mass is sent by [`nn_transport`].
#[derive(Debug, Clone, Copy)]
pub enum NnTarget<'a> {
    /// Another sample in the same box.
    Other(&'a PointSample),
    /// The source itself, excluding each point from its own candidates.
    SelfExcluded,
}

/// Sends the mass of every source point to its `k`-th nearest target point.
///
/// The result has the target's positions, weighted by the mass received.
pub fn nn_transport(source: &PointSample, target: NnTarget<'_>, k: usize) -> Result<PointSample> {
    let (tgt, exclude_self) = match target {
        NnTarget::Other(t) => {
            if t.torus != source.torus {
                return Err(Error::MismatchedBoxes);
            }
            (t, false)
        }
        NnTarget::SelfExcluded => (source, true),
    };
    let available = tgt.len() - usize::from(exclude_self);
    if k == 0 || k > available {
        return Err(invalid("k", format!("must lie in 1..={available}")));
    }
    let grid = CellGrid::new(tgt.torus, tgt.points(), 2.0);
    let dest: Vec<u32> = (0..source.len())
        .into_par_iter()
        .map(|i| {
            let ex = exclude_self.then_some(i as u32);
            grid.k_nearest(&source.points()[i], k, ex)[k - 1].1
        })
        .collect();
    let mut weights = vec![0.0; tgt.len()];
    for (i, &d) in dest.iter().enumerate() {
        weights[d as usize] += source.weights()[i];
    }
    let label = match target {
        NnTarget::Other(_) => format!("nn_transport(k={k})"),
        NnTarget::SelfExcluded => format!("nn_transport(self,k={k})"),
    };
    let mut out = tgt.transported(tgt.points().to_vec(), weights, label)?;
    out.meta.intensity = source.meta.intensity;
    Ok(out)
}

/// Weights every target point by the volume of its `k`-th order Voronoi cell,
/// the set of locations for which it is the `k`-th nearest point.
pub fn nn_volume_measure(target: &PointSample, k: usize, resolution: usize) -> Result<PointSample> {
    let sites = SiteGrid::new(target.torus, resolution)?;
    let owner = assign_kth_nearest(target.points(), &sites, k)?;
    let mut weights = vec![0.0; target.len()];
    let vox = sites.voxel_volume();
    for &o in &owner {
        weights[o as usize] += vox;
    }
    target.transported(target.points().to_vec(), weights, format!("nn_volume(k={k})"))
}
