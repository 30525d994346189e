//! Transports that move or reweight a point sample while preserving
//! stationarity.

mod allocation;
mod cells;
mod dispersion;
mod dynamics;
mod nn;

pub use allocation::{
    assign_kth_nearest, assign_nearest, find_blocking_pair, stable_allocation, Allocation, CellTable, SiteGrid, OUTSIDE,
};
pub use cells::{hyperuniformerer, weighted_cell_measure, CellPlacement, HyperuniformererVariant, TransportStats};
pub use dispersion::{equal_volume_dispersion, CellCoverage, Dispersion};
pub use dynamics::{displace, lloyd_step, random_organization_step, random_organization_step_with};
pub use nn::{nn_transport, nn_volume_measure, NnTarget};

use serde::{Deserialize, Serialize};

use crate::fields::{CovarianceModel, IidKernel};

/// Displacement law used by [`displace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Displacement {
    Iid { kernel: IidKernel },
    Field { model: CovarianceModel },
}

impl Displacement {
    pub fn name(&self) -> String {
        match self {
            Self::Iid { kernel } => format!("displace(iid {kernel:?})"),
            Self::Field { model } => format!(
                "displace(field {:?} var={} range={})",
                model.kind, model.variance, model.range
            ),
        }
    }
}
