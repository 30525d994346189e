//! Voronoi cells of an anti-hyperuniform PHIP sample, turned into a
//! hyperuniform random measure by weighting each cell with its area.

use hul::generators::gen_phip;
use hul::rng::RngStream;
use hul::spectral::scattering_intensity;
use hul::torus::{KGrid, TorusBox};
use hul::transports::{weighted_cell_measure, Allocation, CellPlacement};

fn main() -> hul::Result<()> {
    let torus = TorusBox::new(2, 32.0)?;
    let kgrid = KGrid::new(torus, 6)?;
    let mut before = Vec::new();
    let mut uniform = Vec::new();
    let mut at_point = Vec::new();
    for i in 0..10 {
        let s = gen_phip(torus, std::f64::consts::PI.sqrt(), RngStream::new(5, i))?;
        let cells = Allocation::voronoi(&s, 256)?;
        uniform.push(weighted_cell_measure(&s, &cells, CellPlacement::UniformInCell, RngStream::new(6, i))?.0);
        at_point.push(weighted_cell_measure(&s, &cells, CellPlacement::AtPoint, RngStream::new(6, i))?.0);
        before.push(s);
    }
    let b = scattering_intensity(&before, &kgrid)?;
    let u = scattering_intensity(&uniform, &kgrid)?;
    let p = scattering_intensity(&at_point, &kgrid)?;
    println!("{:>7} {:>9} {:>9} {:>9}", "k", "phip", "uniform", "at point");
    for i in 0..kgrid.max_index {
        println!(
            "{:7.3} {:9.3} {:9.4} {:9.4}",
            b.radial_bins[i].k_mid, b.radial_bins[i].mean, u.radial_bins[i].mean, p.radial_bins[i].mean
        );
    }
    Ok(())
}
