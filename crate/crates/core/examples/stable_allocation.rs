//! Fair partition by capacitated stable allocation on the site lattice.
//!
//! The 1D case mirrors the large-scale setup with 100 sites per point.

use std::fs::File;
use std::io::BufWriter;

use hul::generators::{gen_binomial, gen_poisson};
use hul::rng::RngStream;
use hul::torus::TorusBox;
use hul::transports::{find_blocking_pair, stable_allocation};

fn main() -> hul::Result<()> {
    let torus = TorusBox::new(1, 100.0)?;
    let s = gen_binomial(torus, 1.0, RngStream::new(3, 0))?;
    let a = stable_allocation(&s, 10_000)?;
    let t = a.cell_table();
    let sizes: Vec<usize> = (0..s.len()).map(|p| t.sites_of(p).len()).collect();
    println!(
        "1D: {} points, capacity {:?}, cell sizes {}..={}, stable: {}",
        s.len(),
        a.capacity,
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap(),
        find_blocking_pair(&a, &s).is_none()
    );

    let torus = TorusBox::new(2, 16.0)?;
    let s = gen_poisson(torus, 1.0, RngStream::new(3, 1))?;
    let a = stable_allocation(&s, 64)?;
    let t = a.cell_table();
    println!(
        "2D Poisson: {} points (target 256), {} saturated, {} sites outside",
        s.len(),
        t.saturated_cells().len(),
        a.outside_count()
    );
    std::fs::create_dir_all("out")?;
    a.write_csv(BufWriter::new(File::create("out/allocation_sites.csv")?))?;
    s.save("out".as_ref(), "allocation_points")?;
    Ok(())
}
