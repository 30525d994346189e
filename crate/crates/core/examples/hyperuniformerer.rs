//! Poisson points before and after the hyperuniformerer, with the two
//! cell-based predictions for comparison.

use hul::generators::gen_poisson;
use hul::rng::RngStream;
use hul::spectral::{s_hyperuniformerer_conditional, s_hyperuniformerer_mc, scattering_intensity, SpectrumEstimate};
use hul::torus::{KGrid, TorusBox};
use hul::transports::{hyperuniformerer, stable_allocation, HyperuniformererVariant};

fn main() -> hul::Result<()> {
    let torus = TorusBox::new(2, 32.0)?;
    let kgrid = KGrid::new(torus, 8)?;
    let (mut before, mut after, mut mc, mut cond) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..8 {
        let s = gen_poisson(torus, 1.0, RngStream::new(42, i))?;
        let alloc = stable_allocation(&s, 128)?;
        let reps = (0..20)
            .map(|r| {
                hyperuniformerer(
                    &s,
                    &alloc,
                    HyperuniformererVariant::Single,
                    RngStream::new(42, i).derive(r),
                )
                .map(|x| x.0)
            })
            .collect::<hul::Result<Vec<_>>>()?;
        after.push(scattering_intensity(&reps, &kgrid)?);
        let cells = alloc.cell_table();
        mc.push(s_hyperuniformerer_mc(
            &cells,
            &kgrid,
            usize::MAX,
            RngStream::new(43, i),
        )?);
        cond.push(s_hyperuniformerer_conditional(&cells, &kgrid)?);
        before.push(s);
    }
    let before = scattering_intensity(&before, &kgrid)?;
    let after = SpectrumEstimate::pool(&after)?;
    let mc = SpectrumEstimate::pool(&mc)?;
    let cond = SpectrumEstimate::pool(&cond)?;
    println!(
        "{:>7} {:>8} {:>8} {:>10} {:>11}",
        "k", "before", "after", "fair cells", "conditional"
    );
    for i in 0..kgrid.max_index {
        println!(
            "{:7.3} {:8.3} {:8.3} {:10.3} {:11.3}",
            before.radial_bins[i].k_mid,
            before.radial_bins[i].mean,
            after.radial_bins[i].mean,
            mc.radial_bins[i].mean,
            cond.radial_bins[i].mean
        );
    }
    Ok(())
}
