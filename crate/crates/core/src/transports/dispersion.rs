//! Equal-volume dispersion of balls inside Voronoi cells, on a pixel grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::allocation::{assign_nearest, SiteGrid};
use crate::error::{invalid, Error, Result};
use crate::pgm::PixelImage;
use crate::sample::PointSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellCoverage {
    pub pixels: usize,
    pub covered: usize,
    /// Radius of the disk around the nucleus found by the bisection.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dispersion {
    pub image: PixelImage,
    pub cells: Vec<CellCoverage>,
    pub global_fraction: f64,
}

/// Grows a disk around each nucleus until it covers `round(alpha·|C|)` pixels
/// of its Voronoi cell `C`. Pixels at equal distance are taken in index order,
/// so every cell is hit exactly.
pub fn equal_volume_dispersion(sample: &PointSample, alpha: f64, resolution: usize) -> Result<Dispersion> {
    if sample.torus.dim() != 2 {
        return Err(Error::Unsupported(
            "equal-volume dispersion is implemented for d = 2".into(),
        ));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    let sites = SiteGrid::new(sample.torus, resolution)?;
    let owner = assign_nearest(sample.points(), &sites)?;
    let n = sample.len();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (s, &o) in owner.iter().enumerate() {
        members[o as usize].push(s as u32);
    }
    let h = sites.voxel();
    let results: Vec<(CellCoverage, Vec<u32>)> = members
        .par_iter()
        .enumerate()
        .map(|(p, px)| {
            let x = sample.points()[p];
            let mut by_dist: Vec<(f64, u32)> = px
                .iter()
                .map(|&s| (sample.torus.distance_sq(&sites.center(s as usize), &x), s))
                .collect();
            by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let target = (alpha * px.len() as f64).round() as usize;
            let count = |r: f64| by_dist.partition_point(|&(d2, _)| d2 <= r * r);
            let (mut lo, mut hi) = (0.0, by_dist.last().map_or(0.0, |d| d.0.sqrt()) + h);
            let mut radius = hi;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let c = count(mid);
                radius = mid;
                if c == target {
                    break;
                }
                if c < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let covered: Vec<u32> = by_dist[..target].iter().map(|&(_, s)| s).collect();
            let cov = CellCoverage {
                pixels: px.len(),
                covered: target,
                radius: if target == 0 { 0.0 } else { radius },
            };
            (cov, covered)
        })
        .collect();
    let mut mask = vec![false; sites.len()];
    let mut cells = Vec::with_capacity(n);
    let mut total = 0usize;
    for (cov, covered) in results {
        for s in covered {
            mask[s as usize] = true;
        }
        total += cov.covered;
        cells.push(cov);
    }
    Ok(Dispersion {
        image: PixelImage::from_mask(resolution, resolution, &mask),
        cells,
        global_fraction: total as f64 / sites.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_poisson;
    use crate::rng::RngStream;
    use crate::torus::TorusBox;

    #[test]
    fn every_cell_hits_its_fraction() {
        let torus = TorusBox::new(2, 8.0).unwrap();
        let s = gen_poisson(torus, 1.0, RngStream::new(2, 0)).unwrap();
        for alpha in [0.0, 0.3, 0.5, 1.0] {
            let d = equal_volume_dispersion(&s, alpha, 128).unwrap();
            for c in &d.cells {
                let want = alpha * c.pixels as f64;
                assert!((c.covered as f64 - want).abs() <= 1.0);
            }
            assert_eq!(d.image.count_set(), d.cells.iter().map(|c| c.covered).sum::<usize>());
            assert!((d.global_fraction - alpha).abs() < 0.01);
        }
    }

    #[test]
    fn covered_pixels_form_a_disk_around_the_nucleus() {
        let torus = TorusBox::new(2, 4.0).unwrap();
        let pts = vec![[2.0, 2.0, 0.0]];
        let s = PointSample::new(
            torus,
            pts,
            crate::sample::SampleMeta::new(RngStream::new(0, 0), "one", 1.0 / 16.0),
        );
        let d = equal_volume_dispersion(&s, 0.25, 64).unwrap();
        let r = d.cells[0].radius;
        assert!((std::f64::consts::PI * r * r - 4.0).abs() < 0.3, "radius {r}");
        assert!(d.image.is_set(32, 32));
        assert!(!d.image.is_set(0, 0));
    }

    #[test]
    fn rejects_other_dimensions() {
        let torus = TorusBox::new(1, 4.0).unwrap();
        let s = gen_poisson(torus, 1.0, RngStream::new(0, 0)).unwrap();
        assert!(equal_volume_dispersion(&s, 0.5, 64).is_err());
    }
}
