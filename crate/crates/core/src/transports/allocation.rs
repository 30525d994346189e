//! Discretized fair partitions: site lattices, capacitated stable allocation,
//! and per-point cell tables.

use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neighbors::CellGrid;
use crate::sample::PointSample;
use crate::torus::{Coord, TorusBox};

/// Owner value for sites matched beyond the observation window.
pub const OUTSIDE: u32 = u32::MAX;

/// `R^d` voxel centres over the box, x-index fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteGrid {
    pub torus: TorusBox,
    pub resolution: usize,
}

impl SiteGrid {
    pub fn new(torus: TorusBox, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(crate::error::invalid("resolution", "must be positive"));
        }
        Ok(Self { torus, resolution })
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.torus.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Voxel edge length.
    pub fn voxel(&self) -> f64 {
        self.torus.side() / self.resolution as f64
    }

    pub fn voxel_volume(&self) -> f64 {
        self.voxel().powi(self.torus.dim() as i32)
    }

    pub fn center(&self, site: usize) -> Coord {
        let h = self.voxel();
        let mut c = [0.0; 3];
        let mut code = site;
        for v in c.iter_mut().take(self.torus.dim()) {
            *v = ((code % self.resolution) as f64 + 0.5) * h;
            code /= self.resolution;
        }
        c
    }

    /// Index of the voxel containing `x`.
    pub fn site_of(&self, x: &Coord) -> usize {
        let h = self.voxel();
        let mut site = 0;
        for a in (0..self.torus.dim()).rev() {
            let i = ((x[a] / h) as usize).min(self.resolution - 1);
            site = site * self.resolution + i;
        }
        site
    }
}

/// Nearest point for every site (ties broken by lower point index).
pub fn assign_nearest(points: &[Coord], sites: &SiteGrid) -> Result<Vec<u32>> {
    assign_kth_nearest(points, sites, 1)
}

/// Index of the `k`-th nearest point for every site.
pub fn assign_kth_nearest(points: &[Coord], sites: &SiteGrid, k: usize) -> Result<Vec<u32>> {
    if points.is_empty() {
        return Err(Error::Empty("target points"));
    }
    if k == 0 || k > points.len() {
        return Err(crate::error::invalid("k", format!("must lie in 1..={}", points.len())));
    }
    let grid = CellGrid::new(sites.torus, points, 2.0);
    Ok((0..sites.len())
        .into_par_iter()
        .map(|s| grid.k_nearest(&sites.center(s), k, None)[k - 1].1)
        .collect())
}

/// Site-to-point matching; every site has exactly one owner (possibly [`OUTSIDE`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub sites: SiteGrid,
    pub owner: Vec<u32>,
    /// Sites per point for capacitated allocations; `None` for plain Voronoi partitions.
    pub capacity: Option<usize>,
    pub n_points: usize,
}

/// Squared torus distance packed so that the natural order of the tuple is
/// the preference order.
fn pref_key(d2: f64, idx: u32) -> (u64, u32) {
    (d2.to_bits(), idx)
}

/// Stable allocation of `R^d` sites to the points of `sample` with equal capacities.
///
/// The capacity is `floor(R^d / N_target)` with `N_target = round(intensity·volume)`
/// taken from the sample's nominal intensity. Sites propose in index order to
/// points in increasing `(distance, point index)`; a point keeps its `capacity`
/// closest proposers under `(distance, site index)`. Sites rejected by every
/// point are marked [`OUTSIDE`].
pub fn stable_allocation(sample: &PointSample, resolution: usize) -> Result<Allocation> {
    let sites = SiteGrid::new(sample.torus, resolution)?;
    let m = sites.len();
    let n = sample.len();
    if n == 0 {
        return Err(Error::Empty("sample"));
    }
    if m < n {
        return Err(Error::ResolutionTooSmall { sites: m, points: n });
    }
    let n_target = (sample.meta.intensity * sample.torus.volume()).round() as usize;
    if n_target == 0 {
        return Err(crate::error::invalid(
            "intensity",
            "expected point count rounds to zero",
        ));
    }
    let capacity = (m / n_target).max(1);
    let owner = gale_shapley(sample, &sites, capacity);
    Ok(Allocation {
        sites,
        owner,
        capacity: Some(capacity),
        n_points: n,
    })
}

fn gale_shapley(sample: &PointSample, sites: &SiteGrid, capacity: usize) -> Vec<u32> {
    let torus = sample.torus;
    let n = sample.len();
    let m = sites.len();
    let grid = CellGrid::new(torus, sample.points(), 2.0);
    let initial = (capacity.min(64) + 4).min(n);
    // candidate lists are sorted by (d², index) and extended by doubling
    let mut lists: Vec<Vec<(f64, u32)>> = vec![Vec::new(); m];
    let mut next = vec![0usize; m];
    let mut owner = vec![OUTSIDE; m];
    let mut held: Vec<BinaryHeap<(u64, u32)>> = vec![BinaryHeap::new(); n];
    let mut free: Vec<u32> = (0..m as u32).rev().collect();
    while let Some(s) = free.pop() {
        let su = s as usize;
        loop {
            let r = next[su];
            if r >= n {
                owner[su] = OUTSIDE;
                break;
            }
            if r >= lists[su].len() {
                let want = (2 * lists[su].len()).max(initial).min(n);
                lists[su] = grid.k_nearest(&sites.center(su), want, None);
            }
            let (d2, p) = lists[su][r];
            next[su] += 1;
            let heap = &mut held[p as usize];
            let key = pref_key(d2, s);
            if heap.len() < capacity {
                heap.push(key);
                owner[su] = p;
                break;
            }
            let worst = *heap.peek().expect("full heap");
            if key < worst {
                heap.pop();
                heap.push(key);
                owner[su] = p;
                owner[worst.1 as usize] = OUTSIDE;
                free.push(worst.1);
                break;
            }
        }
    }
    owner
}

/// Exhaustive search for a blocking pair `(site, point)`; `None` means stable.
///
/// A pair blocks if the site prefers the point to its current owner (or is
/// unmatched) and the point has spare capacity or prefers the site to its
/// worst held site. Preferences are the same `(distance, index)` orders used
/// by [`stable_allocation`].
pub fn find_blocking_pair(alloc: &Allocation, sample: &PointSample) -> Option<(usize, u32)> {
    let cap = alloc.capacity?;
    let torus = sample.torus;
    let pts = sample.points();
    let n = pts.len();
    let mut count = vec![0usize; n];
    let mut worst: Vec<Option<(u64, u32)>> = vec![None; n];
    for (s, &o) in alloc.owner.iter().enumerate() {
        if o == OUTSIDE {
            continue;
        }
        let key = pref_key(torus.distance_sq(&alloc.sites.center(s), &pts[o as usize]), s as u32);
        count[o as usize] += 1;
        let w = &mut worst[o as usize];
        if w.is_none_or(|cur| key > cur) {
            *w = Some(key);
        }
    }
    for (s, &o) in alloc.owner.iter().enumerate() {
        let c = alloc.sites.center(s);
        let current = (o != OUTSIDE).then(|| pref_key(torus.distance_sq(&c, &pts[o as usize]), o));
        for p in 0..n as u32 {
            if p == o {
                continue;
            }
            let d2 = torus.distance_sq(&c, &pts[p as usize]);
            let site_prefers = current.is_none_or(|cur| pref_key(d2, p) < cur);
            if !site_prefers {
                continue;
            }
            let point_accepts =
                count[p as usize] < cap || worst[p as usize].is_some_and(|w| pref_key(d2, s as u32) < w);
            if point_accepts {
                return Some((s, p));
            }
        }
    }
    None
}

impl Allocation {
    /// Nearest-point (Voronoi) partition at the given resolution.
    pub fn voronoi(sample: &PointSample, resolution: usize) -> Result<Self> {
        let sites = SiteGrid::new(sample.torus, resolution)?;
        let owner = assign_nearest(sample.points(), &sites)?;
        Ok(Self {
            sites,
            owner,
            capacity: None,
            n_points: sample.len(),
        })
    }

    pub fn outside_count(&self) -> usize {
        self.owner.iter().filter(|&&o| o == OUTSIDE).count()
    }

    pub fn cell_table(&self) -> CellTable {
        let mut cells = vec![Vec::new(); self.n_points];
        for (s, &o) in self.owner.iter().enumerate() {
            if o != OUTSIDE {
                cells[o as usize].push(s as u32);
            }
        }
        CellTable {
            sites: self.sites,
            cells,
            capacity: self.capacity,
            outside: self.outside_count(),
        }
    }

    /// CSV site table `site_index,owner`; sites matched outside the window have owner `-1`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["site_index", "owner"])?;
        for (s, &o) in self.owner.iter().enumerate() {
            let owner = if o == OUTSIDE { "-1".to_string() } else { o.to_string() };
            wr.write_record([s.to_string(), owner])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Site lists per point.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    sites: SiteGrid,
    cells: Vec<Vec<u32>>,
    capacity: Option<usize>,
    outside: usize,
}

impl CellTable {
    pub fn torus(&self) -> TorusBox {
        self.sites.torus
    }

    pub fn site_grid(&self) -> &SiteGrid {
        &self.sites
    }

    pub fn voxel(&self) -> f64 {
        self.sites.voxel()
    }

    pub fn n_points(&self) -> usize {
        self.cells.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity.unwrap_or(0)
    }

    pub fn outside_sites(&self) -> usize {
        self.outside
    }

    pub fn sites_of(&self, point: usize) -> &[u32] {
        &self.cells[point]
    }

    pub fn site_centers(&self, point: usize) -> Vec<Coord> {
        self.cells[point]
            .iter()
            .map(|&s| self.sites.center(s as usize))
            .collect()
    }

    pub fn volume(&self, point: usize) -> f64 {
        self.cells[point].len() as f64 * self.sites.voxel_volume()
    }

    pub fn volumes(&self) -> Vec<f64> {
        (0..self.n_points()).map(|p| self.volume(p)).collect()
    }

    /// Points owning exactly `capacity` sites.
    pub fn saturated_cells(&self) -> Vec<usize> {
        match self.capacity {
            Some(c) => (0..self.n_points()).filter(|&p| self.cells[p].len() == c).collect(),
            None => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_binomial, gen_poisson};
    use crate::rng::RngStream;
    use crate::sample::SampleMeta;

    fn binomial(dim: usize, side: f64, n: usize, seed: u64) -> PointSample {
        let torus = TorusBox::new(dim, side).unwrap();
        gen_binomial(torus, n as f64 / torus.volume(), RngStream::new(seed, 0)).unwrap()
    }

    #[test]
    fn site_grid_geometry() {
        let torus = TorusBox::new(2, 4.0).unwrap();
        let g = SiteGrid::new(torus, 8).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.center(0), [0.25, 0.25, 0.0]);
        assert_eq!(g.center(9), [0.75, 0.75, 0.0]);
        for s in [0, 5, 17, 63] {
            assert_eq!(g.site_of(&g.center(s)), s);
        }
    }

    #[test]
    fn single_point_owns_everything() {
        let torus = TorusBox::new(2, 5.0).unwrap();
        let s = PointSample::new(
            torus,
            vec![[1.0, 2.0, 0.0]],
            SampleMeta::new(RngStream::new(0, 0), "one", 1.0 / 25.0),
        );
        let a = stable_allocation(&s, 10).unwrap();
        assert_eq!(a.capacity, Some(100));
        assert!(a.owner.iter().all(|&o| o == 0));
    }

    #[test]
    fn balanced_instances_are_fair_and_stable() {
        for (dim, n, res) in [(1, 5, 500), (1, 20, 2000), (2, 4, 20), (2, 16, 40)] {
            let s = binomial(dim, 10.0, n, n as u64);
            let a = stable_allocation(&s, res).unwrap();
            let cap = a.capacity.unwrap();
            assert_eq!(cap * n, a.sites.len());
            let t = a.cell_table();
            assert!((0..n).all(|p| t.sites_of(p).len() == cap));
            assert_eq!(a.outside_count(), 0);
            assert_eq!(find_blocking_pair(&a, &s), None);
        }
    }

    #[test]
    fn unbalanced_instances_are_stable() {
        let torus = TorusBox::new(2, 6.0).unwrap();
        for seed in 0..6 {
            let s = gen_poisson(torus, 0.5, RngStream::new(seed, 0)).unwrap();
            let a = stable_allocation(&s, 24).unwrap();
            assert_eq!(find_blocking_pair(&a, &s), None, "seed {seed}");
            let cap = a.capacity.unwrap();
            let t = a.cell_table();
            let sat = t.saturated_cells().len();
            if s.len() <= 18 {
                // under-saturated: every point full, leftovers are outside
                assert_eq!(sat, s.len());
                assert_eq!(a.outside_count(), a.sites.len() - cap * s.len());
            } else {
                assert_eq!(a.outside_count(), 0);
            }
        }
    }

    #[test]
    fn blocking_pair_detector_finds_swaps() {
        let s = binomial(1, 10.0, 5, 3);
        let mut a = stable_allocation(&s, 500).unwrap();
        // swap the owners of the sites nearest to two different points
        let p0 = s.points()[0];
        let p1 = s.points()[1];
        let s0 = a.sites.site_of(&p0);
        let s1 = a.sites.site_of(&p1);
        a.owner.swap(s0, s1);
        assert!(find_blocking_pair(&a, &s).is_some());
    }

    #[test]
    fn resolution_must_cover_points() {
        let s = binomial(1, 10.0, 20, 1);
        assert!(matches!(
            stable_allocation(&s, 10),
            Err(Error::ResolutionTooSmall { .. })
        ));
    }

    #[test]
    fn voronoi_partition_matches_brute_force() {
        let s = binomial(2, 5.0, 12, 9);
        let a = Allocation::voronoi(&s, 20).unwrap();
        for site in 0..a.sites.len() {
            let c = a.sites.center(site);
            let best = (0..s.len())
                .min_by(|&i, &j| {
                    let di = s.torus.distance_sq(&c, &s.points()[i]);
                    let dj = s.torus.distance_sq(&c, &s.points()[j]);
                    di.total_cmp(&dj).then(i.cmp(&j))
                })
                .unwrap();
            assert_eq!(a.owner[site] as usize, best);
        }
        let t = a.cell_table();
        let total: f64 = t.volumes().iter().sum();
        assert!((total - 25.0).abs() < 1e-9);
    }
}
