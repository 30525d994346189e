//! Periodic bucket grid for nearest-neighbour and fixed-radius queries.

use crate::torus::{Coord, TorusBox};

/// Points binned into `cells^dim` equal cubes on the torus.
#[derive(Debug, Clone)]
pub struct CellGrid {
    torus: TorusBox,
    cells: usize,
    width: f64,
    starts: Vec<usize>,
    items: Vec<u32>,
    points: Vec<Coord>,
}

/// Orders candidates by squared distance, then by index.
fn key_cmp(a: &(f64, u32), b: &(f64, u32)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl CellGrid {
    /// Grid with roughly `per_cell` points per bucket.
    pub fn new(torus: TorusBox, points: &[Coord], per_cell: f64) -> Self {
        let dim = torus.dim();
        let n = points.len().max(1) as f64;
        let target_cells = (n / per_cell.max(0.1)).max(1.0);
        let mut cells = target_cells.powf(1.0 / dim as f64).floor().max(1.0) as usize;
        // keep memory bounded in one dimension
        cells = cells.min(1 << (20 / dim));
        let width = torus.side() / cells as f64;
        let total = cells.pow(dim as u32);
        let mut counts = vec![0usize; total + 1];
        let ids: Vec<usize> = points.iter().map(|p| Self::flat_cell(dim, cells, width, p)).collect();
        for &c in &ids {
            counts[c + 1] += 1;
        }
        for i in 0..total {
            counts[i + 1] += counts[i];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; points.len()];
        for (i, &c) in ids.iter().enumerate() {
            items[fill[c]] = i as u32;
            fill[c] += 1;
        }
        Self {
            torus,
            cells,
            width,
            starts,
            items,
            points: points.to_vec(),
        }
    }

    fn axis_cell(cells: usize, width: f64, v: f64) -> usize {
        ((v / width) as usize).min(cells - 1)
    }

    fn flat_cell(dim: usize, cells: usize, width: f64, p: &Coord) -> usize {
        let mut id = 0;
        for a in 0..dim {
            id = id * cells + Self::axis_cell(cells, width, p[a]);
        }
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Coord] {
        &self.points
    }

    fn bucket(&self, flat: usize) -> &[u32] {
        &self.items[self.starts[flat]..self.starts[flat + 1]]
    }

    /// Calls `f` for every bucket at Chebyshev cell offset exactly `ring` from `home`.
    /// Caller guarantees `2*ring + 1 <= cells`, so no bucket is visited twice.
    fn for_ring(&self, home: [usize; 3], ring: usize, mut f: impl FnMut(&[u32])) {
        let dim = self.torus.dim();
        let r = ring as i64;
        let nc = self.cells as i64;
        let span = 2 * r + 1;
        let total = span.pow(dim as u32);
        for code in 0..total {
            let mut c = code;
            let mut off = [0i64; 3];
            let mut on_shell = false;
            for o in off.iter_mut().take(dim) {
                *o = c % span - r;
                c /= span;
                on_shell |= o.abs() == r;
            }
            if !on_shell {
                continue;
            }
            let mut flat = 0usize;
            for a in 0..dim {
                let idx = (home[a] as i64 + off[a]).rem_euclid(nc) as usize;
                flat = flat * self.cells + idx;
            }
            f(self.bucket(flat));
        }
    }

    fn home(&self, x: &Coord) -> [usize; 3] {
        let mut h = [0; 3];
        for a in 0..self.torus.dim() {
            h[a] = Self::axis_cell(self.cells, self.width, x[a]);
        }
        h
    }

    /// The `k` nearest points to `x` sorted by `(distance², index)`, optionally skipping one index.
    pub fn k_nearest(&self, x: &Coord, k: usize, exclude: Option<u32>) -> Vec<(f64, u32)> {
        let avail = self.len() - usize::from(exclude.is_some_and(|e| (e as usize) < self.len()));
        let k = k.min(avail);
        if k == 0 {
            return Vec::new();
        }
        let home = self.home(x);
        let mut cand: Vec<(f64, u32)> = Vec::new();
        let mut ring = 0usize;
        loop {
            if 2 * ring + 1 > self.cells {
                return self.brute_k_nearest(x, k, exclude);
            }
            self.for_ring(home, ring, |bucket| {
                for &i in bucket {
                    if Some(i) != exclude {
                        cand.push((self.torus.distance_sq(x, &self.points[i as usize]), i));
                    }
                }
            });
            if cand.len() >= k {
                let guaranteed = ring as f64 * self.width;
                let g2 = guaranteed * guaranteed;
                cand.sort_unstable_by(key_cmp);
                if cand[k - 1].0 < g2 {
                    cand.truncate(k);
                    return cand;
                }
            }
            ring += 1;
        }
    }

    fn brute_k_nearest(&self, x: &Coord, k: usize, exclude: Option<u32>) -> Vec<(f64, u32)> {
        let mut all: Vec<(f64, u32)> = self
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i as u32) != exclude)
            .map(|(i, p)| (self.torus.distance_sq(x, p), i as u32))
            .collect();
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, key_cmp);
            all.truncate(k);
        }
        all.sort_unstable_by(key_cmp);
        all
    }

    pub fn nearest(&self, x: &Coord, exclude: Option<u32>) -> Option<(f64, u32)> {
        self.k_nearest(x, 1, exclude).into_iter().next()
    }

    /// Visits every point within torus distance `r` of `x` (inclusive) with its squared distance.
    pub fn for_each_within(&self, x: &Coord, r: f64, mut f: impl FnMut(u32, f64)) {
        let r2 = r * r;
        let rings = (r / self.width).ceil() as usize + 1;
        if 2 * rings + 1 > self.cells {
            for (i, p) in self.points.iter().enumerate() {
                let d2 = self.torus.distance_sq(x, p);
                if d2 <= r2 {
                    f(i as u32, d2);
                }
            }
            return;
        }
        let home = self.home(x);
        for ring in 0..=rings {
            self.for_ring(home, ring, |bucket| {
                for &i in bucket {
                    let d2 = self.torus.distance_sq(x, &self.points[i as usize]);
                    if d2 <= r2 {
                        f(i, d2);
                    }
                }
            });
        }
    }

    /// Visits buckets and returns whether any point other than `exclude` lies within `r`.
    pub fn any_within(&self, x: &Coord, r: f64, exclude: Option<u32>) -> bool {
        let mut hit = false;
        self.for_each_within(x, r, |i, _| hit |= Some(i) != exclude);
        hit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    fn random_points(torus: TorusBox, n: usize, seed: u64) -> Vec<Coord> {
        let mut rng = RngStream::new(seed, 0).rng();
        (0..n)
            .map(|_| {
                let mut c = [0.0; 3];
                for v in c.iter_mut().take(torus.dim()) {
                    *v = rng.random::<f64>() * torus.side();
                }
                c
            })
            .collect()
    }

    #[test]
    fn k_nearest_matches_brute_force() {
        for dim in 1..=3 {
            let torus = TorusBox::new(dim, 10.0).unwrap();
            let pts = random_points(torus, 300, dim as u64);
            let grid = CellGrid::new(torus, &pts, 1.5);
            let queries = random_points(torus, 50, 99 + dim as u64);
            for q in &queries {
                for k in [1, 3, 17, 300] {
                    let fast = grid.k_nearest(q, k, None);
                    let slow = grid.brute_k_nearest(q, k, None);
                    assert_eq!(fast, slow, "dim {dim} k {k}");
                }
            }
            let fast = grid.k_nearest(&pts[5], 4, Some(5));
            assert!(fast.iter().all(|(_, i)| *i != 5));
            assert_eq!(fast, grid.brute_k_nearest(&pts[5], 4, Some(5)));
        }
    }

    #[test]
    fn radius_query_matches_brute_force() {
        let torus = TorusBox::new(2, 8.0).unwrap();
        let pts = random_points(torus, 400, 3);
        let grid = CellGrid::new(torus, &pts, 2.0);
        for q in random_points(torus, 30, 4) {
            for r in [0.3, 1.1, 3.9] {
                let mut got = Vec::new();
                grid.for_each_within(&q, r, |i, _| got.push(i));
                got.sort_unstable();
                let want: Vec<u32> = (0..pts.len() as u32)
                    .filter(|&i| torus.distance(&q, &pts[i as usize]) <= r)
                    .collect();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn empty_grid() {
        let torus = TorusBox::new(2, 8.0).unwrap();
        let grid = CellGrid::new(torus, &[], 2.0);
        assert!(grid.nearest(&[1.0, 1.0, 0.0], None).is_none());
    }
}
