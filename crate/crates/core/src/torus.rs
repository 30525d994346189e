//! Periodic cubic boxes, minimal-image geometry, and commensurable wavevectors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Coordinates are stored in a fixed three-slot array; slots beyond `dim` are zero.
pub type Coord = [f64; 3];

/// Periodic cubic window `[0, side)^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusBox {
    dim: usize,
    side: f64,
}

impl TorusBox {
    pub fn new(dim: usize, side: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("dim", format!("must be 1, 2 or 3, got {dim}")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid("side", format!("must be positive, got {side}")));
        }
        Ok(Self { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Maps a scalar into `[0, side)`.
    pub fn wrap_scalar(&self, v: f64) -> f64 {
        let w = v.rem_euclid(self.side);
        // rem_euclid can return `side` itself for tiny negative inputs
        if w >= self.side {
            0.0
        } else {
            w
        }
    }

    pub fn wrap(&self, mut x: Coord) -> Coord {
        for a in 0..self.dim {
            x[a] = self.wrap_scalar(x[a]);
        }
        for v in x.iter_mut().skip(self.dim) {
            *v = 0.0;
        }
        x
    }

    pub fn contains(&self, x: &Coord) -> bool {
        (0..self.dim).all(|a| x[a] >= 0.0 && x[a] < self.side)
    }

    fn minimal_image_scalar(&self, d: f64) -> f64 {
        let half = 0.5 * self.side;
        let mut r = (d + half).rem_euclid(self.side) - half;
        if r >= half {
            r -= self.side;
        }
        r
    }

    /// Minimal-image displacement from `x` to `y`; each component lies in `[-side/2, side/2)`.
    pub fn displacement(&self, x: &Coord, y: &Coord) -> Coord {
        let mut out = [0.0; 3];
        for a in 0..self.dim {
            out[a] = self.minimal_image_scalar(y[a] - x[a]);
        }
        out
    }

    pub fn distance_sq(&self, x: &Coord, y: &Coord) -> f64 {
        let d = self.displacement(x, y);
        d[..self.dim].iter().map(|v| v * v).sum()
    }

    pub fn distance(&self, x: &Coord, y: &Coord) -> f64 {
        self.distance_sq(x, y).sqrt()
    }

    /// Slice-based displacement that validates dimensions.
    pub fn torus_displacement(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let (cx, cy) = (self.coord_from_slice(x)?, self.coord_from_slice(y)?);
        Ok(self.displacement(&cx, &cy)[..self.dim].to_vec())
    }

    pub fn torus_distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (cx, cy) = (self.coord_from_slice(x)?, self.coord_from_slice(y)?);
        Ok(self.distance(&cx, &cy))
    }

    pub fn coord_from_slice(&self, x: &[f64]) -> Result<Coord> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut c = [0.0; 3];
        c[..self.dim].copy_from_slice(x);
        Ok(c)
    }

    /// Volume of the unit ball in this dimension.
    pub fn unit_ball_volume(&self) -> f64 {
        unit_ball_volume(self.dim)
    }
}

pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => PI,
        3 => 4.0 / 3.0 * PI,
        _ => unreachable!("dimension is validated at box construction"),
    }
}

/// All wavevectors `k = (2π/side)·m` with integer `m ≠ 0` and `‖m‖∞ ≤ max_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    pub torus: TorusBox,
    pub max_index: usize,
    indices: Vec<[i32; 3]>,
}

impl KGrid {
    pub fn new(torus: TorusBox, max_index: usize) -> Result<Self> {
        if max_index < 1 {
            return Err(invalid("max_index", "must be at least 1"));
        }
        let m = max_index as i32;
        let range = |a: usize| if a < torus.dim() { -m..=m } else { 0..=0 };
        let mut indices = Vec::with_capacity((2 * max_index + 1).pow(torus.dim() as u32) - 1);
        for i in range(0) {
            for j in range(1) {
                for l in range(2) {
                    if (i, j, l) != (0, 0, 0) {
                        indices.push([i, j, l]);
                    }
                }
            }
        }
        Ok(Self {
            torus,
            max_index,
            indices,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[[i32; 3]] {
        &self.indices
    }

    /// Fundamental frequency `2π/side`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.torus.side()
    }

    pub fn vector(&self, i: usize) -> Coord {
        let dk = self.dk();
        let m = self.indices[i];
        [dk * m[0] as f64, dk * m[1] as f64, dk * m[2] as f64]
    }

    pub fn vectors(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.len()).map(|i| self.vector(i))
    }

    /// Euclidean norm of the integer index of vector `i`.
    pub fn index_norm(&self, i: usize) -> f64 {
        let m = self.indices[i];
        ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt()
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.index_norm(i) * self.dk()
    }
}

/// Convenience wrapper matching the operation name used throughout the docs.
pub fn allowed_wavevectors(torus: TorusBox, max_index: usize) -> Result<KGrid> {
    KGrid::new(torus, max_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn minimal_image_in_one_dimension() {
        let b = TorusBox::new(1, 10.0).unwrap();
        assert_eq!(b.torus_displacement(&[1.0], &[9.0]).unwrap(), vec![-2.0]);
        assert_eq!(b.torus_distance(&[1.0], &[9.0]).unwrap(), 2.0);
        assert_eq!(b.torus_displacement(&[3.5], &[3.5]).unwrap(), vec![0.0]);
        assert_eq!(b.torus_distance(&[3.5], &[3.5]).unwrap(), 0.0);
    }

    #[test]
    fn wraparound_in_two_dimensions() {
        let b = TorusBox::new(2, 10.0).unwrap();
        let d = b.torus_displacement(&[9.0, 9.0], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(d[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(d[1], 2.0, epsilon = 1e-12);
        let far = b.torus_distance(&[0.0, 0.0], &[5.0, 5.0]).unwrap();
        assert_relative_eq!(far, 5.0 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let b = TorusBox::new(2, 10.0).unwrap();
        assert!(matches!(
            b.torus_distance(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(TorusBox::new(0, 1.0).is_err());
        assert!(TorusBox::new(4, 1.0).is_err());
        assert!(TorusBox::new(2, 0.0).is_err());
        assert!(TorusBox::new(2, f64::NAN).is_err());
    }

    #[test]
    fn kgrid_counts_and_values() {
        let b = TorusBox::new(1, 2.0 * PI).unwrap();
        let g = allowed_wavevectors(b, 2).unwrap();
        let ks: Vec<f64> = g.vectors().map(|k| k[0]).collect();
        assert_eq!(ks.len(), 4);
        for (k, want) in ks.iter().zip([-2.0, -1.0, 1.0, 2.0]) {
            assert_relative_eq!(*k, want, epsilon = 1e-12);
        }

        let b2 = TorusBox::new(2, 7.0).unwrap();
        assert_eq!(KGrid::new(b2, 1).unwrap().len(), 8);
        let b3 = TorusBox::new(3, 7.0).unwrap();
        assert_eq!(KGrid::new(b3, 2).unwrap().len(), 124);
        assert!(KGrid::new(b3, 0).is_err());
    }

    #[test]
    fn kgrid_excludes_zero_and_is_symmetric() {
        let b = TorusBox::new(2, 5.0).unwrap();
        let g = KGrid::new(b, 3).unwrap();
        assert!(g.indices().iter().all(|m| *m != [0, 0, 0]));
        for m in g.indices() {
            assert!(g.indices().contains(&[-m[0], -m[1], -m[2]]));
        }
        let min = (0..g.len()).map(|i| g.norm(i)).fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min, 2.0 * PI / 5.0, epsilon = 1e-12);
    }

    fn coord(dim: usize, side: f64) -> impl Strategy<Value = Coord> {
        prop::array::uniform3(0.0..side).prop_map(move |mut c| {
            for v in c.iter_mut().skip(dim) {
                *v = 0.0;
            }
            c
        })
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(dim in 1usize..=3, x in coord(3, 10.0), y in coord(3, 10.0), z in coord(3, 10.0)) {
            let b = TorusBox::new(dim, 10.0).unwrap();
            let (x, y, z) = (b.wrap(x), b.wrap(y), b.wrap(z));
            let dxy = b.distance(&x, &y);
            prop_assert!((dxy - b.distance(&y, &x)).abs() < 1e-12);
            prop_assert!(dxy <= 5.0 * (dim as f64).sqrt() + 1e-12);
            prop_assert!(dxy <= b.distance(&x, &z) + b.distance(&z, &y) + 1e-9);
        }

        #[test]
        fn displacement_reaches_target(dim in 1usize..=3, x in coord(3, 10.0), y in coord(3, 10.0)) {
            let b = TorusBox::new(dim, 10.0).unwrap();
            let (x, y) = (b.wrap(x), b.wrap(y));
            let d = b.displacement(&x, &y);
            let mut moved = x;
            for a in 0..dim {
                prop_assert!(d[a] >= -5.0 && d[a] < 5.0);
                moved[a] += d[a];
            }
            prop_assert!(b.distance(&b.wrap(moved), &y) < 1e-9);
        }
    }
}
