//! Displacements and iterated local dynamics.

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::allocation::{assign_nearest, SiteGrid};
use super::Displacement;
use crate::error::{invalid, Result};
use crate::fields::{sample_field_displacements, uniform_in_ball};
use crate::neighbors::CellGrid;
use crate::rng::RngStream;
use crate::sample::PointSample;
use crate::torus::Coord;

fn shifted(sample: &PointSample, moves: &[Coord]) -> Vec<Coord> {
    sample
        .points()
        .iter()
        .zip(moves)
        .map(|(p, v)| sample.torus.wrap([p[0] + v[0], p[1] + v[1], p[2] + v[2]]))
        .collect()
}

/// Moves every point by a displacement drawn from `law`; weights are carried along.
pub fn displace(sample: &PointSample, law: &Displacement, stream: RngStream) -> Result<PointSample> {
    let dim = sample.torus.dim();
    let moves = match law {
        Displacement::Iid { kernel } => {
            kernel.validate()?;
            let mut rng = stream.rng();
            (0..sample.len()).map(|_| kernel.sample(dim, &mut rng)).collect()
        }
        Displacement::Field { model } => sample_field_displacements(sample, model, stream)?,
    };
    sample.transported(shifted(sample, &moves), sample.weights().to_vec(), law.name())
}

/// One sweep of random organization: every point with a neighbour closer than
/// `radius` receives a kick uniform in the ball of radius `kick`.
pub fn random_organization_step(
    sample: &PointSample,
    radius: f64,
    kick: f64,
    stream: RngStream,
) -> Result<PointSample> {
    random_organization_step_with(sample, radius, kick, stream, |_, _| [0.0; 3])
}

/// As [`random_organization_step`], adding a deterministic drift `drift(i, sample)`
/// to every active point.
pub fn random_organization_step_with(
    sample: &PointSample,
    radius: f64,
    kick: f64,
    stream: RngStream,
    drift: impl Fn(usize, &PointSample) -> Coord,
) -> Result<PointSample> {
    if !(radius > 0.0) || !(kick >= 0.0) {
        return Err(invalid(
            "random organization",
            format!("need radius > 0 and kick >= 0, got {radius}, {kick}"),
        ));
    }
    let dim = sample.torus.dim();
    let grid = CellGrid::new(sample.torus, sample.points(), 1.0);
    let active: Vec<bool> = (0..sample.len())
        .into_par_iter()
        .map(|i| grid.any_within(&sample.points()[i], radius, Some(i as u32)))
        .collect();
    let mut rng = stream.rng();
    let moves: Vec<Coord> = active
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            // draw for every point so that the stream does not depend on activity
            let k = uniform_in_ball(dim, kick, &mut rng);
            if !a {
                return [0.0; 3];
            }
            let d = drift(i, sample);
            [k[0] + d[0], k[1] + d[1], k[2] + d[2]]
        })
        .collect();
    let label = format!("random_organization(r={radius},eps={kick})");
    sample.transported(shifted(sample, &moves), sample.weights().to_vec(), label)
}

/// One Lloyd iteration: each point moves to the centroid of its discretized
/// Voronoi cell. Centroids use per-axis circular means so cells crossing the
/// boundary are handled; points with empty cells stay put.
pub fn lloyd_step(sample: &PointSample, resolution: usize) -> Result<PointSample> {
    let sites = SiteGrid::new(sample.torus, resolution)?;
    let owner = assign_nearest(sample.points(), &sites)?;
    let dim = sample.torus.dim();
    let side = sample.torus.side();
    let mut acc = vec![[[0.0f64; 2]; 3]; sample.len()];
    let mut count = vec![0usize; sample.len()];
    for (s, &o) in owner.iter().enumerate() {
        let c = sites.center(s);
        let a = &mut acc[o as usize];
        for ax in 0..dim {
            let (sin, cos) = (TAU * c[ax] / side).sin_cos();
            a[ax][0] += cos;
            a[ax][1] += sin;
        }
        count[o as usize] += 1;
    }
    let points = sample
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if count[i] == 0 {
                return *p;
            }
            let mut x = [0.0; 3];
            for ax in 0..dim {
                let [c, s] = acc[i][ax];
                x[ax] = s.atan2(c) / TAU * side;
            }
            sample.torus.wrap(x)
        })
        .collect();
    sample.transported(points, sample.weights().to_vec(), format!("lloyd(R={resolution})"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::IidKernel;
    use crate::generators::gen_binomial;
    use crate::sample::SampleMeta;
    use crate::torus::TorusBox;

    #[test]
    fn point_mass_displacement_is_identity() {
        let torus = TorusBox::new(2, 5.0).unwrap();
        let s = gen_binomial(torus, 1.0, RngStream::new(0, 0)).unwrap();
        let law = Displacement::Iid {
            kernel: IidKernel::PointMass,
        };
        let d = displace(&s, &law, RngStream::new(0, 1)).unwrap();
        assert_eq!(d.points(), s.points());
    }

    #[test]
    fn ball_displacement_stays_within_radius() {
        let torus = TorusBox::new(3, 4.0).unwrap();
        let s = gen_binomial(torus, 1.0, RngStream::new(1, 0)).unwrap();
        let law = Displacement::Iid {
            kernel: IidKernel::UniformBall { radius: 0.3 },
        };
        let d = displace(&s, &law, RngStream::new(1, 1)).unwrap();
        for (a, b) in s.points().iter().zip(d.points()) {
            assert!(torus.distance(a, b) <= 0.3 + 1e-12);
        }
    }

    #[test]
    fn isolated_points_do_not_move() {
        let torus = TorusBox::new(2, 10.0).unwrap();
        let pts = vec![[1.0, 1.0, 0.0], [1.2, 1.0, 0.0], [6.0, 6.0, 0.0]];
        let s = PointSample::new(torus, pts, SampleMeta::new(RngStream::new(0, 0), "manual", 0.03));
        let out = random_organization_step(&s, 0.5, 0.1, RngStream::new(0, 1)).unwrap();
        assert_eq!(out.points()[2], [6.0, 6.0, 0.0]);
        assert!(torus.distance(&out.points()[0], &s.points()[0]) > 0.0);
        assert!(torus.distance(&out.points()[0], &s.points()[0]) <= 0.1 + 1e-12);
    }

    #[test]
    fn drift_hook_is_applied_to_active_points() {
        let torus = TorusBox::new(1, 10.0).unwrap();
        let pts = vec![[1.0, 0.0, 0.0], [1.2, 0.0, 0.0], [6.0, 0.0, 0.0]];
        let s = PointSample::new(torus, pts, SampleMeta::new(RngStream::new(0, 0), "manual", 0.3));
        let out = random_organization_step_with(&s, 0.5, 0.0, RngStream::new(0, 1), |_, _| [1.0, 0.0, 0.0]).unwrap();
        assert!((out.points()[0][0] - 2.0).abs() < 1e-12);
        assert_eq!(out.points()[2][0], 6.0);
    }

    #[test]
    fn lloyd_fixes_a_lattice_and_handles_wraparound() {
        let torus = TorusBox::new(2, 4.0).unwrap();
        let pts: Vec<Coord> = (0..16)
            .map(|i| [(i % 4) as f64 + 0.5, (i / 4) as f64 + 0.5, 0.0])
            .collect();
        let s = PointSample::new(
            torus,
            pts.clone(),
            SampleMeta::new(RngStream::new(0, 0), "lattice", 1.0),
        );
        let out = lloyd_step(&s, 40).unwrap();
        for (a, b) in pts.iter().zip(out.points()) {
            assert!(torus.distance(a, b) < 1e-9);
        }
        // a single point sits at the circular mean of the whole torus cell
        let one = PointSample::new(
            torus,
            vec![[0.1, 3.9, 0.0]],
            SampleMeta::new(RngStream::new(0, 0), "one", 1.0 / 16.0),
        );
        let moved = lloyd_step(&one, 8).unwrap();
        assert!(moved.points()[0][0].is_finite());
    }

    #[test]
    fn lloyd_reduces_energy() {
        let torus = TorusBox::new(2, 6.0).unwrap();
        let mut s = gen_binomial(torus, 1.0, RngStream::new(5, 0)).unwrap();
        let energy = |s: &PointSample| {
            let sites = SiteGrid::new(s.torus, 60).unwrap();
            let own = assign_nearest(s.points(), &sites).unwrap();
            own.iter()
                .enumerate()
                .map(|(i, &o)| s.torus.distance_sq(&sites.center(i), &s.points()[o as usize]))
                .sum::<f64>()
        };
        let mut prev = energy(&s);
        for _ in 0..5 {
            s = lloyd_step(&s, 60).unwrap();
            let e = energy(&s);
            assert!(e <= prev * (1.0 + 1e-9));
            prev = e;
        }
    }
}
