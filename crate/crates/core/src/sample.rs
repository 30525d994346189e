//! Finite weighted point configurations and their CSV + JSON manifest format.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;
use crate::torus::{Coord, TorusBox};

/// Provenance carried alongside every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub seed: u64,
    pub stream: u64,
    pub generator: String,
    pub transports: Vec<String>,
    pub intensity: f64,
}

impl SampleMeta {
    pub fn new(stream: RngStream, generator: impl Into<String>, intensity: f64) -> Self {
        Self {
            seed: stream.master_seed,
            stream: stream.stream_id,
            generator: generator.into(),
            transports: Vec::new(),
            intensity,
        }
    }
}

/// Sidecar manifest written next to a sample CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub seed: u64,
    pub stream: u64,
    pub box_side: f64,
    pub dim: usize,
    pub generator: String,
    pub transports: Vec<String>,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub torus: TorusBox,
    points: Vec<Coord>,
    weights: Vec<f64>,
    pub meta: SampleMeta,
}

impl PointSample {
    /// Builds a sample with unit weights; coordinates are re-wrapped into the box.
    pub fn new(torus: TorusBox, points: Vec<Coord>, meta: SampleMeta) -> Self {
        let weights = vec![1.0; points.len()];
        Self::from_parts(torus, points, weights, meta).expect("unit weights are valid")
    }

    pub fn from_parts(torus: TorusBox, points: Vec<Coord>, weights: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(invalid(
                "weights",
                format!("{} weights for {} points", weights.len(), points.len()),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(invalid(
                "weights",
                format!("weight {w} is not a finite nonnegative number"),
            ));
        }
        let points = points.into_iter().map(|p| torus.wrap(p)).collect();
        Ok(Self {
            torus,
            points,
            weights,
            meta,
        })
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

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_unit_weighted(&self) -> bool {
        self.weights.iter().all(|w| *w == 1.0)
    }

    /// Same box and provenance, new configuration; records `step` in the transport chain.
    pub fn transported(&self, points: Vec<Coord>, weights: Vec<f64>, step: impl Into<String>) -> Result<Self> {
        let mut meta = self.meta.clone();
        meta.transports.push(step.into());
        Self::from_parts(self.torus, points, weights, meta)
    }

    /// Shifts every point by `v` and re-wraps.
    pub fn translated(&self, v: Coord) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| self.torus.wrap([p[0] + v[0], p[1] + v[1], p[2] + v[2]]))
            .collect();
        Self {
            torus: self.torus,
            points,
            weights: self.weights.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn manifest(&self) -> SampleManifest {
        SampleManifest {
            seed: self.meta.seed,
            stream: self.meta.stream,
            box_side: self.torus.side(),
            dim: self.torus.dim(),
            generator: self.meta.generator.clone(),
            transports: self.meta.transports.clone(),
            intensity: self.meta.intensity,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let dim = self.torus.dim();
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = ["x", "y", "z"][..dim].to_vec();
        header.push("weight");
        wr.write_record(&header)?;
        for (p, wt) in self.points.iter().zip(&self.weights) {
            let mut rec: Vec<String> = p[..dim].iter().map(|v| v.to_string()).collect();
            rec.push(wt.to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?))?;
        let mut f = BufWriter::new(File::create(dir.join(format!("{stem}.json")))?);
        serde_json::to_writer_pretty(&mut f, &self.manifest())?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }

    /// Reads `<stem>.csv` with its manifest `<stem>.json`.
    pub fn load(csv_path: &Path) -> Result<Self> {
        let manifest_path = csv_path.with_extension("json");
        let manifest: SampleManifest = serde_json::from_reader(std::io::BufReader::new(File::open(&manifest_path)?))?;
        let torus = TorusBox::new(manifest.dim, manifest.box_side)?;
        let fmt_err = |reason: String| Error::Format {
            path: Some(csv_path.to_path_buf()),
            reason,
        };
        let mut rd = csv::Reader::from_path(csv_path)?;
        let expected: Vec<&str> = ["x", "y", "z"][..torus.dim()]
            .iter()
            .copied()
            .chain(std::iter::once("weight"))
            .collect();
        let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
        if header != expected {
            return Err(fmt_err(format!("header {header:?}, expected {expected:?}")));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| fmt_err(format!("{s:?}: {e}"))))
                .collect::<Result<_>>()?;
            let mut c = [0.0; 3];
            c[..torus.dim()].copy_from_slice(&vals[..torus.dim()]);
            points.push(c);
            weights.push(vals[torus.dim()]);
        }
        let meta = SampleMeta {
            seed: manifest.seed,
            stream: manifest.stream,
            generator: manifest.generator,
            transports: manifest.transports,
            intensity: manifest.intensity,
        };
        PointSample::from_parts(torus, points, weights, meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meta() -> SampleMeta {
        SampleMeta::new(RngStream::new(1, 2), "test", 1.0)
    }

    #[test]
    fn coordinates_are_rewrapped() {
        let b = TorusBox::new(2, 4.0).unwrap();
        let s = PointSample::new(b, vec![[-0.5, 4.25, 9.0]], meta());
        assert_eq!(s.points()[0], [3.5, 0.25, 0.0]);
    }

    #[test]
    fn rejects_bad_weights() {
        let b = TorusBox::new(1, 4.0).unwrap();
        assert!(PointSample::from_parts(b, vec![[1.0, 0.0, 0.0]], vec![-1.0], meta()).is_err());
        assert!(PointSample::from_parts(b, vec![[1.0, 0.0, 0.0]], vec![], meta()).is_err());
    }

    #[test]
    fn header_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let b = TorusBox::new(2, 4.0).unwrap();
        PointSample::new(b, vec![[1.0, 2.0, 0.0]], meta())
            .save(dir.path(), "s")
            .unwrap();
        std::fs::write(dir.path().join("s.csv"), "x,weight\n1,1\n").unwrap();
        assert!(matches!(
            PointSample::load(&dir.path().join("s.csv")),
            Err(Error::Format { .. })
        ));
    }

    proptest! {
        #[test]
        fn csv_round_trip(dim in 1usize..=3, pts in prop::collection::vec((prop::array::uniform3(0.0f64..8.0), 0.0f64..5.0), 0..40)) {
            let b = TorusBox::new(dim, 8.0).unwrap();
            let (points, weights): (Vec<Coord>, Vec<f64>) = pts.into_iter().unzip();
            let mut m = meta();
            m.transports.push("lloyd(R=64)".into());
            let s = PointSample::from_parts(b, points, weights, m).unwrap();
            let dir = tempfile::tempdir().unwrap();
            s.save(dir.path(), "sample").unwrap();
            let back = PointSample::load(&dir.path().join("sample.csv")).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
