//! Direction files: a TOML document with the factorization settings and one
//! `[[direction]]` table per returned direction. Floats are written with 17
//! significant digits, so every value reads back bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::factorizer::{FactorizationResult, Method, Regularizer, SemanticDirection};
use crate::matrixkit::norm2;

pub const DIRECTIONS_VERSION: u32 = 1;
/// Allowed deviation of a stored vector's norm from one.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionRecord {
    pub rank_index: usize,
    pub eigenvalue: f64,
    pub b_norm: f64,
    pub cluster: usize,
    /// Largest stationarity residual measured when the file was written.
    pub residual: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionsFile {
    pub version: u32,
    pub latent_dim: usize,
    pub method: Method,
    pub tau: f64,
    pub a: f64,
    #[serde(default)]
    pub retained_rank: Option<usize>,
    pub boundary_cluster_split: bool,
    #[serde(rename = "direction", default)]
    pub directions: Vec<DirectionRecord>,
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

impl DirectionsFile {
    pub fn from_result(result: &FactorizationResult) -> Self {
        let directions = result
            .directions
            .iter()
            .map(|d| DirectionRecord {
                rank_index: d.rank_index,
                eigenvalue: d.eigenvalue,
                b_norm: d.b_norm,
                cluster: d.cluster,
                residual: result
                    .diagnostics
                    .iter()
                    .find(|r| r.rank_index == d.rank_index)
                    .map_or(0.0, |r| r.r1.max(r.r2)),
                vector: d.vector.clone(),
            })
            .collect();
        Self {
            version: DIRECTIONS_VERSION,
            latent_dim: result.latent_dim,
            method: result.method,
            tau: result.regularizer.tau,
            a: result.regularizer.a,
            retained_rank: result.retained_rank,
            boundary_cluster_split: result.boundary_cluster_split,
            directions,
        }
    }

    /// The stored directions as a result without diagnostics.
    pub fn to_result(&self) -> FactorizationResult {
        FactorizationResult {
            directions: self.semantic_directions(),
            method: self.method,
            regularizer: Regularizer {
                tau: self.tau,
                a: self.a,
            },
            latent_dim: self.latent_dim,
            retained_rank: self.retained_rank,
            boundary_cluster_split: self.boundary_cluster_split,
            diagnostics: Vec::new(),
        }
    }

    pub fn semantic_directions(&self) -> Vec<SemanticDirection> {
        self.directions
            .iter()
            .map(|d| SemanticDirection {
                vector: d.vector.clone(),
                eigenvalue: d.eigenvalue,
                rank_index: d.rank_index,
                b_norm: d.b_norm,
                cluster: d.cluster,
            })
            .collect()
    }

    pub fn encode(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "latent_dim = {}", self.latent_dim);
        let _ = writeln!(s, "method = \"{}\"", self.method);
        let _ = writeln!(s, "tau = {}", sci(self.tau));
        let _ = writeln!(s, "a = {}", sci(self.a));
        if let Some(r) = self.retained_rank {
            let _ = writeln!(s, "retained_rank = {r}");
        }
        let _ = writeln!(s, "boundary_cluster_split = {}", self.boundary_cluster_split);
        for d in &self.directions {
            s.push_str("\n[[direction]]\n");
            let _ = writeln!(s, "rank_index = {}", d.rank_index);
            let _ = writeln!(s, "eigenvalue = {}", sci(d.eigenvalue));
            let _ = writeln!(s, "b_norm = {}", sci(d.b_norm));
            let _ = writeln!(s, "cluster = {}", d.cluster);
            let _ = writeln!(s, "residual = {}", sci(d.residual));
            s.push_str("vector = [\n");
            for v in &d.vector {
                let _ = writeln!(s, "  {},", sci(*v));
            }
            s.push_str("]\n");
        }
        s
    }

    pub fn decode(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| Error::InvalidDirections(e.message().to_string()))?;
        file.validate()?;
        Ok(file)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDirections(msg));
        if self.version != DIRECTIONS_VERSION {
            return Err(Error::UnsupportedVersion(self.version));
        }
        if self.latent_dim == 0 {
            return bad("latent_dim is 0".into());
        }
        if !(self.tau >= 0.0 && self.tau.is_finite() && self.a >= 0.0 && self.a.is_finite()) {
            return bad(format!("invalid regularizer tau={} a={}", self.tau, self.a));
        }
        let mut previous = 0;
        for d in &self.directions {
            let i = d.rank_index;
            if i <= previous {
                return bad(format!("rank_index {i} is not increasing"));
            }
            previous = i;
            if d.vector.len() != self.latent_dim {
                return bad(format!(
                    "direction {i} has {} entries, expected {}",
                    d.vector.len(),
                    self.latent_dim
                ));
            }
            let finite = [d.eigenvalue, d.b_norm, d.residual]
                .iter()
                .chain(&d.vector)
                .all(|v| v.is_finite());
            if !finite {
                return bad(format!("direction {i} has a non-finite value"));
            }
            let norm = norm2(&d.vector);
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return bad(format!("direction {i} has norm {norm}, not 1"));
            }
        }
        Ok(())
    }
}

pub fn write_directions(file: &DirectionsFile, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), file.encode().as_bytes())
}

pub fn read_directions(path: impl AsRef<Path>) -> Result<DirectionsFile> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidDirections(format!("not UTF-8: {e}")))?;
    DirectionsFile::decode(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DirectionsFile {
        let third: f64 = 1.0 / 3.0;
        let tail = (1.0 - third * third).sqrt();
        DirectionsFile {
            version: 1,
            latent_dim: 2,
            method: Method::Fast,
            tau: 1e-3,
            a: 0.0123456789,
            retained_rank: Some(1),
            boundary_cluster_split: false,
            directions: vec![
                DirectionRecord {
                    rank_index: 1,
                    eigenvalue: 3.980099502487562,
                    b_norm: 1.005,
                    cluster: 0,
                    residual: 1.1e-17,
                    vector: vec![1.0, 0.0],
                },
                DirectionRecord {
                    rank_index: 2,
                    eigenvalue: -0.0,
                    b_norm: 1e-300,
                    cluster: 1,
                    residual: 0.0,
                    vector: vec![tail, -third],
                },
            ],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let f = sample();
        let text = f.encode();
        assert!(text.contains("eigenvalue = 3.98009950248756"));
        assert!(text.contains("  -3.3333333333333331e-1,"));
        let back = DirectionsFile::decode(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.directions[1].vector[0].to_bits(), f.directions[1].vector[0].to_bits());

        let mut standard = f;
        standard.method = Method::Standard;
        standard.retained_rank = None;
        assert_eq!(DirectionsFile::decode(&standard.encode()).unwrap(), standard);
    }

    #[test]
    fn rejects_non_unit_and_malformed_vectors() {
        let mut f = sample();
        f.directions[0].vector = vec![1.0, 1e-3];
        assert!(matches!(DirectionsFile::decode(&f.encode()), Err(Error::InvalidDirections(_))));

        let mut f = sample();
        f.directions[0].vector = vec![1.0];
        assert!(matches!(DirectionsFile::decode(&f.encode()), Err(Error::InvalidDirections(_))));

        let mut f = sample();
        f.directions[1].rank_index = 1;
        assert!(matches!(DirectionsFile::decode(&f.encode()), Err(Error::InvalidDirections(_))));

        let mut f = sample();
        f.version = 9;
        assert!(matches!(DirectionsFile::decode(&f.encode()), Err(Error::UnsupportedVersion(9))));

        assert!(matches!(DirectionsFile::decode("version = "), Err(Error::InvalidDirections(_))));
        let extra = format!("{}\nsurprise = 1\n", sample().encode()).replace("\n[[direction]]", "\nsurprise2 = 2\n[[direction]]");
        assert!(matches!(DirectionsFile::decode(&extra), Err(Error::InvalidDirections(_))));
    }
}
