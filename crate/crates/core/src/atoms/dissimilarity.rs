use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    #[default]
    Correlation,
    Euclidean,
}

impl FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlation" => Ok(DistanceMetric::Correlation),
            "euclidean" => Ok(DistanceMetric::Euclidean),
            other => Err(Error::Config(format!("unknown distance metric `{other}`"))),
        }
    }
}

/// `1 - r` for the Pearson correlation `r`. A constant vector is at
/// distance 0 from an identical vector and 1 from anything else.
pub fn correlation_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "vectors must have equal length");
    if a == b {
        return 0.0;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 1.0;
    }
    let r = (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0);
    1.0 - r
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "vectors must have equal length");
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Symmetric matrix with zero diagonal, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl DissimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = vec![std::iter::once(String::new()).chain((0..self.n).map(|j| j.to_string())).collect()];
        for i in 0..self.n {
            rows.push(std::iter::once(i.to_string()).chain((0..self.n).map(|j| self.get(i, j).to_string())).collect());
        }
        rows
    }
}

pub fn dissimilarity_matrix(vectors: &[Vec<f64>], metric: DistanceMetric) -> Result<DissimilarityMatrix> {
    let n = vectors.len();
    if let Some(v) = vectors.iter().find(|v| v.len() != vectors[0].len() || v.is_empty()) {
        return Err(Error::Shape(format!("vector of length {} among vectors of length {}", v.len(), vectors[0].len())));
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = match metric {
                DistanceMetric::Correlation => correlation_distance(&vectors[i], &vectors[j]),
                DistanceMetric::Euclidean => euclidean_distance(&vectors[i], &vectors[j]),
            };
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    Ok(DissimilarityMatrix { n, values })
}
