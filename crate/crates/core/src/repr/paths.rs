use nalgebra::DMatrix;

use super::matrix::{Role, SquareMatrix};
use crate::error::{Error, Result};
use crate::graph::TemporalGraph;

/// All-pairs shortest path lengths with unit edge weights, in node order.
/// Disconnected pairs are `f64::INFINITY`.
pub fn floyd_warshall(g: &TemporalGraph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut dist = DMatrix::from_element(n, n, f64::INFINITY);
    for i in 0..n {
        dist[(i, i)] = 0.0;
    }
    for (i, nbrs) in g.adjacency().iter().enumerate() {
        for &j in nbrs {
            dist[(i, j)] = 1.0;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[(i, k)];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + dist[(k, j)];
                if via < dist[(i, j)] {
                    dist[(i, j)] = via;
                }
            }
        }
    }
    dist
}

/// How node pairs without a connecting path enter a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Disconnected {
    #[default]
    Drop,
    /// Counted in an extra bin after the longest length.
    Count,
}

/// `counts[l - 1]` = number of unordered node pairs at shortest-path
/// distance `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathHistogram {
    pub counts: Vec<u64>,
    /// Pairs without a path, when they are counted.
    pub disconnected: Option<u64>,
}

impl PathHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.disconnected.unwrap_or(0)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts
            .iter()
            .chain(&self.disconnected)
            .map(|&c| c as f64)
            .collect()
    }
}

/// Histogram with disconnected pairs dropped.
pub fn path_histogram(g: &TemporalGraph, max_len: usize) -> Result<PathHistogram> {
    path_histogram_with(g, max_len, Disconnected::Drop)
}

pub fn path_histogram_with(g: &TemporalGraph, max_len: usize, mode: Disconnected) -> Result<PathHistogram> {
    if max_len < 1 {
        return Err(Error::arg("max_len must be >= 1"));
    }
    let dist = floyd_warshall(g);
    let mut counts = vec![0u64; max_len];
    let mut disconnected = 0;
    let n = g.node_count();
    for i in 0..n {
        for j in i + 1..n {
            let d = dist[(i, j)];
            if d.is_infinite() {
                disconnected += 1;
                continue;
            }
            let len = d as usize;
            if len > max_len {
                return Err(Error::arg(format!(
                    "shortest path of length {len} exceeds max_len {max_len}"
                )));
            }
            counts[len - 1] += 1;
        }
    }
    Ok(PathHistogram {
        counts,
        disconnected: (mode == Disconnected::Count).then_some(disconnected),
    })
}

/// Longest finite shortest path over all graphs (at least 1), used to size
/// histograms consistently across a dataset.
pub fn max_path_length<'a>(graphs: impl IntoIterator<Item = &'a TemporalGraph>) -> usize {
    graphs
        .into_iter()
        .flat_map(|g| {
            floyd_warshall(g)
                .iter()
                .filter(|d| d.is_finite())
                .map(|&d| d as usize)
                .collect::<Vec<_>>()
        })
        .max()
        .unwrap_or(0)
        .max(1)
}

/// Pairwise Euclidean distances between histograms.
pub fn histogram_distance_matrix(hs: &[PathHistogram]) -> Result<SquareMatrix> {
    if let Some(first) = hs.first() {
        if let Some(bad) = hs
            .iter()
            .find(|h| h.counts.len() != first.counts.len() || h.disconnected.is_some() != first.disconnected.is_some())
        {
            return Err(Error::arg(format!(
                "histogram lengths differ: {} vs {}",
                first.counts.len(),
                bad.counts.len()
            )));
        }
    }
    let vecs: Vec<Vec<f64>> = hs.iter().map(PathHistogram::as_f64).collect();
    let n = hs.len();
    let mut data = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = vecs[i]
                .iter()
                .zip(&vecs[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            data[(i, j)] = d;
            data[(j, i)] = d;
        }
    }
    SquareMatrix::new(Role::Dissimilarity, data)
}
