use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Dataset, LabeledSequence};
use crate::repr::{
    alignment_distance_matrix, histogram_distance_matrix, max_path_length, path_histogram_with, symmetrize,
    AlignmentCosts, Disconnected, PathHistogram, SquareMatrix,
};

/// When to apply clip eigenvalue correction to training kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrectionMode {
    Never,
    /// Correct only if the smallest eigenvalue is below −1e-8 · max|λ|.
    #[default]
    Auto,
    Always,
}

/// Pairwise dissimilarities over all points of a set of trajectories.
/// Points are laid out trajectory after trajectory.
#[derive(Debug, Clone)]
pub struct Problem {
    pub distances: SquareMatrix,
    pub lengths: Vec<usize>,
    pub trajectory_ids: Vec<String>,
    pub metadata: BTreeMap<String, String>,
}

impl Problem {
    pub fn new(distances: SquareMatrix, lengths: Vec<usize>, trajectory_ids: Vec<String>) -> Result<Self> {
        let total: usize = lengths.iter().sum();
        if total != distances.n() {
            return Err(Error::arg(format!(
                "trajectory lengths sum to {total} but the matrix covers {} points",
                distances.n()
            )));
        }
        if lengths.len() != trajectory_ids.len() {
            return Err(Error::arg("one id per trajectory required"));
        }
        if let Some(j) = lengths.iter().position(|&l| l < 2) {
            return Err(Error::arg(format!(
                "trajectory {:?} has fewer than 2 points",
                trajectory_ids[j]
            )));
        }
        let distances = symmetrize(&distances);
        distances.check(1e-9)?;
        Ok(Problem {
            distances,
            lengths,
            trajectory_ids,
            metadata: BTreeMap::new(),
        })
    }

    /// Shortest-path histograms compared by Euclidean distance, with
    /// disconnected pairs dropped.
    pub fn from_histograms(d: &Dataset) -> Result<Self> {
        Self::from_histograms_with(d, Disconnected::Drop)
    }

    pub fn from_histograms_with(d: &Dataset, mode: Disconnected) -> Result<Self> {
        let hs = dataset_histograms(d, mode)?;
        let mut p = Problem::new(histogram_distance_matrix(&hs)?, d.lengths(), ids(d))?;
        p.metadata = d.metadata.clone();
        p.metadata.insert("representation".into(), "histogram".into());
        Ok(p)
    }

    /// Node label sequences compared by affine alignment.
    pub fn from_alignment(d: &Dataset, costs: &AlignmentCosts) -> Result<Self> {
        let seqs: Vec<LabeledSequence> = d
            .trajectories
            .iter()
            .flat_map(|t| {
                t.snapshots
                    .iter()
                    .enumerate()
                    .map(move |(s, g)| g.to_sequence(format!("{}/{s}", t.id)))
            })
            .collect();
        let mut p = Problem::new(alignment_distance_matrix(&seqs, costs)?, d.lengths(), ids(d))?;
        p.metadata = d.metadata.clone();
        p.metadata.insert("representation".into(), "alignment".into());
        Ok(p)
    }

    pub fn n_points(&self) -> usize {
        self.distances.n()
    }

    pub fn n_trajectories(&self) -> usize {
        self.lengths.len()
    }

    /// Global point indices of each trajectory.
    pub fn trajectory_points(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.lengths.len());
        let mut offset = 0;
        for &len in &self.lengths {
            out.push((offset..offset + len).collect());
            offset += len;
        }
        out
    }
}

fn ids(d: &Dataset) -> Vec<String> {
    d.trajectories.iter().map(|t| t.id.clone()).collect()
}

/// Histograms of every snapshot, padded to the dataset-wide longest path.
pub fn dataset_histograms(d: &Dataset, mode: Disconnected) -> Result<Vec<PathHistogram>> {
    let max_len = max_path_length(d.graphs());
    d.graphs().map(|g| path_histogram_with(g, max_len, mode)).collect()
}
