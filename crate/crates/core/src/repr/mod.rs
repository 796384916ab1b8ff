//! Graph representations and the dissimilarity → similarity → kernel chain.

mod align;
mod matrix;
mod paths;

pub use align::{affine_alignment_distance, alignment_distance_matrix, AlignmentCosts};
pub use matrix::{
    eigenvalue_correct_clip, normalize_distances, rbf_matrix, rbf_similarity, read_matrix_csv, spectrum_bounds,
    symmetrize, write_matrix_csv, Role, SquareMatrix,
};
pub use paths::{
    floyd_warshall, histogram_distance_matrix, max_path_length, path_histogram, path_histogram_with, Disconnected,
    PathHistogram,
};
