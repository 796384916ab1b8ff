//! Seeded generators for the synthetic experiment datasets.

mod ba;
mod gol;

pub use ba::{generate_ba_dataset, generate_ba_trajectory, BaParams};
pub use gol::{
    generate_gol_dataset, generate_gol_trajectory, gol_step, grid_to_graph, GolParams, Grid, NoiseMode, Pattern,
};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-trajectory seeds derived from one master seed.
pub(crate) fn child_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.next_u64()).collect()
}
