//! Shared fixtures for the benchmarks.

use morrey_sparse::fields::random_band_limited;
use morrey_sparse::{Grid3, VectorField};

/// Seeded band-limited field on an `n³` grid.
pub fn field(n: usize) -> VectorField {
    let grid = Grid3::periodic(n).expect("valid grid");
    random_band_limited(grid, n as f64 / 4.0, 11)
}
