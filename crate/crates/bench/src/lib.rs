//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use meanflow_core::{ForcingSpec, GridSpec, SolverConfig, SpectralField};

/// Forced flow on a `dimension`-dimensional grid with `resolution` points per side.
pub fn forced_config(dimension: usize, resolution: usize) -> SolverConfig {
    let grid = GridSpec::new(dimension, resolution, 2.0 * PI).expect("valid grid");
    let force = SpectralField::random(&grid, 1, 4.0, 0.5).expect("force fits the grid");
    let initial = SpectralField::random(&grid, 2, 6.0, 0.5).expect("initial field fits the grid");
    SolverConfig {
        grid,
        viscosity: 0.01,
        dt: 1e-3,
        t_end: 1.0,
        forcing: ForcingSpec::steady(force),
        initial,
        sample_stride: 1,
    }
}
