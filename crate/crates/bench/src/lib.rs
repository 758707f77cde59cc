//! Shared generators for the criterion benchmarks.

use compactkit_core::grid::{FunctionFamily, Grid, GridFunction};

/// Family of Gaussian bumps spread along the first axis of a 1-D box.
pub fn bump_family_1d(members: usize, cells: usize, spacing: f64) -> FunctionFamily {
    let origin = -(cells as f64) * spacing / 2.0;
    let grid = Grid::line(cells, origin, spacing).unwrap();
    let functions: Vec<GridFunction> = (0..members)
        .map(|i| {
            let c = -1.0 + 2.0 * i as f64 / members.max(2) as f64;
            GridFunction::from_fn(grid.clone(), move |x| {
                (-4.0 * (x[0] - c) * (x[0] - c)).exp()
            })
            .unwrap()
        })
        .collect();
    FunctionFamily::from_functions(functions).unwrap()
}

/// Family of Gaussian bumps on a square 2-D box.
pub fn bump_family_2d(members: usize, cells: usize, spacing: f64) -> FunctionFamily {
    let origin = -(cells as f64) * spacing / 2.0;
    let grid = Grid::new(vec![cells, cells], vec![origin, origin], spacing).unwrap();
    let functions: Vec<GridFunction> = (0..members)
        .map(|i| {
            let c = -0.6 + 1.2 * i as f64 / members.max(2) as f64;
            GridFunction::from_fn(grid.clone(), move |x| {
                (-3.0 * ((x[0] - c) * (x[0] - c) + x[1] * x[1])).exp()
            })
            .unwrap()
        })
        .collect();
    FunctionFamily::from_functions(functions).unwrap()
}

/// Deterministic pseudo-random samples for norm benchmarks.
pub fn noise_function(cells: usize, spacing: f64) -> GridFunction {
    let grid = Grid::new(vec![cells, cells], vec![0.0, 0.0], spacing).unwrap();
    let values: Vec<f64> = (0..grid.len())
        .map(|i| ((i as f64 * 12.9898).sin() * 43758.5453).fract())
        .collect();
    GridFunction::new(grid, values).unwrap()
}
