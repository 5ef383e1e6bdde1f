//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use choquard_core::{make_grid, RadialFunction, RadialGrid};

/// Default-range log grid in three dimensions.
pub fn grid(n: usize) -> Arc<RadialGrid> {
    Arc::new(make_grid(1e-4, 100.0, n, 3).expect("valid grid"))
}

/// Gaussian right-hand side.
pub fn bump(g: &Arc<RadialGrid>) -> RadialFunction {
    RadialFunction::from_fn(g.clone(), |r| (-r * r).exp())
}
