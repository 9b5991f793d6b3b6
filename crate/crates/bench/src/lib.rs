//! Shared fixtures for the benchmarks.

use covtune::{sample_mvn, Dataset, EstimatorSpec, Family, GridOptions, ModelSpec, RngStream, SymMatrix};

/// `n` rows from Model 2 (`rho = 0.5`) in dimension `p`.
pub fn ar1_data(n: usize, p: usize, seed: u64) -> Dataset {
    let sigma = ar1_sigma(p);
    sample_mvn(&vec![0.0; p], &sigma, n, &RngStream::new(seed, 0)).expect("valid model")
}

pub fn ar1_sigma(p: usize) -> SymMatrix {
    ModelSpec::new(2, 0.5, 0.0, p)
        .and_then(|m| m.build_sigma())
        .expect("valid model")
}

/// Default grid for `family` on `data`.
pub fn spec(family: Family, data: &Dataset) -> EstimatorSpec {
    EstimatorSpec::default_for(family, data, &GridOptions::default()).expect("non-empty grid")
}
