//! Shared fixtures for the solver benchmarks.

use ordinal_itr::duplication::{duplicate, DuplicatedSample};
use ordinal_itr::simulation::{generate, ScenarioConfig};
use ordinal_itr::{Dataset, Gram, KernelSpec, ScenarioId};

/// Training data for a scenario at a fixed seed.
pub fn dataset(id: ScenarioId, n: usize) -> Dataset {
    generate(&ScenarioConfig::new(id, n, 42))
        .expect("scenario parameters are valid")
        .data
}

/// Duplicated rows and base Gram matrix ready for the dual solver.
pub fn dual_inputs(data: &Dataset, spec: KernelSpec) -> (Vec<DuplicatedSample>, Gram) {
    let rows = duplicate(data).expect("dataset is valid");
    let gram = Gram::new(&spec, (0..data.len()).map(|i| data.row(i)));
    (rows, gram)
}
