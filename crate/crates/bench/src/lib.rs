//! Seeded fixtures shared by the benchmarks.

use std::sync::Arc;

use deddens_core::workbench::{generate, GeneratorKind, GeneratorSpec, Scenario};
use deddens_core::{MeasureSpace, Operator, C64};

pub fn scenario(kind: GeneratorKind, dim: usize, seed: u64) -> Scenario {
    let blocks = (dim / 2).max(1);
    generate(&GeneratorSpec::new(kind, dim, blocks, seed)).expect("valid fixture spec")
}

pub fn space(s: &Scenario) -> Arc<MeasureSpace> {
    MeasureSpace::new(s.weights.clone()).expect("generated weights")
}

pub fn operator(s: &Scenario, name: &str) -> Operator {
    let rows: Vec<Vec<C64>> = s.operators[name]
        .iter()
        .map(|r| r.iter().map(|z| C64::new(z[0], z[1])).collect())
        .collect();
    Operator::from_rows(&space(s), &rows).expect("generated operator")
}

/// `(T, S)` from a random-operator scenario.
pub fn operator_pair(dim: usize, seed: u64) -> (Operator, Operator) {
    let s = scenario(GeneratorKind::RandomOperator, dim, seed);
    (operator(&s, "T"), operator(&s, "S"))
}
