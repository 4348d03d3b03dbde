use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::generate::{generate, GeneratorKind, GeneratorSpec, DEFAULT_MAX_DIM};
use super::run::{run_scenario, Report, VERSION};
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Scenarios per generator kind.
    pub count: usize,
    pub max_dim: usize,
    pub tolerances: ToleranceConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 5,
            max_dim: DEFAULT_MAX_DIM,
            tolerances: ToleranceConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub spec: GeneratorSpec,
    pub report: Option<Report>,
    /// Structural error that stopped the scenario.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub config: SuiteConfig,
    pub entries: Vec<SuiteEntry>,
    pub consistency_failures: usize,
    pub structural_errors: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl SuiteReport {
    /// 2 on any consistency failure, else 1 on any structural error, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.consistency_failures > 0 {
            2
        } else if self.structural_errors > 0 {
            1
        } else {
            0
        }
    }
}

/// The generator specs a suite run draws, in execution order.
pub fn suite_specs(cfg: &SuiteConfig) -> Vec<GeneratorSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max_dim = cfg.max_dim.max(1);
    let mut specs = Vec::with_capacity(cfg.count * GeneratorKind::ALL.len());
    for kind in GeneratorKind::ALL {
        for _ in 0..cfg.count {
            let dim = rng.random_range(max_dim.min(2)..=max_dim);
            let blocks = rng.random_range(1..=dim);
            let mut spec = GeneratorSpec::new(kind, dim, blocks, rng.random());
            spec.max_dim = max_dim;
            specs.push(spec);
        }
    }
    specs
}

/// Generates and runs every scenario sequentially.
pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    let entries: Vec<SuiteEntry> = suite_specs(cfg)
        .into_iter()
        .map(|spec| {
            let outcome = generate(&spec).and_then(|mut s| {
                s.tolerances = cfg.tolerances;
                run_scenario(&s)
            });
            match outcome {
                Ok(report) => SuiteEntry {
                    spec,
                    report: Some(report),
                    error: None,
                },
                Err(e) => SuiteEntry {
                    spec,
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    SuiteReport {
        version: VERSION.into(),
        config: cfg.clone(),
        consistency_failures: entries
            .iter()
            .filter_map(|e| e.report.as_ref())
            .map(|r| r.consistency_failures)
            .sum(),
        structural_errors: entries.iter().filter(|e| e.error.is_some()).count(),
        entries,
        wall_time_ms: None,
    }
}
