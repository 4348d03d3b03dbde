use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{WorkbenchError, WorkbenchResult};
use crate::condexp::{wct, Partition, WctOperator};
use crate::hilbert::space::{MeasureSpace, Operator, Vector, C64};
use crate::tolerance::ToleranceConfig;

/// `[re, im]`.
pub type ComplexPair = [f64; 2];

/// An argument of a test: a name in the scenario or an integer parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArgValue {
    Int(u64),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSpec {
    pub kind: String,
    #[serde(default)]
    pub args: BTreeMap<String, ArgValue>,
    /// Expected verdict. A mismatch is recorded as a consistency failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<bool>,
}

impl TestSpec {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.into(),
            args: BTreeMap::new(),
            expect: None,
        }
    }

    pub fn arg(mut self, role: &str, name: &str) -> Self {
        self.args.insert(role.into(), ArgValue::Name(name.into()));
        self
    }

    pub fn int(mut self, role: &str, value: u64) -> Self {
        self.args.insert(role.into(), ArgValue::Int(value));
        self
    }

    pub fn expect(mut self, value: bool) -> Self {
        self.expect = Some(value);
        self
    }

    /// Name bound to `role`, defaulting to the role itself.
    pub fn name<'a>(&'a self, role: &'a str) -> &'a str {
        match self.args.get(role) {
            Some(ArgValue::Name(n)) => n,
            _ => role,
        }
    }

    pub fn int_arg(&self, role: &str, default: u64) -> u64 {
        match self.args.get(role) {
            Some(ArgValue::Int(v)) => *v,
            _ => default,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub weights: Vec<f64>,
    /// 1-based atom indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub vectors: BTreeMap<String, Vec<ComplexPair>>,
    #[serde(default)]
    pub operators: BTreeMap<String, Vec<Vec<ComplexPair>>>,
    #[serde(default)]
    pub tests: Vec<TestSpec>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Role {
    Vector,
    Operator,
    /// An operator, or the WCT matrix of `u`, `w` when the name is unbound.
    OperatorOrWct,
    Wct,
    Partition,
}

/// Test kinds and the roles each one reads.
pub(crate) const TEST_KINDS: &[(&str, &[(&str, Role)])] = {
    use Role::*;
    &[
        ("cond_exp_axioms", &[("blocks", Partition), ("f", Vector), ("g", Vector)]),
        ("wct_norm", &[("W", Wct)]),
        ("composition_identities", &[("W", Wct)]),
        ("power_identity", &[("W", Wct)]),
        ("quasinormal", &[("W", Wct)]),
        ("quasi_isometry", &[("W", Wct)]),
        ("wct_pinv", &[("W", Wct)]),
        ("partial_isometry", &[("W", Wct)]),
        ("mg_annihilation", &[("W", Wct), ("g", Vector)]),
        ("block_decomposition", &[("W", Wct)]),
        ("spectral_radius", &[("T", OperatorOrWct)]),
        ("pinv", &[("T", OperatorOrWct)]),
        ("hermitian_sqrt", &[("S", Operator)]),
        ("majorizes", &[("T", OperatorOrWct), ("S", Operator)]),
        ("douglas", &[("T", OperatorOrWct), ("S", Operator)]),
        ("deddens_empirical", &[("T", OperatorOrWct), ("S", Operator)]),
        ("bt_empirical", &[("T", OperatorOrWct), ("S", Operator)]),
        ("deddens_rank_one", &[("x", Vector), ("y", Vector), ("S", Operator)]),
        ("bt_rank_one", &[("y", Vector), ("S", Operator)]),
        ("rank_one_factor", &[("T", OperatorOrWct), ("y", Vector)]),
        ("similarity_transport", &[("A", Operator), ("T", OperatorOrWct), ("S", Operator)]),
        (
            "deddens_similar_rank_one",
            &[("A", Operator), ("x", Vector), ("y", Vector), ("S", Operator)],
        ),
        ("deddens_quasi_isometry", &[("T", OperatorOrWct), ("S", Operator)]),
        ("bt_quasi_isometry", &[("T", OperatorOrWct), ("S", Operator)]),
        ("deddens_multiplication", &[("phi", Vector), ("S", Operator)]),
        ("deddens_wct_block", &[("W", Wct), ("a", Vector), ("S", Operator)]),
        ("bt_wct", &[("W", Wct), ("S", Operator)]),
        ("kernel_invariant", &[("W", Wct), ("S", Operator)]),
    ]
};

pub(crate) fn roles_of(kind: &str) -> Option<&'static [(&'static str, Role)]> {
    TEST_KINDS.iter().find(|(k, _)| *k == kind).map(|(_, r)| *r)
}

/// Scenario objects realised on their measure space.
pub(crate) struct Instance {
    pub space: Arc<MeasureSpace>,
    pub partition: Option<Partition>,
    pub vectors: BTreeMap<String, Vector>,
    pub operators: BTreeMap<String, Operator>,
    pub tol: ToleranceConfig,
}

fn invalid(field: impl Into<String>, message: impl std::fmt::Display) -> WorkbenchError {
    WorkbenchError::Validation {
        field: field.into(),
        message: message.to_string(),
    }
}

fn to_c64(p: &ComplexPair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn complex_pairs(v: &Vector) -> Vec<ComplexPair> {
    v.to_vec().iter().map(|z| [z.re, z.im]).collect()
}

pub fn matrix_pairs(t: &Operator) -> Vec<Vec<ComplexPair>> {
    t.rows()
        .iter()
        .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

impl Instance {
    pub(crate) fn build(s: &Scenario) -> WorkbenchResult<Self> {
        s.tolerances.validate().map_err(|e| invalid("tolerances", e))?;
        let space = MeasureSpace::new(s.weights.clone()).map_err(|e| invalid("weights", e))?;
        let n = space.dim();
        let partition = match &s.blocks {
            Some(b) => Some(Partition::from_one_based(&space, b).map_err(|e| invalid("blocks", e))?),
            None => None,
        };

        let mut vectors = BTreeMap::new();
        for (name, entries) in &s.vectors {
            let field = format!("vectors.{name}");
            if entries.len() != n {
                return Err(invalid(field, format!("length {} but the space has {n} atoms", entries.len())));
            }
            let v = Vector::new(&space, entries.iter().map(to_c64).collect()).map_err(|e| invalid(field, e))?;
            vectors.insert(name.clone(), v);
        }

        let mut operators = BTreeMap::new();
        for (name, rows) in &s.operators {
            let field = format!("operators.{name}");
            if rows.len() != n {
                return Err(invalid(field, format!("{} rows but the space has {n} atoms", rows.len())));
            }
            if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
                return Err(invalid(format!("{field}[{i}]"), format!("{} columns, expected {n}", r.len())));
            }
            let m = DMatrix::from_fn(n, n, |i, j| to_c64(&rows[i][j]));
            let t = Operator::new(&space, m).map_err(|e| invalid(field, e))?;
            operators.insert(name.clone(), t);
        }

        let inst = Self {
            space,
            partition,
            vectors,
            operators,
            tol: s.tolerances,
        };
        for (i, test) in s.tests.iter().enumerate() {
            inst.check_refs(i, test)?;
        }
        Ok(inst)
    }

    fn check_refs(&self, index: usize, test: &TestSpec) -> WorkbenchResult<()> {
        let field = |role: &str| format!("tests[{index}].args.{role}");
        let roles = roles_of(&test.kind)
            .ok_or_else(|| invalid(format!("tests[{index}].kind"), format!("unknown test kind {:?}", test.kind)))?;
        for &(role, kind) in roles {
            let name = test.name(role);
            let ok = match kind {
                Role::Vector => self.vectors.contains_key(name),
                Role::Operator => self.operators.contains_key(name),
                Role::OperatorOrWct => self.operators.contains_key(name) || self.has_wct(test),
                Role::Wct => self.has_wct(test),
                Role::Partition => self.partition.is_some(),
            };
            if !ok {
                let what = match kind {
                    Role::Wct => "a partition and vectors u, w".to_string(),
                    Role::Partition => "a partition".to_string(),
                    _ => format!("{name:?}"),
                };
                return Err(invalid(field(role), format!("{} needs {what}", test.kind)));
            }
        }
        Ok(())
    }

    fn has_wct(&self, test: &TestSpec) -> bool {
        self.partition.is_some()
            && self.vectors.contains_key(test.name("u"))
            && self.vectors.contains_key(test.name("w"))
    }

    pub(crate) fn vector(&self, test: &TestSpec, role: &str) -> &Vector {
        &self.vectors[test.name(role)]
    }

    pub(crate) fn operator(&self, test: &TestSpec, role: &str) -> &Operator {
        &self.operators[test.name(role)]
    }

    pub(crate) fn wct(&self, test: &TestSpec) -> crate::Result<WctOperator> {
        let p = self.partition.as_ref().expect("validated partition");
        wct(p, self.vector(test, "u"), self.vector(test, "w"), &self.tol)
    }

    pub(crate) fn operator_or_wct(&self, test: &TestSpec, role: &str) -> crate::Result<Operator> {
        match self.operators.get(test.name(role)) {
            Some(t) => Ok(t.clone()),
            None => Ok(self.wct(test)?.matrix().clone()),
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> WorkbenchResult<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| WorkbenchError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    Instance::build(&scenario)?;
    Ok(scenario)
}
