use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::emit::canonical_json;
use super::scenario::{complex_pairs, ComplexPair, Instance, Scenario, TestSpec};
use super::{WorkbenchError, WorkbenchResult};
use crate::algebras::{
    bt_empirical, bt_quasi_isometry, bt_rank_one, bt_wct, deddens_empirical, deddens_multiplication,
    deddens_quasi_isometry, deddens_rank_one, deddens_similar_rank_one, deddens_wct_block, eigen_span_residual,
    kernel_invariant, rank_one_factor, similarity_transport, Bound, GrowthProfile, Verdict, VerdictState,
};
use crate::condexp::{
    block_decomposition, composition_identities, cond_exp, mg_annihilation_test, partial_isometry_test,
    power_identity_check, quasi_isometry_test, quasinormal_test, support, wct_norm_check, wct_pinv, WctOperator,
};
use crate::error::Error;
use crate::hilbert::linalg::{hermitian_sqrt, operator_gap, operator_norm, pinv, spectral_radius};
use crate::hilbert::majorize::{douglas_equivalences, majorizes};
use crate::hilbert::rank_one::rank_one;
use crate::hilbert::space::{Operator, Vector};
use crate::tolerance::ToleranceConfig;

/// Outcome of one scenario test.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TestRecord {
    pub index: usize,
    pub kind: String,
    pub verdict: Option<bool>,
    pub state: Option<VerdictState>,
    pub constants: BTreeMap<String, Bound>,
    pub residuals: BTreeMap<String, Bound>,
    pub profiles: BTreeMap<String, GrowthProfile>,
    pub vectors: BTreeMap<String, Vec<ComplexPair>>,
    pub consistency_failures: Vec<String>,
    pub notes: Vec<String>,
}

impl TestRecord {
    fn residual(&mut self, name: impl Into<String>, value: f64) {
        self.residuals.insert(name.into(), Bound::from(value));
    }

    fn constant(&mut self, name: impl Into<String>, value: f64) {
        self.constants.insert(name.into(), Bound::from(value));
    }

    /// The first verdict recorded sets `state`, and `verdict` unless a
    /// closed form already did.
    fn verdict(&mut self, name: &str, v: &Verdict) {
        if self.state.is_none() {
            self.state = Some(v.state);
            if self.verdict.is_none() {
                self.verdict = v.membership();
            }
        }
        if let Some(c) = v.constant {
            self.constant(format!("{name}_constant"), c);
        }
        self.profiles.insert(name.into(), v.profile.clone());
        self.notes.push(format!("{name}: {}", v.reason));
    }

    fn identity(&mut self, name: &str, residual: f64, tol: &ToleranceConfig) {
        self.identity_within(name, residual, tol.residual_tol);
    }

    fn identity_within(&mut self, name: &str, residual: f64, limit: f64) {
        self.residual(name, residual);
        if residual > limit {
            self.consistency_failures
                .push(format!("{name}: identity residual {residual:e} exceeds {limit:e}"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario_digest: String,
    pub version: String,
    pub tolerances: ToleranceConfig,
    pub seed: u64,
    pub records: Vec<TestRecord>,
    pub consistency_failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl Report {
    pub fn has_consistency_failures(&self) -> bool {
        self.consistency_failures > 0
    }

    /// 0 when clean, 2 when any consistency failure was recorded.
    pub fn exit_code(&self) -> i32 {
        if self.has_consistency_failures() {
            2
        } else {
            0
        }
    }
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the canonical JSON form of the scenario.
pub fn scenario_digest(s: &Scenario) -> String {
    hex::encode(Sha256::digest(canonical_json(s).as_bytes()))
}

/// Runs every test in order. Mathematical negatives and consistency failures
/// are recorded; structural errors abort with the test index.
pub fn run_scenario(s: &Scenario) -> WorkbenchResult<Report> {
    let inst = Instance::build(s)?;
    let mut records = Vec::with_capacity(s.tests.len());
    for (index, test) in s.tests.iter().enumerate() {
        let mut rec = TestRecord {
            index,
            kind: test.kind.clone(),
            ..Default::default()
        };
        match run_test(&inst, test, &mut rec) {
            Ok(()) => {}
            Err(Error::ConsistencyFailure { check, detail }) => {
                rec.consistency_failures.push(format!("{check}: {detail}"))
            }
            Err(source) => {
                return Err(WorkbenchError::Test {
                    index,
                    kind: test.kind.clone(),
                    source,
                })
            }
        }
        if let (Some(e), Some(v)) = (test.expect, rec.verdict) {
            if e != v {
                rec.consistency_failures
                    .push(format!("expectation: declared {e}, computed {v}"));
            }
        }
        records.push(rec);
    }
    let consistency_failures = records.iter().map(|r| r.consistency_failures.len()).sum();
    Ok(Report {
        scenario_digest: scenario_digest(s),
        version: VERSION.into(),
        tolerances: s.tolerances,
        seed: s.seed,
        records,
        consistency_failures,
        wall_time_ms: None,
    })
}

/// Verdict-valued oracles that may hit the series cap report it as data.
fn verdict_or_truncation(rec: &mut TestRecord, name: &str, v: crate::Result<Verdict>) -> crate::Result<()> {
    match v {
        Ok(v) => rec.verdict(name, &v),
        Err(Error::TruncationFailure { m, terms, last_term }) => {
            rec.state.get_or_insert(VerdictState::Inconclusive);
            rec.notes
                .push(format!("{name}: series not truncated at m = {m} after {terms} terms (last {last_term:e})"));
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn gram_power(t: &Operator, n: usize) -> Operator {
    let p = t.pow(n);
    &p.adjoint() * &p
}

fn quasi_isometry_record(w: &WctOperator, n: usize, tol: &ToleranceConfig, rec: &mut TestRecord) -> crate::Result<()> {
    let t = w.matrix();
    let g1 = gram_power(t, 1);
    for k in 2..=3 {
        rec.residual(format!("gram_power_{k}"), operator_gap(&gram_power(t, k), &g1));
    }
    let on_f = w.supports().f.iter().map(|&i| (w.euw().get(i).norm() - 1.0).abs());
    rec.residual("euw_modulus", on_f.fold(0.0, f64::max));
    for k in 1..=3 {
        let c = power_identity_check(w, k, tol)?;
        rec.identity(&c.name, c.residual, tol);
    }
    rec.verdict = Some(quasi_isometry_test(w, n, tol)?);
    Ok(())
}

fn cond_exp_record(inst: &Instance, test: &TestSpec, rec: &mut TestRecord) -> crate::Result<()> {
    let p = inst.partition.as_ref().expect("validated partition");
    let tol = &inst.tol;
    let f = inst.vector(test, "f");
    let g = inst.vector(test, "g");
    let e = cond_exp(p);
    let scale = |v: &Vector| v.max_abs().max(f64::MIN_POSITIVE);
    let vec_gap = |a: &Vector, b: &Vector| (a - b).max_abs() / scale(a).max(scale(b));

    let ef = p.expect(f);
    rec.identity("block_average", vec_gap(&e.apply(f), &ef), tol);
    let w = inst.space.weights();
    let integral_gap = (0..p.num_blocks())
        .map(|b| {
            let s = |v: &Vector| p.blocks()[b].iter().map(|&i| v.get(i) * w[i]).sum::<crate::C64>();
            (s(f) - s(&ef)).norm() / (p.block_mass(b) * scale(f))
        })
        .fold(0.0, f64::max);
    rec.identity("block_integral", integral_gap, tol);
    let eg = p.expect(g);
    rec.identity("module_law", vec_gap(&p.expect(&f.hadamard(&eg)), &ef.hadamard(&eg)), tol);
    rec.identity("idempotent", operator_gap(&(&e * &e), &e), tol);
    rec.identity("self_adjoint", operator_gap(&e.adjoint(), &e), tol);

    let ef2 = p.expect(&f.abs_sq());
    let eg2 = p.expect(&g.abs_sq());
    let s2 = scale(&ef2);
    let positivity = (0..f.dim())
        .map(|i| (-ef2.get(i).re).max(ef.get(i).norm_sqr() - ef2.get(i).re).max(ef2.get(i).im.abs()))
        .fold(0.0, f64::max)
        / s2;
    rec.identity("positivity", positivity.max(0.0), tol);
    let efg = p.expect(&f.hadamard(g));
    let hoelder = (0..f.dim())
        .map(|i| {
            let bound = (ef2.get(i).re * eg2.get(i).re).sqrt();
            (efg.get(i).norm() - bound) / bound.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    rec.identity("conditional_hoelder", hoelder.max(0.0), tol);
    rec.verdict = Some(rec.consistency_failures.is_empty());
    Ok(())
}

fn run_test(inst: &Instance, test: &TestSpec, rec: &mut TestRecord) -> crate::Result<()> {
    let tol = &inst.tol;
    let op = |role: &str| inst.operator(test, role);
    let vecr = |role: &str| inst.vector(test, role);
    match test.kind.as_str() {
        "cond_exp_axioms" => cond_exp_record(inst, test, rec)?,
        "wct_norm" => {
            let w = inst.wct(test)?;
            let (formula, residual) = wct_norm_check(&w, tol)?;
            rec.constant("norm", formula);
            rec.residual("norm_formula", residual);
            rec.verdict = Some(residual <= tol.residual_tol.max(1e-8));
        }
        "composition_identities" => {
            let w = inst.wct(test)?;
            for c in composition_identities(&w, tol) {
                rec.identity(&c.name, c.residual, tol);
            }
            rec.verdict = Some(rec.consistency_failures.is_empty());
        }
        "power_identity" => {
            let w = inst.wct(test)?;
            for n in 1..=test.int_arg("n", 5) as usize {
                let c = power_identity_check(&w, n, tol)?;
                rec.identity(&c.name, c.residual, tol);
            }
            rec.verdict = Some(rec.consistency_failures.is_empty());
        }
        "quasinormal" => {
            let w = inst.wct(test)?;
            let q = quasinormal_test(&w, tol)?;
            rec.verdict = Some(q.is_quasinormal);
            rec.residual("matrix", q.matrix_residual);
            rec.residual("closed_form", q.closed_form_residual);
            if let Some(v) = q.v {
                rec.vectors.insert("v".into(), complex_pairs(&v));
            }
        }
        "quasi_isometry" => {
            let w = inst.wct(test)?;
            quasi_isometry_record(&w, test.int_arg("n", 1) as usize, tol, rec)?;
        }
        "wct_pinv" => {
            let w = inst.wct(test)?;
            let c = wct_pinv(&w, tol)?;
            rec.residual("svd", c.svd_residual);
            rec.identity("penrose", c.penrose_residual, tol);
            rec.verdict = Some(c.equals_adjoint);
        }
        "partial_isometry" => {
            let w = inst.wct(test)?;
            rec.verdict = Some(partial_isometry_test(&w, tol)?);
        }
        "mg_annihilation" => {
            let w = inst.wct(test)?;
            rec.verdict = Some(mg_annihilation_test(vecr("g"), &w, tol)?);
        }
        "block_decomposition" => {
            let w = inst.wct(test)?;
            let d = block_decomposition(&w, tol)?;
            rec.constant("h1_dim", d.h1_basis.len() as f64);
            for (n, r) in d.power_residuals.iter().enumerate() {
                rec.residual(format!("block_power_{}", n + 1), *r);
            }
            rec.verdict = Some(true);
        }
        "spectral_radius" => {
            let t = inst.operator_or_wct(test, "T")?;
            rec.constant("radius", spectral_radius(&t));
            rec.constant("norm", operator_norm(&t));
        }
        "pinv" => {
            let t = inst.operator_or_wct(test, "T")?;
            let tp = pinv(&t, tol);
            let penrose = [
                operator_gap(&(&(&t * &tp) * &t), &t),
                operator_gap(&(&(&tp * &t) * &tp), &tp),
                operator_gap(&(&t * &tp).adjoint(), &(&t * &tp)),
                operator_gap(&(&tp * &t).adjoint(), &(&tp * &t)),
            ];
            rec.identity("penrose", penrose.into_iter().fold(0.0, f64::max), tol);
            rec.verdict = Some(rec.consistency_failures.is_empty());
        }
        "hermitian_sqrt" => {
            let s = op("S");
            let p = &s.adjoint() * s;
            let r = hermitian_sqrt(&p, tol)?;
            rec.identity_within("square", operator_gap(&(&r * &r), &p), tol.residual_tol.max(1e-8));
            rec.verdict = Some(rec.consistency_failures.is_empty());
        }
        "majorizes" => {
            let t = inst.operator_or_wct(test, "T")?;
            let m = majorizes(&t, op("S"), tol)?;
            rec.verdict = Some(m.holds);
            if let Some(c) = m.constant {
                rec.constant("constant", c);
            }
        }
        "douglas" => {
            let t = inst.operator_or_wct(test, "T")?;
            let d = douglas_equivalences(&t, op("S"), tol)?;
            rec.verdict = Some(d.range_inclusion);
        }
        "deddens_empirical" => {
            let t = inst.operator_or_wct(test, "T")?;
            rec.verdict("deddens", &deddens_empirical(&t, op("S"), tol)?);
        }
        "bt_empirical" => {
            let t = inst.operator_or_wct(test, "T")?;
            verdict_or_truncation(rec, "bt", bt_empirical(&t, op("S"), tol))?;
        }
        "deddens_rank_one" => {
            let (x, y, s) = (vecr("x"), vecr("y"), op("S"));
            rec.residual("eigen_span", eigen_span_residual(y, s)?);
            rec.verdict = Some(deddens_rank_one(x, y, s, tol)?);
            rec.verdict("deddens", &deddens_empirical(&rank_one(x, y)?, s, tol)?);
        }
        "bt_rank_one" => {
            let (y, s) = (vecr("y"), op("S"));
            rec.residual("eigen_span", eigen_span_residual(y, s)?);
            let closed = bt_rank_one(y, s, tol)?;
            rec.verdict = Some(closed);
            if let Some(x) = inst.vectors.get(test.name("x")) {
                let emp = bt_empirical(&rank_one(x, y)?, s, tol);
                if let Ok(m) = emp.as_ref().map(Verdict::membership) {
                    if m.is_some_and(|m| m != closed) {
                        rec.consistency_failures
                            .push(format!("bt_rank_one: eigenvector law {closed} vs R_m profile {}", !closed));
                    }
                }
                verdict_or_truncation(rec, "bt", emp)?;
            }
        }
        "rank_one_factor" => {
            let t = inst.operator_or_wct(test, "T")?;
            let y = vecr("y");
            let h = rank_one_factor(&t, y, tol)?;
            rec.residual("factorization", operator_gap(&rank_one(&h, y)?, &t));
            rec.vectors.insert("h".into(), complex_pairs(&h));
            rec.verdict = Some(true);
        }
        "similarity_transport" => {
            let t = inst.operator_or_wct(test, "T")?;
            let r = similarity_transport(op("A"), &t, op("S"), tol)?;
            for (n, res) in r.power_residuals.iter().enumerate() {
                rec.residual(format!("similarity_power_{}", n + 1), *res);
            }
            rec.verdict("deddens_original", &r.deddens_original);
            rec.verdict("deddens_transported", &r.deddens_transported);
            if let Some(b) = &r.bt_original {
                rec.verdict("bt_original", b);
            }
            if let Some(b) = &r.bt_transported {
                rec.verdict("bt_transported", b);
            }
        }
        "deddens_similar_rank_one" => {
            let (a, x, y, s) = (op("A"), vecr("x"), vecr("y"), op("S"));
            let verdict = deddens_similar_rank_one(a, x, y, s, tol)?;
            // the same predicate seen from the rank-one side of the similarity
            let a_inv = pinv(a, tol);
            let transported = deddens_rank_one(x, y, &(&(a * s) * &a_inv), tol)?;
            if transported != verdict {
                rec.consistency_failures.push(format!(
                    "similar_rank_one_transport: direct {verdict} vs rank-one side {transported}"
                ));
            }
            rec.verdict = Some(verdict);
        }
        "deddens_quasi_isometry" => {
            let t = inst.operator_or_wct(test, "T")?;
            rec.verdict = Some(deddens_quasi_isometry(&t, op("S"), tol)?);
        }
        "bt_quasi_isometry" => {
            let t = inst.operator_or_wct(test, "T")?;
            rec.verdict("bt_quasi", &bt_quasi_isometry(&t, op("S"), tol)?);
        }
        "deddens_multiplication" => {
            rec.verdict = Some(deddens_multiplication(vecr("phi"), op("S"), tol)?);
        }
        "deddens_wct_block" => {
            let w = inst.wct(test)?;
            rec.verdict = Some(deddens_wct_block(&w, vecr("a"), op("S"), tol)?);
        }
        "bt_wct" => {
            let w = inst.wct(test)?;
            rec.verdict = Some(bt_wct(&w, op("S"), tol)?);
        }
        "kernel_invariant" => {
            let w = inst.wct(test)?;
            rec.verdict = Some(kernel_invariant(&w, op("S"), tol)?);
            rec.constant("support_sg", support(&w.chi_sg(), tol).len() as f64);
        }
        other => unreachable!("validated kind {other}"),
    }
    Ok(())
}
