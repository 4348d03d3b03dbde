use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::scenario::{complex_pairs, matrix_pairs, Scenario, TestSpec};
use super::{WorkbenchError, WorkbenchResult};
use crate::condexp::{block_decomposition, wct, Partition};
use crate::hilbert::linalg::spectral_radius;
use crate::hilbert::rank_one::rank_one;
use crate::hilbert::space::{inner, MeasureSpace, Operator, Vector, C64};
use crate::tolerance::ToleranceConfig;

pub const DEFAULT_MAX_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    RankOne,
    SimilarRankOne,
    QuasiIsometryWct,
    QuasinormalWct,
    RandomWct,
    CommutantMember,
    RandomOperator,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 7] = [
        Self::RankOne,
        Self::SimilarRankOne,
        Self::QuasiIsometryWct,
        Self::QuasinormalWct,
        Self::RandomWct,
        Self::CommutantMember,
        Self::RandomOperator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::RankOne => "rank_one",
            Self::SimilarRankOne => "similar_rank_one",
            Self::QuasiIsometryWct => "quasi_isometry_wct",
            Self::QuasinormalWct => "quasinormal_wct",
            Self::RandomWct => "random_wct",
            Self::CommutantMember => "commutant_member",
            Self::RandomOperator => "random_operator",
        }
    }
}

impl std::str::FromStr for GeneratorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown generator kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub dim: usize,
    pub blocks: usize,
    pub seed: u64,
    /// Largest condition number of the similarity `A`.
    pub condition_cap: f64,
    pub max_dim: usize,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, dim: usize, blocks: usize, seed: u64) -> Self {
        Self {
            kind,
            dim,
            blocks,
            seed,
            condition_cap: 100.0,
            max_dim: DEFAULT_MAX_DIM,
        }
    }

    pub fn validate(&self) -> WorkbenchResult<()> {
        let bad = |field: &str, message: String| {
            Err(WorkbenchError::Validation {
                field: field.into(),
                message,
            })
        };
        if self.dim == 0 || self.dim > self.max_dim {
            return bad("dim", format!("{} is outside 1..={}", self.dim, self.max_dim));
        }
        if matches!(self.kind, GeneratorKind::RankOne | GeneratorKind::SimilarRankOne) && self.dim < 2 {
            return bad("dim", "rank-one recipes need a direction orthogonal to y, so dim ≥ 2".into());
        }
        if self.blocks == 0 || self.blocks > self.dim {
            return bad("blocks", format!("{} is outside 1..={}", self.blocks, self.dim));
        }
        if !(self.condition_cap >= 1.0 && self.condition_cap.is_finite()) {
            return bad("condition_cap", format!("{} must be a finite number ≥ 1", self.condition_cap));
        }
        Ok(())
    }
}

pub fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

pub fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.5..2.0)).collect()
}

/// `k` nonempty blocks of `0..n`, each sorted, ordered by first atom.
pub fn random_blocks(rng: &mut impl Rng, n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut atoms: Vec<usize> = (0..n).collect();
    atoms.shuffle(rng);
    let mut blocks = vec![Vec::new(); k];
    for (pos, &a) in atoms.iter().enumerate() {
        let b = if pos < k { pos } else { rng.random_range(0..k) };
        blocks[b].push(a);
    }
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.sort();
    blocks
}

pub fn random_vector(rng: &mut impl Rng, space: &Arc<MeasureSpace>) -> Vector {
    Vector::new(space, (0..space.dim()).map(|_| gaussian(rng)).collect()).expect("finite draw")
}

pub fn random_unit_vector(rng: &mut impl Rng, space: &Arc<MeasureSpace>) -> Vector {
    random_vector(rng, space).normalized().expect("nonzero draw")
}

pub fn random_matrix(rng: &mut impl Rng, n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| gaussian(rng))
}

/// Gaussian operator rescaled to the given spectral radius.
pub fn random_operator(rng: &mut impl Rng, space: &Arc<MeasureSpace>, radius: f64) -> Operator {
    let t = Operator::new(space, random_matrix(rng, space.dim())).expect("finite draw");
    let r = spectral_radius(&t);
    if r > 0.0 {
        t.scale_real(radius / r)
    } else {
        t
    }
}

/// `A = U diag(σ) V` in orthonormal coordinates with `σ_max/σ_min ≤ cap`.
pub fn random_invertible(rng: &mut impl Rng, space: &Arc<MeasureSpace>, cap: f64) -> Operator {
    let n = space.dim();
    let u = random_matrix(rng, n).qr().q();
    let v = random_matrix(rng, n).qr().q();
    let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
        let t: f64 = if i == 0 { 0.0 } else { rng.random_range(0.0..=1.0) };
        C64::new(cap.powf(t), 0.0)
    }));
    Operator::from_unitary(space, &(u * sigma * v))
}

/// Random `p(T)` with `deg p ≤ 3`.
pub fn random_polynomial_in(rng: &mut impl Rng, t: &Operator) -> Operator {
    let degree = rng.random_range(0..=3usize);
    let mut acc = Operator::zeros(t.space());
    let mut power = Operator::identity(t.space());
    for _ in 0..=degree {
        acc = &acc + &power.scale(gaussian(rng));
        power = &power * t;
    }
    acc
}

/// `S` with `S*y = λy`: a random adjoint corrected on `y` by a rank-one term.
pub fn eigen_member(rng: &mut impl Rng, y: &Vector) -> Operator {
    let space = y.space();
    let k = Operator::new(space, random_matrix(rng, space.dim())).expect("finite draw");
    let lambda = gaussian(rng);
    let yy = y.norm().powi(2);
    let defect = &k.apply(y) - &y.scale(lambda);
    let s_star = &k - &rank_one(&defect.scale(C64::new(1.0 / yy, 0.0)), y).expect("same space");
    s_star.adjoint()
}

/// `S` with `S*y = λy + z`, `z ⊥ y`. The perturbation is four times the
/// norm of the member part so that the `R_m` profile resolves it by `m = 20`.
pub fn eigen_violator(rng: &mut impl Rng, y: &Vector) -> Operator {
    let space = y.space();
    let member = eigen_member(rng, y);
    let yy = y.norm().powi(2);
    let k = random_vector(rng, space);
    let coeff = inner(&k, y).expect("same space") / yy;
    let z = &k - &y.scale(coeff);
    let target = 4.0 * crate::hilbert::linalg::operator_norm(&member).max(1.0) * y.norm();
    let z = z.scale(C64::new(target / z.norm().max(f64::MIN_POSITIVE), 0.0));
    let bump = rank_one(&z.scale(C64::new(1.0 / yy, 0.0)), y).expect("same space");
    (&member.adjoint() + &bump).adjoint()
}

fn unimodular(rng: &mut impl Rng) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

struct Builder {
    space: Arc<MeasureSpace>,
    scenario: Scenario,
}

impl Builder {
    fn new(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Self {
        let weights = random_weights(rng, spec.dim);
        let space = MeasureSpace::new(weights.clone()).expect("positive weights");
        let blocks: Vec<Vec<usize>> = random_blocks(rng, spec.dim, spec.blocks)
            .into_iter()
            .map(|b| b.into_iter().map(|i| i + 1).collect())
            .collect();
        Self {
            space,
            scenario: Scenario {
                weights,
                blocks: Some(blocks),
                vectors: BTreeMap::new(),
                operators: BTreeMap::new(),
                tests: Vec::new(),
                tolerances: ToleranceConfig::default(),
                seed: spec.seed,
            },
        }
    }

    fn partition(&self) -> Partition {
        Partition::from_one_based(&self.space, self.scenario.blocks.as_ref().expect("blocks")).expect("valid blocks")
    }

    fn vector(&mut self, name: &str, v: &Vector) {
        self.scenario.vectors.insert(name.into(), complex_pairs(v));
    }

    fn operator(&mut self, name: &str, t: &Operator) {
        self.scenario.operators.insert(name.into(), matrix_pairs(t));
    }

    fn test(&mut self, t: TestSpec) {
        self.scenario.tests.push(t);
    }
}

/// Draws a scenario for the requested operator class.
pub fn generate(spec: &GeneratorSpec) -> WorkbenchResult<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = Builder::new(spec, &mut rng);
    let space = b.space.clone();
    let tol = ToleranceConfig::default();
    match spec.kind {
        GeneratorKind::RankOne => {
            let x = random_unit_vector(&mut rng, &space);
            let y = random_unit_vector(&mut rng, &space);
            let s_in = eigen_member(&mut rng, &y);
            let s_out = eigen_violator(&mut rng, &y);
            b.vector("x", &x);
            b.vector("y", &y);
            b.operator("T", &rank_one(&x, &y).expect("same space"));
            b.operator("S_in", &s_in);
            b.operator("S_out", &s_out);
            b.test(TestSpec::new("deddens_rank_one").arg("S", "S_in").expect(true));
            b.test(TestSpec::new("deddens_rank_one").arg("S", "S_out").expect(false));
            b.test(TestSpec::new("bt_rank_one").arg("S", "S_in").expect(true));
            b.test(TestSpec::new("bt_rank_one").arg("S", "S_out").expect(false));
            b.test(TestSpec::new("rank_one_factor"));
        }
        GeneratorKind::SimilarRankOne => {
            let x = random_unit_vector(&mut rng, &space);
            let y = random_unit_vector(&mut rng, &space);
            let a = random_invertible(&mut rng, &space, spec.condition_cap);
            let a_inv = crate::hilbert::linalg::pinv(&a, &tol);
            let t = &(&a_inv * &rank_one(&x, &y).expect("same space")) * &a;
            let ay = a.adjoint().apply(&y);
            b.vector("x", &x);
            b.vector("y", &y);
            b.operator("A", &a);
            b.operator("T", &t);
            b.operator("S_in", &eigen_member(&mut rng, &ay));
            b.operator("S_out", &eigen_violator(&mut rng, &ay));
            b.test(TestSpec::new("deddens_similar_rank_one").arg("S", "S_in").expect(true));
            b.test(TestSpec::new("deddens_similar_rank_one").arg("S", "S_out").expect(false));
            b.test(TestSpec::new("similarity_transport").arg("S", "S_in").expect(true));
            b.test(TestSpec::new("similarity_transport").arg("S", "S_out").expect(false));
        }
        GeneratorKind::QuasiIsometryWct => {
            let p = b.partition();
            let u = random_vector(&mut rng, &space);
            let c: Vec<C64> = (0..p.num_blocks()).map(|_| unimodular(&mut rng)).collect();
            let eu2 = p.expect(&u.abs_sq());
            let w = p.broadcast(&c).hadamard(&u.conj()).hadamard(&eu2.map(|z| 1.0 / z));
            let t = wct(&p, &u, &w, &tol).expect("generated WCT");
            b.vector("u", &u);
            b.vector("w", &w);
            b.operator("S", &random_operator(&mut rng, &space, 1.0));
            b.operator("C", &random_polynomial_in(&mut rng, t.matrix()));
            b.test(TestSpec::new("quasi_isometry").int("n", 1).expect(true));
            b.test(TestSpec::new("quasi_isometry").int("n", 2).expect(true));
            b.test(TestSpec::new("power_identity").int("n", 5).expect(true));
            b.test(TestSpec::new("wct_norm").expect(true));
            b.test(TestSpec::new("composition_identities").expect(true));
            b.test(TestSpec::new("deddens_quasi_isometry").arg("S", "C").expect(true));
            b.test(TestSpec::new("deddens_quasi_isometry"));
            b.test(TestSpec::new("bt_quasi_isometry").arg("S", "C").expect(true));
            b.test(TestSpec::new("bt_quasi_isometry"));
        }
        GeneratorKind::QuasinormalWct => {
            let p = b.partition();
            let u = random_vector(&mut rng, &space);
            let eu2 = p.expect(&u.abs_sq());
            // eigenvalue moduli on a ladder 0.9, 0.36, 0.144 with the top rung
            // always used, so distinct blocks are well separated and m·r(T)
            // is large enough by m = 20 for the R_m profile to resolve growth
            let rungs: Vec<i32> = (0..p.num_blocks()).map(|_| rng.random_range(0..3)).collect();
            let low = rungs.iter().copied().min().unwrap_or(0);
            let lam: Vec<C64> = rungs
                .iter()
                .map(|k| unimodular(&mut rng) * 0.9 * 0.4f64.powi(k - low))
                .collect();
            let c: Vec<C64> = lam
                .iter()
                .zip(p.block_values(&eu2))
                .map(|(l, e)| l / e.re)
                .collect();
            let a = p.broadcast(&c);
            let w = a.hadamard(&u.conj());
            let t = wct(&p, &u, &w, &tol).expect("generated WCT");
            b.vector("u", &u);
            b.vector("w", &w);
            b.vector("a", &a);
            b.operator("S", &random_operator(&mut rng, &space, 1.0));
            b.operator("C", &random_polynomial_in(&mut rng, t.matrix()));
            b.operator("M", &block_member(&mut rng, &t, &tol));
            b.test(TestSpec::new("quasinormal").expect(true));
            b.test(TestSpec::new("block_decomposition").expect(true));
            b.test(TestSpec::new("deddens_wct_block").arg("S", "M").expect(true));
            b.test(TestSpec::new("deddens_wct_block").arg("S", "C").expect(true));
            b.test(TestSpec::new("deddens_wct_block"));
            b.test(TestSpec::new("bt_wct").arg("S", "M").expect(true));
            b.test(TestSpec::new("bt_wct").arg("S", "C").expect(true));
            b.test(TestSpec::new("bt_wct"));
            b.test(TestSpec::new("kernel_invariant"));
        }
        GeneratorKind::RandomWct => {
            let p = b.partition();
            let draw = |rng: &mut ChaCha8Rng| {
                let dead: Vec<C64> = (0..p.num_blocks())
                    .map(|_| C64::new(if rng.random_bool(0.25) { 0.0 } else { 1.0 }, 0.0))
                    .collect();
                random_vector(rng, &space).hadamard(&p.broadcast(&dead))
            };
            let u = draw(&mut rng);
            let w = draw(&mut rng);
            let g = draw(&mut rng);
            let g = p.expect(&g);
            b.vector("u", &u);
            b.vector("w", &w);
            b.vector("g", &g);
            b.vector("f", &random_vector(&mut rng, &space));
            b.vector("h", &random_vector(&mut rng, &space));
            b.test(TestSpec::new("cond_exp_axioms").arg("g", "h").expect(true));
            b.test(TestSpec::new("wct_norm").expect(true));
            b.test(TestSpec::new("composition_identities").expect(true));
            b.test(TestSpec::new("power_identity").int("n", 5).expect(true));
            b.test(TestSpec::new("quasinormal"));
            b.test(TestSpec::new("quasi_isometry").int("n", 1));
            b.test(TestSpec::new("wct_pinv"));
            b.test(TestSpec::new("partial_isometry"));
            b.test(TestSpec::new("mg_annihilation"));
            b.test(TestSpec::new("block_decomposition").expect(true));
            b.test(TestSpec::new("pinv").expect(true));
        }
        GeneratorKind::CommutantMember => {
            let t = random_operator(&mut rng, &space, 0.5);
            b.operator("T", &t);
            b.operator("S", &random_polynomial_in(&mut rng, &t));
            b.test(TestSpec::new("spectral_radius"));
            b.test(TestSpec::new("deddens_empirical").expect(true));
            b.test(TestSpec::new("bt_empirical").expect(true));
        }
        GeneratorKind::RandomOperator => {
            b.operator("T", &random_operator(&mut rng, &space, 0.5));
            b.operator("S", &random_operator(&mut rng, &space, 1.0));
            b.test(TestSpec::new("spectral_radius"));
            b.test(TestSpec::new("pinv").expect(true));
            b.test(TestSpec::new("hermitian_sqrt").expect(true));
            b.test(TestSpec::new("majorizes"));
            b.test(TestSpec::new("douglas"));
            b.test(TestSpec::new("deddens_empirical"));
            b.test(TestSpec::new("bt_empirical"));
        }
    }
    Ok(b.scenario)
}

/// `S = X ⊕ Y` plus a block mapping `H₁` into `N(E M_u)`, with `X` diagonal
/// in the `H₁` basis. `PSP = PS` holds and the compression obeys the
/// multiplication pattern law.
fn block_member(rng: &mut ChaCha8Rng, t: &crate::condexp::WctOperator, tol: &ToleranceConfig) -> Operator {
    let d = block_decomposition(t, tol).expect("generated WCT decomposes");
    let space = d.p.space().clone();
    let mut x = Operator::zeros(&space);
    for h in &d.h1_basis {
        x = &x + &rank_one(&h.scale(gaussian(rng)), h).expect("same space");
    }
    let n = space.dim();
    let y = Operator::new(&space, random_matrix(rng, n)).expect("finite draw");
    let z = Operator::new(&space, random_matrix(rng, n)).expect("finite draw");
    let lower = &(&d.pperp * &y) * &d.pperp;
    let cross = &(&d.pperp * &z) * &d.p;
    &(&x + &lower) + &cross
}
