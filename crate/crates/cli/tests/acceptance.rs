//! Acceptance battery. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion does.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use deddens_core::algebras::{
    bt_empirical, deddens_empirical, deddens_multiplication, deddens_rank_one, deddens_wct_block, bt_wct,
    RmFamily,
};
use deddens_core::condexp::{
    block_decomposition, composition_identities, cond_exp, mult_op, power_identity_check, quasi_isometry_test,
    quasinormal_test, wct, wct_norm, wct_pinv, Partition, WctOperator,
};
use deddens_core::hilbert::{
    douglas_equivalences, douglas_raw, kernel_basis, operator_gap, operator_norm, pinv, rank_one,
};
use deddens_core::workbench::{
    eigen_member, eigen_violator, gaussian, generate, random_blocks, random_invertible, random_unit_vector,
    random_vector, random_weights, GeneratorKind, GeneratorSpec, Scenario,
};
use deddens_core::{MeasureSpace, Operator, ToleranceConfig, Vector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn space(rng: &mut ChaCha8Rng, n: usize) -> Arc<MeasureSpace> {
    MeasureSpace::new(random_weights(rng, n)).unwrap()
}

fn partition(rng: &mut ChaCha8Rng, s: &Arc<MeasureSpace>, k: usize) -> Partition {
    Partition::new(s, random_blocks(rng, s.dim(), k)).unwrap()
}

fn rel(a: &Vector, b: &Vector) -> f64 {
    let d = (a - b).norm();
    if d == 0.0 {
        0.0
    } else {
        d / a.norm().max(b.norm())
    }
}

/// Weighted block means computed straight from the definition.
fn block_mean(f: &[C64], w: &[f64], blocks: &[Vec<usize>]) -> Vec<C64> {
    let mut out = vec![c(0.0); f.len()];
    for b in blocks {
        let mass: f64 = b.iter().map(|&i| w[i]).sum();
        let mean = b.iter().map(|&i| f[i] * w[i]).sum::<C64>() / mass;
        for &i in b {
            out[i] = mean;
        }
    }
    out
}

fn vec_of(s: &Arc<MeasureSpace>, v: Vec<C64>) -> Vector {
    Vector::new(s, v).unwrap()
}

fn random_wct(rng: &mut ChaCha8Rng, n: usize, k: usize, dead: bool) -> WctOperator {
    let s = space(rng, n);
    let p = partition(rng, &s, k);
    let draw = |rng: &mut ChaCha8Rng| {
        let keep: Vec<C64> = (0..p.num_blocks())
            .map(|_| c(if dead && rng.random_bool(0.3) { 0.0 } else { 1.0 }))
            .collect();
        random_vector(rng, &s).hadamard(&p.broadcast(&keep))
    };
    let u = draw(rng);
    let w = draw(rng);
    wct(&p, &u, &w, &tol()).unwrap()
}

fn scenario_wct(s: &Scenario) -> (WctOperator, Arc<MeasureSpace>) {
    let space = MeasureSpace::new(s.weights.clone()).unwrap();
    let p = Partition::from_one_based(&space, s.blocks.as_ref().unwrap()).unwrap();
    let u = scenario_vec(s, &space, "u");
    let w = scenario_vec(s, &space, "w");
    (wct(&p, &u, &w, &tol()).unwrap(), space)
}

fn scenario_vec(s: &Scenario, space: &Arc<MeasureSpace>, name: &str) -> Vector {
    vec_of(space, s.vectors[name].iter().map(|z| C64::new(z[0], z[1])).collect())
}

fn scenario_op(s: &Scenario, space: &Arc<MeasureSpace>, name: &str) -> Operator {
    let rows: Vec<Vec<C64>> = s.operators[name]
        .iter()
        .map(|r| r.iter().map(|z| C64::new(z[0], z[1])).collect())
        .collect();
    Operator::from_rows(space, &rows).unwrap()
}

fn random_op(rng: &mut ChaCha8Rng, s: &Arc<MeasureSpace>) -> Operator {
    let n = s.dim();
    let rows: Vec<Vec<C64>> = (0..n).map(|_| (0..n).map(|_| gaussian(rng)).collect()).collect();
    Operator::from_rows(s, &rows).unwrap()
}

fn random_rank(rng: &mut ChaCha8Rng, s: &Arc<MeasureSpace>, r: usize) -> Operator {
    let mut acc = Operator::zeros(s);
    for _ in 0..r {
        acc = &acc + &rank_one(&random_vector(rng, s), &random_vector(rng, s)).unwrap();
    }
    acc
}

/// Least-squares slope of `ln β` over the upper half of the indices.
fn fitted_slope(beta: &[f64]) -> f64 {
    let start = beta.len() / 2;
    let pts: Vec<(f64, f64)> = (start..beta.len()).map(|k| ((k + 1) as f64, beta[k].ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

fn tally(name: &str, failures: &[String], total: usize) -> Check {
    if failures.is_empty() {
        Ok(format!("{total}/{total}"))
    } else {
        Err(format!(
            "{}/{total} {name} failed; first: {}",
            failures.len(),
            failures[0]
        ))
    }
}

fn within(limit_s: f64, start: Instant) -> Result<(), String> {
    let secs = start.elapsed().as_secs_f64();
    if secs < limit_s {
        Ok(())
    } else {
        Err(format!("took {secs:.2} s, limit {limit_s} s"))
    }
}

fn cond_exp_axioms() -> Check {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut r = rng(101);
    for inst in 0..200 {
        let n = r.random_range(1..=12);
        let k = r.random_range(1..=n);
        let s = space(&mut r, n);
        let p = partition(&mut r, &s, k);
        let f = random_vector(&mut r, &s);
        let g = random_vector(&mut r, &s);
        let h = p.expect(&random_vector(&mut r, &s));
        let e = cond_exp(&p);
        let w = s.weights();
        let mean = |v: &Vector| vec_of(&s, block_mean(&v.to_vec(), w, p.blocks()));

        let mut worst: f64 = 0.0;
        worst = worst.max(rel(&p.expect(&f), &mean(&f)));
        worst = worst.max(rel(&e.apply(&f), &mean(&f)));
        worst = worst.max(rel(&p.expect(&f.hadamard(&h)), &p.expect(&f).hadamard(&h)));
        worst = worst.max(operator_gap(&(&e * &e), &e));
        worst = worst.max(operator_gap(&e.adjoint(), &e));

        let pos = p.expect(&f.abs_sq());
        let scale = pos.max_abs();
        let positive = pos.to_vec().iter().all(|z| z.re >= -1e-9 * scale && z.im.abs() <= 1e-9 * scale);
        let efg = p.expect(&f.hadamard(&g));
        let ef2 = p.expect(&f.abs_sq());
        let eg2 = p.expect(&g.abs_sq());
        let holder = (0..n).all(|i| efg.get(i).norm_sqr() <= ef2.get(i).re * eg2.get(i).re * (1.0 + 1e-9));
        if worst > 1e-9 || !positive || !holder {
            fails.push(format!("instance {inst}: residual {worst:e}, positive {positive}, holder {holder}"));
        }
    }
    within(5.0, start)?;
    tally("instances", &fails, 200)
}

fn wct_norm_formula() -> Check {
    let mut fails = Vec::new();
    let mut r = rng(202);
    for inst in 0..100 {
        let n = r.random_range(1..=10);
        let k = r.random_range(1..=n);
        let t = random_wct(&mut r, n, k, inst % 2 == 1);
        let s = t.partition().space();
        let eu2 = block_mean(&t.u().abs_sq().to_vec(), s.weights(), t.partition().blocks());
        let ew2 = block_mean(&t.w().abs_sq().to_vec(), s.weights(), t.partition().blocks());
        let formula = (0..n).map(|i| (eu2[i].re * ew2[i].re).sqrt()).fold(0.0, f64::max);
        let norm = operator_norm(t.matrix());
        let gap = (norm - formula).abs().max((wct_norm(&t) - formula).abs());
        if gap > 1e-8 * norm {
            fails.push(format!("instance {inst}: ‖T‖ = {norm}, formula {formula}"));
        }
    }
    tally("instances", &fails, 100)
}

fn composition() -> Check {
    let t = tol();
    let mut fails = Vec::new();
    let mut r = rng(303);
    for inst in 0..100 {
        let n = r.random_range(1..=10);
        let k = r.random_range(1..=n);
        let op = random_wct(&mut r, n, k, inst % 3 == 0);
        let s = op.partition().space();
        for id in composition_identities(&op, &t) {
            if id.residual > 1e-9 {
                fails.push(format!("instance {inst}: {} residual {:e}", id.name, id.residual));
            }
        }
        let euw = block_mean(&op.u().hadamard(op.w()).to_vec(), s.weights(), op.partition().blocks());
        for p in 1..=5u32 {
            let lib = power_identity_check(&op, p as usize, &t).unwrap();
            let m = mult_op(&vec_of(s, euw.iter().map(|z| z.powu(p - 1)).collect()));
            let own = operator_gap(&op.matrix().pow(p as usize), &(&m * op.matrix()));
            if lib.residual > 1e-9 || own > 1e-9 {
                fails.push(format!("instance {inst}: T^{p} residual {:e} / {own:e}", lib.residual));
            }
        }
    }
    tally("instances", &fails, 100)
}

fn douglas() -> Check {
    let t = tol();
    let mut fails = Vec::new();
    let mut r = rng(404);
    let check = |label: String, a: &Operator, b: &Operator, expect: Option<bool>, fails: &mut Vec<String>| {
        let raw = match douglas_raw(a, b, &t) {
            Ok(d) => d,
            Err(e) => return fails.push(format!("{label}: {e}")),
        };
        let agree = raw.range_inclusion == raw.adjoint_majorization && raw.adjoint_majorization == raw.factorization;
        if !agree || douglas_equivalences(a, b, &t).is_err() {
            fails.push(format!(
                "{label}: range {} majorization {} factorization {}",
                raw.range_inclusion, raw.adjoint_majorization, raw.factorization
            ));
        } else if expect.is_some_and(|e| e != raw.range_inclusion) {
            fails.push(format!("{label}: expected {expect:?}, got {}", raw.range_inclusion));
        }
    };
    for inst in 0..200 {
        let n = r.random_range(2..=8);
        let s = space(&mut r, n);
        let rt = r.random_range(1..=n);
        let rs = r.random_range(1..=n);
        let a = random_rank(&mut r, &s, rt);
        let b = random_rank(&mut r, &s, rs);
        check(format!("random pair {inst}"), &a, &b, None, &mut fails);
    }
    for inst in 0..50 {
        let n = r.random_range(2..=8);
        let s = space(&mut r, n);
        let rt = r.random_range(1..n);
        let a = random_rank(&mut r, &s, rt);
        let b = &a * &random_op(&mut r, &s);
        check(format!("inclusion {inst}"), &a, &b, Some(true), &mut fails);
    }
    for inst in 0..50 {
        let n = r.random_range(2..=8);
        let s = space(&mut r, n);
        let rt = r.random_range(1..n);
        let a = random_rank(&mut r, &s, rt);
        let outside = kernel_basis(&a.adjoint(), &t);
        let z = outside[r.random_range(0..outside.len())].clone();
        let bump = rank_one(&z.scale(c(operator_norm(&a))), &random_unit_vector(&mut r, &s)).unwrap();
        let b = &(&a * &random_op(&mut r, &s)) + &bump;
        check(format!("violation {inst}"), &a, &b, Some(false), &mut fails);
    }
    tally("pairs", &fails, 300)
}

fn rank_one_deddens() -> Check {
    let start = Instant::now();
    let mut t = tol();
    t.max_power = 30;
    let mut fails = Vec::new();
    let mut conclusive = 0;
    let mut r = rng(505);
    for inst in 0..200 {
        let n = r.random_range(2..=8);
        let s = space(&mut r, n);
        let x = random_unit_vector(&mut r, &s);
        let y = random_unit_vector(&mut r, &s);
        let member = inst % 2 == 0;
        let op = if member { eigen_member(&mut r, &y) } else { eigen_violator(&mut r, &y) };
        let closed = match deddens_rank_one(&x, &y, &op, &t) {
            Ok(v) => v,
            Err(e) => {
                fails.push(format!("instance {inst}: {e}"));
                continue;
            }
        };
        if closed != member {
            fails.push(format!("instance {inst}: closed form {closed}, constructed {member}"));
        }
        let emp = deddens_empirical(&rank_one(&x, &y).unwrap(), &op, &t).unwrap();
        if let Some(m) = emp.membership() {
            conclusive += 1;
            if m != closed {
                fails.push(format!("instance {inst}: closed form {closed}, empirical {m} ({})", emp.reason));
            }
        }
    }
    within(20.0, start)?;
    let rate = conclusive as f64 / 200.0;
    if rate < 0.95 {
        return Err(format!("conclusive rate {rate:.3} below 0.95"));
    }
    tally("instances", &fails, 200).map(|s| format!("{s}, conclusive rate {rate:.3}"))
}

fn bt_rank_one_slopes() -> Check {
    let t = tol();
    let mut fails = Vec::new();
    let mut r = rng(606);
    let (mut max_in, mut min_out) = (f64::NEG_INFINITY, f64::INFINITY);
    for inst in 0..200 {
        let n = r.random_range(2..=6);
        let s = space(&mut r, n);
        let x = random_unit_vector(&mut r, &s);
        let y = random_unit_vector(&mut r, &s);
        let member = inst % 2 == 0;
        let op = if member { eigen_member(&mut r, &y) } else { eigen_violator(&mut r, &y) };
        let fam = match RmFamily::build(&rank_one(&x, &y).unwrap(), &t) {
            Ok(f) => f,
            Err(e) => {
                fails.push(format!("instance {inst}: {e}"));
                continue;
            }
        };
        let beta: Vec<f64> = fam
            .members
            .iter()
            .map(|m| operator_norm(&(&(&m.r_m * &op) * &m.r_m_inv)))
            .collect();
        let slope = fitted_slope(&beta);
        let bounded = beta.iter().all(|b| b.is_finite());
        if member {
            max_in = max_in.max(slope);
            if !(bounded && slope <= 0.01) {
                fails.push(format!("member {inst}: slope {slope:.4}"));
            }
        } else {
            min_out = min_out.min(slope);
            if slope <= 0.01 {
                fails.push(format!("violator {inst}: slope {slope:.4}"));
            }
        }
    }
    tally("instances", &fails, 200).map(|s| format!("{s}, max In slope {max_in:.4}, min Out slope {min_out:.4}"))
}

fn similarity() -> Check {
    let t = tol();
    let mut fails = Vec::new();
    let mut r = rng(707);
    for inst in 0..100 {
        let n = r.random_range(2..=6);
        let s = space(&mut r, n);
        let a = random_invertible(&mut r, &s, 100.0);
        let a_inv = pinv(&a, &t);
        let x = random_unit_vector(&mut r, &s);
        let y = random_unit_vector(&mut r, &s);
        let op = if inst % 2 == 0 { eigen_member(&mut r, &y) } else { eigen_violator(&mut r, &y) };
        let tr = rank_one(&x, &y).unwrap();
        let cc = &(&a * &tr) * &a_inv;
        let moved = &(&a * &op) * &a_inv;
        let x2 = a.apply(&x);
        let y2 = a_inv.adjoint().apply(&y);
        if operator_gap(&cc, &rank_one(&x2, &y2).unwrap()) > 1e-8 {
            fails.push(format!("instance {inst}: conjugate is not (Ax)⊗(A⁻*y)"));
        }
        match (deddens_rank_one(&x, &y, &op, &t), deddens_rank_one(&x2, &y2, &moved, &t)) {
            (Ok(p), Ok(q)) if p == q => {}
            (p, q) => fails.push(format!("instance {inst}: original {p:?}, transported {q:?}")),
        }
        for k in 1..=4 {
            let res = operator_gap(&(&(&a * &tr.pow(k)) * &a_inv), &cc.pow(k));
            if res > 1e-8 {
                fails.push(format!("instance {inst}: power {k} residual {res:e}"));
            }
        }
    }
    tally("instances", &fails, 100)
}

fn quasi_isometry() -> Check {
    let t = tol();
    let mut fails = Vec::new();
    let mut r = rng(808);
    for inst in 0..200 {
        let perturbed = inst >= 100;
        let n = r.random_range(1..=8);
        let k = r.random_range(1..=n);
        let s = space(&mut r, n);
        let p = partition(&mut r, &s, k);
        let u = random_vector(&mut r, &s);
        let scale = if perturbed { 1.1 } else { 1.0 };
        let cs: Vec<C64> = (0..k)
            .map(|_| C64::from_polar(scale, r.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        let eu2 = p.expect(&u.abs_sq());
        let w = p.broadcast(&cs).hadamard(&u.conj()).hadamard(&eu2.map(|z| 1.0 / z));
        let op = wct(&p, &u, &w, &t).unwrap();
        let m = op.matrix();
        let base = &m.adjoint() * m;
        let by_matrix = (1..=3).all(|j| {
            let mj = m.pow(j);
            operator_gap(&(&mj.adjoint() * &mj), &base) <= 1e-9
        });
        let euw = block_mean(&u.hadamard(&w).to_vec(), s.weights(), p.blocks());
        let by_modulus = euw.iter().all(|z| (z.norm() - 1.0).abs() <= 1e-10);
        let lib = (1..=2).map(|j| quasi_isometry_test(&op, j, &t)).collect::<Result<Vec<_>, _>>();
        let expect = !perturbed;
        match lib {
            Ok(v) if v.iter().all(|&b| b == expect) && by_matrix == expect && by_modulus == expect => {}
            other => fails.push(format!(
                "instance {inst}: matrix {by_matrix}, |E(uw)| = 1 {by_modulus}, library {other:?}, expected {expect}"
            )),
        }
    }
    tally("instances", &fails, 200)
}

fn quasinormal() -> Check {
    let t = tol();
    let mut fails = Vec::new();
    let mut r = rng(909);
    for inst in 0..200 {
        let positive = inst < 100;
        let n = r.random_range(2..=8);
        let k = r.random_range(1..n);
        let spec = GeneratorSpec::new(GeneratorKind::QuasinormalWct, n, k, r.random());
        let scen = generate(&spec).unwrap();
        let (gen_t, s) = scenario_wct(&scen);
        let op = if positive {
            gen_t
        } else {
            wct(gen_t.partition(), gen_t.u(), &random_vector(&mut r, &s), &t).unwrap()
        };
        let m = op.matrix();
        let direct = operator_gap(&(&(m * &m.adjoint()) * m), &(&(&m.adjoint() * m) * m)) <= 1e-9;
        let q = match quasinormal_test(&op, &t) {
            Ok(q) => q,
            Err(e) => {
                fails.push(format!("instance {inst}: {e}"));
                continue;
            }
        };
        if q.is_quasinormal != direct || direct != positive {
            fails.push(format!("instance {inst}: closed form {}, matrices {direct}, expected {positive}", q.is_quasinormal));
            continue;
        }
        if positive {
            let a = scenario_vec(&scen, &s, "a");
            let v = q.v.unwrap();
            let gap = (0..n).map(|i| (v.get(i) - a.get(i)).norm()).fold(0.0, f64::max);
            if gap > 1e-9 {
                fails.push(format!("instance {inst}: recovered v off by {gap:e}"));
            }
        }
    }
    tally("instances", &fails, 200)
}

fn moore_penrose() -> Check {
    let t = tol();
    let mut fails = Vec::new();
    let mut r = rng(1010);
    for inst in 0..100 {
        let n = r.random_range(1..=10);
        let k = r.random_range(1..=n);
        let op = random_wct(&mut r, n, k, inst % 2 == 0);
        let chk = match wct_pinv(&op, &t) {
            Ok(c) => c,
            Err(e) => {
                fails.push(format!("instance {inst}: {e}"));
                continue;
            }
        };
        let m = op.matrix();
        let tp = &chk.formula;
        let svd_gap = operator_gap(tp, &pinv(m, &t));
        let penrose = [
            operator_gap(&(&(m * tp) * m), m),
            operator_gap(&(&(tp * m) * tp), tp),
            operator_gap(&(m * tp).adjoint(), &(m * tp)),
            operator_gap(&(tp * m).adjoint(), &(tp * m)),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if svd_gap > 1e-8 || penrose > 1e-9 {
            fails.push(format!("instance {inst}: svd gap {svd_gap:e}, penrose {penrose:e}"));
        }
    }
    // T† = T* exactly when E|u|²E|w|² is the indicator of S∩G
    for inst in 0..50 {
        let expect = inst % 2 == 0;
        let n = r.random_range(1..=8);
        let k = r.random_range(1..=n);
        let raw = random_wct(&mut r, n, k, true);
        let p = raw.partition();
        let w = if expect {
            let fix: Vec<C64> = p
                .block_values(&raw.eu2().hadamard(raw.ew2()))
                .iter()
                .map(|z| if z.re > 0.0 { c(1.0 / z.re.sqrt()) } else { c(0.0) })
                .collect();
            raw.w().hadamard(&p.broadcast(&fix))
        } else {
            raw.w().scale(c(2.0))
        };
        let op = wct(p, raw.u(), &w, &t).unwrap();
        if op.supports().sg.is_empty() && !expect {
            continue;
        }
        let direct = operator_gap(&pinv(op.matrix(), &t), &op.matrix().adjoint()) <= 1e-9;
        match wct_pinv(&op, &t) {
            Ok(chk) if chk.equals_adjoint == expect && direct == expect => {}
            other => fails.push(format!(
                "partial isometry {inst}: expected {expect}, direct {direct}, library {:?}",
                other.map(|c| c.equals_adjoint)
            )),
        }
    }
    tally("instances", &fails, 150)
}

fn wct_block_theorem() -> Check {
    let t = tol();
    let mut fails = Vec::new();
    let mut compared = 0;
    let mut r = rng(1111);
    let mut judge = |label: String, op: &WctOperator, a: &Vector, s: &Operator, expect: Option<bool>, fails: &mut Vec<String>| {
        match deddens_wct_block(op, a, s, &t) {
            Ok(v) => {
                if expect.is_some_and(|e| e != v) {
                    fails.push(format!("{label}: block law {v}, constructed {expect:?}"));
                }
                let emp = deddens_empirical(op.matrix(), s, &t).unwrap();
                if let Some(m) = emp.membership() {
                    compared += 1;
                    if m != v {
                        fails.push(format!("{label}: block law {v}, empirical {m}"));
                    }
                }
            }
            Err(e) => fails.push(format!("{label}: {e}")),
        }
        match bt_wct(op, s, &t) {
            Ok(v) => {
                if let Ok(emp) = bt_empirical(op.matrix(), s, &t) {
                    if let Some(m) = emp.membership() {
                        compared += 1;
                        if m != v {
                            fails.push(format!("{label}: bt_wct {v}, empirical {m}"));
                        }
                    }
                }
            }
            Err(e) => fails.push(format!("{label}: bt_wct {e}")),
        }
    };
    for inst in 0..150 {
        let n = r.random_range(2..=8);
        let k = r.random_range(1..=n);
        let spec = GeneratorSpec::new(GeneratorKind::QuasinormalWct, n, k, r.random());
        let scen = generate(&spec).unwrap();
        let (op, s) = scenario_wct(&scen);
        let a = scenario_vec(&scen, &s, "a");
        let d = block_decomposition(&op, &t).unwrap();
        if let Some(res) = d.power_residuals.iter().find(|&&x| x > 1e-9) {
            fails.push(format!("instance {inst}: TⁿP residual {res:e}"));
        }
        if inst < 100 {
            judge(format!("random S {inst}"), &op, &a, &scenario_op(&scen, &s, "S"), None, &mut fails);
        } else if inst % 2 == 0 {
            judge(format!("member {inst}"), &op, &a, &scenario_op(&scen, &s, "M"), Some(true), &mut fails);
        } else {
            let member = scenario_op(&scen, &s, "M");
            if d.pperp.norm() == 0.0 {
                continue;
            }
            let leak = &(&d.p * &random_op(&mut r, &s)) * &d.pperp;
            // large enough against the member part for R_m to resolve by m = 20
            let size = 4.0 * member.norm().max(1.0);
            let bad = &member + &leak.scale(c(size / leak.norm()));
            judge(format!("non-member {inst}"), &op, &a, &bad, Some(false), &mut fails);
        }
    }
    tally("instances", &fails, 150).map(|s| format!("{s}, {compared} conclusive comparisons"))
}

fn multiplication_patterns() -> Check {
    let t = tol();
    let s = MeasureSpace::uniform(3);
    let phi = Vector::from_real(&s, &[2.0, 1.0, 1.0]).unwrap();
    let mut fails = Vec::new();
    let mut conclusive = 0;
    let mut r = rng(1212);
    for mask in 0u32..512 {
        let rows: Vec<Vec<C64>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| {
                        if mask >> (3 * i + j) & 1 == 1 {
                            C64::from_polar(r.random_range(0.5..2.0), r.random_range(0.0..std::f64::consts::TAU))
                        } else {
                            c(0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let op = Operator::from_rows(&s, &rows).unwrap();
        // (MⁿSM⁻ⁿ)_ij = (φ_i/φ_j)ⁿ S_ij, bounded iff no entry sits in row 0 off the diagonal
        let expected = mask & 0b110 == 0;
        match deddens_multiplication(&phi, &op, &t) {
            Ok(v) if v == expected => {}
            other => {
                fails.push(format!("pattern {mask:09b}: expected {expected}, got {other:?}"));
                continue;
            }
        }
        let emp = deddens_empirical(&Operator::diagonal(&phi), &op, &t).unwrap();
        if let Some(m) = emp.membership() {
            conclusive += 1;
            if m != expected {
                fails.push(format!("pattern {mask:09b}: empirical {m}"));
            }
        }
    }
    tally("patterns", &fails, 512).map(|s| format!("{s}, {conclusive} conclusive"))
}

fn suite_determinism() -> Check {
    let run = || {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_workbench"))
            .args(["suite", "--seed", "42"])
            .output()
            .map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        match out.status.code() {
            Some(0) => Ok((out.stdout, secs)),
            code => Err(format!("exit {code:?}: {}", String::from_utf8_lossy(&out.stderr))),
        }
    };
    let (a, ta) = run()?;
    let (b, tb) = run()?;
    if a != b {
        return Err("suite reports differ between runs".into());
    }
    let slowest = ta.max(tb);
    if slowest >= 60.0 {
        return Err(format!("suite took {slowest:.1} s, limit 60 s"));
    }
    Ok(format!("{} identical bytes, slowest run {slowest:.1} s", a.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 13] = [
        ("conditional expectation axioms", cond_exp_axioms),
        ("WCT norm formula", wct_norm_formula),
        ("composition identities", composition),
        ("Douglas three-way equivalence", douglas),
        ("rank-one Deddens law", rank_one_deddens),
        ("rank-one B_T eigenvector law", bt_rank_one_slopes),
        ("similarity transport", similarity),
        ("quasi-isometry WCT", quasi_isometry),
        ("quasinormal WCT", quasinormal),
        ("Moore-Penrose inverse", moore_penrose),
        ("WCT block Deddens theorem", wct_block_theorem),
        ("multiplication pattern law", multiplication_patterns),
        ("suite determinism", suite_determinism),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.2} s)", k + 1),
            Err(detail) => {
                println!("FAIL {:>2} {name}: {detail} ({secs:.2} s)", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
