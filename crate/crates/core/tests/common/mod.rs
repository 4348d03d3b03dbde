#![allow(dead_code)]

use std::sync::Arc;

use deddens_core::condexp::{wct, Partition, WctOperator};
use deddens_core::workbench::{random_blocks, random_vector, random_weights};
use deddens_core::{MeasureSpace, ToleranceConfig, Vector, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

pub fn space(rng: &mut ChaCha8Rng, n: usize) -> Arc<MeasureSpace> {
    MeasureSpace::new(random_weights(rng, n)).unwrap()
}

pub fn partition(rng: &mut ChaCha8Rng, space: &Arc<MeasureSpace>, k: usize) -> Partition {
    let blocks = random_blocks(rng, space.dim(), k.clamp(1, space.dim()));
    Partition::new(space, blocks).unwrap()
}

/// Random WCT operator; with `dead` set, `u` and `w` each vanish on a random
/// subset of blocks.
pub fn random_wct(rng: &mut ChaCha8Rng, n: usize, k: usize, dead: bool) -> WctOperator {
    use rand::Rng;
    let s = space(rng, n);
    let p = partition(rng, &s, k);
    let kill = |v: Vector, rng: &mut ChaCha8Rng| {
        if !dead {
            return v;
        }
        let keep: Vec<C64> = (0..p.num_blocks())
            .map(|_| if rng.random_bool(0.25) { C64::new(0.0, 0.0) } else { C64::new(1.0, 0.0) })
            .collect();
        v.hadamard(&p.broadcast(&keep))
    };
    let u = random_vector(rng, &s);
    let u = kill(u, rng);
    let w = random_vector(rng, &s);
    let w = kill(w, rng);
    wct(&p, &u, &w, &tol()).unwrap()
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}
