//! Circuit pairs for the benchmarks.

use std::sync::Arc;

use circmom::synth::{random_pair, vars, SynthOptions};
use circmom::{factorized_to_pc, linear_to_rc, Circuit, LinearModel, Vtree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Workload {
    pub name: String,
    pub pc: Circuit,
    pub rc: Circuit,
}

impl Workload {
    /// `(PC edges, RC edges)`.
    pub fn sizes(&self) -> (usize, usize) {
        (self.pc.num_edges(), self.rc.num_edges())
    }
}

/// Random deterministic-RC pair on `n` variables; PCs mix overlapping elements.
pub fn random_workload(n: usize, seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pc_opts = SynthOptions {
        deterministic: false,
        ..SynthOptions::default()
    };
    let (pc, rc) = random_pair(n, pc_opts, SynthOptions::default(), &mut rng);
    Workload {
        name: format!("random-{n}"),
        pc,
        rc,
    }
}

/// Fully factorized PC with a linear RC on a balanced vtree; both grow linearly in `n`.
pub fn linear_workload(n: usize, seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vt = Arc::new(Vtree::balanced(&vars(n)).expect("n > 0"));
    let marginals: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
    let lm = LinearModel {
        bias: rng.gen_range(-1.0..1.0),
        weights: vars(n).into_iter().map(|v| (v, rng.gen_range(-1.0..1.0))).collect(),
    };
    Workload {
        name: format!("linear-{n}"),
        pc: factorized_to_pc(&marginals, Arc::clone(&vt)).expect("valid marginals"),
        rc: linear_to_rc(&lm, vt).expect("weights cover the vtree"),
    }
}
