use circmom::oracle::{assignments, enum_moments, enum_mpe};
use circmom::synth::{random_evidence, random_pair, SynthOptions};
use circmom::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> SynthOptions {
    SynthOptions {
        deterministic: false,
        drop_prob: 0.2,
        single_literal_prob: 0.1,
        ..SynthOptions::default()
    }
}

/// `E_p |g|^k` by enumeration, the scale used for moment tolerances.
fn abs_moment(pc: &Circuit, rc: &Circuit, ev: &Evidence, k: i32) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for x in assignments(pc.vtree(), ev).unwrap() {
        let p = evaluate_pc(pc, &x).unwrap();
        num += p * evaluate_rc(rc, &x).unwrap().abs().powi(k);
        den += p;
    }
    if ev.is_empty() {
        num
    } else {
        num / den
    }
}

#[test]
fn expectation_and_moments_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for case in 0..60 {
        let n = rng.gen_range(2..=9);
        let (pc, rc) = random_pair(n, opts(), opts(), &mut rng);
        let oracle = enum_moments(&pc, &rc, &Evidence::empty(), 5).unwrap();
        let e = ec2_expectation(&pc, &rc).unwrap();
        assert!((e - oracle.get(1)).abs() <= 1e-9 * (1.0 + oracle.get(1).abs()), "case {case}");
        let m = mc2_moments(&pc, &rc, 5).unwrap();
        assert!((m.get(1) - e).abs() <= 1e-12 * (1.0 + e.abs()), "case {case}");
        for k in 0..=5 {
            let scale = 1.0 + abs_moment(&pc, &rc, &Evidence::empty(), k as i32);
            assert!((m.get(k) - oracle.get(k)).abs() <= 1e-8 * scale, "case {case} k={k}");
        }
    }
}

#[test]
fn conditional_moments_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 40 {
        let n = rng.gen_range(2..=8);
        let (pc, rc) = random_pair(n, opts(), opts(), &mut rng);
        let ev = random_evidence(pc.vtree(), 0.4, &mut rng);
        if marginal(&pc, &ev).unwrap() < 1e-6 {
            continue;
        }
        checked += 1;
        let fast = conditional_moments(&pc, &rc, &ev, 3).unwrap();
        let slow = enum_moments(&pc, &rc, &ev, 3).unwrap();
        for k in 0..=3 {
            let scale = 1.0 + abs_moment(&pc, &rc, &ev, k as i32);
            assert!((fast.get(k) - slow.get(k)).abs() <= 1e-8 * scale);
        }
    }
}

#[test]
fn cache_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..30 {
        let n = rng.gen_range(2..=10);
        let (pc, rc) = random_pair(n, opts(), opts(), &mut rng);
        let bound = pc.num_edges() * rc.num_edges();
        // each table is exercised by its own query so the call counts are its own
        let mut q = PairQuery::new(&pc, &rc).unwrap();
        q.root_formula_prob().unwrap();
        let c = q.cache();
        assert!(c.prob_keys() <= bound);
        assert_eq!(c.prob_stats.misses as usize, c.prob_keys(), "each entry computed once");
        assert!(c.prob_stats.invocations() <= c.prob_stats.edge_pairs + 1);

        let mut q = PairQuery::new(&pc, &rc).unwrap();
        q.moments(3).unwrap();
        let c = q.cache();
        assert!(c.moment_keys() <= bound);
        assert_eq!(c.moment_stats.misses as usize, c.moment_keys());
        assert!(c.moment_stats.invocations() <= c.moment_stats.edge_pairs + 1);

        let mut q = PairQuery::new(&pc, &rc).unwrap();
        q.expectation().unwrap();
        let c = q.cache();
        assert!(c.expectation_keys() <= bound && c.prob_keys() <= bound);
        assert_eq!(c.expectation_stats.misses as usize, c.expectation_keys());
        assert_eq!(c.prob_stats.misses as usize, c.prob_keys());
        assert!(c.expectation_stats.invocations() <= c.expectation_stats.edge_pairs + 1);
    }
}

#[test]
fn root_formula_probability_is_pc_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let valid = SynthOptions {
        drop_prob: 0.0,
        single_literal_prob: 0.0,
        ..opts()
    };
    for _ in 0..20 {
        let (pc, rc) = random_pair(rng.gen_range(1..=8), valid, valid, &mut rng);
        let mut q = PairQuery::new(&pc, &rc).unwrap();
        let mass = marginal(&pc, &Evidence::empty()).unwrap();
        assert!((q.root_formula_prob().unwrap() - mass).abs() < 1e-12);
    }
}

#[test]
fn linear_in_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..20 {
        let (pc, rc) = random_pair(rng.gen_range(2..=8), opts(), opts(), &mut rng);
        let rc = rc.with_bias(0.0).unwrap();
        let c = rng.gen_range(-3.0..3.0);
        let scaled = rc.map_weights(|w| c * w);
        let base = ec2_expectation(&pc, &rc).unwrap();
        assert!((ec2_expectation(&pc, &scaled).unwrap() - c * base).abs() < 1e-9 * (1.0 + base.abs()));
    }
}

#[test]
fn mixture_of_root_children() {
    // ec2 over the root equals the θ-weighted ec2 over each root element
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..20 {
        let (pc, rc) = random_pair(rng.gen_range(2..=8), opts(), opts(), &mut rng);
        let Node::Or(edges) = pc.node(pc.root()).clone() else { unreachable!() };
        let whole = ec2_expectation(&pc, &rc).unwrap();
        let mut parts = 0.0;
        for e in &edges {
            let single = Circuit::new(
                Role::Generative,
                pc.vtree().clone(),
                pc.nodes()[..=pc.root()]
                    .iter()
                    .cloned()
                    .chain([Node::Or(vec![Edge { child: e.child, weight: 1.0 }])])
                    .collect(),
                pc.vtree_map().iter().copied().chain([pc.vtree_node(pc.root())]).collect(),
                pc.len(),
                0.0,
            )
            .unwrap();
            parts += e.weight * ec2_expectation(&single, &rc).unwrap();
        }
        assert!((whole - parts).abs() < 1e-9 * (1.0 + whole.abs()));
    }
}

#[test]
fn point_mass_pc() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let point = SynthOptions {
        max_branch_vars: 0,
        single_literal_prob: 1.0,
        ..SynthOptions::default()
    };
    for _ in 0..10 {
        let (pc, rc) = random_pair(rng.gen_range(1..=8), point, opts(), &mut rng);
        let support = enum_mpe(&pc, &Evidence::empty()).unwrap();
        assert_eq!(support.probability, 1.0);
        let x = &support.argmax[0];
        let g = evaluate_rc(&rc, x).unwrap();
        assert!((ec2_expectation(&pc, &rc).unwrap() - g).abs() < 1e-12);
        let s = distribution_stats(&pc, &rc, &Evidence::empty()).unwrap();
        assert!(s.variance <= 1e-12 * (1.0 + g * g));
    }
}

#[test]
fn mpe_is_in_the_tie_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let det = SynthOptions {
        single_literal_prob: 0.1,
        ..SynthOptions::default()
    };
    let mut done = 0;
    while done < 50 {
        let (pc, _) = random_pair(rng.gen_range(1..=9), det, det, &mut rng);
        let ev = random_evidence(pc.vtree(), 0.3, &mut rng);
        let Ok(truth) = enum_mpe(&pc, &ev) else {
            assert_eq!(mpe(&pc, &ev).unwrap_err(), Error::InconsistentEvidence);
            continue;
        };
        done += 1;
        let r = mpe(&pc, &ev).unwrap();
        assert!(r.exact);
        assert!(truth.argmax.contains(&r.completion));
        assert!((r.probability - truth.probability).abs() <= 1e-12);
    }
}
