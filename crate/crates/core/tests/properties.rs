use std::sync::Arc;

use circmom::io::{parse_circuit, parse_vtree, serialize_circuit, serialize_vtree};
use circmom::oracle::assignments;
use circmom::synth::{random_pair, SynthOptions};
use circmom::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pair(seed: u64, n: usize) -> (Circuit, Circuit) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = SynthOptions {
        deterministic: false,
        drop_prob: 0.2,
        ..SynthOptions::default()
    };
    random_pair(n, o, o, &mut rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn text_round_trip(seed in any::<u64>(), n in 1usize..8) {
        let (pc, rc) = pair(seed, n);
        let vt_text = serialize_vtree(pc.vtree());
        let vt = Arc::new(parse_vtree(&vt_text).unwrap());
        prop_assert_eq!(serialize_vtree(&vt), vt_text);
        for c in [&pc, &rc] {
            let text = serialize_circuit(c, "v");
            let back = parse_circuit(&text, vt.clone()).unwrap();
            prop_assert_eq!(&serialize_circuit(&back, "v"), &text);
            for x in assignments(&vt, &Evidence::empty()).unwrap() {
                match c.role() {
                    Role::Generative => prop_assert_eq!(evaluate_pc(c, &x).unwrap(), evaluate_pc(&back, &x).unwrap()),
                    Role::Discriminative => prop_assert_eq!(evaluate_rc(c, &x).unwrap(), evaluate_rc(&back, &x).unwrap()),
                }
            }
        }
    }

    #[test]
    fn empty_evidence_is_unconditional(seed in any::<u64>(), n in 1usize..8, k in 0usize..6) {
        let (pc, rc) = pair(seed, n);
        let m = mc2_moments(&pc, &rc, k).unwrap();
        prop_assert_eq!(conditional_moments(&pc, &rc, &Evidence::empty(), k).unwrap(), m.clone());
        prop_assert!((m.get(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifts_compose(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (pc, rc) = pair(seed, 5);
        let m = mc2_moments(&pc, &rc, 4).unwrap();
        let twice = m.shifted(a).unwrap().shifted(b).unwrap();
        let once = m.shifted(a + b).unwrap();
        for j in 0..=4 {
            let scale = 1.0 + m.values().iter().map(|v| v.abs()).sum::<f64>() * 10f64.powi(j as i32);
            prop_assert!((twice.get(j) - once.get(j)).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn normalization_preserves_outputs(seed in any::<u64>(), n in 1usize..7) {
        let (pc, rc) = pair(seed, n);
        // an OR over the root adds a chain for the normalizer to splice
        let wrap = |c: &Circuit, w: f64| {
            let mut nodes = c.nodes().to_vec();
            nodes.push(Node::Or(vec![Edge { child: c.root(), weight: w }]));
            let mut vmap = c.vtree_map().to_vec();
            vmap.push(c.vtree_node(c.root()));
            Circuit::new(c.role(), c.vtree().clone(), nodes, vmap, c.len(), c.bias()).unwrap()
        };
        let pc2 = wrap(&pc, 1.0).normalize_alternating();
        let rc2 = wrap(&rc, 0.5).normalize_alternating();
        pc2.check_alternating().unwrap();
        rc2.check_alternating().unwrap();
        for x in assignments(pc.vtree(), &Evidence::empty()).unwrap() {
            prop_assert!((evaluate_pc(&pc, &x).unwrap() - evaluate_pc(&pc2, &x).unwrap()).abs() < 1e-15);
            let g = evaluate_rc(&rc, &x).unwrap();
            let g2 = evaluate_rc(&rc2, &x).unwrap();
            let sat = circmom::eval::satisfaction(&rc, &x).unwrap()[rc.root()];
            let shift = if sat { 0.5 } else { 0.0 };
            prop_assert!((g2 - (g + shift)).abs() < 1e-12);
        }
    }

    #[test]
    fn full_evidence_taylor_is_exact(seed in any::<u64>(), n in 1usize..7, d in 0usize..5) {
        let (pc, rc) = pair(seed, n);
        let support = oracle::enum_mpe(&pc, &Evidence::empty()).unwrap();
        let x = &support.argmax[0];
        let ev = Evidence::full(pc.vtree(), x).unwrap();
        let opts = PredictionOptions { order: d, alpha: AlphaMode::Mean };
        let p = expected_prediction(&pc, &rc, Task::Classification, &ev, opts).unwrap();
        let direct = predict_lc(&rc, x).unwrap();
        prop_assert!((p - direct).abs() < 1e-12);
    }
}
