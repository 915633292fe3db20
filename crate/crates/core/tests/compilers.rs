use std::sync::Arc;

use circmom::compile::{factorized_to_pc, linear_to_rc, lr_to_lc, nb_to_pc, LinearModel, NaiveBayesModel};
use circmom::synth::{random_vtree, vars};
use circmom::validate::validate_circuit;
use circmom::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_nb(n_features: usize, rng: &mut ChaCha8Rng) -> NaiveBayesModel {
    let vs = vars(n_features + 1);
    NaiveBayesModel {
        class: vs[0],
        features: vs[1..].to_vec(),
        class_prior: rng.gen_range(0.05..0.95),
        given_pos: (0..n_features).map(|_| rng.gen_range(0.05..0.95)).collect(),
        given_neg: (0..n_features).map(|_| rng.gen_range(0.05..0.95)).collect(),
    }
}

fn random_lm(vs: &[Var], rng: &mut ChaCha8Rng) -> LinearModel {
    LinearModel {
        bias: rng.gen_range(-2.0..2.0),
        weights: vs.iter().map(|&v| (v, rng.gen_range(-2.0..2.0))).collect(),
    }
}

fn all_valid(c: &Circuit) {
    for r in validate_circuit(c) {
        assert!(r.ok, "{r}");
    }
}

#[test]
fn naive_bayes_is_exhaustively_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for n_features in [0, 1, 3, 7, 11] {
        let nb = random_nb(n_features, &mut rng);
        let pc = nb_to_pc(&nb).unwrap();
        all_valid(&pc);
        let n = n_features + 1;
        let mut total = 0.0;
        for bits in 0..1u64 << n {
            let x = Assignment::from_bits(n, bits);
            let c = x.values()[0];
            let mut p = if c { nb.class_prior } else { 1.0 - nb.class_prior };
            for i in 0..n_features {
                let t = if c { nb.given_pos[i] } else { nb.given_neg[i] };
                p *= if x.values()[i + 1] { t } else { 1.0 - t };
            }
            let got = evaluate_pc(&pc, &x).unwrap();
            assert!((got - p).abs() <= 1e-12, "n={n} bits={bits}");
            total += got;
        }
        assert!((total - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn logistic_circuit_is_exhaustively_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for n in [1, 2, 5, 12] {
        let vs = vars(n);
        let lm = random_lm(&vs[1..], &mut rng);
        let lc = lr_to_lc(&lm, Some(vs[0])).unwrap();
        all_valid(&lc);
        for bits in 0..1u64 << n {
            let x = Assignment::from_bits(n, bits);
            let dot: f64 = lm.bias
                + lm.weights
                    .iter()
                    .map(|(v, w)| if x.values()[v.slot()] { *w } else { 0.0 })
                    .sum::<f64>();
            assert!((evaluate_rc(&lc, &x).unwrap() - dot).abs() <= 1e-12);
        }
    }
}

#[test]
fn linear_rc_on_arbitrary_vtree() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let vs = vars(10);
    let lm = random_lm(&vs, &mut rng);
    let vt = Arc::new(random_vtree(&vs, &mut rng));
    let rc = linear_to_rc(&lm, vt).unwrap();
    all_valid(&rc);
    for bits in 0..1u64 << 10 {
        let x = Assignment::from_bits(10, bits);
        let dot: f64 = lm.bias + (0..10).filter(|&i| x.values()[i]).map(|i| lm.weights[i].1).sum::<f64>();
        assert!((evaluate_rc(&rc, &x).unwrap() - dot).abs() <= 1e-12);
    }
}

#[test]
fn factorized_is_exhaustively_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let vs = vars(12);
    let m: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..1.0)).collect();
    let pc = factorized_to_pc(&m, Arc::new(random_vtree(&vs, &mut rng))).unwrap();
    all_valid(&pc);
    for bits in 0..1u64 << 12 {
        let x = Assignment::from_bits(12, bits);
        let p: f64 = (0..12).map(|i| if x.values()[i] { m[i] } else { 1.0 - m[i] }).product();
        assert!((evaluate_pc(&pc, &x).unwrap() - p).abs() <= 1e-12);
    }
}

#[test]
fn expectation_chain_on_compiled_pair() {
    // E_P[w0 + Σ w_i x_i] = w0 + Σ w_i P(x_i = 1), P(x_i = 1) = θ_c a_i + (1 - θ_c) b_i
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for n_features in [1, 4, 11] {
        let nb = random_nb(n_features, &mut rng);
        let lm = random_lm(&nb.features, &mut rng);
        let pc = nb_to_pc(&nb).unwrap().normalize_alternating();
        let lc = lr_to_lc(&lm, Some(nb.class)).unwrap().normalize_alternating();
        let closed: f64 = lm.bias
            + (0..n_features)
                .map(|i| {
                    lm.weights[i].1 * (nb.class_prior * nb.given_pos[i] + (1.0 - nb.class_prior) * nb.given_neg[i])
                })
                .sum::<f64>();
        let e = ec2_expectation(&pc, &lc).unwrap();
        assert!((e - closed).abs() <= 1e-9, "{e} vs {closed}");
        let t = taylor_expectation(&pc, &lc, 3, AlphaMode::Mean).unwrap();
        let exact = oracle::enum_sigmoid_expectation(&pc, &lc, &Evidence::empty()).unwrap();
        assert!((t - exact).abs() < 0.1);
    }
}
