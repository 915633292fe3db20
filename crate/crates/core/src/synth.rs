//! Random vtrees and random structurally valid circuits for tests and benches.
//!
//! Circuits are generated top-down over the vtree in alternating form. At an
//! internal vtree node an OR gate gets one element per assignment of a few
//! branching variables from the left scope; each prime is generated with that
//! assignment forced, which makes the elements mutually exclusive. Generated
//! sub-circuits are memoized by (vtree node, forced literals, variant) so the
//! result is a DAG with shared structure.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::{Circuit, CircuitBuilder, NodeId, Role};
use crate::evidence::Evidence;
use crate::vtree::{var_list, Var, Vtree, VtreeNode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    /// Upper bound on branching variables per OR gate (`2^b` elements).
    pub max_branch_vars: usize,
    /// When false, some PC gates mix overlapping elements.
    pub deterministic: bool,
    /// Chance of dropping one element of a gate with several, making the
    /// gate's formula non-valid.
    pub drop_prob: f64,
    /// Chance that an unforced leaf gate keeps a single literal.
    pub single_literal_prob: f64,
    /// Structurally distinct copies allowed per memo key.
    pub variants: usize,
    /// RC weights are drawn from `[-scale, scale]`.
    pub weight_scale: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            max_branch_vars: 2,
            deterministic: true,
            drop_prob: 0.0,
            single_literal_prob: 0.0,
            variants: 2,
            weight_scale: 2.0,
        }
    }
}

/// Vtree with a random leaf order and random split points.
pub fn random_vtree<R: Rng>(vars: &[Var], rng: &mut R) -> Vtree {
    assert!(!vars.is_empty(), "a vtree needs a variable");
    let mut order = vars.to_vec();
    order.shuffle(rng);
    fn build<R: Rng>(vars: &[Var], nodes: &mut Vec<VtreeNode>, rng: &mut R) -> usize {
        if vars.len() == 1 {
            nodes.push(VtreeNode::Leaf(vars[0]));
        } else {
            let split = rng.gen_range(1..vars.len());
            let left = build(&vars[..split], nodes, rng);
            let right = build(&vars[split..], nodes, rng);
            nodes.push(VtreeNode::Internal { left, right });
        }
        nodes.len() - 1
    }
    let mut nodes = Vec::new();
    let root = build(&order, &mut nodes, rng);
    Vtree::new(nodes, root).expect("generated vtrees are well formed")
}

pub fn vars(n: usize) -> Vec<Var> {
    (1..=n as u32).map(|i| Var::new(i).expect("1-based")).collect()
}

/// (vtree node, forced literals in scope, variant)
type MemoKey = (usize, Vec<(Var, bool)>, usize);

struct Generator<'r, R: Rng> {
    rng: &'r mut R,
    opts: SynthOptions,
    role: Role,
    builder: CircuitBuilder,
    vtree: Arc<Vtree>,
    memo: HashMap<MemoKey, NodeId>,
}

impl<R: Rng> Generator<'_, R> {
    fn weights(&mut self, k: usize) -> Vec<f64> {
        match self.role {
            Role::Generative => {
                let raw: Vec<f64> = (0..k).map(|_| self.rng.gen_range(0.05..1.0)).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|w| w / total).collect()
            }
            Role::Discriminative => {
                let s = self.opts.weight_scale;
                (0..k).map(|_| self.rng.gen_range(-s..=s)).collect()
            }
        }
    }

    fn or(&mut self, children: Vec<NodeId>) -> NodeId {
        let w = self.weights(children.len());
        self.builder.or(children.into_iter().zip(w).collect())
    }

    fn gate(&mut self, v: usize, forced: &[(Var, bool)]) -> NodeId {
        let scope = var_list(self.vtree.scope(v));
        let local: Vec<(Var, bool)> = forced.iter().filter(|(x, _)| scope.contains(x)).copied().collect();
        let variant = self.rng.gen_range(0..self.opts.variants.max(1));
        let key = (v, local.clone(), variant);
        if let Some(&id) = self.memo.get(&key) {
            return id;
        }
        let id = match self.vtree.node(v) {
            VtreeNode::Leaf(x) => {
                let forced_value = local.first().map(|&(_, b)| b);
                let single = forced_value.or_else(|| {
                    self.rng
                        .gen_bool(self.opts.single_literal_prob)
                        .then(|| self.rng.gen_bool(0.5))
                });
                let children = match single {
                    Some(b) => vec![self.builder.literal(x, b)],
                    None => vec![self.builder.literal(x, true), self.builder.literal(x, false)],
                };
                self.or(children)
            }
            VtreeNode::Internal { left, right } => {
                let free: Vec<Var> = var_list(self.vtree.scope(left))
                    .into_iter()
                    .filter(|x| !local.iter().any(|(y, _)| y == x))
                    .collect();
                let mixture = !self.opts.deterministic && self.role == Role::Generative && self.rng.gen_bool(0.5);
                let mut elements = Vec::new();
                if mixture {
                    for _ in 0..self.rng.gen_range(1..=3) {
                        let p = self.gate(left, &local);
                        let s = self.gate(right, &local);
                        elements.push(self.builder.and_at(p, s, v));
                    }
                } else {
                    let b = self.rng.gen_range(0..=self.opts.max_branch_vars.min(free.len()));
                    let branch: Vec<Var> = free.choose_multiple(self.rng, b).copied().collect();
                    let sub = self.gate(right, &local);
                    for bits in 0..1u32 << b {
                        let mut f = local.clone();
                        f.extend(branch.iter().enumerate().map(|(i, &x)| (x, bits >> i & 1 == 1)));
                        let p = self.gate(left, &f);
                        // a fresh sub per element keeps shapes varied
                        let s = if self.rng.gen_bool(0.5) { sub } else { self.gate(right, &local) };
                        elements.push(self.builder.and_at(p, s, v));
                    }
                }
                if elements.len() > 1 && self.rng.gen_bool(self.opts.drop_prob) {
                    let i = self.rng.gen_range(0..elements.len());
                    elements.remove(i);
                }
                self.or(elements)
            }
        };
        self.memo.insert(key, id);
        id
    }
}

/// Random smooth, structured-decomposable circuit in alternating form on
/// `vtree`. Generative circuits are normalized; discriminative ones get a
/// random bias.
pub fn random_circuit<R: Rng>(role: Role, vtree: Arc<Vtree>, opts: SynthOptions, rng: &mut R) -> Circuit {
    let mut g = Generator {
        rng,
        opts,
        role,
        builder: CircuitBuilder::new(role, Arc::clone(&vtree)),
        vtree: Arc::clone(&vtree),
        memo: HashMap::new(),
    };
    let root = g.gate(vtree.root(), &[]);
    let bias = match role {
        Role::Generative => 0.0,
        Role::Discriminative => g.rng.gen_range(-opts.weight_scale..=opts.weight_scale),
    };
    g.builder.finish(root, bias).expect("generated circuits are well formed")
}

/// PC and deterministic RC over a shared random vtree on `X1..Xn`.
pub fn random_pair<R: Rng>(n: usize, pc_opts: SynthOptions, rc_opts: SynthOptions, rng: &mut R) -> (Circuit, Circuit) {
    let vtree = Arc::new(random_vtree(&vars(n), rng));
    let pc = random_circuit(Role::Generative, Arc::clone(&vtree), pc_opts, rng);
    let rc_opts = SynthOptions {
        deterministic: true,
        ..rc_opts
    };
    let rc = random_circuit(Role::Discriminative, vtree, rc_opts, rng);
    (pc, rc)
}

/// Observes each variable independently with probability `p_observe`, with a
/// uniformly random value.
pub fn random_evidence<R: Rng>(vtree: &Vtree, p_observe: f64, rng: &mut R) -> Evidence {
    let mut e = Evidence::empty();
    for v in vtree.variables() {
        if rng.gen_bool(p_observe) {
            e.observe(v, rng.gen_bool(0.5)).expect("each variable once");
        }
    }
    e
}
