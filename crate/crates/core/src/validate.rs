//! Structural property checks with machine-readable failure reports.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::{Circuit, Node, Role};
use crate::eval::satisfaction;
use crate::evidence::Assignment;
use crate::vtree::{same_set, var_list, Var, VarSet, VtreeNode};

/// Scopes up to this many variables are checked exhaustively for determinism.
pub const EXHAUSTIVE_SCOPE_LIMIT: usize = 20;
/// Random assignments drawn per scope when it is too large to enumerate.
pub const DETERMINISM_SAMPLES: usize = 10_000;
/// Allowed deviation of an OR gate's mixture weights from summing to one.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub nodes: Vec<usize>,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub property: &'static str,
    pub ok: bool,
    /// Set when some scope was too large to enumerate and was sampled instead.
    pub sampled: bool,
    pub witnesses: Vec<Witness>,
}

impl ValidationReport {
    fn new(property: &'static str, witnesses: Vec<Witness>) -> Self {
        ValidationReport {
            property,
            ok: witnesses.is_empty(),
            sampled: false,
            witnesses,
        }
    }
}

impl fmt::Display for ValidationReport {
    /// One line per witness, or a single status line when there are none.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.sampled { "\tsampled" } else { "" };
        if self.ok {
            return write!(f, "{}\tok{tag}", self.property);
        }
        for (i, w) in self.witnesses.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let nodes: Vec<String> = w.nodes.iter().map(|n| n.to_string()).collect();
            write!(f, "{}\tFAIL\tnodes={}\t{}{tag}", self.property, nodes.join(","), w.explanation)?;
        }
        Ok(())
    }
}

fn fmt_vars(set: &VarSet) -> String {
    let names: Vec<String> = var_list(set).iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", names.join(","))
}

/// Every node maps to the vtree node with exactly its scope (literals to their
/// variable's leaf), and the root covers every vtree variable.
pub fn check_vtree_mapping(c: &Circuit) -> ValidationReport {
    let vt = c.vtree();
    let scopes = c.compute_scopes();
    let reach = c.reachable();
    let mut w = Vec::new();
    for (id, node) in c.nodes().iter().enumerate().filter(|(i, _)| reach[*i]) {
        let vnode = c.vtree_node(id);
        if let Node::Literal(lit) = node {
            if vt.node(vnode) != VtreeNode::Leaf(lit.var) {
                w.push(Witness {
                    nodes: vec![id],
                    explanation: format!("literal {lit} mapped to vtree node {vnode}, not the leaf of {}", lit.var),
                });
            }
        } else if !same_set(&scopes[id], vt.scope(vnode)) {
            w.push(Witness {
                nodes: vec![id],
                explanation: format!(
                    "scope {} differs from scope {} of vtree node {vnode}",
                    fmt_vars(&scopes[id]),
                    fmt_vars(vt.scope(vnode))
                ),
            });
        }
    }
    if !same_set(&scopes[c.root()], vt.scope(vt.root())) {
        w.push(Witness {
            nodes: vec![c.root()],
            explanation: format!(
                "root scope {} does not cover the vtree variables {}",
                fmt_vars(&scopes[c.root()]),
                fmt_vars(vt.scope(vt.root()))
            ),
        });
    }
    ValidationReport::new("vtree-mapping", w)
}

/// Every AND gate's inputs lie in the left and right branches of its vtree node.
pub fn check_structured_decomposability(c: &Circuit) -> ValidationReport {
    let vt = c.vtree();
    let scopes = c.compute_scopes();
    let reach = c.reachable();
    let mut w = Vec::new();
    for (id, node) in c.nodes().iter().enumerate().filter(|(i, _)| reach[*i]) {
        let Node::And { left, right } = *node else { continue };
        let vnode = c.vtree_node(id);
        let VtreeNode::Internal { left: vl, right: vr } = vt.node(vnode) else {
            w.push(Witness {
                nodes: vec![id],
                explanation: format!("AND gate mapped to vtree leaf {vnode}"),
            });
            continue;
        };
        if !scopes[left].is_disjoint(&scopes[right]) {
            w.push(Witness {
                nodes: vec![id, left, right],
                explanation: format!(
                    "inputs share variables: {} and {}",
                    fmt_vars(&scopes[left]),
                    fmt_vars(&scopes[right])
                ),
            });
        }
        for (side, child, branch) in [("left", left, vl), ("right", right, vr)] {
            if !scopes[child].is_subset(vt.scope(branch)) {
                w.push(Witness {
                    nodes: vec![id, child],
                    explanation: format!(
                        "{side} input scope {} is not within the {side} branch {} of vtree node {vnode}",
                        fmt_vars(&scopes[child]),
                        fmt_vars(vt.scope(branch))
                    ),
                });
            }
        }
    }
    ValidationReport::new("structured-decomposability", w)
}

/// All inputs of every OR gate mention the same variables.
pub fn check_smoothness(c: &Circuit) -> ValidationReport {
    let scopes = c.compute_scopes();
    let reach = c.reachable();
    let mut w = Vec::new();
    for (id, node) in c.nodes().iter().enumerate().filter(|(i, _)| reach[*i]) {
        let Node::Or(edges) = node else { continue };
        let first = &scopes[edges[0].child];
        if let Some(e) = edges.iter().find(|e| !same_set(&scopes[e.child], first)) {
            w.push(Witness {
                nodes: vec![id, edges[0].child, e.child],
                explanation: format!(
                    "inputs have scopes {} and {}",
                    fmt_vars(first),
                    fmt_vars(&scopes[e.child])
                ),
            });
        }
    }
    ValidationReport::new("smoothness", w)
}

/// No assignment satisfies two inputs of the same OR gate. Checked by
/// enumeration when the gate's scope has at most [`EXHAUSTIVE_SCOPE_LIMIT`]
/// variables and by [`DETERMINISM_SAMPLES`] random assignments otherwise.
pub fn check_determinism(c: &Circuit) -> ValidationReport {
    let scopes = c.compute_scopes();
    let reach = c.reachable();
    let width = c.vtree().width();

    // OR gates grouped by scope so each scope is enumerated once.
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (id, node) in c.nodes().iter().enumerate() {
        if reach[id] && matches!(node, Node::Or(edges) if edges.len() > 1) {
            groups.entry(scopes[id].ones().collect()).or_default().push(id);
        }
    }

    let mut violations: BTreeMap<usize, Witness> = BTreeMap::new();
    let mut sampled = false;
    let check = |x: &Assignment, gates: &[usize], violations: &mut BTreeMap<usize, Witness>| {
        let Ok(sat) = satisfaction(c, x) else { return };
        for &g in gates {
            if violations.contains_key(&g) {
                continue;
            }
            let Node::Or(edges) = c.node(g) else { continue };
            let hot: Vec<usize> = edges.iter().filter(|e| sat[e.child]).map(|e| e.child).collect();
            if hot.len() > 1 {
                let vars: Vec<String> = scopes[g]
                    .ones()
                    .map(|s| format!("{}={}", Var::from_slot(s), u8::from(x.values()[s])))
                    .collect();
                violations.insert(
                    g,
                    Witness {
                        nodes: vec![g, hot[0], hot[1]],
                        explanation: format!("inputs {} and {} both satisfied at {}", hot[0], hot[1], vars.join(" ")),
                    },
                );
            }
        }
    };

    let all_vars = c.vtree().variables();
    if all_vars.len() <= EXHAUSTIVE_SCOPE_LIMIT {
        let gates: Vec<usize> = groups.values().flatten().copied().collect();
        for bits in 0..(1u64 << all_vars.len()) {
            let x = spread(width, &all_vars, bits);
            check(&x, &gates, &mut violations);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for (slots, gates) in &groups {
            let vars: Vec<Var> = slots.iter().map(|&s| Var::from_slot(s)).collect();
            if vars.len() <= EXHAUSTIVE_SCOPE_LIMIT {
                for bits in 0..(1u64 << vars.len()) {
                    check(&spread(width, &vars, bits), gates, &mut violations);
                }
            } else {
                sampled = true;
                for _ in 0..DETERMINISM_SAMPLES {
                    let x = Assignment::new((0..width).map(|_| rng.gen()).collect());
                    check(&x, gates, &mut violations);
                }
            }
        }
    }
    let mut report = ValidationReport::new("determinism", violations.into_values().collect());
    report.sampled = sampled;
    report
}

/// Assignment of width `width` where `vars[i]` takes bit `i` of `bits` and all
/// other variables are false.
fn spread(width: usize, vars: &[Var], bits: u64) -> Assignment {
    let mut values = vec![false; width];
    for (i, v) in vars.iter().enumerate() {
        values[v.slot()] = bits >> i & 1 == 1;
    }
    Assignment::new(values)
}

/// Mixture weights are non-negative and sum to one at every OR gate.
pub fn check_pc_parameters(c: &Circuit) -> ValidationReport {
    let reach = c.reachable();
    let mut w = Vec::new();
    if c.role() != Role::Generative {
        w.push(Witness {
            nodes: vec![],
            explanation: "circuit is not generative".into(),
        });
    }
    for (id, node) in c.nodes().iter().enumerate().filter(|(i, _)| reach[*i]) {
        let Node::Or(edges) = node else { continue };
        for e in edges.iter().filter(|e| e.weight < 0.0) {
            w.push(Witness {
                nodes: vec![id, e.child],
                explanation: format!("negative weight {}", e.weight),
            });
        }
        let total: f64 = edges.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            w.push(Witness {
                nodes: vec![id],
                explanation: format!("weights sum to {total}"),
            });
        }
    }
    ValidationReport::new("pc-parameters", w)
}

/// Both circuits are built on vtrees with the same shape and leaf variables.
pub fn check_vtree_compatibility(pc: &Circuit, rc: &Circuit) -> ValidationReport {
    let same = std::sync::Arc::ptr_eq(pc.vtree(), rc.vtree()) || pc.vtree().same_structure(rc.vtree());
    let w = if same {
        vec![]
    } else {
        vec![Witness {
            nodes: vec![],
            explanation: format!(
                "vtrees differ: leaf orders {:?} and {:?} or shapes do not match",
                pc.vtree().leaf_order().iter().map(|v| v.index()).collect::<Vec<_>>(),
                rc.vtree().leaf_order().iter().map(|v| v.index()).collect::<Vec<_>>()
            ),
        }]
    };
    ValidationReport::new("vtree-compatibility", w)
}

/// Every check applicable to a single circuit of its role.
pub fn validate_circuit(c: &Circuit) -> Vec<ValidationReport> {
    let mut out = vec![
        check_vtree_mapping(c),
        check_structured_decomposability(c),
        check_smoothness(c),
    ];
    match c.role() {
        Role::Generative => out.push(check_pc_parameters(c)),
        Role::Discriminative => out.push(check_determinism(c)),
    }
    out
}

/// Checks for a circuit pair: each circuit individually, then vtree compatibility.
pub fn validate_pair(pc: &Circuit, rc: &Circuit) -> Vec<ValidationReport> {
    let mut out = validate_circuit(pc);
    out.extend(validate_circuit(rc));
    out.push(check_vtree_compatibility(pc, rc));
    out
}
