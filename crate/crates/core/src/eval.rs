//! Single-circuit inference: densities, marginals, evidence configuration and
//! MPE for probabilistic circuits; outputs of regression/logistic circuits.

use crate::circuit::{Circuit, Node, NodeId, Role};
use crate::error::{Error, Result};
use crate::evidence::{Assignment, Evidence};
use crate::numeric::sigmoid;
use crate::validate;

pub(crate) fn require_role(c: &Circuit, role: Role) -> Result<()> {
    if c.role() == role {
        Ok(())
    } else {
        Err(Error::WrongRole {
            expected: role.name(),
        })
    }
}

fn require_complete(c: &Circuit, x: &Assignment) -> Result<()> {
    for v in c.vtree().variables() {
        x.value(v)?;
    }
    Ok(())
}

/// Which nodes have their logical formula satisfied by `x`.
pub fn satisfaction(c: &Circuit, x: &Assignment) -> Result<Vec<bool>> {
    let mut sat = Vec::with_capacity(c.len());
    for node in c.nodes() {
        let s = match node {
            Node::Literal(lit) => lit.satisfied_by(x.value(lit.var)?),
            Node::And { left, right } => sat[*left] && sat[*right],
            Node::Or(edges) => edges.iter().any(|e| sat[e.child]),
        };
        sat.push(s);
    }
    Ok(sat)
}

/// Bottom-up pass of the PC semantics with a per-literal value.
fn upward(pc: &Circuit, mut leaf: impl FnMut(NodeId, &crate::circuit::Literal) -> f64) -> Vec<f64> {
    let mut val = Vec::with_capacity(pc.len());
    for (id, node) in pc.nodes().iter().enumerate() {
        let v = match node {
            Node::Literal(lit) => leaf(id, lit),
            Node::And { left, right } => val[*left] * val[*right],
            Node::Or(edges) => edges.iter().map(|e| e.weight * val[e.child]).sum(),
        };
        val.push(v);
    }
    val
}

/// Density of a complete assignment under a probabilistic circuit.
pub fn evaluate_pc(pc: &Circuit, x: &Assignment) -> Result<f64> {
    require_role(pc, Role::Generative)?;
    require_complete(pc, x)?;
    ConfiguredPc::unconfigured(pc).evaluate(x)
}

/// Probability of the evidence, summing out every unobserved variable.
pub fn marginal(pc: &Circuit, evidence: &Evidence) -> Result<f64> {
    Ok(configure(pc, evidence)?.mass())
}

/// Masks the literals of `pc` that contradict `evidence`.
pub fn configure<'a>(pc: &'a Circuit, evidence: &Evidence) -> Result<ConfiguredPc<'a>> {
    require_role(pc, Role::Generative)?;
    evidence.check_against(pc.vtree())?;
    let leaf_mask = pc
        .nodes()
        .iter()
        .map(|n| match n {
            Node::Literal(lit) => evidence.get(lit.var).is_none_or(|v| lit.satisfied_by(v)),
            _ => true,
        })
        .collect();
    Ok(ConfiguredPc {
        base: pc,
        leaf_mask,
        evidence: evidence.clone(),
    })
}

/// A probabilistic circuit whose literals inconsistent with some evidence are
/// zeroed. It encodes the unnormalized joint of the evidence and the remaining
/// variables.
#[derive(Debug, Clone)]
pub struct ConfiguredPc<'a> {
    base: &'a Circuit,
    leaf_mask: Vec<bool>,
    evidence: Evidence,
}

impl<'a> ConfiguredPc<'a> {
    /// Configuration with empty evidence: every mask is 1.
    pub fn unconfigured(pc: &'a Circuit) -> ConfiguredPc<'a> {
        ConfiguredPc {
            base: pc,
            leaf_mask: vec![true; pc.len()],
            evidence: Evidence::empty(),
        }
    }

    pub fn base(&self) -> &'a Circuit {
        self.base
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn mask(&self, id: NodeId) -> bool {
        self.leaf_mask[id]
    }

    pub fn leaf_mask(&self) -> &[bool] {
        &self.leaf_mask
    }

    /// Unnormalized joint `p(x)` if `x` agrees with the evidence, 0 otherwise.
    pub fn evaluate(&self, x: &Assignment) -> Result<f64> {
        require_complete(self.base, x)?;
        let val = upward(self.base, |id, lit| {
            let on = self.leaf_mask[id] && lit.satisfied_by(x.get(lit.var).unwrap_or(false));
            if on {
                1.0
            } else {
                0.0
            }
        });
        Ok(val[self.base.root()])
    }

    /// Total mass of the configured circuit, i.e. the probability of the evidence.
    pub fn mass(&self) -> f64 {
        let val = upward(self.base, |id, _| if self.leaf_mask[id] { 1.0 } else { 0.0 });
        val[self.base.root()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpeResult {
    pub completion: Assignment,
    pub probability: f64,
    /// False when the circuit is not deterministic; the completion is then the
    /// max-product decoding, which need not be the most probable one.
    pub exact: bool,
}

/// MPE queries against one circuit; determinism is checked once up front.
#[derive(Debug, Clone)]
pub struct MpeSolver<'a> {
    pc: &'a Circuit,
    exact: bool,
}

impl<'a> MpeSolver<'a> {
    pub fn new(pc: &'a Circuit) -> Result<MpeSolver<'a>> {
        require_role(pc, Role::Generative)?;
        let exact = validate::check_determinism(pc).ok;
        Ok(MpeSolver { pc, exact })
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Max-product pass followed by top-down decoding. Ties go to the earliest
    /// input of an OR gate, except that a positive literal wins a tie against a
    /// negative one.
    pub fn solve(&self, evidence: &Evidence) -> Result<MpeResult> {
        let pc = self.pc;
        let cfg = configure(pc, evidence)?;
        let mut val = Vec::with_capacity(pc.len());
        let mut choice = vec![usize::MAX; pc.len()];
        for (id, node) in pc.nodes().iter().enumerate() {
            let v = match node {
                Node::Literal(_) => {
                    if cfg.mask(id) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Node::And { left, right } => val[*left] * val[*right],
                Node::Or(edges) => {
                    let mut best = 0;
                    let mut best_val = edges[0].weight * val[edges[0].child];
                    for (i, e) in edges.iter().enumerate().skip(1) {
                        let cand = e.weight * val[e.child];
                        let prefer_positive = cand == best_val
                            && matches!(pc.node(edges[best].child), Node::Literal(l) if !l.positive)
                            && matches!(pc.node(e.child), Node::Literal(l) if l.positive);
                        if cand > best_val || prefer_positive {
                            best = i;
                            best_val = cand;
                        }
                    }
                    choice[id] = best;
                    best_val
                }
            };
            val.push(v);
        }
        if val[pc.root()] <= 0.0 {
            return Err(Error::InconsistentEvidence);
        }

        let mut completion = Assignment::new(vec![false; pc.vtree().width()]);
        let mut stack = vec![pc.root()];
        while let Some(id) = stack.pop() {
            match pc.node(id) {
                Node::Literal(lit) => completion.set(lit.var, lit.positive),
                Node::And { left, right } => {
                    stack.push(*right);
                    stack.push(*left);
                }
                Node::Or(edges) => stack.push(edges[choice[id]].child),
            }
        }
        let probability = evaluate_pc(pc, &completion)?;
        Ok(MpeResult {
            completion,
            probability,
            exact: self.exact,
        })
    }
}

/// Most probable completion of `evidence`.
pub fn mpe(pc: &Circuit, evidence: &Evidence) -> Result<MpeResult> {
    MpeSolver::new(pc)?.solve(evidence)
}

/// Output `bias + g_root(x)` of a regression circuit. Follows the unique
/// satisfied input of each OR gate on the active path and fails if an OR gate
/// has two satisfied inputs.
pub fn evaluate_rc(rc: &Circuit, x: &Assignment) -> Result<f64> {
    require_role(rc, Role::Discriminative)?;
    require_complete(rc, x)?;
    let sat = satisfaction(rc, x)?;
    let mut total = rc.bias();
    let mut stack = vec![rc.root()];
    while let Some(id) = stack.pop() {
        match rc.node(id) {
            Node::Literal(_) => {}
            Node::And { left, right } => {
                stack.push(*left);
                stack.push(*right);
            }
            Node::Or(edges) => {
                let mut hot = edges.iter().filter(|e| sat[e.child]);
                if let Some(e) = hot.next() {
                    if let Some(second) = hot.next() {
                        return Err(Error::NotDeterministic {
                            gate: id,
                            first: e.child,
                            second: second.child,
                        });
                    }
                    total += e.weight;
                    stack.push(e.child);
                }
            }
        }
    }
    Ok(total)
}

/// Logistic-circuit prediction: the sigmoid of the regression output.
pub fn predict_lc(rc: &Circuit, x: &Assignment) -> Result<f64> {
    evaluate_rc(rc, x).map(sigmoid)
}
