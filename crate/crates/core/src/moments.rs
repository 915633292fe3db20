//! Expectations and higher moments of a regression circuit under a
//! probabilistic circuit built on the same vtree.
//!
//! The recursions walk both circuits in lockstep from the roots. Because the
//! vtree is shared, every visited pair `(n, m)` covers the same variables, OR
//! pairs expand into pairs of their inputs and AND pairs split into a left and
//! a right pair. Results are memoized per node pair, so a query touches each
//! pair of gates at most once and costs `O(k^2 * s_pc * s_rc)` for edge counts
//! `s_pc`, `s_rc`.
//!
//! For a PC node `n` and RC node `m` the moment recursion tracks
//! `E_{p_n}[1_m * g_m^l]` for `l = 0..=k`; the `l = 0` entry is the probability
//! that the formula of `m` holds under `p_n`.

use std::collections::HashMap;

use serde::Serialize;

use crate::circuit::{Circuit, Node, NodeId, Role};
use crate::error::{Error, Result};
use crate::eval::{configure, require_role, ConfiguredPc};
use crate::evidence::Evidence;
use crate::numeric::{binomial_row, check_order};

/// Evidence whose probability is at or below this is rejected when conditioning.
pub const MIN_EVIDENCE_PROB: f64 = 1e-12;
/// Negative variances down to this magnitude are treated as rounding noise.
pub const VARIANCE_CLAMP_TOL: f64 = 1e-9;

/// Moments `M_0..=M_k` of a regression circuit's output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentVector {
    values: Vec<f64>,
}

impl MomentVector {
    pub fn new(values: Vec<f64>) -> MomentVector {
        assert!(!values.is_empty(), "a moment vector holds at least M_0");
        MomentVector { values }
    }

    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.values[0]
    }

    /// `M_1 / M_0`.
    pub fn mean(&self) -> f64 {
        self.values[1] / self.values[0]
    }

    /// Moments of `g - alpha`: `M_j(g-α) = Σ_l C(j,l) (-α)^(j-l) M_l(g)`.
    pub fn shifted(&self, alpha: f64) -> Result<MomentVector> {
        check_order(self.order())?;
        let mut out = Vec::with_capacity(self.values.len());
        for j in 0..self.values.len() {
            let row = binomial_row(j)?;
            let mut acc = 0.0;
            let mut pow = 1.0; // (-α)^(j-l), walking l downward
            for l in (0..=j).rev() {
                acc += row[l] * pow * self.values[l];
                pow *= -alpha;
            }
            out.push(acc);
        }
        Ok(MomentVector { values: out })
    }

    /// Every entry divided by `z`.
    pub fn scaled(&self, z: f64) -> MomentVector {
        MomentVector {
            values: self.values.iter().map(|v| v / z).collect(),
        }
    }
}

/// Exact binomial recombination of moments around `alpha`.
pub fn shifted_moments(moments: &MomentVector, alpha: f64) -> Result<MomentVector> {
    moments.shifted(alpha)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TableStats {
    /// Lookups answered from the table.
    pub hits: u64,
    /// Entries computed; every miss writes exactly one new entry.
    pub misses: u64,
    /// Pairs of inputs examined while computing entries.
    pub edge_pairs: u64,
}

impl TableStats {
    /// Recursive invocations on gate pairs, including the top-level one.
    pub fn invocations(&self) -> u64 {
        self.hits + self.misses
    }
}

/// Memo tables keyed by (PC node, RC node). Only gate pairs are stored;
/// literal pairs are resolved inline.
#[derive(Debug, Clone, Default)]
pub struct PairCache {
    prob: HashMap<(NodeId, NodeId), f64>,
    expectation: HashMap<(NodeId, NodeId), f64>,
    moments: HashMap<(NodeId, NodeId), Vec<f64>>,
    moment_order: Option<usize>,
    pub prob_stats: TableStats,
    pub expectation_stats: TableStats,
    pub moment_stats: TableStats,
}

impl PairCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn prob_keys(&self) -> usize {
        self.prob.len()
    }

    pub fn expectation_keys(&self) -> usize {
        self.expectation.len()
    }

    pub fn moment_keys(&self) -> usize {
        self.moments.len()
    }

    fn reset_moments(&mut self, k: usize) {
        if self.moment_order != Some(k) {
            self.moments.clear();
            self.moment_stats = TableStats::default();
            self.moment_order = Some(k);
        }
    }
}

/// A PC (optionally configured by evidence) paired with an RC on the same vtree.
#[derive(Debug)]
pub struct PairQuery<'a> {
    pc: ConfiguredPc<'a>,
    rc: &'a Circuit,
    /// PC vtree node -> RC vtree node.
    vtree_corr: Vec<usize>,
    cache: PairCache,
}

impl<'a> PairQuery<'a> {
    pub fn new(pc: &'a Circuit, rc: &'a Circuit) -> Result<Self> {
        Self::configured(ConfiguredPc::unconfigured(pc), rc)
    }

    pub fn with_evidence(pc: &'a Circuit, rc: &'a Circuit, evidence: &Evidence) -> Result<Self> {
        Self::configured(configure(pc, evidence)?, rc)
    }

    pub fn configured(pc: ConfiguredPc<'a>, rc: &'a Circuit) -> Result<Self> {
        let base = pc.base();
        require_role(base, Role::Generative)?;
        require_role(rc, Role::Discriminative)?;
        base.check_alternating()?;
        rc.check_alternating()?;
        let vtree_corr = base.vtree().correspondence(rc.vtree()).ok_or_else(|| {
            Error::VtreeMismatch("vtrees differ in shape or leaf variables".into())
        })?;
        if base.vtree().len() != rc.vtree().len() {
            return Err(Error::VtreeMismatch("vtrees differ in size".into()));
        }
        Ok(PairQuery {
            pc,
            rc,
            vtree_corr,
            cache: PairCache::new(),
        })
    }

    pub fn cache(&self) -> &PairCache {
        &self.cache
    }

    pub fn pc(&self) -> &ConfiguredPc<'a> {
        &self.pc
    }

    pub fn rc(&self) -> &'a Circuit {
        self.rc
    }

    fn check_pair(&self, n: NodeId, m: NodeId) -> Result<()> {
        let vp = self.pc.base().vtree_node(n);
        let vr = self.rc.vtree_node(m);
        if self.vtree_corr[vp] != vr {
            return Err(Error::VtreeMismatch(format!(
                "PC node {n} (vtree {vp}) paired with RC node {m} (vtree {vr})"
            )));
        }
        Ok(())
    }

    fn literal_pair(&self, n: NodeId, m: NodeId) -> Option<f64> {
        match (self.pc.base().node(n), self.rc.node(m)) {
            (Node::Literal(a), Node::Literal(b)) => Some(if self.pc.mask(n) && a == b { 1.0 } else { 0.0 }),
            _ => None,
        }
    }

    fn kind_mismatch(n: NodeId, m: NodeId) -> Error {
        Error::NotAlternating(format!("PC node {n} and RC node {m} are of different kinds"))
    }

    /// Probability under `p_n` that the formula of RC node `m` holds.
    pub fn formula_prob(&mut self, n: NodeId, m: NodeId) -> Result<f64> {
        if let Some(p) = self.literal_pair(n, m) {
            return Ok(p);
        }
        if let Some(&p) = self.cache.prob.get(&(n, m)) {
            self.cache.prob_stats.hits += 1;
            return Ok(p);
        }
        self.check_pair(n, m)?;
        self.cache.prob_stats.misses += 1;
        let pc = self.pc.base();
        let rc = self.rc;
        let p = match (pc.node(n), rc.node(m)) {
            (Node::Or(pe), Node::Or(re)) => {
                self.cache.prob_stats.edge_pairs += (pe.len() * re.len()) as u64;
                let mut total = 0.0;
                for i in pe {
                    let mut inner = 0.0;
                    for j in re {
                        inner += self.formula_prob(i.child, j.child)?;
                    }
                    total += i.weight * inner;
                }
                total
            }
            (&Node::And { left: nl, right: nr }, &Node::And { left: ml, right: mr }) => {
                self.cache.prob_stats.edge_pairs += 2;
                self.formula_prob(nl, ml)? * self.formula_prob(nr, mr)?
            }
            _ => return Err(Self::kind_mismatch(n, m)),
        };
        self.cache.prob.insert((n, m), p);
        Ok(p)
    }

    /// `E_{p_n}[1_m * g_m]` by the first-moment recursion.
    fn pair_expectation(&mut self, n: NodeId, m: NodeId) -> Result<f64> {
        if self.literal_pair(n, m).is_some() {
            return Ok(0.0);
        }
        if let Some(&e) = self.cache.expectation.get(&(n, m)) {
            self.cache.expectation_stats.hits += 1;
            return Ok(e);
        }
        self.check_pair(n, m)?;
        self.cache.expectation_stats.misses += 1;
        let pc = self.pc.base();
        let rc = self.rc;
        let e = match (pc.node(n), rc.node(m)) {
            (Node::Or(pe), Node::Or(re)) => {
                self.cache.expectation_stats.edge_pairs += (pe.len() * re.len()) as u64;
                let mut total = 0.0;
                for i in pe {
                    let mut inner = 0.0;
                    for j in re {
                        inner += self.pair_expectation(i.child, j.child)? + j.weight * self.formula_prob(i.child, j.child)?;
                    }
                    total += i.weight * inner;
                }
                total
            }
            (&Node::And { left: nl, right: nr }, &Node::And { left: ml, right: mr }) => {
                self.cache.expectation_stats.edge_pairs += 2;
                self.formula_prob(nl, ml)? * self.pair_expectation(nr, mr)?
                    + self.formula_prob(nr, mr)? * self.pair_expectation(nl, ml)?
            }
            _ => return Err(Self::kind_mismatch(n, m)),
        };
        self.cache.expectation.insert((n, m), e);
        Ok(e)
    }

    /// `E_{p_n}[1_m * g_m^l]` for `l = 0..=k`, computed jointly.
    fn pair_moments(&mut self, n: NodeId, m: NodeId, k: usize) -> Result<Vec<f64>> {
        if let Some(p) = self.literal_pair(n, m) {
            let mut v = vec![0.0; k + 1];
            v[0] = p;
            return Ok(v);
        }
        if let Some(v) = self.cache.moments.get(&(n, m)) {
            self.cache.moment_stats.hits += 1;
            return Ok(v.clone());
        }
        self.check_pair(n, m)?;
        self.cache.moment_stats.misses += 1;
        let pc = self.pc.base();
        let rc = self.rc;
        let mut out = vec![0.0; k + 1];
        match (pc.node(n), rc.node(m)) {
            (Node::Or(pe), Node::Or(re)) => {
                self.cache.moment_stats.edge_pairs += (pe.len() * re.len()) as u64;
                let rows: Vec<Vec<f64>> = (0..=k).map(binomial_row).collect::<Result<_>>()?;
                for i in pe {
                    let mut inner = vec![0.0; k + 1];
                    for j in re {
                        let child = self.pair_moments(i.child, j.child, k)?;
                        // powers φ_j^0..φ_j^k
                        let mut pow = Vec::with_capacity(k + 1);
                        let mut acc = 1.0;
                        for _ in 0..=k {
                            pow.push(acc);
                            acc *= j.weight;
                        }
                        for (order, row) in rows.iter().enumerate() {
                            let mut s = 0.0;
                            for l in 0..=order {
                                s += row[l] * pow[order - l] * child[l];
                            }
                            inner[order] += s;
                        }
                    }
                    for (o, v) in out.iter_mut().zip(&inner) {
                        *o += i.weight * v;
                    }
                }
            }
            (&Node::And { left: nl, right: nr }, &Node::And { left: ml, right: mr }) => {
                self.cache.moment_stats.edge_pairs += 2;
                let left = self.pair_moments(nl, ml, k)?;
                let right = self.pair_moments(nr, mr, k)?;
                for (order, o) in out.iter_mut().enumerate() {
                    let row = binomial_row(order)?;
                    *o = (0..=order).map(|l| row[l] * left[l] * right[order - l]).sum();
                }
            }
            _ => return Err(Self::kind_mismatch(n, m)),
        }
        self.cache.moments.insert((n, m), out.clone());
        Ok(out)
    }

    /// Formula probability of the two roots.
    pub fn root_formula_prob(&mut self) -> Result<f64> {
        self.formula_prob(self.pc.base().root(), self.rc.root())
    }

    /// Unnormalized expectation `bias * M_0 + E[g]` under the (configured) PC.
    pub fn expectation(&mut self) -> Result<f64> {
        let e = self.pair_expectation(self.pc.base().root(), self.rc.root())?;
        Ok(self.rc.bias() * self.pc.mass() + e)
    }

    /// Unnormalized moments `M_0..=M_k` of `bias + g`; `M_0` is the PC mass.
    pub fn moments(&mut self, k: usize) -> Result<MomentVector> {
        check_order(k)?;
        self.cache.reset_moments(k);
        let mut raw = self.pair_moments(self.pc.base().root(), self.rc.root(), k)?;
        raw[0] = self.pc.mass();
        let bias = self.rc.bias();
        if bias == 0.0 {
            return Ok(MomentVector::new(raw));
        }
        // E[(b + g)^j] = Σ_l C(j,l) b^(j-l) E[g^l]
        let raw = MomentVector::new(raw);
        raw.shifted(-bias)
    }
}

/// `M_1(1_m, p_n)` for a PC node `n` and RC node `m` over the same vtree node.
pub fn formula_prob(pc: &Circuit, rc: &Circuit, n: NodeId, m: NodeId) -> Result<f64> {
    PairQuery::new(pc, rc)?.formula_prob(n, m)
}

/// Exact expectation of the regression circuit under the PC.
pub fn ec2_expectation(pc: &Circuit, rc: &Circuit) -> Result<f64> {
    PairQuery::new(pc, rc)?.expectation()
}

/// Exact moments `M_0..=M_k` of the regression circuit under the PC.
pub fn mc2_moments(pc: &Circuit, rc: &Circuit, k: usize) -> Result<MomentVector> {
    PairQuery::new(pc, rc)?.moments(k)
}

/// Moments of the regression circuit under `p(. | evidence)`.
pub fn conditional_moments(pc: &Circuit, rc: &Circuit, evidence: &Evidence, k: usize) -> Result<MomentVector> {
    let mut q = PairQuery::with_evidence(pc, rc, evidence)?;
    conditional_from_query(&mut q, k)
}

pub(crate) fn conditional_from_query(q: &mut PairQuery<'_>, k: usize) -> Result<MomentVector> {
    let joint = q.moments(k)?;
    if q.pc().evidence().is_empty() {
        return Ok(joint);
    }
    let z = joint.mass();
    if z <= MIN_EVIDENCE_PROB {
        return Err(Error::ZeroProbabilityEvidence(z));
    }
    Ok(joint.scaled(z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionStats {
    pub mean: f64,
    pub variance: f64,
    pub std: f64,
}

/// Mean, variance and standard deviation of the regression output under
/// `p(. | evidence)`.
pub fn distribution_stats(pc: &Circuit, rc: &Circuit, evidence: &Evidence) -> Result<DistributionStats> {
    let m = conditional_moments(pc, rc, evidence, 2)?;
    stats_from_moments(&m)
}

pub fn stats_from_moments(m: &MomentVector) -> Result<DistributionStats> {
    let mean = m.get(1);
    let mut variance = m.get(2) - mean * mean;
    if variance < 0.0 {
        if variance < -VARIANCE_CLAMP_TOL {
            return Err(Error::InvalidCircuit(format!("negative variance {variance}")));
        }
        variance = 0.0;
    }
    Ok(DistributionStats {
        mean,
        variance,
        std: variance.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{toy_pc, toy_rc};
    use crate::vtree::Var;

    fn pair() -> (Circuit, Circuit) {
        (toy_pc().normalize_alternating(), toy_rc().normalize_alternating())
    }

    fn ev(pairs: &[(u32, bool)]) -> Evidence {
        Evidence::from_pairs(pairs.iter().map(|&(v, b)| (Var::new(v).unwrap(), b))).unwrap()
    }

    #[test]
    fn toy_expectation_and_moments() {
        let (pc, rc) = pair();
        assert!((ec2_expectation(&pc, &rc).unwrap() - 5.452).abs() < 1e-12);
        let m = mc2_moments(&pc, &rc, 2).unwrap();
        assert!((m.get(0) - 1.0).abs() < 1e-12);
        assert!((m.get(1) - 5.452).abs() < 1e-12);
        assert!((m.get(2) - 51.1732).abs() < 1e-10);
    }

    #[test]
    fn root_formula_is_valid() {
        let (pc, rc) = pair();
        let mut q = PairQuery::new(&pc, &rc).unwrap();
        assert!((q.root_formula_prob().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn leaf_level_formula_probs() {
        let (pc, rc) = pair();
        let lit = |c: &Circuit, v: u32, pos: bool| {
            c.nodes()
                .iter()
                .position(|n| matches!(n, Node::Literal(l) if l.var.index() == v && l.positive == pos))
                .unwrap()
        };
        let mut q = PairQuery::new(&pc, &rc).unwrap();
        assert_eq!(q.formula_prob(lit(&pc, 3, true), lit(&rc, 3, false)).unwrap(), 0.0);

        // PC gate X3 (.5) | ¬X3 (.5) against RC gate X3 (-.3) | ¬X3 (.5)
        let or_over = |c: &Circuit, w: f64| {
            c.nodes()
                .iter()
                .position(|n| matches!(n, Node::Or(e) if e.len() == 2 && e[0].weight == w))
                .unwrap()
        };
        let p = q.formula_prob(or_over(&pc, 0.5), or_over(&rc, -0.3)).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shifted_examples() {
        let m = MomentVector::new(vec![1.0, 5.452, 51.1732]);
        assert_eq!(m.shifted(0.0).unwrap(), m);
        let c = m.shifted(m.mean()).unwrap();
        assert!(c.get(1).abs() < 1e-10);
        assert!((c.get(2) - 21.448896).abs() < 1e-10);
    }

    #[test]
    fn conditioning() {
        let (pc, rc) = pair();
        let m = conditional_moments(&pc, &rc, &ev(&[(1, true)]), 1).unwrap();
        assert!((m.get(1) + 2.14).abs() < 1e-12);
        assert!((m.get(0) - 1.0).abs() < 1e-12);

        let full = ev(&[(1, true), (2, false), (3, false)]);
        let m = conditional_moments(&pc, &rc, &full, 1).unwrap();
        assert!((m.get(1) - 5.0).abs() < 1e-12);

        let unconditioned = mc2_moments(&pc, &rc, 3).unwrap();
        assert_eq!(conditional_moments(&pc, &rc, &Evidence::empty(), 3).unwrap(), unconditioned);

        let impossible = ev(&[(1, true), (2, true), (3, false)]);
        assert!(matches!(
            conditional_moments(&pc, &rc, &impossible, 1),
            Err(Error::ZeroProbabilityEvidence(_))
        ));
    }

    #[test]
    fn stats() {
        let (pc, rc) = pair();
        let s = distribution_stats(&pc, &rc, &Evidence::empty()).unwrap();
        assert!((s.mean - 5.452).abs() < 1e-12);
        assert!((s.variance - 21.448896).abs() < 1e-10);
        assert!((s.std - 4.6313).abs() < 1e-4);
        let s = distribution_stats(&pc, &rc, &ev(&[(1, true)])).unwrap();
        assert!((s.mean + 2.14).abs() < 1e-12);
    }

    #[test]
    fn bias_shifts_moments() {
        let (pc, rc) = pair();
        let biased = rc.clone().with_bias(1.5).unwrap();
        let m = mc2_moments(&pc, &biased, 2).unwrap();
        assert!((m.get(1) - 6.952).abs() < 1e-12);
        // E[(g + b)^2] = E[g^2] + 2b E[g] + b^2
        assert!((m.get(2) - (51.1732 + 3.0 * 5.452 + 2.25)).abs() < 1e-10);
        assert!((ec2_expectation(&pc, &biased).unwrap() - 6.952).abs() < 1e-12);
    }

    #[test]
    fn non_alternating_input_rejected() {
        assert!(matches!(ec2_expectation(&toy_pc(), &toy_rc()), Err(Error::NotAlternating(_))));
    }

    #[test]
    fn order_limit() {
        let (pc, rc) = pair();
        assert_eq!(mc2_moments(&pc, &rc, 61), Err(Error::OrderTooLarge(61)));
    }

    #[test]
    fn zero_weights_give_zero_expectation() {
        let (pc, rc) = pair();
        let zero = rc.map_weights(|_| 0.0);
        assert_eq!(ec2_expectation(&pc, &zero).unwrap(), 0.0);
    }
}
