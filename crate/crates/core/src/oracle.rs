//! Brute-force reference answers by enumerating every assignment.
//!
//! Only pointwise evaluation is used here, so these values are an independent
//! check on the pairwise recursions. Sums are compensated.

use crate::circuit::{Circuit, Role};
use crate::error::{Error, Result};
use crate::eval::{evaluate_pc, evaluate_rc, require_role};
use crate::evidence::{Assignment, Evidence};
use crate::moments::{MomentVector, MIN_EVIDENCE_PROB};
use crate::numeric::{check_order, sigmoid, CompensatedSum};
use crate::vtree::Vtree;

/// Enumeration refuses models with more free variables than this.
pub const MAX_ENUM_VARS: usize = 20;
/// Relative gap under which two MPE candidates count as tied.
pub const MPE_TIE_TOL: f64 = 1e-12;

/// Every complete assignment of the vtree's variables that agrees with
/// `evidence`, in lexicographic order of the free variables.
pub fn assignments(vtree: &Vtree, evidence: &Evidence) -> Result<Vec<Assignment>> {
    evidence.check_against(vtree)?;
    let free: Vec<_> = vtree.variables().into_iter().filter(|v| evidence.get(*v).is_none()).collect();
    if free.len() > MAX_ENUM_VARS {
        return Err(Error::TooManyVariables(free.len()));
    }
    let mut base = Assignment::new(vec![false; vtree.width()]);
    for (v, b) in evidence.iter() {
        base.set(v, b);
    }
    let n = free.len();
    let mut out = Vec::with_capacity(1 << n);
    for bits in 0u64..(1u64 << n) {
        let mut x = base.clone();
        for (i, v) in free.iter().enumerate() {
            // first free variable is the most significant bit
            x.set(*v, bits >> (n - 1 - i) & 1 == 1);
        }
        out.push(x);
    }
    Ok(out)
}

fn check_pair(pc: &Circuit, rc: &Circuit) -> Result<()> {
    require_role(pc, Role::Generative)?;
    require_role(rc, Role::Discriminative)?;
    if pc.vtree().variables() != rc.vtree().variables() {
        return Err(Error::VtreeMismatch("circuits cover different variables".into()));
    }
    Ok(())
}

/// Probability of the evidence.
pub fn enum_marginal(pc: &Circuit, evidence: &Evidence) -> Result<f64> {
    let mut s = CompensatedSum::new();
    for x in assignments(pc.vtree(), evidence)? {
        s.add(evaluate_pc(pc, &x)?);
    }
    Ok(s.value())
}

/// `M_j = Σ_x p(x) f(x)^j` for `j = 0..=k`. With non-empty evidence the sum
/// runs over agreeing assignments and is divided by `p(evidence)`.
pub fn enum_moments(pc: &Circuit, rc: &Circuit, evidence: &Evidence, k: usize) -> Result<MomentVector> {
    check_pair(pc, rc)?;
    check_order(k)?;
    let mut sums = vec![CompensatedSum::new(); k + 1];
    for x in assignments(pc.vtree(), evidence)? {
        let p = evaluate_pc(pc, &x)?;
        if p == 0.0 {
            continue;
        }
        let f = evaluate_rc(rc, &x)?;
        let mut term = p;
        for s in sums.iter_mut() {
            s.add(term);
            term *= f;
        }
    }
    let m = MomentVector::new(sums.iter().map(|s| s.value()).collect());
    if evidence.is_empty() {
        return Ok(m);
    }
    if m.mass() <= MIN_EVIDENCE_PROB {
        return Err(Error::ZeroProbabilityEvidence(m.mass()));
    }
    Ok(m.scaled(m.mass()))
}

/// `E[f | evidence]`.
pub fn enum_expectation(pc: &Circuit, rc: &Circuit, evidence: &Evidence) -> Result<f64> {
    Ok(enum_moments(pc, rc, evidence, 1)?.get(1))
}

/// `E[σ(f) | evidence]` for a logistic circuit.
pub fn enum_sigmoid_expectation(pc: &Circuit, lc: &Circuit, evidence: &Evidence) -> Result<f64> {
    check_pair(pc, lc)?;
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for x in assignments(pc.vtree(), evidence)? {
        let p = evaluate_pc(pc, &x)?;
        if p == 0.0 {
            continue;
        }
        num.add(p * sigmoid(evaluate_rc(lc, &x)?));
        den.add(p);
    }
    if den.value() <= MIN_EVIDENCE_PROB {
        return Err(Error::ZeroProbabilityEvidence(den.value()));
    }
    Ok(num.value() / den.value())
}

/// Maximum joint probability over completions of `evidence` together with
/// every completion attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumMpe {
    pub probability: f64,
    pub argmax: Vec<Assignment>,
}

pub fn enum_mpe(pc: &Circuit, evidence: &Evidence) -> Result<EnumMpe> {
    require_role(pc, Role::Generative)?;
    let scored: Vec<(f64, Assignment)> = assignments(pc.vtree(), evidence)?
        .into_iter()
        .map(|x| Ok((evaluate_pc(pc, &x)?, x)))
        .collect::<Result<_>>()?;
    let best = scored.iter().map(|(p, _)| *p).fold(0.0, f64::max);
    if best <= 0.0 {
        return Err(Error::InconsistentEvidence);
    }
    let argmax = scored
        .into_iter()
        .filter(|(p, _)| best - p <= MPE_TIE_TOL * best)
        .map(|(_, x)| x)
        .collect();
    Ok(EnumMpe {
        probability: best,
        argmax,
    })
}
