//! A small three-variable circuit pair used throughout tests and docs.
//!
//! Vtree: `(X1, (X2, X3))`. The probabilistic circuit puts mass 0.12 on
//! `(1,1,1)`, 0.08 on `(1,0,0)` and 0.4 each on `(0,1,1)` and `(0,1,0)`. The
//! regression circuit scores those points -6.9, 5.0, 6.8 and 7.9.
//!
//! The same circuits ship as text files under `data/toy/`.

use std::sync::Arc;

use crate::circuit::{Circuit, CircuitBuilder, NodeId, Role};
use crate::vtree::{Var, Vtree, VtreeNode};

fn v(i: u32) -> Var {
    Var::new(i).expect("1-based variable")
}

pub fn toy_vtree() -> Arc<Vtree> {
    Arc::new(
        Vtree::new(
            vec![
                VtreeNode::Leaf(v(1)),
                VtreeNode::Leaf(v(2)),
                VtreeNode::Leaf(v(3)),
                VtreeNode::Internal { left: 1, right: 2 },
                VtreeNode::Internal { left: 0, right: 3 },
            ],
            4,
        )
        .expect("valid vtree"),
    )
}

/// The probabilistic circuit, in the shape it is drawn (literals sit directly under AND gates).
pub fn toy_pc() -> Circuit {
    let mut b = CircuitBuilder::new(Role::Generative, toy_vtree());
    let x2 = b.literal(v(2), true);
    let x3 = b.literal(v(3), true);
    let nx2 = b.literal(v(2), false);
    let nx3 = b.literal(v(3), false);
    let and1 = b.and(x2, x3);
    let and2 = b.and(nx2, nx3);
    let or1 = b.or(vec![(x3, 0.5), (nx3, 0.5)]);
    let and3 = b.and(x2, or1);
    let or2 = b.or(vec![(and1, 0.6), (and2, 0.4)]);
    let or3 = b.or(vec![(and3, 1.0)]);
    let x1 = b.literal(v(1), true);
    let nx1 = b.literal(v(1), false);
    let and4 = b.and(x1, or2);
    let and5 = b.and(nx1, or3);
    let root = b.or(vec![(and4, 0.2), (and5, 0.8)]);
    b.finish(root, 0.0).expect("valid circuit")
}

/// The regression circuit (no bias).
pub fn toy_rc() -> Circuit {
    let mut b = CircuitBuilder::new(Role::Discriminative, toy_vtree());
    let x2 = b.literal(v(2), true);
    let x3 = b.literal(v(3), true);
    let nx2 = b.literal(v(2), false);
    let nx3 = b.literal(v(3), false);
    let or1 = b.or(vec![(x3, -0.3), (nx3, 0.5)]);
    let and1 = b.and(x2, x3);
    let and2 = b.and(x2, nx3);
    let and3 = b.and(nx2, or1);
    let or3 = b.or(vec![(and1, -5.3), (and2, 2.0), (and3, 6.1)]);
    let or2 = b.or(vec![(x3, 1.7), (nx3, 2.8)]);
    let and4 = b.and(x2, or2);
    let and5 = b.and(nx2, x3);
    let and6 = b.and(nx2, nx3);
    let or4 = b.or(vec![(and4, 3.0), (and5, -1.1), (and6, -4.3)]);
    let x1 = b.literal(v(1), true);
    let nx1 = b.literal(v(1), false);
    let and7 = b.and(x1, or3);
    let and8 = b.and(nx1, or4);
    let root = b.or(vec![(and7, -1.6), (and8, 2.1)]);
    b.finish(root, 0.0).expect("valid circuit")
}

/// Id of the `¬X2 ∧ (X3 | ¬X3)` gate in [`toy_rc`].
pub fn toy_rc_and3() -> NodeId {
    7
}

/// Id of the three-input OR gate over `X2 ∧ [..]`, `¬X2 ∧ X3`, `¬X2 ∧ ¬X3` in [`toy_rc`].
pub fn toy_rc_or4() -> NodeId {
    13
}
