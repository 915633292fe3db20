//! Variable trees.
//!
//! A vtree is a full binary tree whose leaves are the circuit variables. Every
//! AND gate of a structured-decomposable circuit is mapped to an internal vtree
//! node and splits its scope the same way that node does.

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

/// A binary variable, identified by a 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Var(u32);

impl Var {
    pub fn new(index: u32) -> Option<Var> {
        (index > 0).then_some(Var(index))
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// Zero-based slot used by dense assignment vectors.
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }

    pub(crate) fn from_slot(slot: usize) -> Var {
        Var(slot as u32 + 1)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}", self.0)
    }
}

/// Set of variables, indexed by variable slot.
pub type VarSet = FixedBitSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtreeNode {
    Leaf(Var),
    Internal { left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct Vtree {
    nodes: Vec<VtreeNode>,
    root: usize,
    parent: Vec<Option<usize>>,
    scopes: Vec<VarSet>,
    leaf_of: HashMap<Var, usize>,
}

impl Vtree {
    /// Builds a vtree from a node table, checking that it forms a single tree
    /// in which every variable labels exactly one leaf.
    pub fn new(nodes: Vec<VtreeNode>, root: usize) -> Result<Vtree> {
        let n = nodes.len();
        if root >= n {
            return Err(Error::InvalidCircuit(format!("vtree root {root} out of range")));
        }
        let mut parent = vec![None; n];
        let mut leaf_of = HashMap::new();
        let mut width = 0;
        for (id, node) in nodes.iter().enumerate() {
            match *node {
                VtreeNode::Leaf(v) => {
                    if leaf_of.insert(v, id).is_some() {
                        return Err(Error::InvalidCircuit(format!("variable {v} labels two vtree leaves")));
                    }
                    width = width.max(v.index() as usize);
                }
                VtreeNode::Internal { left, right } => {
                    for child in [left, right] {
                        if child >= n {
                            return Err(Error::InvalidCircuit(format!(
                                "vtree node {id} references missing node {child}"
                            )));
                        }
                        if child == id || parent[child].replace(id).is_some() {
                            return Err(Error::InvalidCircuit(format!("vtree node {child} has two parents")));
                        }
                    }
                    if left == right {
                        return Err(Error::InvalidCircuit(format!("vtree node {id} reuses child {left}")));
                    }
                }
            }
        }
        if parent[root].is_some() {
            return Err(Error::InvalidCircuit("vtree root has a parent".into()));
        }

        // Reachability from the root; with n-1 parent links this also rules out cycles.
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::InvalidCircuit("vtree contains a cycle".into()));
            }
            order.push(id);
            if let VtreeNode::Internal { left, right } = nodes[id] {
                stack.push(left);
                stack.push(right);
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidCircuit(format!("vtree node {orphan} is unreachable from the root")));
        }

        let mut scopes = vec![VarSet::with_capacity(width); n];
        for &id in order.iter().rev() {
            match nodes[id] {
                VtreeNode::Leaf(v) => scopes[id].insert(v.slot()),
                VtreeNode::Internal { left, right } => {
                    let mut s = scopes[left].clone();
                    s.union_with(&scopes[right]);
                    scopes[id] = s;
                }
            }
        }
        Ok(Vtree {
            nodes,
            root,
            parent,
            scopes,
            leaf_of,
        })
    }

    pub fn leaf(var: Var) -> Vtree {
        Vtree::new(vec![VtreeNode::Leaf(var)], 0).expect("single leaf is a valid vtree")
    }

    /// Right-linear vtree: the first variable hangs off the root, the rest recurse to the right.
    pub fn right_linear(vars: &[Var]) -> Result<Vtree> {
        if vars.is_empty() {
            return Err(Error::InvalidCircuit("vtree needs at least one variable".into()));
        }
        let mut nodes: Vec<VtreeNode> = vars.iter().map(|&v| VtreeNode::Leaf(v)).collect();
        let mut acc = vars.len() - 1;
        for i in (0..vars.len() - 1).rev() {
            nodes.push(VtreeNode::Internal { left: i, right: acc });
            acc = nodes.len() - 1;
        }
        Vtree::new(nodes, acc)
    }

    /// Balanced vtree over the variables in the given left-to-right order.
    pub fn balanced(vars: &[Var]) -> Result<Vtree> {
        if vars.is_empty() {
            return Err(Error::InvalidCircuit("vtree needs at least one variable".into()));
        }
        fn build(vars: &[Var], nodes: &mut Vec<VtreeNode>) -> usize {
            if vars.len() == 1 {
                nodes.push(VtreeNode::Leaf(vars[0]));
            } else {
                let mid = vars.len() / 2;
                let left = build(&vars[..mid], nodes);
                let right = build(&vars[mid..], nodes);
                nodes.push(VtreeNode::Internal { left, right });
            }
            nodes.len() - 1
        }
        let mut nodes = Vec::new();
        let root = build(vars, &mut nodes);
        Vtree::new(nodes, root)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> VtreeNode {
        self.nodes[id]
    }

    pub fn nodes(&self) -> &[VtreeNode] {
        &self.nodes
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.parent[id]
    }

    pub fn scope(&self, id: usize) -> &VarSet {
        &self.scopes[id]
    }

    pub fn leaf_of(&self, var: Var) -> Option<usize> {
        self.leaf_of.get(&var).copied()
    }

    pub fn contains(&self, var: Var) -> bool {
        self.leaf_of.contains_key(&var)
    }

    pub fn num_vars(&self) -> usize {
        self.leaf_of.len()
    }

    /// Largest variable index; dense assignments need this many slots.
    pub fn width(&self) -> usize {
        self.leaf_of.keys().map(|v| v.index() as usize).max().unwrap_or(0)
    }

    /// Variables sorted by index.
    pub fn variables(&self) -> Vec<Var> {
        let mut vars: Vec<Var> = self.leaf_of.keys().copied().collect();
        vars.sort();
        vars
    }

    /// Variables in left-to-right leaf order.
    pub fn leaf_order(&self) -> Vec<Var> {
        let mut out = Vec::with_capacity(self.num_vars());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                VtreeNode::Leaf(v) => out.push(v),
                VtreeNode::Internal { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    /// Vtree node whose scope is exactly `scope`, if any.
    pub fn node_with_scope(&self, scope: &VarSet) -> Option<usize> {
        let first = scope.ones().next()?;
        let mut id = self.leaf_of(Var::from_slot(first))?;
        let size = scope.count_ones(..);
        while self.scopes[id].count_ones(..) < size {
            id = self.parent[id]?;
        }
        same_set(&self.scopes[id], scope).then_some(id)
    }

    /// Node ids ordered children-before-parents.
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            match (self.nodes[id], expanded) {
                (VtreeNode::Internal { left, right }, false) => {
                    stack.push((id, true));
                    stack.push((right, false));
                    stack.push((left, false));
                }
                _ => out.push(id),
            }
        }
        out
    }

    /// Whether two vtrees have the same shape and the same variable at every leaf.
    /// On success returns the node correspondence from `self` to `other`.
    pub fn correspondence(&self, other: &Vtree) -> Option<Vec<usize>> {
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            map[a] = b;
            match (self.nodes[a], other.nodes[b]) {
                (VtreeNode::Leaf(x), VtreeNode::Leaf(y)) if x == y => {}
                (VtreeNode::Internal { left: al, right: ar }, VtreeNode::Internal { left: bl, right: br }) => {
                    stack.push((al, bl));
                    stack.push((ar, br));
                }
                _ => return None,
            }
        }
        Some(map)
    }

    pub fn same_structure(&self, other: &Vtree) -> bool {
        self.nodes.len() == other.nodes.len() && self.correspondence(other).is_some()
    }
}

pub(crate) fn same_set(a: &VarSet, b: &VarSet) -> bool {
    a.is_subset(b) && b.is_subset(a)
}

pub(crate) fn var_list(set: &VarSet) -> Vec<Var> {
    set.ones().map(Var::from_slot).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> Var {
        Var::new(i).unwrap()
    }

    fn fig1() -> Vtree {
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
        .unwrap()
    }

    #[test]
    fn scopes_are_unions() {
        let vt = fig1();
        assert_eq!(var_list(vt.scope(3)), vec![v(2), v(3)]);
        assert_eq!(var_list(vt.scope(4)), vec![v(1), v(2), v(3)]);
        assert_eq!(vt.leaf_order(), vec![v(1), v(2), v(3)]);
        assert_eq!(vt.postorder().last(), Some(&4));
    }

    #[test]
    fn scope_lookup() {
        let vt = fig1();
        let mut s = VarSet::with_capacity(3);
        s.insert(1);
        s.insert(2);
        assert_eq!(vt.node_with_scope(&s), Some(3));
        let mut bad = VarSet::with_capacity(3);
        bad.insert(0);
        bad.insert(1);
        assert_eq!(vt.node_with_scope(&bad), None);
    }

    #[test]
    fn rejects_duplicate_variable_and_shared_child() {
        let dup = Vtree::new(
            vec![VtreeNode::Leaf(v(1)), VtreeNode::Leaf(v(1)), VtreeNode::Internal { left: 0, right: 1 }],
            2,
        );
        assert!(dup.is_err());
        let shared = Vtree::new(
            vec![VtreeNode::Leaf(v(1)), VtreeNode::Leaf(v(2)), VtreeNode::Internal { left: 1, right: 1 }],
            2,
        );
        assert!(shared.is_err());
    }

    #[test]
    fn right_linear_vs_permuted() {
        let a = Vtree::right_linear(&[v(1), v(2), v(3)]).unwrap();
        let b = Vtree::right_linear(&[v(2), v(1), v(3)]).unwrap();
        assert!(a.same_structure(&a.clone()));
        assert!(!a.same_structure(&b));
        assert!(a.same_structure(&fig1()));
    }
}
