//! Circuit representation shared by probabilistic and regression circuits.
//!
//! Nodes live in a table in topological order (children before parents). OR
//! edges carry a weight: a mixture probability for generative circuits, a real
//! parameter for discriminative ones.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vtree::{Var, VarSet, Vtree};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: Var,
    pub positive: bool,
}

impl Literal {
    pub fn new(var: Var, positive: bool) -> Literal {
        Literal { var, positive }
    }

    pub fn satisfied_by(self, value: bool) -> bool {
        value == self.positive
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.var)
        } else {
            write!(f, "¬{}", self.var)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub child: NodeId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Literal(Literal),
    And { left: NodeId, right: NodeId },
    Or(Vec<Edge>),
}

impl Node {
    pub fn children(&self) -> impl Iterator<Item = NodeId> + '_ {
        let (pair, edges): (Option<[NodeId; 2]>, &[Edge]) = match self {
            Node::Literal(_) => (None, &[]),
            Node::And { left, right } => (Some([*left, *right]), &[]),
            Node::Or(edges) => (None, edges.as_slice()),
        };
        pair.into_iter().flatten().chain(edges.iter().map(|e| e.child))
    }

    pub fn is_or(&self) -> bool {
        matches!(self, Node::Or(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Probabilistic circuit: OR weights are normalized mixture probabilities.
    Generative,
    /// Regression/logistic circuit: OR weights are real parameters, plus a global bias.
    Discriminative,
}

impl Role {
    /// Weight of a pass-through OR edge that leaves the circuit semantics unchanged.
    pub fn unit_weight(self) -> f64 {
        match self {
            Role::Generative => 1.0,
            Role::Discriminative => 0.0,
        }
    }

    /// Weight of the edge obtained by splicing an OR edge `inner` below an OR edge `outer`.
    fn compose(self, outer: f64, inner: f64) -> f64 {
        match self {
            Role::Generative => outer * inner,
            Role::Discriminative => outer + inner,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Generative => "generative",
            Role::Discriminative => "discriminative",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Circuit {
    nodes: Vec<Node>,
    vtree_map: Vec<usize>,
    root: NodeId,
    role: Role,
    vtree: Arc<Vtree>,
    bias: f64,
}

impl Circuit {
    /// Assembles a circuit, checking referential integrity only. Structural
    /// properties (smoothness, decomposability, ...) are left to the validators.
    pub fn new(
        role: Role,
        vtree: Arc<Vtree>,
        nodes: Vec<Node>,
        vtree_map: Vec<usize>,
        root: NodeId,
        bias: f64,
    ) -> Result<Circuit> {
        if nodes.len() != vtree_map.len() {
            return Err(Error::InvalidCircuit("vtree map length differs from node count".into()));
        }
        if root >= nodes.len() {
            return Err(Error::InvalidCircuit(format!("root {root} out of range")));
        }
        if role == Role::Generative && bias != 0.0 {
            return Err(Error::InvalidCircuit("bias is only allowed on discriminative circuits".into()));
        }
        for (id, node) in nodes.iter().enumerate() {
            if vtree_map[id] >= vtree.len() {
                return Err(Error::InvalidCircuit(format!("node {id} maps to unknown vtree node {}", vtree_map[id])));
            }
            match node {
                Node::Literal(lit) if !vtree.contains(lit.var) => {
                    return Err(Error::UnknownVariable(lit.var));
                }
                Node::Or(edges) if edges.is_empty() => {
                    return Err(Error::InvalidCircuit(format!("OR gate {id} has no children")));
                }
                _ => {}
            }
            if let Some(c) = node.children().find(|&c| c >= id) {
                return Err(Error::InvalidCircuit(format!(
                    "node {id} references node {c}, which does not precede it"
                )));
            }
            if let Node::Or(edges) = node {
                if let Some(e) = edges.iter().find(|e| !e.weight.is_finite()) {
                    return Err(Error::InvalidCircuit(format!("OR gate {id} has non-finite weight {}", e.weight)));
                }
            }
        }
        Ok(Circuit {
            nodes,
            vtree_map,
            root,
            role,
            vtree,
            bias,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn vtree(&self) -> &Arc<Vtree> {
        &self.vtree
    }

    pub fn vtree_node(&self, id: NodeId) -> usize {
        self.vtree_map[id]
    }

    pub fn vtree_map(&self) -> &[usize] {
        &self.vtree_map
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn with_bias(mut self, bias: f64) -> Result<Circuit> {
        if self.role == Role::Generative && bias != 0.0 {
            return Err(Error::InvalidCircuit("bias is only allowed on discriminative circuits".into()));
        }
        self.bias = bias;
        Ok(self)
    }

    /// Copy of the circuit with every OR weight passed through `f`.
    pub fn map_weights(&self, mut f: impl FnMut(f64) -> f64) -> Circuit {
        let mut out = self.clone();
        for node in &mut out.nodes {
            if let Node::Or(edges) = node {
                for e in edges {
                    e.weight = f(e.weight);
                }
            }
        }
        out
    }

    /// Marks nodes reachable from the root.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        seen[self.root] = true;
        for id in (0..=self.root).rev() {
            if seen[id] {
                for c in self.nodes[id].children() {
                    seen[c] = true;
                }
            }
        }
        seen
    }

    /// Number of edges (AND inputs and OR inputs) reachable from the root.
    pub fn num_edges(&self) -> usize {
        let reach = self.reachable();
        self.nodes
            .iter()
            .zip(&reach)
            .filter(|(_, &r)| r)
            .map(|(n, _)| n.children().count())
            .sum()
    }

    /// Variables mentioned by each node: a literal's variable, the union over an
    /// AND gate's inputs, and the first child's scope for an OR gate.
    pub fn compute_scopes(&self) -> Vec<VarSet> {
        let width = self.vtree.width();
        let mut scopes: Vec<VarSet> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let s = match node {
                Node::Literal(lit) => {
                    let mut s = VarSet::with_capacity(width);
                    s.insert(lit.var.slot());
                    s
                }
                Node::And { left, right } => {
                    let mut s = scopes[*left].clone();
                    s.union_with(&scopes[*right]);
                    s
                }
                Node::Or(edges) => scopes[edges[0].child].clone(),
            };
            scopes.push(s);
        }
        scopes
    }

    /// Whether the circuit is in the layered form the pairwise algorithms expect:
    /// an OR root, OR gates whose inputs are either all AND gates or all literals,
    /// and AND gates whose inputs are OR gates.
    pub fn check_alternating(&self) -> Result<()> {
        if !self.nodes[self.root].is_or() {
            return Err(Error::NotAlternating("root is not an OR gate".into()));
        }
        let reach = self.reachable();
        for (id, node) in self.nodes.iter().enumerate().filter(|(i, _)| reach[*i]) {
            match node {
                Node::And { left, right } => {
                    if !self.nodes[*left].is_or() || !self.nodes[*right].is_or() {
                        return Err(Error::NotAlternating(format!("AND gate {id} has a non-OR input")));
                    }
                }
                Node::Or(edges) => {
                    let literals = edges
                        .iter()
                        .filter(|e| matches!(self.nodes[e.child], Node::Literal(_)))
                        .count();
                    let ands = edges
                        .iter()
                        .filter(|e| matches!(self.nodes[e.child], Node::And { .. }))
                        .count();
                    if !(literals == edges.len() || ands == edges.len()) {
                        return Err(Error::NotAlternating(format!(
                            "OR gate {id} mixes input kinds or has an OR input"
                        )));
                    }
                }
                Node::Literal(_) => {}
            }
        }
        Ok(())
    }

    /// Rewrites the circuit into alternating form without changing its output on
    /// any complete input. Chains of OR gates are spliced into one gate (weights
    /// multiply for generative circuits and add for discriminative ones), and
    /// inputs of AND gates that are not OR gates, as well as a non-OR root, are
    /// wrapped in single-input pass-through OR gates. Unreachable nodes are dropped.
    pub fn normalize_alternating(&self) -> Circuit {
        Normalizer::new(self).run()
    }
}

struct Normalizer<'a> {
    src: &'a Circuit,
    nodes: Vec<Node>,
    vmap: Vec<usize>,
    literal_ids: HashMap<Literal, NodeId>,
    and_ids: HashMap<NodeId, NodeId>,
    or_ids: HashMap<NodeId, NodeId>,
    flat: HashMap<NodeId, Vec<Edge>>,
}

impl<'a> Normalizer<'a> {
    fn new(src: &'a Circuit) -> Self {
        Normalizer {
            src,
            nodes: Vec::new(),
            vmap: Vec::new(),
            literal_ids: HashMap::new(),
            and_ids: HashMap::new(),
            or_ids: HashMap::new(),
            flat: HashMap::new(),
        }
    }

    fn run(mut self) -> Circuit {
        // Post-order over reachable source nodes keeps the output topological
        // without recursion.
        let reach = self.src.reachable();
        let mut wrapped = vec![false; self.src.len()];
        wrapped[self.src.root()] = true;
        for node in self.src.nodes() {
            if let Node::And { left, right } = *node {
                wrapped[left] = true;
                wrapped[right] = true;
            }
        }
        for id in 0..self.src.len() {
            if !reach[id] {
                continue;
            }
            match self.src.node(id) {
                Node::And { .. } => {
                    self.as_and(id);
                }
                Node::Or(_) if wrapped[id] => {
                    self.as_or(id);
                }
                Node::Or(_) => {
                    self.flat_edges(id);
                }
                Node::Literal(lit) => {
                    self.literal(*lit);
                }
            }
        }
        let root = self.as_or(self.src.root());
        Circuit::new(
            self.src.role(),
            Arc::clone(self.src.vtree()),
            self.nodes,
            self.vmap,
            root,
            self.src.bias(),
        )
        .expect("normalization preserves referential integrity")
    }

    fn push(&mut self, node: Node, vnode: usize) -> NodeId {
        self.nodes.push(node);
        self.vmap.push(vnode);
        self.nodes.len() - 1
    }

    fn literal(&mut self, lit: Literal) -> NodeId {
        if let Some(&id) = self.literal_ids.get(&lit) {
            return id;
        }
        let vnode = self.src.vtree().leaf_of(lit.var).expect("literal variable is in the vtree");
        let id = self.push(Node::Literal(lit), vnode);
        self.literal_ids.insert(lit, id);
        id
    }

    /// Image of a source AND gate or literal, usable as an OR input.
    fn as_child(&mut self, src: NodeId) -> NodeId {
        match self.src.node(src) {
            Node::Literal(lit) => self.literal(*lit),
            Node::And { .. } => self.as_and(src),
            Node::Or(_) => unreachable!("OR inputs are spliced"),
        }
    }

    fn as_and(&mut self, src: NodeId) -> NodeId {
        if let Some(&id) = self.and_ids.get(&src) {
            return id;
        }
        let Node::And { left, right } = *self.src.node(src) else {
            unreachable!()
        };
        let l = self.as_or(left);
        let r = self.as_or(right);
        let id = self.push(Node::And { left: l, right: r }, self.src.vtree_node(src));
        self.and_ids.insert(src, id);
        id
    }

    fn flat_edges(&mut self, src: NodeId) -> Vec<Edge> {
        if let Some(edges) = self.flat.get(&src) {
            return edges.clone();
        }
        let Node::Or(edges) = self.src.node(src) else {
            unreachable!()
        };
        let role = self.src.role();
        let mut out = Vec::with_capacity(edges.len());
        for e in edges.clone() {
            if self.src.node(e.child).is_or() {
                for inner in self.flat_edges(e.child) {
                    out.push(Edge {
                        child: inner.child,
                        weight: role.compose(e.weight, inner.weight),
                    });
                }
            } else {
                out.push(Edge {
                    child: self.as_child(e.child),
                    weight: e.weight,
                });
            }
        }
        self.flat.insert(src, out.clone());
        out
    }

    fn as_or(&mut self, src: NodeId) -> NodeId {
        if let Some(&id) = self.or_ids.get(&src) {
            return id;
        }
        let edges = if self.src.node(src).is_or() {
            self.flat_edges(src)
        } else {
            vec![Edge {
                child: self.as_child(src),
                weight: self.src.role().unit_weight(),
            }]
        };
        let vnode = self.vmap[edges[0].child];
        let id = self.push(Node::Or(edges), vnode);
        self.or_ids.insert(src, id);
        id
    }
}

/// Incremental construction of circuits in topological order. Vtree nodes are
/// inferred: literals map to their variable's leaf, AND gates to the lowest
/// common vtree ancestor of their inputs, OR gates to their first input's node.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    role: Role,
    vtree: Arc<Vtree>,
    nodes: Vec<Node>,
    vmap: Vec<usize>,
    literals: HashMap<Literal, NodeId>,
}

impl CircuitBuilder {
    pub fn new(role: Role, vtree: Arc<Vtree>) -> Self {
        CircuitBuilder {
            role,
            vtree,
            nodes: Vec::new(),
            vmap: Vec::new(),
            literals: HashMap::new(),
        }
    }

    pub fn vtree(&self) -> &Arc<Vtree> {
        &self.vtree
    }

    /// Literal leaf; repeated requests for the same literal share one node.
    pub fn literal(&mut self, var: Var, positive: bool) -> NodeId {
        let lit = Literal::new(var, positive);
        if let Some(&id) = self.literals.get(&lit) {
            return id;
        }
        let vnode = self.vtree.leaf_of(var).expect("literal variable must belong to the vtree");
        self.nodes.push(Node::Literal(lit));
        self.vmap.push(vnode);
        let id = self.nodes.len() - 1;
        self.literals.insert(lit, id);
        id
    }

    pub fn and(&mut self, left: NodeId, right: NodeId) -> NodeId {
        let vnode = self.lca(self.vmap[left], self.vmap[right]);
        self.and_at(left, right, vnode)
    }

    pub fn and_at(&mut self, left: NodeId, right: NodeId, vnode: usize) -> NodeId {
        self.nodes.push(Node::And { left, right });
        self.vmap.push(vnode);
        self.nodes.len() - 1
    }

    pub fn or(&mut self, edges: Vec<(NodeId, f64)>) -> NodeId {
        let vnode = self.vmap[edges[0].0];
        self.nodes.push(Node::Or(
            edges.into_iter().map(|(child, weight)| Edge { child, weight }).collect(),
        ));
        self.vmap.push(vnode);
        self.nodes.len() - 1
    }

    pub fn finish(self, root: NodeId, bias: f64) -> Result<Circuit> {
        Circuit::new(self.role, self.vtree, self.nodes, self.vmap, root, bias)
    }

    fn lca(&self, a: usize, b: usize) -> usize {
        let mut ancestors = Vec::new();
        let mut cur = Some(a);
        while let Some(id) = cur {
            ancestors.push(id);
            cur = self.vtree.parent(id);
        }
        let mut cur = b;
        while !ancestors.contains(&cur) {
            cur = self.vtree.parent(cur).expect("vtree nodes share the root");
        }
        cur
    }
}
