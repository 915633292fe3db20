//! Compilation of simple models into circuits, plus the small fitters the
//! experiment harness needs.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitBuilder, NodeId, Role};
use crate::error::{Error, Result};
use crate::evidence::Assignment;
use crate::io::DatasetTable;
use crate::vtree::{Var, Vtree, VtreeNode};

/// Pivots below this magnitude make the ridge system singular.
pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub class: Var,
    pub features: Vec<Var>,
    /// `P(C = 1)`.
    pub class_prior: f64,
    /// `P(X_i = 1 | C = 1)`.
    pub given_pos: Vec<f64>,
    /// `P(X_i = 1 | C = 0)`.
    pub given_neg: Vec<f64>,
}

fn check_prob(what: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{what} = {p} is not a probability")))
    }
}

impl NaiveBayesModel {
    pub fn validate(&self) -> Result<()> {
        check_prob("P(C)", self.class_prior)?;
        if self.given_pos.len() != self.features.len() || self.given_neg.len() != self.features.len() {
            return Err(Error::InvalidModel("one conditional pair per feature".into()));
        }
        for (i, f) in self.features.iter().enumerate() {
            check_prob(&format!("P({f}|C)"), self.given_pos[i])?;
            check_prob(&format!("P({f}|~C)"), self.given_neg[i])?;
        }
        let mut seen = self.features.clone();
        seen.push(self.class);
        seen.sort();
        seen.dedup();
        if seen.len() != self.features.len() + 1 {
            return Err(Error::InvalidModel("variables must be distinct".into()));
        }
        Ok(())
    }

    /// `θ_C Π_i θ_{x_i|C}` evaluated directly.
    pub fn joint(&self, x: &Assignment) -> Result<f64> {
        let c = x.value(self.class)?;
        let mut p = if c { self.class_prior } else { 1.0 - self.class_prior };
        for (i, f) in self.features.iter().enumerate() {
            let t = if c { self.given_pos[i] } else { self.given_neg[i] };
            p *= if x.value(*f)? { t } else { 1.0 - t };
        }
        Ok(p)
    }

    /// Variable order of the compiled vtree: the class first, then features.
    pub fn vtree_order(&self) -> Vec<Var> {
        std::iter::once(self.class).chain(self.features.iter().copied()).collect()
    }

    /// Linear model whose sigmoid is `P(C = 1 | x)`. Needs every parameter
    /// strictly inside (0, 1).
    pub fn posterior_logit(&self) -> Result<LinearModel> {
        self.validate()?;
        let open = |p: f64| p > 0.0 && p < 1.0;
        if !open(self.class_prior) || !self.given_pos.iter().chain(&self.given_neg).all(|&p| open(p)) {
            return Err(Error::InvalidModel("posterior is not log-linear with 0/1 parameters".into()));
        }
        let logit = |p: f64| (p / (1.0 - p)).ln();
        let mut bias = logit(self.class_prior);
        let mut weights = Vec::with_capacity(self.features.len());
        for (i, f) in self.features.iter().enumerate() {
            let (a, b) = (self.given_pos[i], self.given_neg[i]);
            let off = ((1.0 - a) / (1.0 - b)).ln();
            bias += off;
            weights.push((*f, (a / b).ln() - off));
        }
        Ok(LinearModel { bias, weights })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub bias: f64,
    pub weights: Vec<(Var, f64)>,
}

impl LinearModel {
    pub fn validate(&self) -> Result<()> {
        if !self.bias.is_finite() || self.weights.iter().any(|(_, w)| !w.is_finite()) {
            return Err(Error::InvalidModel("weights must be finite".into()));
        }
        let mut vars: Vec<Var> = self.weights.iter().map(|(v, _)| *v).collect();
        vars.sort();
        vars.dedup();
        if vars.len() != self.weights.len() {
            return Err(Error::InvalidModel("one weight per variable".into()));
        }
        Ok(())
    }

    pub fn vars(&self) -> Vec<Var> {
        self.weights.iter().map(|(v, _)| *v).collect()
    }

    /// `w_0 + Σ_i w_i x_i`.
    pub fn score(&self, x: &Assignment) -> Result<f64> {
        let mut s = self.bias;
        for (v, w) in &self.weights {
            if x.value(*v)? {
                s += w;
            }
        }
        Ok(s)
    }
}

/// OR over vtree node `v` whose distribution fully factorizes with
/// `P(X = 1) = prob(X)`.
fn factorized_gate(b: &mut CircuitBuilder, v: usize, prob: &dyn Fn(Var) -> f64) -> NodeId {
    let vtree = Arc::clone(b.vtree());
    match vtree.node(v) {
        VtreeNode::Leaf(x) => {
            let (pos, neg) = (b.literal(x, true), b.literal(x, false));
            let p = prob(x);
            b.or(vec![(pos, p), (neg, 1.0 - p)])
        }
        VtreeNode::Internal { left, right } => {
            let l = factorized_gate(b, left, prob);
            let r = factorized_gate(b, right, prob);
            let and = b.and_at(l, r, v);
            b.or(vec![(and, 1.0)])
        }
    }
}

/// RC over vtree node `v` computing `Σ w_i x_i` for the variables below `v`.
fn linear_gate(b: &mut CircuitBuilder, v: usize, weight: &dyn Fn(Var) -> f64) -> NodeId {
    let vtree = Arc::clone(b.vtree());
    match vtree.node(v) {
        VtreeNode::Leaf(x) => {
            let (pos, neg) = (b.literal(x, true), b.literal(x, false));
            b.or(vec![(pos, weight(x)), (neg, 0.0)])
        }
        VtreeNode::Internal { left, right } => {
            let l = linear_gate(b, left, weight);
            let r = linear_gate(b, right, weight);
            let and = b.and_at(l, r, v);
            b.or(vec![(and, 0.0)])
        }
    }
}

/// Naive Bayes as a deterministic PC on a right-linear vtree with the class
/// variable at the top.
pub fn nb_to_pc(nb: &NaiveBayesModel) -> Result<Circuit> {
    nb.validate()?;
    let vtree = Arc::new(Vtree::right_linear(&nb.vtree_order())?);
    let mut b = CircuitBuilder::new(Role::Generative, Arc::clone(&vtree));
    let c_pos = b.literal(nb.class, true);
    let c_neg = b.literal(nb.class, false);
    let root = match vtree.node(vtree.root()) {
        VtreeNode::Leaf(_) => b.or(vec![(c_pos, nb.class_prior), (c_neg, 1.0 - nb.class_prior)]),
        VtreeNode::Internal { left, right } => {
            let index: BTreeMap<Var, usize> = nb.features.iter().enumerate().map(|(i, v)| (*v, i)).collect();
            let pos_branch = factorized_gate(&mut b, right, &|x| nb.given_pos[index[&x]]);
            let neg_branch = factorized_gate(&mut b, right, &|x| nb.given_neg[index[&x]]);
            let wrap_pos = b.or(vec![(c_pos, 1.0)]);
            let wrap_neg = b.or(vec![(c_neg, 1.0)]);
            let a_pos = b.and_at(wrap_pos, pos_branch, vtree.root());
            let a_neg = b.and_at(wrap_neg, neg_branch, vtree.root());
            debug_assert!(matches!(vtree.node(left), VtreeNode::Leaf(_)));
            b.or(vec![(a_pos, nb.class_prior), (a_neg, 1.0 - nb.class_prior)])
        }
    };
    b.finish(root, 0.0)
}

/// Linear model as a regression circuit on `vtree`, bias at the root. Every
/// weighted variable must be in the vtree; vtree variables without a weight
/// get weight 0.
pub fn linear_to_rc(lm: &LinearModel, vtree: Arc<Vtree>) -> Result<Circuit> {
    lm.validate()?;
    let weights: BTreeMap<Var, f64> = lm.weights.iter().copied().collect();
    if let Some(v) = weights.keys().find(|v| !vtree.contains(**v)) {
        return Err(Error::VtreeMismatch(format!("{v} has a weight but is not in the vtree")));
    }
    let mut b = CircuitBuilder::new(Role::Discriminative, Arc::clone(&vtree));
    let root = linear_gate(&mut b, vtree.root(), &|x| weights.get(&x).copied().unwrap_or(0.0));
    b.finish(root, lm.bias)
}

/// Logistic regression as a logistic circuit on a right-linear vtree over the
/// model's variables, with `class` (if given) at the top and ignored by the
/// output.
pub fn lr_to_lc(lm: &LinearModel, class: Option<Var>) -> Result<Circuit> {
    let order: Vec<Var> = class.into_iter().chain(lm.vars()).collect();
    linear_to_rc(lm, Arc::new(Vtree::right_linear(&order)?))
}

/// Fully factorized PC with `P(X = 1) = marginals[X.slot()]`.
pub fn factorized_to_pc(marginals: &[f64], vtree: Arc<Vtree>) -> Result<Circuit> {
    for v in vtree.variables() {
        let p = *marginals
            .get(v.slot())
            .ok_or_else(|| Error::InvalidModel(format!("no marginal for {v}")))?;
        check_prob(&format!("P({v})"), p)?;
    }
    let mut b = CircuitBuilder::new(Role::Generative, Arc::clone(&vtree));
    let root = factorized_gate(&mut b, vtree.root(), &|x| marginals[x.slot()]);
    b.finish(root, 0.0)
}

/// Counting estimate with `laplace` added to every cell. Features are all
/// binary columns other than the class column.
pub fn fit_naive_bayes(data: &DatasetTable, class_column: usize, laplace: f64) -> Result<NaiveBayesModel> {
    if laplace.is_nan() || laplace < 0.0 {
        return Err(Error::Config("Laplace smoothing must be non-negative".into()));
    }
    if class_column >= data.num_columns() {
        return Err(Error::Config(format!("no column {class_column}")));
    }
    let ratio = |hits: f64, total: f64| {
        let den = total + 2.0 * laplace;
        if den > 0.0 {
            (hits + laplace) / den
        } else {
            0.5
        }
    };
    let features: Vec<usize> = (0..data.num_columns()).filter(|&j| j != class_column).collect();
    let mut n_pos = 0.0;
    let mut hits_pos = vec![0.0; features.len()];
    let mut hits_neg = vec![0.0; features.len()];
    for row in data.rows() {
        let c = row[class_column];
        if c {
            n_pos += 1.0;
        }
        for (i, &j) in features.iter().enumerate() {
            if row[j] {
                if c {
                    hits_pos[i] += 1.0;
                } else {
                    hits_neg[i] += 1.0;
                }
            }
        }
    }
    let n = data.num_rows() as f64;
    let n_neg = n - n_pos;
    Ok(NaiveBayesModel {
        class: data.var_of(class_column),
        features: features.iter().map(|&j| data.var_of(j)).collect(),
        class_prior: ratio(n_pos, n),
        given_pos: hits_pos.iter().map(|&h| ratio(h, n_pos)).collect(),
        given_neg: hits_neg.iter().map(|&h| ratio(h, n_neg)).collect(),
    })
}

/// Solves `A w = b` in place by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() <= PIVOT_TOL * scale {
            return Err(Error::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let (top, bottom) = a.split_at_mut(row);
            for (x, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut w = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * w[k]).sum();
        w[row] = (b[row] - s) / a[row][row];
    }
    Ok(w)
}

/// Ridge regression on the binary feature columns `features` against the
/// dataset's target, with an unpenalized intercept.
pub fn fit_ridge(data: &DatasetTable, features: &[usize], lambda: f64) -> Result<LinearModel> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::Config("ridge penalty must be non-negative".into()));
    }
    let y = data
        .target()
        .ok_or_else(|| Error::Config("dataset has no target column".into()))?;
    let dim = features.len() + 1;
    let mut a = vec![vec![0.0; dim]; dim];
    let mut rhs = vec![0.0; dim];
    for (row, &t) in data.rows().iter().zip(y) {
        let z: Vec<f64> = std::iter::once(1.0)
            .chain(features.iter().map(|&j| if row[j] { 1.0 } else { 0.0 }))
            .collect();
        for i in 0..dim {
            if z[i] == 0.0 {
                continue;
            }
            rhs[i] += z[i] * t;
            for k in 0..dim {
                a[i][k] += z[i] * z[k];
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate().skip(1) {
        row[i] += lambda;
    }
    let w = solve(a, rhs).map_err(|e| match e {
        Error::Singular if lambda == 0.0 => Error::Config("normal equations are singular; use a ridge penalty > 0".into()),
        e => e,
    })?;
    Ok(LinearModel {
        bias: w[0],
        weights: features.iter().zip(&w[1..]).map(|(&j, &wj)| (data.var_of(j), wj)).collect(),
    })
}
