//! Exact moments and expectations of regression circuits under probabilistic
//! circuits that share a vtree.

pub mod circuit;
pub mod compile;
pub mod error;
pub mod eval;
pub mod evidence;
pub mod experiment;
pub mod fixtures;
pub mod io;
pub mod moments;
pub mod numeric;
pub mod oracle;
pub mod synth;
pub mod taylor;
pub mod validate;
pub mod vtree;

pub use circuit::{Circuit, CircuitBuilder, Edge, Literal, Node, NodeId, Role};
pub use compile::{factorized_to_pc, linear_to_rc, lr_to_lc, nb_to_pc, LinearModel, NaiveBayesModel};
pub use error::{Error, Result};
pub use eval::{configure, evaluate_pc, evaluate_rc, marginal, mpe, predict_lc, ConfiguredPc, MpeResult, MpeSolver};
pub use evidence::{Assignment, Evidence};
pub use io::DatasetTable;
pub use moments::{
    conditional_moments, distribution_stats, ec2_expectation, formula_prob, mc2_moments, shifted_moments,
    DistributionStats, MomentVector, PairCache, PairQuery,
};
pub use vtree::{Var, VarSet, Vtree, VtreeNode};
pub use taylor::{
    expected_prediction, sigmoid_derivative, taylor_expectation, AlphaMode, DerivativePolynomial, PredictionOptions,
    Task,
};
