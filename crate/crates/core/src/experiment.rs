//! Missing-feature experiment: hide features completely at random and compare
//! expected predictions against imputation baselines.

use std::fmt::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::eval::{evaluate_rc, predict_lc, MpeSolver};
use crate::evidence::{Assignment, Evidence};
use crate::io::{format_real, DatasetTable};
use crate::taylor::{expected_prediction, PredictionOptions, Task};
use crate::vtree::Var;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Expected,
    Mpe,
    Mean,
    Median,
    /// Accepted so configurations can name it; produces no metric.
    Mice,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Expected => "expected",
            Method::Mpe => "mpe",
            Method::Mean => "mean",
            Method::Median => "median",
            Method::Mice => "mice",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expected" => Ok(Method::Expected),
            "mpe" => Ok(Method::Mpe),
            "mean" => Ok(Method::Mean),
            "median" => Ok(Method::Median),
            "mice" => Ok(Method::Mice),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub rates: Vec<f64>,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    pub seed: u64,
    pub task: Task,
    pub prediction: PredictionOptions,
    /// Adds a wall-time column; output is then no longer reproducible byte for byte.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(task: Task) -> Self {
        ExperimentConfig {
            rates: vec![0.0, 0.1, 0.3, 0.5, 0.7, 0.9],
            methods: vec![Method::Expected, Method::Mpe, Method::Mean, Method::Median],
            repetitions: 10,
            seed: 0,
            task,
            prediction: PredictionOptions::default(),
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::Config(format!("missing rate {r} is outside [0, 1]")));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("need at least one repetition".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub method: Method,
    pub rate: f64,
    pub repetition: usize,
    /// `rmse` or `accuracy`.
    pub metric: &'static str,
    /// `None` for unsupported methods.
    pub value: Option<f64>,
    pub wall_ms: Option<f64>,
}

/// Everything a prediction method needs, prepared once per experiment.
pub struct ExperimentData<'a> {
    pc: &'a Circuit,
    model: &'a Circuit,
    test: &'a DatasetTable,
    task: Task,
    /// Columns that may go missing.
    features: Vec<usize>,
    labels: Vec<f64>,
    mean_fill: Vec<bool>,
    median_fill: Vec<bool>,
    mpe: MpeSolver<'a>,
}

impl<'a> ExperimentData<'a> {
    /// `train` supplies the imputation statistics.
    pub fn new(
        pc: &'a Circuit,
        model: &'a Circuit,
        train: &DatasetTable,
        test: &'a DatasetTable,
        task: Task,
    ) -> Result<Self> {
        if train.columns() != test.columns() {
            return Err(Error::Config("train and test columns differ".into()));
        }
        let pc_vars = pc.vtree().variables();
        for j in 0..test.num_columns() {
            if !pc_vars.contains(&test.var_of(j)) {
                return Err(Error::Config(format!(
                    "column {:?} ({}) is not a circuit variable",
                    test.columns()[j],
                    test.var_of(j)
                )));
            }
        }
        if pc_vars.len() != test.num_columns() {
            return Err(Error::Config(format!(
                "circuit has {} variables, dataset has {} binary columns",
                pc_vars.len(),
                test.num_columns()
            )));
        }
        let labels: Vec<f64> = match (task, test.class_column(), test.target()) {
            (Task::Classification, Some(c), _) => test.rows().iter().map(|r| if r[c] { 1.0 } else { 0.0 }).collect(),
            (Task::Classification, None, Some(t)) => {
                if let Some(bad) = t.iter().find(|y| **y != 0.0 && **y != 1.0) {
                    return Err(Error::Config(format!("classification target {bad} is not 0 or 1")));
                }
                t.to_vec()
            }
            (Task::Regression, _, Some(t)) => t.to_vec(),
            _ => return Err(Error::Config("dataset has no label for this task".into())),
        };
        let features = test.feature_columns();
        let n = train.num_rows().max(1);
        let ones: Vec<usize> = (0..train.num_columns())
            .map(|j| train.rows().iter().filter(|r| r[j]).count())
            .collect();
        Ok(ExperimentData {
            pc,
            model,
            test,
            task,
            features,
            labels,
            // binary mean rounds half up; the lower median breaks ties toward 0
            mean_fill: ones.iter().map(|&k| 2 * k >= n).collect(),
            median_fill: ones.iter().map(|&k| 2 * k > n).collect(),
            mpe: MpeSolver::new(pc)?,
        })
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `missing[i][f]` says whether feature `features()[f]` of row `i` is hidden.
    pub fn mask(&self, rate: f64, cell_seed: u64) -> Vec<Vec<bool>> {
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
        (0..self.test.num_rows())
            .map(|_| self.features.iter().map(|_| rng.gen_bool(rate)).collect())
            .collect()
    }

    fn evidence(&self, row: usize, missing: &[bool]) -> Evidence {
        let mut e = Evidence::empty();
        for (f, &j) in self.features.iter().enumerate() {
            if !missing[f] {
                e.observe(self.test.var_of(j), self.test.rows()[row][j])
                    .expect("columns are distinct variables");
            }
        }
        e
    }

    fn model_output(&self, x: &Assignment) -> Result<f64> {
        match self.task {
            Task::Regression => evaluate_rc(self.model, x),
            Task::Classification => predict_lc(self.model, x),
        }
    }

    fn imputed(&self, row: usize, missing: &[bool], fill: &[bool]) -> Assignment {
        let mut x = self.test.assignment(row);
        for (f, &j) in self.features.iter().enumerate() {
            if missing[f] {
                x.set(self.test.var_of(j), fill[j]);
            }
        }
        x
    }

    /// Per-row predictions of `method`; `None` for unsupported methods.
    pub fn predict(&self, method: Method, mask: &[Vec<bool>], options: PredictionOptions) -> Result<Option<Vec<f64>>> {
        let mut out = Vec::with_capacity(mask.len());
        for (row, missing) in mask.iter().enumerate() {
            let y = match method {
                Method::Expected => expected_prediction(self.pc, self.model, self.task, &self.evidence(row, missing), options),
                Method::Mpe => self
                    .mpe
                    .solve(&self.evidence(row, missing))
                    .and_then(|r| self.model_output(&r.completion)),
                Method::Mean => self.model_output(&self.imputed(row, missing, &self.mean_fill)),
                Method::Median => self.model_output(&self.imputed(row, missing, &self.median_fill)),
                Method::Mice => return Ok(None),
            }
            .map_err(|e| Error::Config(format!("test row {}: {e}", row + 1)))?;
            out.push(y);
        }
        Ok(Some(out))
    }

    pub fn metric_name(&self) -> &'static str {
        match self.task {
            Task::Regression => "rmse",
            Task::Classification => "accuracy",
        }
    }

    pub fn score(&self, predictions: &[f64]) -> f64 {
        let n = predictions.len().max(1) as f64;
        match self.task {
            Task::Regression => {
                let sse: f64 = predictions.iter().zip(&self.labels).map(|(p, y)| (p - y) * (p - y)).sum();
                (sse / n).sqrt()
            }
            Task::Classification => {
                let hits = predictions
                    .iter()
                    .zip(&self.labels)
                    .filter(|(p, y)| (**p >= 0.5) == (**y == 1.0))
                    .count();
                hits as f64 / n
            }
        }
    }
}

/// Seed of the masking generator for one (rate, repetition) cell.
pub fn cell_seed(seed: u64, rate_index: usize, repetition: usize) -> u64 {
    seed.wrapping_add(1000 * rate_index as u64).wrapping_add(repetition as u64)
}

/// Rows ordered by rate, then repetition, then method as configured.
pub fn run_missing_experiment(data: &ExperimentData<'_>, config: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for (ri, &rate) in config.rates.iter().enumerate() {
        for rep in 0..config.repetitions {
            let mask = data.mask(rate, cell_seed(config.seed, ri, rep));
            for &method in &config.methods {
                let start = Instant::now();
                let value = data
                    .predict(method, &mask, config.prediction)?
                    .map(|p| data.score(&p));
                let elapsed = start.elapsed().as_secs_f64() * 1e3;
                rows.push(MetricsRow {
                    method,
                    rate,
                    repetition: rep,
                    metric: data.metric_name(),
                    value,
                    wall_ms: config.timing.then_some(elapsed),
                });
            }
        }
    }
    Ok(rows)
}

pub fn rows_to_tsv(rows: &[MetricsRow]) -> String {
    let timing = rows.iter().any(|r| r.wall_ms.is_some());
    let mut out = String::from("method\trate\trepetition\tmetric\tvalue");
    if timing {
        out.push_str("\twall_ms");
    }
    out.push('\n');
    for r in rows {
        let value = r.value.map_or_else(|| "unsupported".to_string(), format_real);
        write!(out, "{}\t{}\t{}\t{}\t{value}", r.method.name(), format_real(r.rate), r.repetition, r.metric)
            .expect("writing to a String");
        if let Some(ms) = r.wall_ms {
            write!(out, "\t{ms:.3}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub method: Method,
    pub rate: f64,
    pub mean: f64,
    pub std: f64,
    pub repetitions: usize,
}

/// Mean and standard deviation over repetitions per (method, rate), in first
/// appearance order. Unsupported methods are skipped.
pub fn summarize(rows: &[MetricsRow]) -> Vec<Summary> {
    let mut keys: Vec<(Method, u64)> = Vec::new();
    for r in rows {
        let k = (r.method, r.rate.to_bits());
        if r.value.is_some() && !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(method, rate_bits)| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method && r.rate.to_bits() == rate_bits)
                .filter_map(|r| r.value)
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            Summary {
                method,
                rate: f64::from_bits(rate_bits),
                mean,
                std: var.sqrt(),
                repetitions: vals.len(),
            }
        })
        .collect()
}

/// Samples `rows` complete assignments from a fully factorized distribution
/// over `X1..Xn` with `P(X_i = 1) = marginals[i]`.
pub fn sample_factorized<R: Rng>(marginals: &[f64], rows: usize, rng: &mut R) -> Vec<Vec<bool>> {
    (0..rows)
        .map(|_| marginals.iter().map(|&p| rng.gen_bool(p)).collect())
        .collect()
}

/// Column names `x1..xn`.
pub fn default_columns(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Dot product of a row with per-variable weights.
pub fn linear_target(row: &[bool], bias: f64, weights: &[(Var, f64)]) -> f64 {
    bias + weights.iter().filter(|(v, _)| row[v.slot()]).map(|(_, w)| w).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{factorized_to_pc, linear_to_rc, LinearModel};
    use crate::synth::vars;
    use crate::vtree::Vtree;
    use std::sync::Arc;

    fn setup() -> (Circuit, Circuit, DatasetTable) {
        let vs = vars(4);
        let vt = Arc::new(Vtree::balanced(&vs).unwrap());
        let m = [0.2, 0.5, 0.7, 0.9];
        let pc = factorized_to_pc(&m, Arc::clone(&vt)).unwrap();
        let lm = LinearModel {
            bias: 0.5,
            weights: vs.iter().zip([1.0, -2.0, 0.5, 3.0]).map(|(v, w)| (*v, w)).collect(),
        };
        let rc = linear_to_rc(&lm, vt).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = sample_factorized(&m, 50, &mut rng);
        let target = rows.iter().map(|r| linear_target(r, lm.bias, &lm.weights) + rng.gen_range(-0.1..0.1)).collect();
        let data = DatasetTable::new(default_columns(4), rows, Some(("y".into(), target)), None).unwrap();
        (pc, rc, data)
    }

    #[test]
    fn rate_zero_methods_agree() {
        let (pc, rc, data) = setup();
        let ctx = ExperimentData::new(&pc, &rc, &data, &data, Task::Regression).unwrap();
        let mask = ctx.mask(0.0, 1);
        let direct: Vec<f64> = (0..data.num_rows()).map(|i| evaluate_rc(&rc, &data.assignment(i)).unwrap()).collect();
        for m in [Method::Expected, Method::Mpe, Method::Mean, Method::Median] {
            let p = ctx.predict(m, &mask, PredictionOptions::default()).unwrap().unwrap();
            for (a, b) in p.iter().zip(&direct) {
                assert!((a - b).abs() <= 1e-12, "{m:?}");
            }
        }
    }

    #[test]
    fn rate_one_expected_is_constant() {
        let (pc, rc, data) = setup();
        let ctx = ExperimentData::new(&pc, &rc, &data, &data, Task::Regression).unwrap();
        let p = ctx.predict(Method::Expected, &ctx.mask(1.0, 1), PredictionOptions::default()).unwrap().unwrap();
        // 0.5 + 0.2 - 2*0.5 + 0.5*0.7 + 3*0.9
        let m1 = 0.5 + 0.2 - 1.0 + 0.35 + 2.7;
        assert!(p.iter().all(|v| (v - m1).abs() < 1e-12));
    }

    #[test]
    fn tsv_is_deterministic() {
        let (pc, rc, data) = setup();
        let ctx = ExperimentData::new(&pc, &rc, &data, &data, Task::Regression).unwrap();
        let mut cfg = ExperimentConfig::new(Task::Regression);
        cfg.repetitions = 2;
        cfg.rates = vec![0.0, 0.5];
        cfg.methods.push(Method::Mice);
        let a = rows_to_tsv(&run_missing_experiment(&ctx, &cfg).unwrap());
        let b = rows_to_tsv(&run_missing_experiment(&ctx, &cfg).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("method\trate\trepetition\tmetric\tvalue\n"));
        assert!(a.contains("mice\t0.5\t1\trmse\tunsupported"));
        assert_eq!(a.lines().count(), 1 + 2 * 2 * 5);
    }

    #[test]
    fn bad_configs() {
        let mut cfg = ExperimentConfig::new(Task::Regression);
        cfg.rates = vec![1.5];
        assert!(cfg.validate().is_err());
        assert!("knn".parse::<Method>().is_err());
    }

    #[test]
    fn imputation_ties() {
        let data = DatasetTable::new(
            default_columns(2),
            vec![vec![true, true], vec![false, true]],
            Some(("y".into(), vec![0.0, 0.0])),
            None,
        )
        .unwrap();
        let vs = vars(2);
        let vt = Arc::new(Vtree::balanced(&vs).unwrap());
        let pc = factorized_to_pc(&[0.5, 0.5], Arc::clone(&vt)).unwrap();
        let rc = linear_to_rc(&LinearModel { bias: 0.0, weights: vec![] }, vt).unwrap();
        let ctx = ExperimentData::new(&pc, &rc, &data, &data, Task::Regression).unwrap();
        assert_eq!(ctx.mean_fill, vec![true, true]);
        assert_eq!(ctx.median_fill, vec![false, true]);
    }
}
