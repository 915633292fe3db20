use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use circmom::compile::{fit_naive_bayes, fit_ridge};
use circmom::experiment::{run_missing_experiment, rows_to_tsv, summarize, ExperimentConfig, ExperimentData, Method};
use circmom::io::{
    load_circuit, load_dataset, parse_linear_model, parse_nb_model, parse_vtree, serialize_circuit,
    serialize_linear_model, serialize_nb_model, serialize_vtree,
};
use circmom::oracle::{enum_marginal, enum_moments, enum_mpe};
use circmom::taylor::taylor_from_moments;
use circmom::validate::{validate_circuit, validate_pair, ValidationReport};
use circmom::{
    conditional_moments, factorized_to_pc, linear_to_rc, lr_to_lc, marginal, nb_to_pc, AlphaMode, Circuit,
    Evidence, MpeSolver, PredictionOptions, Role, Task, Var, Vtree,
};

/// Agreement required between the pairwise algorithm and enumeration.
const ORACLE_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "circmom", version, about = "Moments of regression circuits under probabilistic circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check structural properties of one or two circuits.
    Validate {
        #[arg(long)]
        pc: Option<PathBuf>,
        #[arg(long)]
        rc: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "tsv")]
        format: Format,
    },
    /// Inference queries on a circuit pair.
    Query(QueryArgs),
    /// Brute-force the same queries by enumeration.
    Oracle(QueryArgs),
    /// Turn models into circuits, or fit models from data.
    Compile {
        #[command(subcommand)]
        what: CompileCommand,
    },
    /// Missing-feature experiment.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum QueryKind {
    Expectation,
    Moment,
    Stats,
    Taylor,
    Mpe,
    Marginal,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(value_enum)]
    kind: QueryKind,
    #[arg(long)]
    pc: PathBuf,
    #[arg(long)]
    rc: Option<PathBuf>,
    /// Evidence such as `X1=1`; repeatable.
    #[arg(long = "set", value_name = "VAR=0|1")]
    set: Vec<String>,
    /// Moment order, or Taylor degree.
    #[arg(long)]
    order: Option<usize>,
    /// Taylor expansion point: zero, mean or a number.
    #[arg(long, default_value = "mean")]
    alpha: String,
    /// Also compute the answer by enumeration and fail on disagreement.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    no_validate: bool,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
}

#[derive(Subcommand)]
enum CompileCommand {
    /// Naive Bayes model file to a PC (writes `<out>.vtree` and `<out>.pc`).
    Nb {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Linear model file to a logistic circuit (writes `<out>.vtree` and `<out>.rc`).
    Lr {
        #[arg(long)]
        model: PathBuf,
        /// Class variable to include in the vtree so the circuit pairs with an NB PC.
        #[arg(long)]
        class: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Linear model file to a regression circuit on an existing vtree.
    Linear {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vtree: PathBuf,
        /// Output `.rc` file; its header refers to the vtree by path relative to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fully factorized PC from column frequencies of a dataset.
    Factorized {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        vtree: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        laplace: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a naive Bayes model file.
    FitNb {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        class: String,
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        laplace: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a ridge regression model file on every binary column.
    FitRidge {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 1e-3)]
        lambda: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    pc: PathBuf,
    /// Regression circuit, or logistic circuit for classification.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Source of imputation statistics; defaults to the test set.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    class: Option<String>,
    #[arg(long, default_value = "regression")]
    task: String,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.3,0.5,0.7,0.9")]
    rates: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "expected,mpe,mean,median")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[arg(long, default_value = "mean")]
    alpha: String,
    /// Add a wall-time column.
    #[arg(long)]
    timing: bool,
    /// Print per-(method, rate) averages instead of every row.
    #[arg(long)]
    summary: bool,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Query(String),
    Io(String),
}

impl From<circmom::Error> for Failure {
    fn from(e: circmom::Error) -> Self {
        match e {
            circmom::Error::Io(_) | circmom::Error::Parse { .. } => Failure::Io(e.to_string()),
            _ => Failure::Query(e.to_string()),
        }
    }
}

type CmdResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CmdResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> CmdResult<Circuit> {
    load_circuit(path).map_err(|e| match e {
        circmom::Error::Io(m) => Failure::Io(m),
        other => Failure::Io(format!("{}: {other}", path.display())),
    })
}

fn parse_evidence(sets: &[String]) -> CmdResult<Evidence> {
    let mut e = Evidence::empty();
    for s in sets {
        let bad = || Failure::Query(format!("cannot parse evidence {s:?}; expected e.g. X1=1"));
        let (name, value) = s.split_once('=').ok_or_else(bad)?;
        let digits = name.trim().trim_start_matches(['X', 'x']);
        let var = digits.parse::<u32>().ok().and_then(Var::new).ok_or_else(bad)?;
        let value = match value.trim() {
            "0" => false,
            "1" => true,
            _ => return Err(bad()),
        };
        e.observe(var, value)?;
    }
    Ok(e)
}

fn fmt12(x: f64) -> String {
    format!("{x:.12}")
}

/// Ordered key/value output. A single unnamed value prints bare in TSV.
struct Output(Vec<(String, serde_json::Value)>);

impl Output {
    fn new() -> Self {
        Output(Vec::new())
    }

    fn real(&mut self, key: &str, x: f64) {
        self.0.push((key.to_string(), serde_json::json!(x)));
    }

    fn text(&mut self, key: &str, s: String) {
        self.0.push((key.to_string(), serde_json::Value::String(s)));
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let map: serde_json::Map<String, serde_json::Value> = self.0.iter().cloned().collect();
                serde_json::to_string_pretty(&map).expect("values are finite") + "\n"
            }
            Format::Tsv => {
                let cell = |v: &serde_json::Value| match v {
                    serde_json::Value::Number(n) => fmt12(n.as_f64().expect("stored as f64")),
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                if self.0.len() == 1 {
                    return cell(&self.0[0].1) + "\n";
                }
                self.0.iter().map(|(k, v)| format!("{k}\t{}\n", cell(v))).collect()
            }
        }
    }
}

fn print_reports(reports: &[ValidationReport], format: Format) -> CmdResult {
    match format {
        Format::Tsv => {
            for r in reports {
                println!("{r}");
            }
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(reports).expect("reports serialize")),
    }
    match reports.iter().filter(|r| !r.ok).map(|r| r.property).collect::<Vec<_>>() {
        failed if failed.is_empty() => Ok(()),
        failed => Err(Failure::Validation(format!("violated: {}", failed.join(", ")))),
    }
}

fn cmd_validate(pc: Option<&Path>, rc: Option<&Path>, format: Format) -> CmdResult {
    let pc = pc.map(load).transpose()?;
    let rc = rc.map(load).transpose()?;
    let reports = match (&pc, &rc) {
        (Some(p), Some(r)) => validate_pair(p, r),
        (Some(c), None) | (None, Some(c)) => validate_circuit(c),
        (None, None) => return Err(Failure::Query("give --pc, --rc or both".into())),
    };
    for (c, want) in [(&pc, Role::Generative), (&rc, Role::Discriminative)] {
        if c.as_ref().is_some_and(|c| c.role() != want) {
            return Err(Failure::Validation(format!("expected a {want:?} circuit")));
        }
    }
    print_reports(&reports, format)
}

fn needs_rc(kind: QueryKind) -> bool {
    !matches!(kind, QueryKind::Mpe | QueryKind::Marginal)
}

fn default_order(kind: QueryKind) -> usize {
    match kind {
        QueryKind::Moment => 2,
        _ => 1,
    }
}

fn fmt_assignment(values: &[bool]) -> String {
    values.iter().map(|&b| if b { "1" } else { "0" }).collect::<Vec<_>>().join(",")
}

fn check_agree(what: &str, got: f64, want: f64) -> CmdResult {
    if (got - want).abs() <= ORACLE_TOL * (1.0 + want.abs()) {
        Ok(())
    } else {
        Err(Failure::Query(format!("{what}: pairwise {got} disagrees with enumeration {want}")))
    }
}

/// `enumerate` answers the query by brute force only.
fn cmd_query(a: &QueryArgs, enumerate: bool) -> CmdResult {
    let pc = load(&a.pc)?;
    let rc = match (&a.rc, needs_rc(a.kind)) {
        (Some(p), true) => Some(load(p)?),
        (None, true) => return Err(Failure::Query("this query needs --rc".into())),
        _ => None,
    };
    if !a.no_validate {
        let reports = match &rc {
            Some(rc) => validate_pair(&pc, rc),
            None => validate_circuit(&pc),
        };
        if reports.iter().any(|r| !r.ok) {
            for r in reports.iter().filter(|r| !r.ok) {
                eprintln!("{r}");
            }
            return Err(Failure::Validation("circuits fail validation".into()));
        }
    }
    let pc = pc.normalize_alternating();
    let rc = rc.map(|c| c.normalize_alternating());
    let ev = parse_evidence(&a.set)?;
    let order = a.order.unwrap_or(default_order(a.kind));
    let alpha: AlphaMode = a.alpha.parse()?;
    let cross = a.oracle && !enumerate;
    let mut out = Output::new();

    match a.kind {
        QueryKind::Marginal => {
            let p = if enumerate { enum_marginal(&pc, &ev)? } else { marginal(&pc, &ev)? };
            out.real("marginal", p);
            if cross {
                let o = enum_marginal(&pc, &ev)?;
                check_agree("marginal", p, o)?;
                out.real("oracle", o);
            }
        }
        QueryKind::Mpe => {
            if enumerate {
                let r = enum_mpe(&pc, &ev)?;
                out.real("probability", r.probability);
                let all: Vec<String> = r.argmax.iter().map(|x| fmt_assignment(x.values())).collect();
                out.text("argmax", all.join(";"));
            } else {
                let solver = MpeSolver::new(&pc)?;
                let r = solver.solve(&ev)?;
                out.real("probability", r.probability);
                out.text("assignment", fmt_assignment(r.completion.values()));
                out.text("exact", r.exact.to_string());
                if cross {
                    let o = enum_mpe(&pc, &ev)?;
                    check_agree("mpe probability", r.probability, o.probability)?;
                    if r.exact && !o.argmax.contains(&r.completion) {
                        return Err(Failure::Query("mpe completion is not among the enumerated maximizers".into()));
                    }
                    out.real("oracle", o.probability);
                }
            }
        }
        kind => {
            let rc = rc.as_ref().expect("checked above");
            let k = match kind {
                QueryKind::Expectation => 1,
                QueryKind::Stats => 2,
                _ => order.max(1),
            };
            let m = if enumerate { enum_moments(&pc, rc, &ev, k)? } else { conditional_moments(&pc, rc, &ev, k)? };
            let o = if cross { Some(enum_moments(&pc, rc, &ev, k)?) } else { None };
            match kind {
                QueryKind::Expectation => out.real("expectation", m.get(1)),
                QueryKind::Moment => out.real(&format!("moment{order}"), m.get(order)),
                QueryKind::Stats => {
                    let s = circmom::moments::stats_from_moments(&m)?;
                    out.real("mean", s.mean);
                    out.real("variance", s.variance);
                    out.real("std", s.std);
                }
                QueryKind::Taylor => {
                    let at = alpha.resolve(&m);
                    out.real("taylor", taylor_from_moments(&m, order, at)?);
                    // spread of g about the expansion point, as a convergence hint
                    let centered = m.shifted(at)?.get(2);
                    eprintln!("alpha\t{}\tcentered second moment\t{}", fmt12(at), fmt12(centered));
                }
                QueryKind::Marginal | QueryKind::Mpe => unreachable!(),
            }
            if let Some(o) = o {
                for j in 1..=k {
                    check_agree(&format!("moment {j}"), m.get(j), o.get(j))?;
                }
                if kind == QueryKind::Taylor {
                    let t = taylor_from_moments(&o, order, alpha.resolve(&o))?;
                    check_agree("taylor", taylor_from_moments(&m, order, alpha.resolve(&m))?, t)?;
                    out.real("oracle", t);
                } else {
                    out.real("oracle", o.get(if kind == QueryKind::Moment { order } else { 1 }));
                }
            }
        }
    }
    print!("{}", out.render(a.format));
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn with_ext(out: &Path, ext: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_pair(out: &Path, c: &Circuit, ext: &str) -> CmdResult {
    let vpath = with_ext(out, "vtree");
    write(&vpath, &serialize_vtree(c.vtree()))?;
    write(&with_ext(out, ext), &serialize_circuit(c, &file_name(&vpath)))
}

/// Path of `target` as seen from the directory holding `from`.
fn relative_to(target: &Path, from: &Path) -> String {
    let dir = from.parent().unwrap_or(Path::new(""));
    match target.strip_prefix(dir) {
        Ok(rel) if dir != Path::new("") => rel.to_string_lossy().into_owned(),
        _ => std::path::absolute(target)
            .unwrap_or_else(|_| target.to_path_buf())
            .to_string_lossy()
            .into_owned(),
    }
}

fn load_vtree(path: &Path) -> CmdResult<Arc<Vtree>> {
    Ok(Arc::new(parse_vtree(&read(path)?).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?))
}

fn cmd_compile(what: &CompileCommand) -> CmdResult {
    match what {
        CompileCommand::Nb { model, out } => {
            let nb = parse_nb_model(&read(model)?)?;
            write_pair(out, &nb_to_pc(&nb)?, "pc")
        }
        CompileCommand::Lr { model, class, out } => {
            let lm = parse_linear_model(&read(model)?)?;
            let class = class.map(|c| Var::new(c).ok_or(Failure::Query("variables are numbered from 1".into()))).transpose()?;
            write_pair(out, &lr_to_lc(&lm, class)?, "rc")
        }
        CompileCommand::Linear { model, vtree, out } => {
            let lm = parse_linear_model(&read(model)?)?;
            let rc = linear_to_rc(&lm, load_vtree(vtree)?)?;
            write(out, &serialize_circuit(&rc, &relative_to(vtree, out)))
        }
        CompileCommand::Factorized { data, target, vtree, laplace, out } => {
            let table = load_dataset(&read(data)?, target.as_deref(), None)?;
            let n = table.num_rows() as f64;
            let marginals: Vec<f64> = (0..table.num_columns())
                .map(|j| (table.rows().iter().filter(|r| r[j]).count() as f64 + laplace) / (n + 2.0 * laplace))
                .collect();
            let pc = factorized_to_pc(&marginals, load_vtree(vtree)?)?;
            write(out, &serialize_circuit(&pc, &relative_to(vtree, out)))
        }
        CompileCommand::FitNb { data, class, target, laplace, out } => {
            let table = load_dataset(&read(data)?, target.as_deref(), Some(class))?;
            let nb = fit_naive_bayes(&table, table.class_column().expect("class was given"), *laplace)?;
            write(out, &serialize_nb_model(&nb))
        }
        CompileCommand::FitRidge { data, target, lambda, out } => {
            let table = load_dataset(&read(data)?, Some(target), None)?;
            let cols: Vec<usize> = (0..table.num_columns()).collect();
            write(out, &serialize_linear_model(&fit_ridge(&table, &cols, *lambda)?))
        }
    }
}

fn cmd_experiment(a: &ExperimentArgs) -> CmdResult {
    let task: Task = a.task.parse()?;
    let methods = a.methods.iter().map(|m| m.parse::<Method>()).collect::<Result<Vec<_>, _>>()?;
    let config = ExperimentConfig {
        rates: a.rates.clone(),
        methods,
        repetitions: a.repetitions,
        seed: a.seed,
        task,
        prediction: PredictionOptions {
            order: a.order,
            alpha: a.alpha.parse()?,
        },
        timing: a.timing,
    };
    config.validate()?;
    let pc = load(&a.pc)?;
    let model = load(&a.model)?;
    let reports = validate_pair(&pc, &model);
    if reports.iter().any(|r| !r.ok) {
        for r in reports.iter().filter(|r| !r.ok) {
            eprintln!("{r}");
        }
        return Err(Failure::Validation("circuits fail validation".into()));
    }
    let (pc, model) = (pc.normalize_alternating(), model.normalize_alternating());
    let test = load_dataset(&read(&a.test)?, a.target.as_deref(), a.class.as_deref())?;
    let train = match &a.train {
        Some(p) => load_dataset(&read(p)?, a.target.as_deref(), a.class.as_deref())?,
        None => test.clone(),
    };
    let data = ExperimentData::new(&pc, &model, &train, &test, task)?;
    let rows = run_missing_experiment(&data, &config)?;
    let text = match (a.summary, a.format) {
        (false, Format::Tsv) => rows_to_tsv(&rows),
        (false, Format::Json) => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
        (true, Format::Json) => serde_json::to_string_pretty(&summarize(&rows)).expect("rows serialize") + "\n",
        (true, Format::Tsv) => {
            let mut s = String::from("method\trate\tmean\tstd\trepetitions\n");
            for r in summarize(&rows) {
                s.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", r.method.name(), r.rate, fmt12(r.mean), fmt12(r.std), r.repetitions));
            }
            s
        }
    };
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { pc, rc, format } => cmd_validate(pc.as_deref(), rc.as_deref(), *format),
        Command::Query(a) => cmd_query(a, false),
        Command::Oracle(a) => cmd_query(a, true),
        Command::Compile { what } => cmd_compile(what),
        Command::Experiment(a) => cmd_experiment(a),
    };
    let (code, msg) = match result {
        Ok(()) => return ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => (1, m),
        Err(Failure::Query(m)) => (2, m),
        Err(Failure::Io(m)) => (3, m),
    };
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evidence_flags() {
        let e = parse_evidence(&["X1=1".into(), "3=0".into()]).unwrap();
        assert_eq!(e.get(Var::new(1).unwrap()), Some(true));
        assert_eq!(e.get(Var::new(3).unwrap()), Some(false));
        assert!(parse_evidence(&["X1=2".into()]).is_err());
        assert!(parse_evidence(&["X0=1".into()]).is_err());
        assert!(parse_evidence(&["X1=1".into(), "X1=0".into()]).is_err());
    }

    #[test]
    fn single_value_prints_bare() {
        let mut o = Output::new();
        o.real("expectation", 5.452);
        assert_eq!(o.render(Format::Tsv), "5.452000000000\n");
        o.real("oracle", 5.452);
        assert_eq!(o.render(Format::Tsv), "expectation\t5.452000000000\noracle\t5.452000000000\n");
    }

    #[test]
    fn paths_next_to_output() {
        assert_eq!(relative_to(Path::new("d/a.vtree"), Path::new("d/a.rc")), "a.vtree");
        assert_eq!(with_ext(Path::new("d/model"), "pc"), PathBuf::from("d/model.pc"));
    }
}
