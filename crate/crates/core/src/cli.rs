//! Command-line front end: `simulate`, `learn`, `diverge` and `experiment`.
//!
//! Every parameter can come from a flag, a JSON config file (`--config`,
//! keys named like the long flags with `_` for `-`) or a default, in that
//! order of precedence. Exit codes: 0 success, 1 numeric or I/O failure,
//! 2 usage error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::divergence::{clamp_roundoff, mc_kl, PosteriorPair};
use crate::error::Error;
use crate::io::{
    fmt_f64, read_dataset, read_json, read_matrix_csv, write_dataset, write_json, write_matrix_csv, write_table,
    GraphDoc, PosteriorDoc, RunManifest, MANIFEST_FILE,
};
use crate::model::{standardize, Dag, EffectPrior, Hyper};
use crate::numerics::SpdMatrix;
use crate::posterior::{assemble_sigma, NetworkPosterior};
use crate::scores::MetricKind;
use crate::search::{hill_climb, Move, SearchConfig};
use crate::seeds::derive_seed;
use crate::simgen::{example1_spec, example2_spec, simulate, SimOutput, Truth, VChoice};
use crate::study::{
    ex1_grid, ex2_grid, log_grid, summarize_ex1, summarize_ex2, Quartiles, EX1_SIZES, EX1_UPSILONS, EX2_GRID,
};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "EXONET_THREADS";

#[derive(Debug, Parser)]
#[command(name = "exonet", version, about = "Bayesian networks with exogenous variables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset and write X.csv, Q.csv, truth.json.
    Simulate(SimulateArgs),
    /// Hill-climb a network and write its posterior.
    Learn(LearnArgs),
    /// Divergence bounds between the Bayesian and residual posteriors over a grid of υ.
    Diverge(DivergeArgs),
    /// Replicate grids of the simulation studies.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON file with default parameter values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Two-group design on the 20-variable graph.
    #[arg(long, conflicts_with = "example2")]
    pub example1: bool,
    /// Ten variables with a shared three-column Gaussian design.
    #[arg(long)]
    pub example2: bool,
    /// Samples per group (example1).
    #[arg(long)]
    pub n: Option<usize>,
    /// Prior precision of the exogenous effects (example1).
    #[arg(long)]
    pub upsilon: Option<f64>,
    /// V0, V1, V2 or V3 (example2).
    #[arg(long)]
    pub v_choice: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<PathBuf>,
    /// bge, bayes or residual.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub upsilon: Option<f64>,
    /// CSV file holding the m×m effect covariance V.
    #[arg(long)]
    pub v_file: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_in_degree: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DivergeArgs {
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<PathBuf>,
    /// `lo:hi:points`, log-spaced.
    #[arg(long)]
    pub upsilon_grid: Option<String>,
    /// graph.json whose divergence is added as a column.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Compare every node divergence with a Monte-Carlo estimate from N draws.
    #[arg(long)]
    pub validate_mc: Option<usize>,
    /// Comma-separated variable names or indices for the full graph.
    #[arg(long)]
    pub ordering: Option<String>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// ex1 or ex2.
    #[arg(long)]
    pub study: Option<String>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated samples per group (ex1).
    #[arg(long)]
    pub sizes: Option<String>,
    /// Comma-separated υ values (ex1).
    #[arg(long)]
    pub upsilons: Option<String>,
    /// `lo:hi:points` υ grid (ex2).
    #[arg(long)]
    pub upsilon_grid: Option<String>,
    /// Comma-separated subset of V0..V3 (ex2).
    #[arg(long)]
    pub v_choices: Option<String>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Failure(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to stderr, written paths to stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // A global pool can only be set once per process; later calls keep the first.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs one command and returns the files it wrote.
pub fn execute(cmd: &Command) -> CliResult<Vec<PathBuf>> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Learn(a) => cmd_learn(a),
        Command::Diverge(a) => cmd_diverge(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}

/// Flag-over-config-over-default lookup.
struct Resolver {
    path: Option<PathBuf>,
    config: Map<String, Value>,
    resolved: Map<String, Value>,
}

impl Resolver {
    fn new(common: &Common) -> CliResult<Self> {
        let config = match &common.config {
            Some(p) => match read_json::<Value>(p)? {
                Value::Object(m) => m,
                _ => return Err(usage(format!("config file {} must hold a JSON object", p.display()))),
            },
            None => Map::new(),
        };
        Ok(Resolver {
            path: common.config.clone(),
            config,
            resolved: Map::new(),
        })
    }

    fn opt<T: DeserializeOwned + Serialize + Clone>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.config.get(key) {
                Some(v) => Some(
                    serde_json::from_value(v.clone())
                        .map_err(|e| usage(format!("config key `{key}`: {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_owned(), json!(v));
        }
        Ok(value)
    }

    fn get<T: DeserializeOwned + Serialize + Clone>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_owned(), json!(v));
        Ok(v)
    }

    fn flag(&mut self, key: &str, flag: bool) -> CliResult<bool> {
        let v = flag || self.opt::<bool>(key, None)?.unwrap_or(false);
        self.resolved.insert(key.to_owned(), json!(v));
        Ok(v)
    }

    fn path(&mut self, key: &str, flag: &Option<PathBuf>) -> CliResult<Option<PathBuf>> {
        Ok(self.opt(key, flag.as_ref().map(|p| p.display().to_string()))?.map(PathBuf::from))
    }

    fn manifest(&self, command: &str, seed: Option<u64>) -> RunManifest {
        RunManifest::start(command, self.path.as_deref(), Value::Object(self.resolved.clone()), seed)
    }
}

fn out_dir(common: &Common) -> CliResult<PathBuf> {
    std::fs::create_dir_all(&common.out).map_err(Error::from)?;
    Ok(common.out.clone())
}

fn hyper_from(r: &mut Resolver, args: &HyperArgs) -> CliResult<Hyper> {
    let tau = r.get("tau", args.tau, 1.0)?;
    let delta = r.get("delta", args.delta, 1.0)?;
    Hyper::new(tau, delta, None).map_err(|e| usage(e.to_string()))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| usage(format!("bad {what} `{s}` in `{text}`"))))
        .collect()
}

/// Parses `lo:hi:points`.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || usage(format!("malformed grid `{text}` (expected lo:hi:points)"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
    log_grid(lo, hi, points).map_err(|e| usage(e.to_string()))
}

#[derive(Debug, Serialize)]
struct TruthDoc<'a> {
    variables: &'a [String],
    exogenous: &'a [String],
    edges: Vec<(String, String, f64)>,
    psi: &'a [f64],
    b: &'a [Vec<f64>],
    v_true: Vec<Vec<f64>>,
    design: String,
    n: usize,
    seed: u64,
    psi_shape: f64,
    psi_rate: f64,
    gamma_scale: f64,
    manifest: &'static str,
}

fn truth_doc(out: &SimOutput) -> TruthDoc<'_> {
    let names = out.ds.variable_names();
    let Truth { edges, psi, b } = &out.truth;
    let v = out.spec.v_true.matrix();
    TruthDoc {
        variables: names,
        exogenous: out.ds.exogenous_names(),
        edges: edges.iter().map(|e| (names[e.from].clone(), names[e.to].clone(), e.gamma)).collect(),
        psi,
        b,
        v_true: (0..v.nrows()).map(|r| v.row(r).iter().copied().collect()).collect(),
        design: out.spec.effect_design.describe(),
        n: out.spec.n,
        seed: out.spec.seed,
        psi_shape: out.spec.coefficient_law.psi_shape,
        psi_rate: out.spec.coefficient_law.psi_rate,
        gamma_scale: out.spec.coefficient_law.gamma_scale,
        manifest: MANIFEST_FILE,
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<Vec<PathBuf>> {
    let mut r = Resolver::new(&a.common)?;
    let ex1 = r.flag("example1", a.example1)?;
    let ex2 = r.flag("example2", a.example2)?;
    let seed = r.get("seed", a.seed, 0)?;
    let spec = match (ex1, ex2) {
        (true, false) => {
            let n = r.opt("n", a.n)?.ok_or_else(|| usage("--example1 needs --n"))?;
            let u = r.opt("upsilon", a.upsilon)?.ok_or_else(|| usage("--example1 needs --upsilon"))?;
            example1_spec(n, u, seed).map_err(|e| usage(e.to_string()))?
        }
        (false, true) => {
            if a.n.is_some() || a.upsilon.is_some() {
                return Err(usage("--n and --upsilon apply to --example1 only"));
            }
            let v: String = r.opt("v_choice", a.v_choice.clone())?.ok_or_else(|| usage("--example2 needs --v-choice"))?;
            let choice: VChoice = v.parse().map_err(|e: Error| usage(e.to_string()))?;
            example2_spec(choice, seed)
        }
        (true, true) => return Err(usage("choose one of --example1 and --example2")),
        (false, false) => return Err(usage("choose --example1 or --example2")),
    };
    let manifest = r.manifest("simulate", Some(seed));
    let dir = out_dir(&a.common)?;
    let out = simulate(&spec)?;
    let (xp, qp) = write_dataset(&dir, &out.ds)?;
    let tp = dir.join("truth.json");
    write_json(&tp, &truth_doc(&out))?;
    let mut files = vec![xp, qp, tp];
    files.push(manifest.finish(&dir, &files)?);
    Ok(files)
}

fn effect_prior(r: &mut Resolver, upsilon: Option<f64>, v_file: &Option<PathBuf>) -> CliResult<Option<EffectPrior>> {
    let u = r.opt("upsilon", upsilon)?;
    let vf = r.path("v_file", v_file)?;
    match (u, vf) {
        (Some(_), Some(_)) => Err(usage("give either --upsilon or --v-file, not both")),
        (Some(u), None) => {
            if !(u > 0.0 && u.is_finite()) {
                return Err(usage(format!("--upsilon must be positive, got {u}")));
            }
            Ok(Some(EffectPrior::Precision(u)))
        }
        (None, Some(p)) => {
            let (_, v) = read_matrix_csv(&p)?;
            Ok(Some(EffectPrior::Covariance(SpdMatrix::new(v)?)))
        }
        (None, None) => Ok(None),
    }
}

pub fn cmd_learn(a: &LearnArgs) -> CliResult<Vec<PathBuf>> {
    let mut r = Resolver::new(&a.common)?;
    let x = r.path("x", &a.x)?.ok_or_else(|| usage("learn needs --x"))?;
    let q = r.path("q", &a.q)?;
    let metric_name: String = r.get("metric", a.metric.clone(), "bge".into())?;
    let metric: MetricKind = metric_name.parse().map_err(|e: Error| usage(e.to_string()))?;
    let mut h = hyper_from(&mut r, &a.hyper)?;
    h.effect_prior = effect_prior(&mut r, a.upsilon, &a.v_file)?;
    if metric != MetricKind::Bge && q.is_none() {
        return Err(usage(format!("metric {metric} needs the exogenous design via --q")));
    }
    if metric == MetricKind::Bayesian && h.effect_prior.is_none() {
        return Err(usage("metric bayes needs --upsilon or --v-file"));
    }
    let cfg = SearchConfig {
        metric,
        max_in_degree: r.get("max_in_degree", a.max_in_degree, 4)?,
        restarts: r.get("restarts", a.restarts, 1)?,
        seed: r.get("seed", a.seed, 0)?,
        ..Default::default()
    };
    cfg.check().map_err(|e| usage(e.to_string()))?;
    let manifest = r.manifest("learn", Some(cfg.seed));
    let dir = out_dir(&a.common)?;

    let raw = read_dataset(&x, q.as_deref())?;
    let names = raw.variable_names().to_vec();
    let ds = standardize(&raw)?;
    let result = hill_climb(&ds, &h, &cfg)?;

    let gp = dir.join("graph.json");
    let mut doc = GraphDoc::from_dag(&result.best, &names);
    doc.metric = Some(metric);
    doc.score = Some(result.score);
    doc.manifest = Some(MANIFEST_FILE.into());
    write_json(&gp, &doc)?;

    let sp = dir.join("scores.csv");
    let rows: Vec<Vec<String>> = result
        .trace
        .iter()
        .map(|t| {
            let (kind, from, to) = match t.mv {
                None => ("start", String::new(), String::new()),
                Some(Move::Add { from, to }) => ("add", names[from].clone(), names[to].clone()),
                Some(Move::Delete { from, to }) => ("delete", names[from].clone(), names[to].clone()),
                Some(Move::Reverse { from, to }) => ("reverse", names[from].clone(), names[to].clone()),
            };
            vec![t.restart.to_string(), t.iteration.to_string(), kind.into(), from, to, fmt_f64(t.score)]
        })
        .collect();
    write_table(&sp, &["restart", "iteration", "move", "from", "to", "score"], &rows)?;

    let net = NetworkPosterior::new(metric, &result.best, &ds, &h)?;
    let pp = dir.join("posterior.json");
    write_json(&pp, &PosteriorDoc::new(&net, &names, MANIFEST_FILE))?;
    let sigma = assemble_sigma(&net, &result.best)?;
    let cp = dir.join("sigma.csv");
    write_matrix_csv(&cp, &names, sigma.matrix())?;

    let mut files = vec![gp, sp, pp, cp];
    files.push(manifest.finish(&dir, &files)?);
    Ok(files)
}

fn parse_ordering(text: &str, names: &[String]) -> CliResult<Vec<usize>> {
    let order: Vec<usize> = text
        .split(',')
        .map(|t| {
            let t = t.trim();
            names
                .iter()
                .position(|n| n == t)
                .or_else(|| t.parse::<usize>().ok().filter(|&i| i < names.len()))
                .ok_or_else(|| usage(format!("unknown variable `{t}` in --ordering")))
        })
        .collect::<CliResult<_>>()?;
    Dag::full_from_ordering(&order).map_err(|e| usage(e.to_string()))?;
    if order.len() != names.len() {
        return Err(usage(format!("--ordering lists {} of {} variables", order.len(), names.len())));
    }
    Ok(order)
}

pub fn cmd_diverge(a: &DivergeArgs) -> CliResult<Vec<PathBuf>> {
    let mut r = Resolver::new(&a.common)?;
    let x = r.path("x", &a.x)?.ok_or_else(|| usage("diverge needs --x"))?;
    let q = r.path("q", &a.q)?.ok_or_else(|| usage("diverge needs the exogenous design via --q"))?;
    let grid_text: String = r.get("upsilon_grid", a.upsilon_grid.clone(), "0.001:100:21".into())?;
    let grid = parse_grid(&grid_text)?;
    let graph_path = r.path("graph", &a.graph)?;
    let mc: Option<usize> = r.opt("validate_mc", a.validate_mc)?;
    if let Some(n) = mc {
        if n < 1000 {
            return Err(usage(format!("--validate-mc needs at least 1000 draws, got {n}")));
        }
    }
    let ordering_text: Option<String> = r.opt("ordering", a.ordering.clone())?;
    let base = hyper_from(&mut r, &a.hyper)?;
    let seed = r.get("seed", a.seed, 0)?;
    let manifest = r.manifest("diverge", Some(seed));
    let dir = out_dir(&a.common)?;

    let raw = read_dataset(&x, Some(&q))?;
    let names = raw.variable_names().to_vec();
    let order = match &ordering_text {
        Some(t) => parse_ordering(t, &names)?,
        None => (0..names.len()).collect(),
    };
    let graph = match &graph_path {
        Some(p) => Some(read_json::<GraphDoc>(p)?.to_dag(&names)?),
        None => None,
    };
    let ds = standardize(&raw)?;
    let full = Dag::full_from_ordering(&order)?;

    struct Row {
        empty: f64,
        full: f64,
        graph: Option<f64>,
        checks: Vec<Vec<String>>,
    }
    let rows: Vec<Row> = grid
        .par_iter()
        .enumerate()
        .map(|(k, &u)| -> crate::Result<Row> {
            let h = Hyper {
                effect_prior: Some(EffectPrior::Precision(u)),
                ..base.clone()
            };
            let pair = PosteriorPair::bayes_vs_residual(&ds, &h)?;
            let (empty, full_d) = pair.bounds(&order)?;
            let graph_d = graph.as_ref().map(|g| pair.sigma(g)).transpose()?;
            let mut checks = Vec::new();
            if let Some(draws) = mc {
                let target = graph.as_ref().unwrap_or(&full);
                for i in 0..names.len() {
                    let parents = target.parents(i);
                    let (b, res) = pair.posteriors(i, parents)?;
                    let closed = pair.node(i, parents)?;
                    let est = mc_kl(&b, &res, draws, derive_seed(seed, &[k as u64, i as u64]))?;
                    let z = if est.std_error > 0.0 {
                        (closed - est.estimate).abs() / est.std_error
                    } else {
                        0.0
                    };
                    checks.push(vec![
                        fmt_f64(u),
                        names[i].clone(),
                        parents.iter().map(|&j| names[j].as_str()).collect::<Vec<_>>().join(";"),
                        fmt_f64(closed),
                        fmt_f64(est.estimate),
                        fmt_f64(est.std_error),
                        fmt_f64(z),
                    ]);
                }
            }
            Ok(Row {
                empty: clamp_roundoff(empty),
                full: clamp_roundoff(full_d),
                graph: graph_d.map(clamp_roundoff),
                checks,
            })
        })
        .collect::<crate::Result<_>>()?;

    let dp = dir.join("divergence.csv");
    let mut header = vec!["upsilon", "D_empty", "D_full"];
    if graph.is_some() {
        header.push("D_graph");
    }
    let table: Vec<Vec<String>> = grid
        .iter()
        .zip(&rows)
        .map(|(&u, row)| {
            let mut v = vec![fmt_f64(u), fmt_f64(row.empty), fmt_f64(row.full)];
            v.extend(row.graph.map(fmt_f64));
            v
        })
        .collect();
    write_table(&dp, &header, &table)?;
    let mut files = vec![dp];
    if mc.is_some() {
        let kp = dir.join("kl_check.csv");
        let checks: Vec<Vec<String>> = rows.into_iter().flat_map(|r| r.checks).collect();
        write_table(
            &kp,
            &["upsilon", "node", "parents", "closed_form", "mc_estimate", "mc_std_error", "abs_diff_in_se"],
            &checks,
        )?;
        files.push(kp);
    }
    files.push(manifest.finish(&dir, &files)?);
    Ok(files)
}

fn quartile_fields(q: &Quartiles) -> [String; 3] {
    [fmt_f64(q.median), fmt_f64(q.q1), fmt_f64(q.q3)]
}

pub fn cmd_experiment(a: &ExperimentArgs) -> CliResult<Vec<PathBuf>> {
    let mut r = Resolver::new(&a.common)?;
    let study: String = r.opt("study", a.study.clone())?.ok_or_else(|| usage("experiment needs --study ex1|ex2"))?;
    let replicates = r.get("replicates", a.replicates, 100)?;
    if replicates == 0 {
        return Err(usage("--replicates must be at least 1"));
    }
    let seed = r.get("seed", a.seed, 0)?;
    let base = hyper_from(&mut r, &a.hyper)?;
    let mut files = Vec::new();
    match study.as_str() {
        "ex1" => {
            let sizes: Vec<usize> = match r.opt::<String>("sizes", a.sizes.clone())? {
                Some(t) => parse_list(&t, "size")?,
                None => EX1_SIZES.to_vec(),
            };
            let ups: Vec<f64> = match r.opt::<String>("upsilons", a.upsilons.clone())? {
                Some(t) => parse_list(&t, "upsilon")?,
                None => EX1_UPSILONS.to_vec(),
            };
            r.resolved.insert("sizes".into(), json!(sizes));
            r.resolved.insert("upsilons".into(), json!(ups));
            let manifest = r.manifest("experiment", Some(seed));
            let dir = out_dir(&a.common)?;
            let records = ex1_grid(&sizes, &ups, replicates, seed, &base).map_err(|e| match e {
                Error::Invalid(m) | Error::InvalidHyper(m) => usage(m),
                other => CliError::Failure(other),
            })?;
            let raw: Vec<Vec<String>> = records
                .iter()
                .map(|x| {
                    vec![
                        x.n.to_string(),
                        fmt_f64(x.upsilon),
                        x.replicate.to_string(),
                        fmt_f64(x.d_empty),
                        fmt_f64(x.d_full),
                        fmt_f64(x.d_true),
                    ]
                })
                .collect();
            let rp = dir.join("ex1_replicates.csv");
            write_table(&rp, &["n", "upsilon", "replicate", "D_empty", "D_full", "D_true"], &raw)?;
            let summary: Vec<Vec<String>> = summarize_ex1(&records)
                .iter()
                .map(|s| {
                    let mut v = vec![s.n.to_string(), fmt_f64(s.upsilon), s.replicates.to_string()];
                    for q in [&s.d_empty, &s.d_full, &s.d_true] {
                        v.extend(quartile_fields(q));
                    }
                    v
                })
                .collect();
            let sp = dir.join("ex1_summary.csv");
            write_table(
                &sp,
                &[
                    "n", "upsilon", "replicates", "D_empty_median", "D_empty_q1", "D_empty_q3", "D_full_median",
                    "D_full_q1", "D_full_q3", "D_true_median", "D_true_q1", "D_true_q3",
                ],
                &summary,
            )?;
            files.extend([sp, rp]);
            files.push(manifest.finish(&dir, &files)?);
        }
        "ex2" => {
            let grid_text: String = r.get(
                "upsilon_grid",
                a.upsilon_grid.clone(),
                format!("{}:{}:{}", EX2_GRID.0, EX2_GRID.1, EX2_GRID.2),
            )?;
            let grid = parse_grid(&grid_text)?;
            let choices: Vec<VChoice> = match r.opt::<String>("v_choices", a.v_choices.clone())? {
                Some(t) => parse_list(&t, "V choice")?,
                None => VChoice::ALL.to_vec(),
            };
            let manifest = r.manifest("experiment", Some(seed));
            let dir = out_dir(&a.common)?;
            let records = ex2_grid(&choices, &grid, replicates, seed, &base)?;
            let raw: Vec<Vec<String>> = records
                .iter()
                .map(|x| vec![x.choice.to_string(), x.replicate.to_string(), fmt_f64(x.upsilon), fmt_f64(x.value)])
                .collect();
            let rp = dir.join("ex2_replicates.csv");
            write_table(&rp, &["V_choice", "replicate", "upsilon", "difference"], &raw)?;
            let summary: Vec<Vec<String>> = summarize_ex2(&records)
                .iter()
                .map(|s| {
                    let mut v = vec![s.choice.to_string(), fmt_f64(s.upsilon), s.replicates.to_string()];
                    v.extend(quartile_fields(&s.difference));
                    v
                })
                .collect();
            let sp = dir.join("ex2_summary.csv");
            write_table(
                &sp,
                &["V_choice", "upsilon", "replicates", "difference_median", "difference_q1", "difference_q3"],
                &summary,
            )?;
            files.extend([sp, rp]);
            files.push(manifest.finish(&dir, &files)?);
        }
        other => return Err(usage(format!("unknown study `{other}` (expected ex1 or ex2)"))),
    }
    Ok(files)
}
