//! Command-line front end. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array1;

use crate::error::ClsmError;
use crate::eval::{
    predict_attribute_dist, predict_link_prob, run_attribute_prediction_cv, run_link_prediction_cv, CvConfig, CvReport,
};
use crate::generative::{generate_dataset, SimConfig};
use crate::hyper::Hyperparams;
use crate::inference::{fit, fold_in_theta_from_attributes, fold_in_theta_from_links, FitConfig};
use crate::io;
use crate::model::FittedModel;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_DATA: u8 = 4;
pub const EXIT_FAILURE: u8 = 1;

pub const DEFAULT_K_GRID: &str = "5:25:5";

#[derive(Debug, Parser)]
#[command(name = "clsm", version, about = "Joint latent space model of social links and user behaviors")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "CLSM_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a network, behaviors and ground truth from the generative model.
    Simulate(SimulateArgs),
    /// Fit the model and write a checkpoint.
    Fit(FitArgs),
    /// Rank fitted nodes as link partners for new nodes described by behaviors.
    PredictLinks(PredictLinksArgs),
    /// Rank tokens for new nodes described by their links to fitted nodes.
    PredictAttrs(PredictAttrsArgs),
    /// Node-level cross-validation over a grid of topic counts.
    Evaluate(EvaluateArgs),
    /// Time inference sweeps on synthetic networks of growing size.
    BenchScaling(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// key = value simulation settings.
    #[arg(long)]
    pub config: PathBuf,
    /// Writes <prefix>.edges.tsv, <prefix>.behaviors.tsv and <prefix>.truth.clsm.
    #[arg(long)]
    pub out_prefix: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitOptions {
    /// key = value fit settings, applied before the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of topics.
    #[arg(long, short = 'k')]
    pub num_topics: Option<usize>,
    #[arg(long = "max-iters")]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl FitOptions {
    fn resolve(&self, default_topics: usize) -> Result<FitConfig, CliError> {
        let mut config = FitConfig::new(default_topics);
        if let Some(path) = &self.config {
            config = io::load_fit_config(path, config).map_err(CliError::usage)?;
        }
        if let Some(k) = self.num_topics {
            config.num_topics = k;
        }
        if let Some(m) = self.max_iterations {
            config.max_iterations = m;
        }
        if let Some(t) = self.rel_tol {
            config.rel_tol = t;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        config.validate().map_err(CliError::usage)?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub behaviors: Option<PathBuf>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[command(flatten)]
    pub fit: FitOptions,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictLinksArgs {
    /// Fitted checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    /// Behaviors of the query nodes, in the behavior file format.
    #[arg(long)]
    pub queries: PathBuf,
    /// Keep only the best candidates per query.
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub out_csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictAttrsArgs {
    /// Fitted checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    /// `query<TAB>fitted_node` lines listing each query node's links.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub out_csv: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Links,
    Attrs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub behaviors: Option<PathBuf>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// `start:end:step` (inclusive) or a comma-separated list.
    #[arg(long, default_value = DEFAULT_K_GRID)]
    pub k_grid: String,
    #[arg(long, default_value_t = CvConfig::DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value_t = CvConfig::DEFAULT_REPEATS)]
    pub repeats: usize,
    /// Dataset name written to the metrics table.
    #[arg(long, default_value = "data")]
    pub dataset: String,
    #[command(flatten)]
    pub fit: FitOptions,
    #[arg(long)]
    pub out_csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated node counts, at least two.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10.0)]
    pub avg_degree: f64,
    #[arg(long, default_value_t = 200)]
    pub vocab_size: usize,
    #[arg(long, short = 'k', default_value_t = 5)]
    pub num_topics: usize,
    #[arg(long, default_value_t = 20.0)]
    pub selections_mean: f64,
    /// Timed sweeps per size.
    #[arg(long, default_value_t = 10)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_csv: PathBuf,
}

/// Error with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: ClsmError,
}

impl CliError {
    fn usage(error: ClsmError) -> Self {
        CliError { code: EXIT_USAGE, error }
    }
}

impl From<ClsmError> for CliError {
    fn from(error: ClsmError) -> Self {
        let code = match &error {
            ClsmError::Config(_) | ClsmError::Shape(_) | ClsmError::Domain(_) => EXIT_USAGE,
            ClsmError::Data(_)
            | ClsmError::Parse { .. }
            | ClsmError::Index(_)
            | ClsmError::Degenerate(_)
            | ClsmError::Io(_)
            | ClsmError::Csv(_)
            | ClsmError::CorruptCheckpoint(_)
            | ClsmError::Format(_) => EXIT_DATA,
            _ => EXIT_FAILURE,
        };
        CliError { code, error }
    }
}

/// Parses `start:end:step` (inclusive) or `a,b,c`.
pub fn parse_k_grid(text: &str) -> Result<Vec<usize>, ClsmError> {
    let bad = || ClsmError::Config(format!("invalid K grid {text:?}"));
    let grid: Vec<usize> = if text.contains(':') {
        let parts: Vec<usize> = text.split(':').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        match parts[..] {
            [start, end, step] if step > 0 && start <= end => (start..=end).step_by(step).collect(),
            _ => return Err(bad()),
        }
    } else {
        text.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if grid.is_empty() || grid.contains(&0) {
        return Err(bad());
    }
    Ok(grid)
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.error);
            ExitCode::from(e.code)
        }
    }
}

pub fn execute(cli: Cli) -> Result<u8, CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::usage(ClsmError::Config("--threads must be at least 1".into())));
        }
        // A pool that already exists (repeated calls in one process) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Fit(a) => fit_command(&a),
        Command::PredictLinks(a) => predict_links(&a),
        Command::PredictAttrs(a) => predict_attrs(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::BenchScaling(a) => bench_scaling(&a),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Output paths written by `simulate` for a prefix.
pub fn simulation_paths(prefix: &Path) -> [PathBuf; 3] {
    [
        with_suffix(prefix, ".edges.tsv"),
        with_suffix(prefix, ".behaviors.tsv"),
        with_suffix(prefix, ".truth.clsm"),
    ]
}

fn simulate(args: &SimulateArgs) -> Result<u8, CliError> {
    let mut config = io::load_sim_config(&args.config).map_err(CliError::usage)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let (graph, behaviors, truth) = generate_dataset(&config).map_err(|e| match e {
        ClsmError::Degenerate(_) => CliError::from(e),
        other => CliError::usage(other),
    })?;
    let [edges_path, behaviors_path, truth_path] = simulation_paths(&args.out_prefix);
    io::write_edge_list(&graph, &edges_path)?;
    io::write_behaviors(&behaviors, &behaviors_path)?;
    let model = FittedModel {
        theta_hat: truth.theta_true,
        beta_hat: truth.beta_true,
        omega_hat: truth.omega_true,
        hyper: config.hyper.clone(),
        elbo_trace: Vec::new(),
        iterations: 0,
    };
    io::save_checkpoint(&model, &truth_path)?;
    println!(
        "N={} |E|={} selections={}",
        graph.num_nodes(),
        graph.num_edges(),
        behaviors.total_selections()
    );
    for p in [edges_path, behaviors_path, truth_path] {
        println!("wrote {}", p.display());
    }
    Ok(EXIT_OK)
}

fn load_data(edges: &Path, behaviors: Option<&Path>, vocab_size: Option<usize>) -> Result<io::DatasetBundle, CliError> {
    Ok(io::load_dataset(edges, behaviors, vocab_size)?)
}

fn fit_command(args: &FitArgs) -> Result<u8, CliError> {
    let config = args.fit.resolve(CvConfig::DEFAULT_K_GRID[0])?;
    let data = load_data(&args.edges, args.behaviors.as_deref(), args.vocab_size)?;
    let (model, report, _) = fit(&data.graph, &data.behaviors, &config)?;
    io::save_checkpoint(&model, &args.out)?;
    let tail_start = report.elbo_trace.len().saturating_sub(5);
    for (i, value) in report.elbo_trace.iter().enumerate().skip(tail_start) {
        println!("sweep {i:>5}  bound {value:.6}");
    }
    let status = if report.converged { "converged" } else { "not converged" };
    println!(
        "{status} after {} sweeps ({:.3} s/sweep); wrote {}",
        report.iterations,
        report.wall_time_per_iteration,
        args.out.display()
    );
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn ranked(scores: &[f64], top: Option<usize>) -> Vec<(usize, f64)> {
    let mut order: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order.truncate(top.unwrap_or(order.len()));
    order
}

fn write_rankings(path: &Path, header: [&str; 4], rows: Vec<(usize, Vec<(usize, f64)>)>) -> Result<(), CliError> {
    let mut out = csv::Writer::from_path(path).map_err(ClsmError::from)?;
    out.write_record(header).map_err(ClsmError::from)?;
    for (query, list) in rows {
        for (rank, (id, score)) in list.into_iter().enumerate() {
            out.write_record([query.to_string(), id.to_string(), (rank + 1).to_string(), io::format_sig6(score)])
                .map_err(ClsmError::from)?;
        }
    }
    out.flush().map_err(ClsmError::from)?;
    Ok(())
}

fn predict_links(args: &PredictLinksArgs) -> Result<u8, CliError> {
    let model = io::load_checkpoint(&args.model)?;
    let queries = io::load_behaviors(&args.queries, Some(model.vocab_size()))?;
    let mut rows = Vec::new();
    for q in 0..queries.num_nodes() {
        if queries.selections(q).is_empty() {
            continue;
        }
        let theta = Array1::from(fold_in_theta_from_attributes(&model, queries.selections(q))?);
        let scores: Vec<f64> = (0..model.num_nodes())
            .map(|m| predict_link_prob(theta.view(), model.theta_hat.row(m), &model.beta_hat, model.hyper.epsilon))
            .collect();
        rows.push((q, ranked(&scores, args.top)));
    }
    write_rankings(&args.out_csv, ["query", "node", "rank", "score"], rows)?;
    println!("wrote {}", args.out_csv.display());
    Ok(EXIT_OK)
}

fn predict_attrs(args: &PredictAttrsArgs) -> Result<u8, CliError> {
    let model = io::load_checkpoint(&args.model)?;
    let links = read_query_links(&args.queries)?;
    let mut rows = Vec::new();
    for (q, neighbors) in links.into_iter().enumerate() {
        if neighbors.is_empty() {
            continue;
        }
        let theta = Array1::from(fold_in_theta_from_links(&model, None, &neighbors)?);
        let scores = predict_attribute_dist(theta.view(), &model.omega_hat);
        rows.push((q, ranked(&scores, args.top)));
    }
    write_rankings(&args.out_csv, ["query", "token", "rank", "score"], rows)?;
    println!("wrote {}", args.out_csv.display());
    Ok(EXIT_OK)
}

/// `query<TAB>node` lines; the same column layout as a behavior file.
fn read_query_links(path: &Path) -> Result<Vec<Vec<usize>>, CliError> {
    let listed = io::load_behaviors(path, None)?;
    Ok((0..listed.num_nodes())
        .map(|q| listed.selections(q).iter().map(|s| s.token).collect())
        .collect())
}

fn print_cv_summary(report: &CvReport, grid: &[usize]) {
    println!("{:>4}  {:>10}  {:>10}", "K", "mean AUC", "mean rank");
    for &k in grid {
        let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        println!("{k:>4}  {:>10}  {:>10}", show(report.mean("auc", k)), show(report.mean("avg_rank", k)));
    }
    if report.skipped_nodes > 0 {
        eprintln!("warning: {} test nodes had nothing to rank and were skipped", report.skipped_nodes);
    }
    if report.unconverged_fits > 0 {
        eprintln!("warning: {} fits stopped at the iteration limit", report.unconverged_fits);
    }
}

pub fn evaluate_config(args: &EvaluateArgs) -> Result<CvConfig, CliError> {
    let k_grid = parse_k_grid(&args.k_grid).map_err(CliError::usage)?;
    let fit_config = args.fit.resolve(k_grid[0])?;
    let config = CvConfig {
        seed: fit_config.seed,
        fit: fit_config,
        k_grid,
        folds: args.folds,
        repeats: args.repeats,
        dataset: args.dataset.clone(),
    };
    config.validate().map_err(CliError::usage)?;
    Ok(config)
}

fn evaluate(args: &EvaluateArgs) -> Result<u8, CliError> {
    let config = evaluate_config(args)?;
    if args.task == TaskArg::Attrs && args.behaviors.is_none() {
        return Err(CliError::usage(ClsmError::Config("--task attrs needs --behaviors".into())));
    }
    let data = load_data(&args.edges, args.behaviors.as_deref(), args.vocab_size)?;
    let report = match args.task {
        TaskArg::Links => run_link_prediction_cv(&data.graph, &data.behaviors, &config)?,
        TaskArg::Attrs => run_attribute_prediction_cv(&data.graph, &data.behaviors, &config)?,
    };
    io::write_metrics_csv(&report.rows, &args.out_csv)?;
    print_cv_summary(&report, &config.k_grid);
    println!("wrote {}", args.out_csv.display());
    Ok(EXIT_OK)
}

/// Per-sweep seconds of a fixed number of sweeps on one synthetic network
/// whose expected average degree is `avg_degree`.
pub fn time_sweeps(
    num_nodes: usize,
    avg_degree: f64,
    num_topics: usize,
    vocab_size: usize,
    selections_mean: f64,
    sweeps: usize,
    seed: u64,
) -> Result<f64, ClsmError> {
    // With α_k = 1/K, E[Σ_k θ_ak θ_bk] = 1/K, so a common β_k = d·K/(N−1)
    // yields expected degree d.
    let beta = (avg_degree * num_topics as f64 / (num_nodes as f64 - 1.0)).min(1.0);
    let hyper = Hyperparams::symmetric(num_topics, vocab_size, 1.0, (1.0, 1.0), 0.1, FitConfig::DEFAULT_EPSILON)?;
    let mut sim = SimConfig::new(num_nodes, hyper, selections_mean, seed);
    sim.beta = Some(vec![beta; num_topics]);
    let (graph, behaviors, _) = generate_dataset(&sim)?;
    let mut config = FitConfig::new(num_topics);
    config.max_iterations = sweeps;
    config.rel_tol = f64::MIN_POSITIVE;
    config.warmup_sweeps = 0;
    config.seed = seed;
    let (_, report, _) = fit(&graph, &behaviors, &config)?;
    Ok(report.wall_time_per_iteration)
}

fn bench_scaling(args: &BenchArgs) -> Result<u8, CliError> {
    if args.sizes.len() < 2 {
        return Err(CliError::usage(ClsmError::Config("--sizes needs at least two values".into())));
    }
    if args.sweeps == 0 {
        return Err(CliError::usage(ClsmError::Config("--sweeps must be at least 1".into())));
    }
    let mut rows = Vec::new();
    for &n in &args.sizes {
        let secs = time_sweeps(
            n,
            args.avg_degree,
            args.num_topics,
            args.vocab_size,
            args.selections_mean,
            args.sweeps,
            args.seed,
        )
        .map_err(CliError::usage)?;
        println!("N={n:<8} {secs:.6} s/sweep");
        rows.push((n, secs));
    }
    for pair in rows.windows(2) {
        println!("ratio {}->{}: {:.3}", pair[0].0, pair[1].0, pair[1].1 / pair[0].1);
    }
    io::write_scaling_csv(&rows, &args.out_csv)?;
    println!("wrote {}", args.out_csv.display());
    std::io::stdout().flush().map_err(ClsmError::from)?;
    Ok(EXIT_OK)
}
