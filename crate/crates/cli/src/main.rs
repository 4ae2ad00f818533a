use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphon_games::bayes::{estimate_epsilon_lq, write_epsilon_csv};
use graphon_games::equilibrium::{solve_network_lq_with, solve_operator_lq_with, EquilibriumReport, LqPayoff, Payoff};
use graphon_games::experiments::{
    distance_experiment, fit_scale, intervention_experiment, rate_fit, trial_seeds, write_distance_csv,
    write_distance_stats_csv, write_welfare_csv, DistanceConfig, GameKind, InterventionConfig, TypeSampling,
    CSV_SCHEMA_VERSION, DEFAULT_DELTA, DEFAULT_OPTIMAL_CAP, DEFAULT_RESOLUTION,
};
use graphon_games::interventions::{
    graphon_heuristic_on, homogeneous_on, network_heuristic_on, optimal_intervention, InterventionResult, Policy,
    WelfareSolver,
};
use graphon_games::sampling::{sample_types, simple_network, weighted_network, write_edge_list, NetworkBundle, TypeVector};
use graphon_games::spectral::{
    discretize, dominant_eigenfunction, top_k_eigen, write_eigenfunctions_csv, write_eigenvalues_csv,
};
use graphon_games::{GraphonError, GraphonSpec};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "graphon", version, about = "Graphon games: sampling, equilibria, interventions, experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample types, a weighted network and a 0-1 network from a graphon.
    Sample(Options),
    /// Leading eigenpairs of the discretized graphon operator.
    Eigen(Options),
    /// Equilibrium of an LQ game on a given or sampled network.
    SolveNetwork(Options),
    /// Equilibrium of an LQ graphon game.
    SolveGraphon(Options),
    /// Compare intervention policies on one network.
    Intervene(Options),
    /// Network-versus-graphon equilibrium distances over N.
    DistanceExp(Options),
    /// Welfare of intervention policies over N.
    WelfareExp(Options),
    /// Monte Carlo estimate of the Bayesian equilibrium epsilon.
    BneEpsilon(Options),
}

impl Command {
    fn parts(&self) -> (&'static str, &Options) {
        match self {
            Command::Sample(o) => ("sample", o),
            Command::Eigen(o) => ("eigen", o),
            Command::SolveNetwork(o) => ("solve-network", o),
            Command::SolveGraphon(o) => ("solve-graphon", o),
            Command::Intervene(o) => ("intervene", o),
            Command::DistanceExp(o) => ("distance-exp", o),
            Command::WelfareExp(o) => ("welfare-exp", o),
            Command::BneEpsilon(o) => ("bne-epsilon", o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Types {
    Random,
    Midpoints,
}

/// Flags shared by every subcommand. Each may also come from `--config`;
/// flags win.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Options {
    /// JSON file with any of these options (keys as spelled on the command line).
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// minmax, er, sbm, or a path to a JSON graphon description.
    #[arg(long)]
    graphon: Option<String>,
    /// Erdos-Renyi graphon with this edge probability.
    #[arg(long)]
    er: Option<f64>,
    /// Edge probability for `--graphon er`.
    #[arg(long)]
    p: Option<f64>,
    /// Within-community probability for `--graphon sbm`.
    #[arg(long = "g-in")]
    #[serde(rename = "g-in", alias = "g_in")]
    g_in: Option<f64>,
    /// Across-community probability for `--graphon sbm`.
    #[arg(long = "g-out")]
    #[serde(rename = "g-out", alias = "g_out")]
    g_out: Option<f64>,
    /// Community sizes for `--graphon sbm`, comma separated.
    #[arg(long, value_delimiter = ',')]
    w: Option<Vec<f64>>,
    /// Grid resolution.
    #[arg(long = "M")]
    #[serde(rename = "M")]
    m: Option<usize>,
    /// Number of eigenpairs.
    #[arg(long)]
    k: Option<usize>,
    /// Population size.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: Option<usize>,
    /// Population sizes, comma separated.
    #[arg(long = "Ns", value_delimiter = ',')]
    #[serde(rename = "Ns")]
    ns: Option<Vec<usize>>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Total intervention budget C.
    #[arg(long)]
    budget: Option<f64>,
    /// Budget per agent c, so that C = c N.
    #[arg(long = "c-per-agent")]
    #[serde(rename = "c-per-agent", alias = "c_per_agent")]
    c_per_agent: Option<f64>,
    /// Largest N for which the optimal intervention is computed.
    #[arg(long = "optimal-cap")]
    #[serde(rename = "optimal-cap", alias = "optimal_cap")]
    optimal_cap: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-iter")]
    #[serde(rename = "max-iter", alias = "max_iter")]
    max_iter: Option<usize>,
    /// JSON network `{"types": [...], "matrix": [[...]]}` instead of sampling.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Use the weighted network instead of the 0-1 network.
    #[arg(long)]
    weighted: bool,
    /// Agent types in distance experiments.
    #[arg(long, value_enum)]
    types: Option<Types>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
}

macro_rules! prefer_flags {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        Options {
            config: $flags.config.clone(),
            weighted: $flags.weighted || $file.weighted,
            $($field: $flags.$field.clone().or($file.$field),)*
        }
    };
}

enum CliError {
    Usage(String),
    Core(GraphonError),
}

impl From<GraphonError> for CliError {
    fn from(e: GraphonError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl Options {
    fn merged(&self) -> CliResult<Options> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let file: Options = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
        Ok(prefer_flags!(
            self, file, graphon, er, p, g_in, g_out, w, m, k, n, ns, alpha, beta, seed, trials, delta, budget,
            c_per_agent, optimal_cap, tol, max_iter, network, types, out, format, jobs
        ))
    }

    fn graphon_spec(&self) -> CliResult<GraphonSpec> {
        if let Some(p) = self.er {
            return Ok(GraphonSpec::erdos_renyi(p)?);
        }
        match self.graphon.as_deref().unwrap_or("minmax") {
            "minmax" => Ok(GraphonSpec::minmax()),
            "er" => {
                let p = self.p.ok_or_else(|| CliError::Usage("--graphon er needs --p".into()))?;
                Ok(GraphonSpec::erdos_renyi(p)?)
            }
            "sbm" => {
                let w = self.w.clone().unwrap_or_else(|| vec![0.75, 0.25]);
                Ok(GraphonSpec::planted_partition(
                    self.g_in.unwrap_or(0.8),
                    self.g_out.unwrap_or(0.1),
                    w,
                )?)
            }
            path => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("unknown graphon '{path}' ({e})")))?;
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad graphon file {path}: {e}")))
            }
        }
    }

    fn payoff(&self) -> CliResult<LqPayoff> {
        Ok(LqPayoff::new(self.alpha.unwrap_or(0.5), self.beta.unwrap_or(1.0))?)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn population(&self) -> usize {
        self.n.unwrap_or(100)
    }

    fn resolution(&self) -> usize {
        self.m.unwrap_or(DEFAULT_RESOLUTION)
    }

    fn population_sizes(&self) -> Vec<usize> {
        self.ns.clone().unwrap_or_else(|| vec![50, 100, 200, 400, 800])
    }

    fn tol(&self) -> f64 {
        self.tol.unwrap_or(graphon_games::equilibrium::EQ_TOL)
    }

    fn max_iter(&self) -> usize {
        self.max_iter.unwrap_or(graphon_games::equilibrium::EQ_MAX_ITER)
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Budget `C` for population `n`: `--budget` wins over `--c-per-agent`.
    fn budget_for(&self, n: usize) -> f64 {
        self.budget.unwrap_or_else(|| self.c_per_agent.unwrap_or(0.01) * n as f64)
    }
}

/// A network read from `--network` or sampled from the graphon with trial-0
/// seeds.
struct NetworkInput {
    matrix: DMatrix<f64>,
    types: Option<TypeVector>,
}

fn load_or_sample(opts: &Options, spec: &GraphonSpec) -> CliResult<NetworkInput> {
    if let Some(path) = &opts.network {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read network {}: {e}", path.display())))?;
        let bundle: NetworkBundle = serde_json::from_str(&text)?;
        return Ok(NetworkInput {
            matrix: bundle.to_matrix()?,
            types: bundle.type_vector()?,
        });
    }
    let n = opts.population();
    let (type_seed, link_seed) = trial_seeds(opts.seed(), n, 0);
    let types = sample_types(n, type_seed)?;
    let pw = weighted_network(spec, &types);
    let matrix = if opts.weighted { pw.p } else { simple_network(&pw, link_seed).a };
    Ok(NetworkInput {
        matrix,
        types: Some(types),
    })
}

struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    fn new(dir: PathBuf) -> CliResult<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Output { dir, written: Vec::new() })
    }

    fn file(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut f = self.file(name)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> graphon_games::Result<()>) -> CliResult<()> {
        let mut f = self.file(name)?;
        write(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    config: &'a Options,
    versions: Versions,
    outputs: &'a [String],
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "graphon-games")]
    library: &'static str,
    #[serde(rename = "graphon-cli")]
    cli: &'static str,
    csv_schema: u32,
}

fn write_report(out: &mut Output, format: Format, report: &EquilibriumReport) -> CliResult<()> {
    match format {
        Format::Csv => out.csv("equilibrium.csv", |f| report.write_profile_csv(f)),
        Format::Json => out.json("equilibrium.json", report),
    }
}

fn cmd_sample(opts: &Options, out: &mut Output) -> CliResult<()> {
    let spec = opts.graphon_spec()?;
    let n = opts.population();
    let (type_seed, link_seed) = trial_seeds(opts.seed(), n, 0);
    let types = sample_types(n, type_seed)?;
    let pw = weighted_network(&spec, &types);
    let ps = simple_network(&pw, link_seed);
    match opts.format() {
        Format::Csv => {
            out.csv("types.csv", |f| {
                writeln!(f, "index,type")?;
                for (i, t) in types.types().iter().enumerate() {
                    writeln!(f, "{i},{t:?}")?;
                }
                Ok(())
            })?;
            out.csv("weighted_edges.csv", |f| write_edge_list(&pw.p, f))?;
            out.csv("simple_edges.csv", |f| write_edge_list(&ps.a, f))?;
        }
        Format::Json => {
            out.json("weighted.json", &NetworkBundle::new(&types, &pw.p))?;
            out.json("simple.json", &NetworkBundle::new(&types, &ps.a))?;
        }
    }
    Ok(())
}

fn cmd_eigen(opts: &Options, out: &mut Output) -> CliResult<()> {
    let spec = opts.graphon_spec()?;
    let op = discretize(&spec, opts.resolution())?;
    let pairs = top_k_eigen(&op, opts.k.unwrap_or(3))?;
    match opts.format() {
        Format::Csv => {
            out.csv("eigenvalues.csv", |f| write_eigenvalues_csv(&pairs, f))?;
            out.csv("eigenfunctions.csv", |f| write_eigenfunctions_csv(&pairs, f))?;
        }
        Format::Json => out.json("eigen.json", &pairs)?,
    }
    Ok(())
}

fn cmd_solve_network(opts: &Options, out: &mut Output) -> CliResult<()> {
    let spec = opts.graphon_spec()?;
    let network = load_or_sample(opts, &spec)?;
    let report = solve_network_lq_with(&network.matrix, &opts.payoff()?, opts.tol(), opts.max_iter())?;
    write_report(out, opts.format(), &report)
}

fn cmd_solve_graphon(opts: &Options, out: &mut Output) -> CliResult<()> {
    let spec = opts.graphon_spec()?;
    let op = discretize(&spec, opts.resolution())?;
    let report = solve_operator_lq_with(&op, &opts.payoff()?, opts.tol(), opts.max_iter())?;
    write_report(out, opts.format(), &report)
}

fn cmd_intervene(opts: &Options, out: &mut Output) -> CliResult<()> {
    let spec = opts.graphon_spec()?;
    let network = load_or_sample(opts, &spec)?;
    let payoff = opts.payoff()?;
    let (alpha, beta) = (payoff.alpha, payoff.beta);
    let n = network.matrix.nrows();
    let c = opts.budget_for(n);
    let solver = WelfareSolver::new(&network.matrix, alpha)?;
    let mut results: Vec<InterventionResult> = vec![
        InterventionResult {
            welfare: solver.welfare(&vec![beta; n])?,
            beta_hat: vec![beta; n],
            budget_used: 0.0,
            policy: Policy::None,
        },
        homogeneous_on(&solver, beta, c)?,
        network_heuristic_on(&solver, &network.matrix, beta, c)?,
    ];
    if let Some(types) = &network.types {
        let (_, psi) = dominant_eigenfunction(&spec, opts.resolution())?;
        results.push(graphon_heuristic_on(&solver, &psi, types, beta, c)?);
    }
    if n <= opts.optimal_cap.unwrap_or(DEFAULT_OPTIMAL_CAP) {
        results.push(optimal_intervention(&network.matrix, alpha, beta, c)?);
    }
    match opts.format() {
        Format::Json => out.json("interventions.json", &results)?,
        Format::Csv => {
            let name = |p: Policy| serde_json::to_value(p).ok().and_then(|v| v.as_str().map(String::from));
            out.csv("welfare.csv", |f| {
                writeln!(f, "policy,welfare,budget_used")?;
                for r in &results {
                    writeln!(f, "{},{:?},{:?}", name(r.policy).unwrap_or_default(), r.welfare, r.budget_used)?;
                }
                Ok(())
            })?;
            out.csv("beta_hat.csv", |f| {
                let header: Vec<String> = results.iter().map(|r| name(r.policy).unwrap_or_default()).collect();
                writeln!(f, "index,{}", header.join(","))?;
                for i in 0..n {
                    let row: Vec<String> = results.iter().map(|r| format!("{:?}", r.beta_hat[i])).collect();
                    writeln!(f, "{i},{}", row.join(","))?;
                }
                Ok(())
            })?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FitSummary {
    kind: &'static str,
    slope: f64,
    intercept: f64,
    r2: f64,
    gamma: f64,
}

fn cmd_distance_exp(opts: &Options, out: &mut Output) -> CliResult<()> {
    let spec = opts.graphon_spec()?;
    let ns = opts.population_sizes();
    let max_n = ns.iter().copied().max().unwrap_or(0);
    let mut config = DistanceConfig::new(ns.clone(), opts.trials.unwrap_or(50), opts.seed());
    config.delta = opts.delta.unwrap_or(DEFAULT_DELTA);
    config.m = opts.m.unwrap_or(DEFAULT_RESOLUTION.max(2 * max_n));
    config.types = match opts.types.unwrap_or(Types::Random) {
        Types::Random => TypeSampling::Random,
        Types::Midpoints => TypeSampling::Midpoints,
    };
    let exp = distance_experiment(&spec, &Payoff::Lq(opts.payoff()?), &config)?;
    let mut fits = Vec::new();
    for (label, kind) in [("w", GameKind::Weighted), ("s", GameKind::Simple)] {
        let medians = exp.medians(kind);
        if ns.len() >= 2 && medians.iter().all(|m| *m > 0.0) {
            let fit = rate_fit(&ns, &medians, config.delta)?;
            fits.push(FitSummary {
                kind: label,
                slope: fit.slope,
                intercept: fit.intercept,
                r2: fit.r2,
                gamma: fit_scale(&ns, &medians, config.delta)?,
            });
        }
    }
    match opts.format() {
        Format::Csv => {
            out.csv("distances.csv", |f| write_distance_csv(&exp.rows, f))?;
            out.csv("distance_stats.csv", |f| write_distance_stats_csv(&exp.stats, f))?;
            out.csv("rate_fit.csv", |f| {
                writeln!(f, "kind,slope,intercept,r2,gamma")?;
                for fit in &fits {
                    writeln!(f, "{},{:?},{:?},{:?},{:?}", fit.kind, fit.slope, fit.intercept, fit.r2, fit.gamma)?;
                }
                Ok(())
            })?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Bundle<'a> {
                experiment: &'a graphon_games::experiments::DistanceExperiment,
                fits: &'a [FitSummary],
            }
            out.json("distance_experiment.json", &Bundle { experiment: &exp, fits: &fits })?;
        }
    }
    Ok(())
}

fn cmd_welfare_exp(opts: &Options, out: &mut Output) -> CliResult<()> {
    let spec = opts.graphon_spec()?;
    let payoff = opts.payoff()?;
    let mut config = InterventionConfig::new(
        opts.population_sizes(),
        opts.trials.unwrap_or(20),
        opts.c_per_agent.unwrap_or(0.01),
        opts.seed(),
    );
    config.optimal_cap = opts.optimal_cap.unwrap_or(DEFAULT_OPTIMAL_CAP);
    config.m = opts.resolution();
    let exp = intervention_experiment(&spec, payoff.alpha, payoff.beta, &config)?;
    match opts.format() {
        Format::Csv => {
            out.csv("welfare.csv", |f| write_welfare_csv(&exp.rows, f))?;
            out.json("welfare_stats.json", &exp.stats)?;
        }
        Format::Json => out.json("welfare_experiment.json", &exp)?,
    }
    Ok(())
}

fn cmd_bne_epsilon(opts: &Options, out: &mut Output) -> CliResult<()> {
    let spec = opts.graphon_spec()?;
    let estimates = estimate_epsilon_lq(
        &spec,
        &opts.payoff()?,
        opts.resolution(),
        &opts.population_sizes(),
        opts.trials.unwrap_or(1000),
        opts.seed(),
    )?;
    match opts.format() {
        Format::Csv => out.csv("epsilon.csv", |f| write_epsilon_csv(&estimates, f))?,
        Format::Json => out.json("epsilon.json", &estimates)?,
    }
    Ok(())
}

fn configure_pool(jobs: Option<usize>) -> CliResult<()> {
    if let Some(jobs) = jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let (name, raw) = cli.command.parts();
    let opts = raw.merged()?;
    configure_pool(opts.jobs)?;
    let mut out = Output::new(opts.out_dir())?;
    match &cli.command {
        Command::Sample(_) => cmd_sample(&opts, &mut out)?,
        Command::Eigen(_) => cmd_eigen(&opts, &mut out)?,
        Command::SolveNetwork(_) => cmd_solve_network(&opts, &mut out)?,
        Command::SolveGraphon(_) => cmd_solve_graphon(&opts, &mut out)?,
        Command::Intervene(_) => cmd_intervene(&opts, &mut out)?,
        Command::DistanceExp(_) => cmd_distance_exp(&opts, &mut out)?,
        Command::WelfareExp(_) => cmd_welfare_exp(&opts, &mut out)?,
        Command::BneEpsilon(_) => cmd_bne_epsilon(&opts, &mut out)?,
    }
    let outputs = out.written.clone();
    out.json(
        "manifest.json",
        &Manifest {
            command: name,
            seed: opts.seed(),
            config: &opts,
            versions: Versions {
                library: graphon_games::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
                csv_schema: CSV_SCHEMA_VERSION,
            },
            outputs: &outputs,
        },
    )?;
    Ok(out.dir)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(dir) => {
            eprintln!("wrote results to {}", display(&dir));
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}
