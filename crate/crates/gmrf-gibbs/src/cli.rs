//! Experiment harness behind the `gmrf-gibbs` binary.
//!
//! Four subcommands: `simulate` writes the synthetic imaging dataset, `run`
//! executes one MCMC experiment and drops chain/report/metadata files into an
//! output directory, `color` colors a graph, and `diagnose` computes
//! ACF/IAT/ESS/CES (and PSRF across several chains) from chain CSV files.

use crate::diagnostics::{self, DiagnosticsError, EfficiencyReport};
use crate::graph::{greedy_color, ColorOrder, Coloring, GraphError, MarkovGraph, Neighborhood};
use crate::models::{
    self, matrix_csv, parse_matrix_csv, BinomialLogitModel, ChainOutput, GaussianImageModel,
    Model, ModelError, RunConfig, SamplerKind,
};
use crate::rng::RngStream;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Stream id reserved for data generation so chains (ids 0, 1, ...) never
/// share randomness with the data they fit.
pub const DATA_STREAM_ID: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    GaussianImage,
    BinomialLogit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    SingleSite,
    Chromatic,
    ChromaticParallel,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NeighborhoodArg {
    Rook4,
    King8,
}

impl From<NeighborhoodArg> for Neighborhood {
    fn from(v: NeighborhoodArg) -> Self {
        match v {
            NeighborhoodArg::Rook4 => Neighborhood::Rook4,
            NeighborhoodArg::King8 => Neighborhood::King8,
        }
    }
}

/// `natural`, `random:<seed>`, or `degree-desc`.
pub fn parse_color_order(s: &str) -> Result<ColorOrder, CliError> {
    if s == "natural" {
        return Ok(ColorOrder::Natural);
    }
    if s == "degree-desc" {
        return Ok(ColorOrder::DegreeDesc);
    }
    if let Some(seed) = s.strip_prefix("random:") {
        let seed: u64 = seed.parse().map_err(|_| {
            CliError::InvalidArgument(format!("bad random color-order seed '{seed}'"))
        })?;
        return Ok(ColorOrder::Random(seed));
    }
    Err(CliError::InvalidArgument(format!(
        "unknown color order '{s}' (expected natural, random:<seed>, degree-desc)"
    )))
}

#[derive(Parser, Debug)]
#[command(
    name = "gmrf-gibbs",
    about = "Benchmark single-site, chromatic, and block Gibbs updates of Gaussian Markov random fields",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the simulated imaging dataset (truth.csv, observed.csv).
    Simulate {
        /// Image side length; the image has p*p pixels.
        #[arg(long)]
        p: usize,
        /// Observation noise standard deviation.
        #[arg(long, default_value_t = 1.0)]
        noise_sd: f64,
        /// Master seed (data generation uses stream id 2^64-1).
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one MCMC experiment and write chain, field-mean, report, and
    /// metadata files.
    Run(Box<RunArgs>),
    /// Greedy-color a graph; writes node,color CSV and prints k.
    Color {
        /// Edge-list file (first line n, then `i j [w]` lines).
        #[arg(long, conflicts_with_all = ["rows", "cols"])]
        graph: Option<PathBuf>,
        /// Lattice rows (with --cols builds a lattice instead of --graph).
        #[arg(long, requires = "cols")]
        rows: Option<usize>,
        /// Lattice columns.
        #[arg(long, requires = "rows")]
        cols: Option<usize>,
        #[arg(long, value_enum, default_value_t = NeighborhoodArg::King8)]
        neighborhood: NeighborhoodArg,
        /// natural, random:<seed>, or degree-desc.
        #[arg(long, default_value = "natural")]
        order: String,
        /// Output directory for coloring.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Diagnostics over one or more chain CSV files.
    Diagnose {
        /// Chain CSV files (header iter,beta0,sigma2,tau2,seconds).
        #[arg(required = true)]
        chains: Vec<PathBuf>,
        /// Largest autocorrelation lag in the ACF table.
        #[arg(long, default_value_t = 50)]
        max_lag: usize,
        /// Optional directory for report.csv and acf.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    #[arg(long, value_enum)]
    sampler: SamplerArg,
    /// Lattice side; builds a p x p king-move lattice.
    #[arg(long)]
    p: Option<usize>,
    /// Edge-list graph file (binomial model, or image with --input).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Observation noise sd for generated image data.
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    #[arg(long, default_value_t = 8_000)]
    burnin: usize,
    /// Keep every thin-th retained field snapshot (0 = none).
    #[arg(long, default_value_t = 10)]
    thin: usize,
    /// Master seed. The chain draws from stream id --stream-id; each site's
    /// draw at iteration t comes from the substream keyed (t, node), so runs
    /// are reproducible for any worker count. Data generation uses stream id
    /// 2^64-1.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Chain stream id; give each parallel chain its own.
    #[arg(long, default_value_t = 0)]
    stream_id: u64,
    /// InvGam(alpha, alpha) hyperprior parameter (Gaussian model).
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    /// CAR propriety parameter (binomial model).
    #[arg(long, default_value_t = 0.995)]
    rho: f64,
    /// Worker threads for chromatic-parallel.
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Greedy coloring order: natural, random:<seed>, degree-desc.
    #[arg(long, default_value = "natural")]
    color_order: String,
    /// Observed image as a CSV/whitespace matrix (instead of generating).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Binomial data CSV `node,trials,successes` (instead of synthetic).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub sampler: SamplerKind,
    pub p: Option<usize>,
    pub graph_file: Option<PathBuf>,
    pub noise_sd: f64,
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub alpha: f64,
    pub rho: f64,
    pub color_order: ColorOrder,
    pub input: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub out: PathBuf,
}

impl TryFrom<&RunArgs> for ExperimentConfig {
    type Error = CliError;

    fn try_from(a: &RunArgs) -> Result<Self, CliError> {
        let sampler = match a.sampler {
            SamplerArg::SingleSite => SamplerKind::SingleSite,
            SamplerArg::Chromatic => SamplerKind::Chromatic,
            SamplerArg::ChromaticParallel => SamplerKind::ChromaticParallel { workers: a.workers },
            SamplerArg::Block => SamplerKind::Block,
        };
        Ok(ExperimentConfig {
            model: a.model,
            sampler,
            p: a.p,
            graph_file: a.graph.clone(),
            noise_sd: a.noise_sd,
            iterations: a.iterations,
            burnin: a.burnin,
            thin: a.thin,
            seed: a.seed,
            stream_id: a.stream_id,
            alpha: a.alpha,
            rho: a.rho,
            color_order: parse_color_order(&a.color_order)?,
            input: a.input.clone(),
            data: a.data.clone(),
            out: a.out.clone(),
        })
    }
}

/// Parse argv and dispatch. The binary is a one-liner over this.
pub fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            p,
            noise_sd,
            seed,
            out,
        } => {
            cmd_simulate(p, noise_sd, seed, &out)?;
            println!("wrote {}", out.join("truth.csv").display());
            println!("wrote {}", out.join("observed.csv").display());
            Ok(())
        }
        Command::Run(args) => {
            let cfg = ExperimentConfig::try_from(args.as_ref())?;
            let artifacts = cmd_run(&cfg)?;
            for f in &artifacts.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Color {
            graph,
            rows,
            cols,
            neighborhood,
            order,
            out,
        } => {
            let g = match (graph, rows, cols) {
                (Some(path), _, _) => MarkovGraph::read_edge_list(&path)?,
                (None, Some(r), Some(c)) => MarkovGraph::lattice(r, c, neighborhood.into())?,
                _ => {
                    return Err(CliError::InvalidArgument(
                        "give either --graph or --rows/--cols".to_string(),
                    ))
                }
            };
            let k = cmd_color(&g, parse_color_order(&order)?, &out)?;
            println!("{k}");
            Ok(())
        }
        Command::Diagnose {
            chains,
            max_lag,
            out,
        } => {
            let report = cmd_diagnose(&chains, max_lag, out.as_deref())?;
            print!("{}", report.render_table());
            Ok(())
        }
    }
}

/// Write `truth.csv` and `observed.csv` for the simulated imaging problem.
pub fn cmd_simulate(p: usize, noise_sd: f64, seed: u64, out: &Path) -> Result<(), CliError> {
    let mut stream = RngStream::new(seed, DATA_STREAM_ID);
    let (truth, y) = models::simulate_image(p, noise_sd, &mut stream)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("truth.csv"), matrix_csv(p, p, &truth))?;
    std::fs::write(out.join("observed.csv"), matrix_csv(p, p, &y))?;
    Ok(())
}

/// Greedy coloring of a graph: writes `coloring.csv`, returns k.
pub fn cmd_color(graph: &MarkovGraph, order: ColorOrder, out: &Path) -> Result<usize, CliError> {
    let coloring = greedy_color(graph, &order.permutation(graph))?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("coloring.csv"), coloring.to_csv_string())?;
    Ok(coloring.k)
}

/// Files produced by one `run` invocation.
#[derive(Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub output: ChainOutput,
}

/// `(successes, trials, observed)` triplet of per-node columns.
type BinomialColumns = (Vec<u64>, Vec<u64>, Vec<bool>);

fn load_binomial_data(path: &Path, n: usize) -> Result<BinomialColumns, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut successes = vec![0u64; n];
    let mut trials = vec![0u64; n];
    let mut observed = vec![false; n];
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let t = raw.trim();
        if t.is_empty() || (lineno == 0 && t.starts_with("node")) || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(CliError::Parse {
                line,
                msg: format!("expected 'node,trials,successes', got {} fields", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<u64, CliError> {
            s.parse().map_err(|_| CliError::Parse {
                line,
                msg: format!("bad integer '{s}'"),
            })
        };
        let node = parse(fields[0])? as usize;
        if node >= n {
            return Err(CliError::Parse {
                line,
                msg: format!("node {node} out of range for graph of size {n}"),
            });
        }
        trials[node] = parse(fields[1])?;
        successes[node] = parse(fields[2])?;
        observed[node] = true;
    }
    Ok((successes, trials, observed))
}

/// Execute one experiment: build the model, run the chain, write artifacts.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunArtifacts, CliError> {
    if cfg.burnin >= cfg.iterations {
        return Err(CliError::InvalidArgument(format!(
            "burnin {} must be below iterations {}",
            cfg.burnin, cfg.iterations
        )));
    }
    let mut extra_meta = String::new();
    // Lattice layout (rows, cols) when known, for grid-shaped outputs.
    let mut grid: Option<(usize, usize)> = None;

    let model = match cfg.model {
        ModelKind::GaussianImage => {
            let (y, graph) = match (&cfg.input, cfg.p) {
                (Some(path), _) => {
                    let (rows, cols, y) = parse_matrix_csv(&std::fs::read_to_string(path)?)?;
                    grid = Some((rows, cols));
                    extra_meta.push_str(&format!("input={}\n", path.display()));
                    (y, MarkovGraph::lattice(rows, cols, Neighborhood::King8)?)
                }
                (None, Some(p)) => {
                    let mut stream = RngStream::new(cfg.seed, DATA_STREAM_ID);
                    let (_, y) = models::simulate_image(p, cfg.noise_sd, &mut stream)?;
                    grid = Some((p, p));
                    extra_meta.push_str(&format!("generated=true\nnoise_sd={}\n", cfg.noise_sd));
                    (y, MarkovGraph::lattice(p, p, Neighborhood::King8)?)
                }
                (None, None) => {
                    return Err(CliError::InvalidArgument(
                        "gaussian-image needs --p or --input".to_string(),
                    ))
                }
            };
            Model::GaussianImage(GaussianImageModel::new(y, graph, cfg.alpha)?)
        }
        ModelKind::BinomialLogit => {
            let graph = match (&cfg.graph_file, cfg.p) {
                (Some(path), _) => MarkovGraph::read_edge_list(path)?,
                (None, Some(p)) => {
                    grid = Some((p, p));
                    MarkovGraph::lattice(p, p, Neighborhood::King8)?
                }
                (None, None) => {
                    return Err(CliError::InvalidArgument(
                        "binomial-logit needs --graph or --p".to_string(),
                    ))
                }
            };
            let n = graph.node_count();
            match &cfg.data {
                Some(path) => {
                    let (successes, trials, observed) = load_binomial_data(path, n)?;
                    extra_meta.push_str(&format!("data={}\n", path.display()));
                    Model::BinomialLogit(BinomialLogitModel::new(
                        successes, trials, observed, graph, cfg.rho,
                    )?)
                }
                None => {
                    // Synthetic substitute for the election data: field from
                    // the model's own CAR prior, moderate precinct sizes.
                    let (true_beta0, true_tau2) = (0.5, 0.25);
                    let mut stream = RngStream::new(cfg.seed, DATA_STREAM_ID);
                    let (model, _) = models::simulate_binomial_data(
                        &graph,
                        cfg.rho,
                        true_tau2,
                        true_beta0,
                        (150, 250),
                        &mut stream,
                    )?;
                    extra_meta.push_str(&format!(
                        "synthetic=true\ntrue_beta0={true_beta0}\ntrue_tau2={true_tau2}\n"
                    ));
                    Model::BinomialLogit(model)
                }
            }
        }
    };

    let coloring: Option<Coloring> = match cfg.sampler {
        SamplerKind::Chromatic | SamplerKind::ChromaticParallel { .. } => Some(greedy_color(
            model.graph(),
            &cfg.color_order.permutation(model.graph()),
        )?),
        _ => None,
    };

    let run_cfg = RunConfig {
        iterations: cfg.iterations,
        burnin: cfg.burnin,
        thin: cfg.thin,
        seed: cfg.seed,
        stream_id: cfg.stream_id,
    };
    let output = models::run_chain(&model, &cfg.sampler, coloring.as_ref(), &run_cfg)?;

    std::fs::create_dir_all(&cfg.out)?;
    let mut files = Vec::new();
    let write = |name: &str, contents: String| -> Result<PathBuf, CliError> {
        let path = cfg.out.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    };

    files.push(write("chain.csv", output.to_chain_csv())?);
    files.push(write("field_mean.csv", field_csv(grid, &output.field_mean))?);
    for (iter, snap) in &output.field_snapshots {
        files.push(write(&format!("field_{iter:06}.csv"), field_csv(grid, snap))?);
    }
    files.push(write("report.csv", efficiency_report_csv(&output))?);
    if let Some(c) = &coloring {
        files.push(write("coloring.csv", c.to_csv_string())?);
    }
    let mut meta = output.metadata_string();
    meta.push_str(&format!(
        "iterations={}\nburnin={}\nthin={}\nalpha={}\nrho={}\ncolor_order={:?}\n{}",
        cfg.iterations, cfg.burnin, cfg.thin, cfg.alpha, cfg.rho, cfg.color_order, extra_meta
    ));
    files.push(write("meta.txt", meta)?);
    Ok(RunArtifacts {
        out_dir: cfg.out.clone(),
        files,
        output,
    })
}

fn field_csv(grid: Option<(usize, usize)>, values: &[f64]) -> String {
    match grid {
        Some((rows, cols)) if rows * cols == values.len() => matrix_csv(rows, cols, values),
        _ => {
            let mut out = String::from("node,value\n");
            for (i, v) in values.iter().enumerate() {
                out.push_str(&format!("{i},{v}\n"));
            }
            out
        }
    }
}

fn report_line(label: &str, chain: &[f64], cpu_seconds: f64) -> String {
    match EfficiencyReport::from_chain(chain, cpu_seconds) {
        Ok(r) => format!(
            "{label},{},{},{},{}\n",
            r.cpu_seconds, r.ess, r.iat, r.ces
        ),
        Err(_) => format!("{label},{cpu_seconds},nan,nan,nan\n"),
    }
}

/// Efficiency table with the fixed columns `sampler,cpu_seconds,ess,iat,ces`.
/// The Gaussian model reports the tau^2 chain; the binomial model reports
/// beta0 and tau^2 rows.
pub fn efficiency_report_csv(output: &ChainOutput) -> String {
    let mut csv = String::from("sampler,cpu_seconds,ess,iat,ces\n");
    let t = output.total_seconds;
    if output.model == "binomial_logit" {
        csv.push_str(&report_line(
            &format!("beta0_{}", output.sampler),
            &output.beta0_chain(),
            t,
        ));
        csv.push_str(&report_line(
            &format!("tau2_{}", output.sampler),
            &output.tau2_chain(),
            t,
        ));
    } else {
        csv.push_str(&report_line(&output.sampler, &output.tau2_chain(), t));
    }
    csv
}

/// One chain file parsed into columns.
#[derive(Debug, Clone)]
pub struct ParsedChain {
    pub path: PathBuf,
    pub beta0: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub tau2: Vec<f64>,
    pub seconds: Vec<f64>,
}

impl ParsedChain {
    pub fn column(&self, name: &str) -> &[f64] {
        match name {
            "beta0" => &self.beta0,
            "sigma2" => &self.sigma2,
            "tau2" => &self.tau2,
            _ => &[],
        }
    }
}

/// Parse a chain CSV produced by `run` (header `iter,beta0,sigma2,tau2,seconds`).
pub fn parse_chain_csv(path: &Path) -> Result<ParsedChain, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut parsed = ParsedChain {
        path: path.to_path_buf(),
        beta0: Vec::new(),
        sigma2: Vec::new(),
        tau2: Vec::new(),
        seconds: Vec::new(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "iter,beta0,sigma2,tau2,seconds" => {}
        Some((_, header)) => {
            return Err(CliError::Parse {
                line: 1,
                msg: format!("unexpected header '{header}'"),
            })
        }
        None => {
            return Err(CliError::Parse {
                line: 1,
                msg: "empty chain file".to_string(),
            })
        }
    }
    for (lineno, raw) in lines {
        let line = lineno + 1;
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        let fields: Vec<&str> = t.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::Parse {
                line,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let num = |s: &str| -> Result<f64, CliError> {
            s.trim().parse().map_err(|_| CliError::Parse {
                line,
                msg: format!("bad number '{s}'"),
            })
        };
        parsed.beta0.push(num(fields[1])?);
        parsed.sigma2.push(num(fields[2])?);
        parsed.tau2.push(num(fields[3])?);
        parsed.seconds.push(num(fields[4])?);
    }
    if parsed.beta0.is_empty() {
        return Err(CliError::Parse {
            line: 1,
            msg: "chain file has no data rows".to_string(),
        });
    }
    Ok(parsed)
}

/// Per-parameter diagnostics across one or more chains.
#[derive(Debug, Clone)]
pub struct DiagnoseRow {
    pub parameter: String,
    pub chain: String,
    pub n: usize,
    pub iat: f64,
    pub ess: f64,
    pub ces: f64,
}

#[derive(Debug, Clone, Default)]
pub struct DiagnoseReport {
    pub rows: Vec<DiagnoseRow>,
    /// PSRF per parameter when at least two chains were given.
    pub psrf: Vec<(String, f64)>,
    pub skipped: Vec<String>,
}

impl DiagnoseReport {
    pub fn render_table(&self) -> String {
        let mut out = String::from("parameter,chain,n,iat,ess,ces\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.2},{:.6}\n",
                r.parameter, r.chain, r.n, r.iat, r.ess, r.ces
            ));
        }
        for (param, r) in &self.psrf {
            out.push_str(&format!("# psrf {param} = {r:.4}\n"));
        }
        for s in &self.skipped {
            out.push_str(&format!("# skipped {s}\n"));
        }
        out
    }
}

fn usable(column: &[f64]) -> bool {
    column.iter().all(|v| v.is_finite())
        && column.windows(2).any(|w| (w[0] - w[1]).abs() > 0.0)
}

/// Compute IAT/ESS/CES per parameter per chain, PSRF across chains, and an
/// ACF table; optionally written as `report.csv` and `acf.csv` under `out`.
pub fn cmd_diagnose(
    files: &[PathBuf],
    max_lag: usize,
    out: Option<&Path>,
) -> Result<DiagnoseReport, CliError> {
    if files.is_empty() {
        return Err(CliError::InvalidArgument(
            "need at least one chain file".to_string(),
        ));
    }
    let chains: Vec<ParsedChain> = files
        .iter()
        .map(|p| parse_chain_csv(p))
        .collect::<Result<_, _>>()?;

    let mut report = DiagnoseReport::default();
    let mut acf_table: Vec<(String, Vec<f64>)> = Vec::new();
    for param in ["beta0", "sigma2", "tau2"] {
        let mut per_chain: Vec<&[f64]> = Vec::new();
        for chain in &chains {
            let name = chain
                .path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let col = chain.column(param);
            if !usable(col) {
                report.skipped.push(format!("{param} in {name}"));
                continue;
            }
            per_chain.push(col);
            let total_seconds: f64 = chain.seconds.iter().sum();
            match EfficiencyReport::from_chain(col, total_seconds.max(f64::MIN_POSITIVE)) {
                Ok(r) => report.rows.push(DiagnoseRow {
                    parameter: param.to_string(),
                    chain: name.clone(),
                    n: r.n_retained,
                    iat: r.iat,
                    ess: r.ess,
                    ces: r.ces,
                }),
                Err(e) => report.skipped.push(format!("{param} in {name}: {e}")),
            }
            let lag = max_lag.min(col.len().saturating_sub(1));
            if lag >= 1 {
                if let Ok(rho) = diagnostics::acf(col, lag) {
                    acf_table.push((format!("{param}:{name}"), rho));
                }
            }
        }
        if per_chain.len() >= 2 {
            let min_len = per_chain.iter().map(|c| c.len()).min().unwrap_or(0);
            let trimmed: Vec<Vec<f64>> =
                per_chain.iter().map(|c| c[..min_len].to_vec()).collect();
            if let Ok(r) = diagnostics::gelman_rubin(&trimmed) {
                report.psrf.push((param.to_string(), r));
            }
        }
    }

    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), report.render_table())?;
        let mut acf_csv = String::from("lag");
        for (name, _) in &acf_table {
            acf_csv.push_str(&format!(",{name}"));
        }
        acf_csv.push('\n');
        let depth = acf_table.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        for lag in 0..depth {
            acf_csv.push_str(&lag.to_string());
            for (_, rho) in &acf_table {
                match rho.get(lag) {
                    Some(v) => acf_csv.push_str(&format!(",{v}")),
                    None => acf_csv.push(','),
                }
            }
            acf_csv.push('\n');
        }
        std::fs::write(dir.join("acf.csv"), acf_csv)?;
    }
    Ok(report)
}
