//! Full Gibbs samplers for the two benchmark models.
//!
//! * Gaussian image reconstruction: `y = 1 b0 + gamma + eps` with an intrinsic
//!   autoregressive prior on the spatial field and InvGam(alpha, alpha)
//!   hyperpriors on both variance components.
//! * Binomial logit on an irregular lattice: `Y_i ~ Bin(m_i, pi_i)` with
//!   `logit(pi_i) = b0 + gamma_i`, a proper CAR prior `N(0, tau^2 (D - rho W)^{-1})`,
//!   and Polya-Gamma augmentation so every conditional stays Gaussian or
//!   inverse-gamma.
//!
//! Either model's field can be updated by any of the three kernels; that
//! choice is the quantity under benchmark, so per-iteration time is recorded
//! split into field-update and everything-else buckets.

use crate::gmrf::{
    iar_structure, proper_car_structure, BlockSampler, ConditionalBuilder, Counters, FieldState,
    GmrfError,
};
use crate::graph::{greedy_color, validate_coloring, ColorOrder, Coloring, GraphError, MarkovGraph};
use crate::polyagamma::{draw_pg, PgError, PgParams};
use crate::rng::{domains, RngError, RngStream};
use crate::sparse::{Ordering, SparseError, SparseMatrix};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gmrf(#[from] GmrfError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Rng(#[from] RngError),
    #[error(transparent)]
    Pg(#[from] PgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which kernel updates the field inside the Gibbs scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    SingleSite,
    Chromatic,
    ChromaticParallel { workers: usize },
    Block,
}

impl SamplerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::SingleSite => "single_site",
            SamplerKind::Chromatic => "chromatic",
            SamplerKind::ChromaticParallel { .. } => "chromatic_parallel",
            SamplerKind::Block => "block",
        }
    }

    fn is_chromatic(&self) -> bool {
        matches!(
            self,
            SamplerKind::Chromatic | SamplerKind::ChromaticParallel { .. }
        )
    }
}

/// Chain length bookkeeping shared by both models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub iterations: usize,
    pub burnin: usize,
    /// Keep every `thin`-th retained field snapshot; 0 disables snapshots.
    pub thin: usize,
    pub seed: u64,
    pub stream_id: u64,
}

impl RunConfig {
    fn validate(&self) -> Result<(), ModelError> {
        if self.burnin >= self.iterations {
            return Err(ModelError::InvalidArgument(format!(
                "burnin {} must be below iterations {}",
                self.burnin, self.iterations
            )));
        }
        Ok(())
    }
}

/// Gaussian image reconstruction model.
#[derive(Debug, Clone)]
pub struct GaussianImageModel {
    pub y: Vec<f64>,
    pub graph: MarkovGraph,
    /// InvGam(alpha, alpha) hyperprior on both variance components.
    pub alpha: f64,
}

impl GaussianImageModel {
    pub fn new(y: Vec<f64>, graph: MarkovGraph, alpha: f64) -> Result<Self, ModelError> {
        if y.len() != graph.node_count() {
            return Err(ModelError::InvalidArgument(format!(
                "observation length {} does not match graph size {}",
                y.len(),
                graph.node_count()
            )));
        }
        if !(alpha > 0.0) {
            return Err(ModelError::InvalidArgument(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(GaussianImageModel { y, graph, alpha })
    }
}

/// Binomial logit model with spatial random effects.
#[derive(Debug, Clone)]
pub struct BinomialLogitModel {
    pub successes: Vec<u64>,
    pub trials: Vec<u64>,
    /// Sites with data; others get prior-only field updates.
    pub observed: Vec<bool>,
    pub graph: MarkovGraph,
    pub rho: f64,
    pub beta0_prior_var: f64,
    pub tau2_shape: f64,
    pub tau2_rate: f64,
}

impl BinomialLogitModel {
    /// Standard priors: `b0 ~ N(0, 1000)`, `tau^2 ~ InvGam(1, 1)`.
    pub fn new(
        successes: Vec<u64>,
        trials: Vec<u64>,
        observed: Vec<bool>,
        graph: MarkovGraph,
        rho: f64,
    ) -> Result<Self, ModelError> {
        let n = graph.node_count();
        if successes.len() != n || trials.len() != n || observed.len() != n {
            return Err(ModelError::InvalidArgument(
                "successes/trials/observed must all match the graph size".to_string(),
            ));
        }
        for i in 0..n {
            if observed[i] && successes[i] > trials[i] {
                return Err(ModelError::InvalidArgument(format!(
                    "successes exceed trials at site {i}: {} > {}",
                    successes[i], trials[i]
                )));
            }
        }
        if !rho.is_finite() {
            return Err(ModelError::InvalidArgument("rho must be finite".to_string()));
        }
        Ok(BinomialLogitModel {
            successes,
            trials,
            observed,
            graph,
            rho,
            beta0_prior_var: 1000.0,
            tau2_shape: 1.0,
            tau2_rate: 1.0,
        })
    }

    /// A site contributes likelihood terms only when observed with at least
    /// one trial.
    fn effectively_observed(&self, i: usize) -> bool {
        self.observed[i] && self.trials[i] >= 1
    }
}

/// Current parameter state of a chain.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub beta0: f64,
    /// Data-level noise variance; NaN for the binomial model.
    pub sigma2: f64,
    pub tau2: f64,
    pub field: FieldState,
    /// Polya-Gamma augmentation variables; empty for the Gaussian model.
    pub psi: Vec<f64>,
}

/// Per-iteration record retained after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub beta0: f64,
    pub sigma2: f64,
    pub tau2: f64,
    pub seconds: f64,
    pub field_seconds: f64,
}

/// Everything a finished chain hands back: retained scalar draws, thinned
/// field snapshots, the running posterior mean of the field-level estimand,
/// timings, and instrumentation counters.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub model: String,
    pub sampler: String,
    pub n: usize,
    pub records: Vec<IterationRecord>,
    /// Posterior mean of `b0 + gamma` (Gaussian) or of `pi` (binomial).
    pub field_mean: Vec<f64>,
    pub field_snapshots: Vec<(usize, Vec<f64>)>,
    pub counters: Counters,
    pub seed: u64,
    pub stream_id: u64,
    pub k_colors: Option<usize>,
    pub total_seconds: f64,
    pub field_seconds: f64,
    pub hyper_seconds: f64,
}

impl ChainOutput {
    pub fn beta0_chain(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.beta0).collect()
    }

    pub fn sigma2_chain(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sigma2).collect()
    }

    pub fn tau2_chain(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.tau2).collect()
    }

    /// Chain CSV with the fixed header `iter,beta0,sigma2,tau2,seconds`.
    pub fn to_chain_csv(&self) -> String {
        let mut out = String::from("iter,beta0,sigma2,tau2,seconds\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iter, r.beta0, r.sigma2, r.tau2, r.seconds
            ));
        }
        out
    }

    /// Run metadata as `key=value` lines; enough to reproduce the run.
    pub fn metadata_string(&self) -> String {
        let c = &self.counters;
        format!(
            "model={}\nsampler={}\nn={}\nseed={}\nstream_id={}\nretained={}\nk_colors={}\n\
             symbolic_factorizations={}\nnumeric_factorizations={}\ntriangular_solves={}\n\
             factor_bytes={}\ntotal_seconds={}\nfield_seconds={}\nhyper_seconds={}\n",
            self.model,
            self.sampler,
            self.n,
            self.seed,
            self.stream_id,
            self.records.len(),
            self.k_colors.map_or_else(|| "none".to_string(), |k| k.to_string()),
            c.symbolic_factorizations,
            c.numeric_factorizations,
            c.triangular_solves,
            c.factor_bytes,
            self.total_seconds,
            self.field_seconds,
            self.hyper_seconds,
        )
    }
}

/// Render a row-major vector as a `rows x cols` CSV grid.
pub fn matrix_csv(rows: usize, cols: usize, data: &[f64]) -> String {
    assert_eq!(data.len(), rows * cols);
    let mut out = String::new();
    for r in 0..rows {
        let row: Vec<String> = (0..cols).map(|c| data[r * cols + c].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parse a rectangular CSV/whitespace grid of numbers.
pub fn parse_matrix_csv(text: &str) -> Result<(usize, usize, Vec<f64>), ModelError> {
    let mut rows = 0usize;
    let mut cols = None;
    let mut data = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        match cols {
            None => cols = Some(fields.len()),
            Some(c) if c != fields.len() => {
                return Err(ModelError::InvalidArgument(format!(
                    "ragged matrix at line {}: {} fields, expected {c}",
                    lineno + 1,
                    fields.len()
                )))
            }
            _ => {}
        }
        for f in fields {
            data.push(f.parse::<f64>().map_err(|_| {
                ModelError::InvalidArgument(format!("bad number '{f}' at line {}", lineno + 1))
            })?);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| ModelError::InvalidArgument("empty matrix".to_string()))?;
    Ok((rows, cols, data))
}

/// Simulated imaging truth: a rescaled bivariate Gaussian bump
/// `5 exp(-||v||^2 / 2) / pi` over pixel centers evenly spaced in
/// `[-3, 3] x [-3, 3]`, plus iid observation noise.
pub fn simulate_image(
    p: usize,
    noise_sd: f64,
    stream: &mut RngStream,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    if p < 2 {
        return Err(ModelError::InvalidArgument(format!(
            "image side must be at least 2, got {p}"
        )));
    }
    if !(noise_sd >= 0.0) {
        return Err(ModelError::InvalidArgument(format!(
            "noise sd must be nonnegative, got {noise_sd}"
        )));
    }
    let coord = |k: usize| -3.0 + 6.0 * k as f64 / (p - 1) as f64;
    let mut truth = Vec::with_capacity(p * p);
    for i in 0..p {
        for j in 0..p {
            let (vi, vj) = (coord(i), coord(j));
            truth.push(5.0 * (-(vi * vi + vj * vj) / 2.0).exp() / std::f64::consts::PI);
        }
    }
    let y = truth
        .iter()
        .map(|t| t + noise_sd * stream.normal01())
        .collect();
    Ok((truth, y))
}

#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Synthetic data matching the binomial model's own generative process:
/// `gamma` from the proper CAR prior, then binomial counts per site.
pub fn simulate_binomial_data(
    graph: &MarkovGraph,
    rho: f64,
    tau2: f64,
    beta0: f64,
    trials_range: (u64, u64),
    stream: &mut RngStream,
) -> Result<(BinomialLogitModel, Vec<f64>), ModelError> {
    if !(tau2 > 0.0) {
        return Err(ModelError::InvalidArgument("tau2 must be positive".to_string()));
    }
    let n = graph.node_count();
    let prior = proper_car_structure(graph, rho);
    let cond = crate::gmrf::posterior_conditional(
        &prior,
        tau2,
        &vec![0.0; n],
        &vec![0.0; n],
    )?;
    let mut counters = Counters::default();
    let mut sampler = BlockSampler::new(&cond.qp, Ordering::Rcm, &mut counters)?;
    let mut gamma = vec![0.0; n];
    let base = stream.substream(domains::DATA, 1, 0);
    sampler.draw_into(&cond, &base, 0, &mut counters, &mut gamma)?;

    let (lo, hi) = trials_range;
    if lo < 1 || hi < lo {
        return Err(ModelError::InvalidArgument(
            "trials range must satisfy 1 <= lo <= hi".to_string(),
        ));
    }
    let mut trials = Vec::with_capacity(n);
    let mut successes = Vec::with_capacity(n);
    for i in 0..n {
        let m = lo + stream.next_u64() % (hi - lo + 1);
        let pi = logistic(beta0 + gamma[i]);
        let mut count = 0u64;
        for _ in 0..m {
            if stream.uniform() < pi {
                count += 1;
            }
        }
        trials.push(m);
        successes.push(count);
    }
    let model = BinomialLogitModel::new(successes, trials, vec![true; n], graph.clone(), rho)?;
    Ok((model, gamma))
}

enum Kernel {
    SingleSite,
    Chromatic { coloring: Coloring, workers: usize },
    Block(BlockSampler),
}

/// Wall-clock split of one Gibbs scan: the field update is the kernel under
/// benchmark, everything else is overhead.
#[derive(Debug, Clone, Copy)]
pub struct StepTiming {
    pub hyper_seconds: f64,
    pub field_seconds: f64,
}

fn build_kernel(
    kind: &SamplerKind,
    coloring: Option<&Coloring>,
    graph: &MarkovGraph,
    qp_pattern: &SparseMatrix,
    counters: &mut Counters,
) -> Result<(Kernel, Option<usize>), ModelError> {
    if coloring.is_some() && !kind.is_chromatic() {
        return Err(ModelError::InvalidArgument(
            "a coloring is only meaningful for the chromatic kernels".to_string(),
        ));
    }
    match kind {
        SamplerKind::SingleSite => Ok((Kernel::SingleSite, None)),
        SamplerKind::Block => {
            let sampler = BlockSampler::new(qp_pattern, Ordering::Rcm, counters)?;
            Ok((Kernel::Block(sampler), None))
        }
        SamplerKind::Chromatic | SamplerKind::ChromaticParallel { .. } => {
            let coloring = match coloring {
                Some(c) => {
                    if !validate_coloring(graph, c)? {
                        return Err(ModelError::InvalidArgument(
                            "supplied coloring is not proper for the model graph".to_string(),
                        ));
                    }
                    c.clone()
                }
                None => greedy_color(graph, &ColorOrder::Natural.permutation(graph))?,
            };
            let workers = match kind {
                SamplerKind::ChromaticParallel { workers } => {
                    if *workers == 0 {
                        return Err(ModelError::InvalidArgument(
                            "worker count must be positive".to_string(),
                        ));
                    }
                    *workers
                }
                _ => 1,
            };
            let k = coloring.k;
            Ok((Kernel::Chromatic { coloring, workers }, Some(k)))
        }
    }
}

impl Kernel {
    fn update_field(
        &mut self,
        field: &mut FieldState,
        cond: &crate::gmrf::GmrfConditional,
        base: &RngStream,
        iteration: u64,
    ) -> Result<(), GmrfError> {
        match self {
            Kernel::SingleSite => field.single_site_sweep(cond, base, iteration),
            Kernel::Chromatic { coloring, workers } => {
                field.chromatic_sweep(cond, coloring, base, iteration, *workers)
            }
            Kernel::Block(sampler) => field.block_update(sampler, cond, base, iteration),
        }
    }
}

/// Gibbs sampler for [`GaussianImageModel`]. Scan order: b0, sigma^2, tau^2,
/// then the field by the configured kernel.
pub struct GaussianGibbs<'a> {
    model: &'a GaussianImageModel,
    prior: SparseMatrix,
    builder: ConditionalBuilder,
    kernel: Kernel,
    pub state: ModelState,
    pub k_colors: Option<usize>,
    root: RngStream,
    hyper: RngStream,
    iteration: u64,
    noise_buf: Vec<f64>,
    data_buf: Vec<f64>,
}

impl<'a> GaussianGibbs<'a> {
    pub fn new(
        model: &'a GaussianImageModel,
        kind: &SamplerKind,
        coloring: Option<&Coloring>,
        seed: u64,
        stream_id: u64,
    ) -> Result<Self, ModelError> {
        let n = model.graph.node_count();
        let prior = iar_structure(&model.graph);
        let mut builder = ConditionalBuilder::new(&prior)?;
        let mut field = FieldState::zeros(n);
        let pattern = builder
            .update(&prior, 1.0, &vec![1.0; n], &vec![0.0; n])?
            .qp
            .clone();
        let (kernel, k_colors) =
            build_kernel(kind, coloring, &model.graph, &pattern, &mut field.counters)?;
        let beta0 = model.y.iter().sum::<f64>() / n as f64;
        let root = RngStream::new(seed, stream_id);
        Ok(GaussianGibbs {
            model,
            prior,
            builder,
            kernel,
            state: ModelState {
                beta0,
                sigma2: 1.0,
                tau2: 1.0,
                field,
                psi: Vec::new(),
            },
            k_colors,
            root,
            hyper: root,
            iteration: 0,
            noise_buf: vec![0.0; n],
            data_buf: vec![0.0; n],
        })
    }

    /// One full Gibbs scan: b0, sigma^2, tau^2, then the field.
    pub fn step(&mut self) -> Result<StepTiming, ModelError> {
        self.iteration += 1;
        let t = self.iteration;
        let n = self.model.y.len() as f64;
        let y = &self.model.y;
        let alpha = self.model.alpha;
        let state = &mut self.state;

        let hyper_start = Instant::now();
        // b0 | y, gamma, sigma^2 ~ N(1'(y - gamma)/n, sigma^2/n)
        let resid_sum: f64 = y
            .iter()
            .zip(&state.field.x)
            .map(|(yi, gi)| yi - gi)
            .sum();
        state.beta0 = self
            .hyper
            .draw_normal(resid_sum / n, (state.sigma2 / n).sqrt())?;

        // sigma^2 | ... ~ InvGam(alpha + n/2, alpha + ||y - b0 - gamma||^2 / 2)
        let ss: f64 = y
            .iter()
            .zip(&state.field.x)
            .map(|(yi, gi)| {
                let r = yi - state.beta0 - gi;
                r * r
            })
            .sum();
        state.sigma2 = self
            .hyper
            .draw_inverse_gamma(alpha + n / 2.0, alpha + ss / 2.0)?;

        // tau^2 | gamma ~ InvGam(alpha + (n-1)/2, alpha + gamma'(D - W)gamma / 2)
        let quad = self.prior.quad_form(&state.field.x)?.max(0.0);
        state.tau2 = self
            .hyper
            .draw_inverse_gamma(alpha + (n - 1.0) / 2.0, alpha + quad / 2.0)?;

        // gamma | ... ~ N(Qp^{-1} b, Qp^{-1}), Qp = I/sigma^2 + (D - W)/tau^2,
        // b = (y - b0)/sigma^2.
        let inv_sigma2 = 1.0 / state.sigma2;
        for i in 0..y.len() {
            self.noise_buf[i] = inv_sigma2;
            self.data_buf[i] = (y[i] - state.beta0) * inv_sigma2;
        }
        let cond = self
            .builder
            .update(&self.prior, state.tau2, &self.noise_buf, &self.data_buf)?;
        let hyper_seconds = hyper_start.elapsed().as_secs_f64();

        let field_start = Instant::now();
        self.kernel
            .update_field(&mut state.field, cond, &self.root, t)?;
        let field_seconds = field_start.elapsed().as_secs_f64();
        Ok(StepTiming {
            hyper_seconds,
            field_seconds,
        })
    }
}

/// Gibbs sampler for [`BinomialLogitModel`]. Scan order: psi (augmentation),
/// b0, the field, then tau^2.
pub struct BinomialGibbs<'a> {
    model: &'a BinomialLogitModel,
    prior: SparseMatrix,
    builder: ConditionalBuilder,
    kernel: Kernel,
    pub state: ModelState,
    pub k_colors: Option<usize>,
    kappa: Vec<f64>,
    root: RngStream,
    hyper: RngStream,
    iteration: u64,
    data_buf: Vec<f64>,
}

/// Gaussian conditional of the intercept under the augmented likelihood and a
/// `N(0, prior_var)` prior.
fn binomial_beta0_moments(
    kappa: &[f64],
    psi: &[f64],
    gamma: &[f64],
    prior_var: f64,
) -> (f64, f64) {
    let psi_sum: f64 = psi.iter().sum();
    let prec = 1.0 / prior_var + psi_sum;
    let num: f64 = kappa
        .iter()
        .zip(psi)
        .zip(gamma)
        .map(|((k, p), g)| k - p * g)
        .sum();
    (num / prec, (1.0 / prec).sqrt())
}

impl<'a> BinomialGibbs<'a> {
    pub fn new(
        model: &'a BinomialLogitModel,
        kind: &SamplerKind,
        coloring: Option<&Coloring>,
        seed: u64,
        stream_id: u64,
    ) -> Result<Self, ModelError> {
        let n = model.graph.node_count();
        let prior = proper_car_structure(&model.graph, model.rho);
        let mut builder = ConditionalBuilder::new(&prior)?;
        let mut field = FieldState::zeros(n);
        let pattern = builder
            .update(&prior, 1.0, &vec![1.0; n], &vec![0.0; n])?
            .qp
            .clone();
        let (kernel, k_colors) =
            build_kernel(kind, coloring, &model.graph, &pattern, &mut field.counters)?;

        // kappa_i = Y_i - m_i / 2 on contributing sites, zero elsewhere.
        let mut kappa = vec![0.0; n];
        let (mut tot_y, mut tot_m) = (0.0, 0.0);
        for i in 0..n {
            if model.effectively_observed(i) {
                kappa[i] = model.successes[i] as f64 - model.trials[i] as f64 / 2.0;
                tot_y += model.successes[i] as f64;
                tot_m += model.trials[i] as f64;
            }
        }
        let beta0 = if tot_m > 0.0 {
            let rate = ((tot_y + 0.5) / (tot_m + 1.0)).clamp(1e-6, 1.0 - 1e-6);
            (rate / (1.0 - rate)).ln().clamp(-3.0, 3.0)
        } else {
            0.0
        };
        let root = RngStream::new(seed, stream_id);
        Ok(BinomialGibbs {
            model,
            prior,
            builder,
            kernel,
            state: ModelState {
                beta0,
                sigma2: f64::NAN,
                tau2: 1.0,
                field,
                psi: vec![0.0; n],
            },
            k_colors,
            kappa,
            root,
            hyper: root,
            iteration: 0,
            data_buf: vec![0.0; n],
        })
    }

    /// One full Gibbs scan: psi, b0, the field, then tau^2.
    pub fn step(&mut self) -> Result<StepTiming, ModelError> {
        self.iteration += 1;
        let t = self.iteration;
        let n = self.model.graph.node_count();
        let state = &mut self.state;

        let hyper_start = Instant::now();
        // psi_i ~ PG(m_i, b0 + gamma_i) on contributing sites; per-site
        // streams keep the draw order immaterial.
        for i in 0..n {
            if self.model.effectively_observed(i) {
                let mut stream = self.root.substream(domains::PG, t, i as u64);
                state.psi[i] = draw_pg(
                    &mut stream,
                    PgParams {
                        b: self.model.trials[i],
                        z: state.beta0 + state.field.x[i],
                    },
                )?;
            } else {
                state.psi[i] = 0.0;
            }
        }

        // b0 from its Gaussian conditional.
        let (mean, sd) = binomial_beta0_moments(
            &self.kappa,
            &state.psi,
            &state.field.x,
            self.model.beta0_prior_var,
        );
        state.beta0 = self.hyper.draw_normal(mean, sd)?;

        // gamma | ... with Qp = D_psi + (D - rho W)/tau^2, b = kappa - psi b0.
        for i in 0..n {
            self.data_buf[i] = self.kappa[i] - state.psi[i] * state.beta0;
        }
        let cond = self
            .builder
            .update(&self.prior, state.tau2, &state.psi, &self.data_buf)?;
        let hyper_seconds = hyper_start.elapsed().as_secs_f64();

        let field_start = Instant::now();
        self.kernel
            .update_field(&mut state.field, cond, &self.root, t)?;
        let field_seconds = field_start.elapsed().as_secs_f64();

        // tau^2 ~ InvGam(shape + n/2, rate + gamma'(D - rho W)gamma / 2).
        let tail_start = Instant::now();
        let quad = self.prior.quad_form(&state.field.x)?.max(0.0);
        state.tau2 = self.hyper.draw_inverse_gamma(
            self.model.tau2_shape + n as f64 / 2.0,
            self.model.tau2_rate + quad / 2.0,
        )?;
        Ok(StepTiming {
            hyper_seconds: hyper_seconds + tail_start.elapsed().as_secs_f64(),
            field_seconds,
        })
    }
}

/// Either benchmark model, for harness-level dispatch.
#[derive(Debug, Clone)]
pub enum Model {
    GaussianImage(GaussianImageModel),
    BinomialLogit(BinomialLogitModel),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::GaussianImage(_) => "gaussian_image",
            Model::BinomialLogit(_) => "binomial_logit",
        }
    }

    pub fn graph(&self) -> &MarkovGraph {
        match self {
            Model::GaussianImage(m) => &m.graph,
            Model::BinomialLogit(m) => &m.graph,
        }
    }
}

struct ChainAccumulator {
    cfg: RunConfig,
    records: Vec<IterationRecord>,
    snapshots: Vec<(usize, Vec<f64>)>,
    mean_accum: Vec<f64>,
    retained: usize,
    field_seconds: f64,
    hyper_seconds: f64,
}

impl ChainAccumulator {
    fn new(cfg: RunConfig, n: usize) -> Self {
        ChainAccumulator {
            cfg,
            records: Vec::with_capacity(cfg.iterations - cfg.burnin),
            snapshots: Vec::new(),
            mean_accum: vec![0.0; n],
            retained: 0,
            field_seconds: 0.0,
            hyper_seconds: 0.0,
        }
    }

    fn push(
        &mut self,
        iter: usize,
        state: &ModelState,
        timing: &StepTiming,
        estimand: impl Fn(f64, f64) -> f64,
    ) {
        self.field_seconds += timing.field_seconds;
        self.hyper_seconds += timing.hyper_seconds;
        if iter <= self.cfg.burnin {
            return;
        }
        self.records.push(IterationRecord {
            iter,
            beta0: state.beta0,
            sigma2: state.sigma2,
            tau2: state.tau2,
            seconds: timing.hyper_seconds + timing.field_seconds,
            field_seconds: timing.field_seconds,
        });
        self.retained += 1;
        for (acc, &g) in self.mean_accum.iter_mut().zip(&state.field.x) {
            *acc += estimand(state.beta0, g);
        }
        if self.cfg.thin > 0 && self.retained.is_multiple_of(self.cfg.thin) {
            self.snapshots.push((iter, state.field.x.clone()));
        }
    }

    fn finish(
        mut self,
        model: &str,
        sampler: &str,
        n: usize,
        counters: Counters,
        k_colors: Option<usize>,
        total_seconds: f64,
    ) -> ChainOutput {
        for v in self.mean_accum.iter_mut() {
            *v /= self.retained.max(1) as f64;
        }
        ChainOutput {
            model: model.to_string(),
            sampler: sampler.to_string(),
            n,
            records: self.records,
            field_mean: self.mean_accum,
            field_snapshots: self.snapshots,
            counters,
            seed: self.cfg.seed,
            stream_id: self.cfg.stream_id,
            k_colors,
            total_seconds,
            field_seconds: self.field_seconds,
            hyper_seconds: self.hyper_seconds,
        }
    }
}

/// Run one Gaussian-model chain.
pub fn run_gaussian(
    model: &GaussianImageModel,
    kind: &SamplerKind,
    coloring: Option<&Coloring>,
    cfg: &RunConfig,
) -> Result<ChainOutput, ModelError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut gibbs = GaussianGibbs::new(model, kind, coloring, cfg.seed, cfg.stream_id)?;
    let mut acc = ChainAccumulator::new(*cfg, model.y.len());
    for iter in 1..=cfg.iterations {
        let timing = gibbs.step()?;
        acc.push(iter, &gibbs.state, &timing, |b0, g| b0 + g);
    }
    Ok(acc.finish(
        "gaussian_image",
        kind.name(),
        model.y.len(),
        gibbs.state.field.counters,
        gibbs.k_colors,
        start.elapsed().as_secs_f64(),
    ))
}

/// Run one binomial-model chain.
pub fn run_binomial(
    model: &BinomialLogitModel,
    kind: &SamplerKind,
    coloring: Option<&Coloring>,
    cfg: &RunConfig,
) -> Result<ChainOutput, ModelError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut gibbs = BinomialGibbs::new(model, kind, coloring, cfg.seed, cfg.stream_id)?;
    let n = model.graph.node_count();
    let mut acc = ChainAccumulator::new(*cfg, n);
    for iter in 1..=cfg.iterations {
        let timing = gibbs.step()?;
        acc.push(iter, &gibbs.state, &timing, |b0, g| logistic(b0 + g));
    }
    Ok(acc.finish(
        "binomial_logit",
        kind.name(),
        n,
        gibbs.state.field.counters,
        gibbs.k_colors,
        start.elapsed().as_secs_f64(),
    ))
}

/// Dispatch on the model enum.
pub fn run_chain(
    model: &Model,
    kind: &SamplerKind,
    coloring: Option<&Coloring>,
    cfg: &RunConfig,
) -> Result<ChainOutput, ModelError> {
    match model {
        Model::GaussianImage(m) => run_gaussian(m, kind, coloring, cfg),
        Model::BinomialLogit(m) => run_binomial(m, kind, coloring, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Neighborhood;

    fn small_model(p: usize, seed: u64) -> GaussianImageModel {
        let graph = MarkovGraph::lattice(p, p, Neighborhood::King8).unwrap();
        let mut s = RngStream::new(seed, 99);
        let (_, y) = simulate_image(p, 1.0, &mut s).unwrap();
        GaussianImageModel::new(y, graph, 0.001).unwrap()
    }

    fn cfg(iterations: usize, burnin: usize, seed: u64) -> RunConfig {
        RunConfig {
            iterations,
            burnin,
            thin: 0,
            seed,
            stream_id: 0,
        }
    }

    #[test]
    fn simulate_image_examples() {
        let mut s = RngStream::new(1, 0);
        let (truth, y) = simulate_image(5, 0.0, &mut s).unwrap();
        // Odd p: the center pixel sits exactly at the origin.
        assert!((truth[12] - 5.0 / std::f64::consts::PI).abs() < 1e-12);
        // Corner at (-3, -3).
        assert!((truth[0] - 5.0 * (-9.0f64).exp() / std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(truth, y);

        let (truth, y) = simulate_image(4, 2.0, &mut s).unwrap();
        assert!(truth.iter().zip(&y).any(|(t, yi)| t != yi));
        assert!(simulate_image(1, 1.0, &mut s).is_err());
    }

    #[test]
    fn retained_record_count() {
        let model = small_model(3, 2);
        let out = run_gaussian(&model, &SamplerKind::SingleSite, None, &cfg(10, 5, 3)).unwrap();
        assert_eq!(out.records.len(), 5);
        assert_eq!(out.records[0].iter, 6);
        assert!(run_gaussian(&model, &SamplerKind::SingleSite, None, &cfg(5, 5, 3)).is_err());
    }

    #[test]
    fn same_seed_reproduces_draws() {
        let model = small_model(4, 5);
        for kind in [
            SamplerKind::SingleSite,
            SamplerKind::Chromatic,
            SamplerKind::Block,
        ] {
            let a = run_gaussian(&model, &kind, None, &cfg(30, 10, 11)).unwrap();
            let b = run_gaussian(&model, &kind, None, &cfg(30, 10, 11)).unwrap();
            assert_eq!(a.beta0_chain(), b.beta0_chain());
            assert_eq!(a.tau2_chain(), b.tau2_chain());
            assert_eq!(a.field_mean, b.field_mean);
        }
    }

    #[test]
    fn parallel_chromatic_matches_sequential() {
        let model = small_model(5, 6);
        let seq = run_gaussian(&model, &SamplerKind::Chromatic, None, &cfg(25, 5, 7)).unwrap();
        for workers in [2usize, 3, 8] {
            let par = run_gaussian(
                &model,
                &SamplerKind::ChromaticParallel { workers },
                None,
                &cfg(25, 5, 7),
            )
            .unwrap();
            assert_eq!(seq.beta0_chain(), par.beta0_chain());
            assert_eq!(seq.sigma2_chain(), par.sigma2_chain());
            assert_eq!(seq.tau2_chain(), par.tau2_chain());
            assert_eq!(seq.field_mean, par.field_mean);
        }
    }

    #[test]
    fn counter_contracts_per_kind() {
        let model = small_model(4, 8);
        let iters = 12;
        let block = run_gaussian(&model, &SamplerKind::Block, None, &cfg(iters, 2, 9)).unwrap();
        assert_eq!(block.counters.numeric_factorizations, iters as u64);
        assert_eq!(block.counters.triangular_solves, 3 * iters as u64);
        assert_eq!(block.counters.symbolic_factorizations, 1);
        assert!(block.counters.factor_bytes > 0);

        for kind in [SamplerKind::SingleSite, SamplerKind::Chromatic] {
            let out = run_gaussian(&model, &kind, None, &cfg(iters, 2, 9)).unwrap();
            assert_eq!(out.counters.numeric_factorizations, 0);
            assert_eq!(out.counters.symbolic_factorizations, 0);
            assert_eq!(out.counters.factor_bytes, 0);
        }
    }

    #[test]
    fn chromatic_lattice_uses_four_colors() {
        let model = small_model(6, 10);
        let out = run_gaussian(&model, &SamplerKind::Chromatic, None, &cfg(5, 1, 1)).unwrap();
        assert_eq!(out.k_colors, Some(4));
    }

    #[test]
    fn coloring_without_chromatic_kernel_rejected() {
        let model = small_model(3, 11);
        let coloring =
            greedy_color(&model.graph, &ColorOrder::Natural.permutation(&model.graph)).unwrap();
        assert!(run_gaussian(&model, &SamplerKind::Block, Some(&coloring), &cfg(5, 1, 1)).is_err());
    }

    #[test]
    fn chain_csv_layout() {
        let model = small_model(3, 12);
        let out = run_gaussian(&model, &SamplerKind::SingleSite, None, &cfg(6, 3, 2)).unwrap();
        let csv = out.to_chain_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("iter,beta0,sigma2,tau2,seconds"));
        assert_eq!(lines.count(), 3);
        assert!(out.metadata_string().contains("sampler=single_site"));
    }

    #[test]
    fn matrix_csv_round_trip() {
        let data = vec![1.0, 2.5, -3.0, 0.125, 4.0, 5.0];
        let text = matrix_csv(2, 3, &data);
        let (r, c, back) = parse_matrix_csv(&text).unwrap();
        assert_eq!((r, c), (2, 3));
        assert_eq!(back, data);
        assert!(parse_matrix_csv("1,2\n3\n").is_err());
    }

    #[test]
    fn kappa_respects_bounds_and_missingness() {
        let graph = MarkovGraph::lattice(2, 3, Neighborhood::Rook4).unwrap();
        let successes = vec![3, 0, 9, 4, 0, 7];
        let trials = vec![10, 4, 9, 8, 0, 12];
        let observed = vec![true, true, true, false, true, true];
        let model =
            BinomialLogitModel::new(successes, trials, observed, graph, 0.9).unwrap();
        let gibbs = BinomialGibbs::new(&model, &SamplerKind::SingleSite, None, 1, 0).unwrap();
        for i in 0..6 {
            assert!(gibbs.kappa[i].abs() <= model.trials[i] as f64 / 2.0);
        }
        // Unobserved site 3 and zero-trial site 4 contribute nothing.
        assert_eq!(gibbs.kappa[3], 0.0);
        assert_eq!(gibbs.kappa[4], 0.0);
    }

    #[test]
    fn binomial_rejects_successes_over_trials() {
        let graph = MarkovGraph::lattice(1, 2, Neighborhood::Rook4).unwrap();
        assert!(
            BinomialLogitModel::new(vec![5, 0], vec![4, 4], vec![true, true], graph, 0.9).is_err()
        );
    }

    #[test]
    fn zero_trials_everywhere_runs_prior_only() {
        let graph = MarkovGraph::lattice(2, 2, Neighborhood::Rook4).unwrap();
        let model = BinomialLogitModel::new(
            vec![0; 4],
            vec![0; 4],
            vec![true; 4],
            graph,
            0.9,
        )
        .unwrap();
        let out = run_binomial(&model, &SamplerKind::SingleSite, None, &cfg(20, 5, 3)).unwrap();
        assert!(out.records.iter().all(|r| r.tau2.is_finite()));
        // psi never activated -> beta0 stays near its prior scale rather than NaN.
        assert!(out.beta0_chain().iter().all(|b| b.is_finite()));
    }

    #[test]
    fn unobserved_sites_keep_psi_zero() {
        let graph = MarkovGraph::lattice(2, 3, Neighborhood::Rook4).unwrap();
        let observed = vec![true, false, true, true, false, true];
        let (mut model, _) = {
            let mut s = RngStream::new(9, 0);
            simulate_binomial_data(&graph, 0.9, 0.5, 0.2, (20, 40), &mut s).unwrap()
        };
        model.observed = observed.clone();
        let mut gibbs = BinomialGibbs::new(&model, &SamplerKind::Chromatic, None, 4, 0).unwrap();
        for _ in 0..5 {
            gibbs.step().unwrap();
        }
        for (i, obs) in observed.iter().enumerate() {
            if !obs {
                assert_eq!(gibbs.state.psi[i], 0.0);
            } else {
                assert!(gibbs.state.psi[i] > 0.0);
            }
        }
    }

    #[test]
    fn balanced_votes_center_beta0_at_zero() {
        // kappa = 0 and gamma = 0 give a zero conditional mean by symmetry.
        let kappa = vec![0.0; 5];
        let psi = vec![2.0; 5];
        let gamma = vec![0.0; 5];
        let (mean, sd) = binomial_beta0_moments(&kappa, &psi, &gamma, 1000.0);
        assert_eq!(mean, 0.0);
        assert!(sd > 0.0 && sd < 1.0);
    }

    #[test]
    fn binomial_recovers_intercept_roughly() {
        let graph = MarkovGraph::lattice(6, 6, Neighborhood::Rook4).unwrap();
        let mut s = RngStream::new(21, 0);
        let (model, _) = simulate_binomial_data(&graph, 0.9, 0.1, 0.5, (150, 250), &mut s).unwrap();
        let out = run_binomial(&model, &SamplerKind::Chromatic, None, &cfg(600, 200, 22)).unwrap();
        let b = out.beta0_chain();
        let mean = b.iter().sum::<f64>() / b.len() as f64;
        assert!((mean - 0.5).abs() < 0.5, "posterior mean {mean}");
    }

    #[test]
    fn gaussian_conditional_identities() {
        // gamma = y - b0 zeroes the sigma^2 residual term; a constant field
        // zeroes the IAR quadratic form.
        let model = small_model(3, 30);
        let n = model.y.len();
        let beta0 = 0.7;
        let gamma: Vec<f64> = model.y.iter().map(|y| y - beta0).collect();
        let ss: f64 = model
            .y
            .iter()
            .zip(&gamma)
            .map(|(y, g)| {
                let r = y - beta0 - g;
                r * r
            })
            .sum();
        assert!(ss.abs() < 1e-18);
        let prior = iar_structure(&model.graph);
        let c = vec![3.25; n];
        assert!(prior.quad_form(&c).unwrap().abs() < 1e-9);
    }
}
