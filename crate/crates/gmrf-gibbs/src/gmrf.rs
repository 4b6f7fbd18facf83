//! GMRF precision structures and the three field-update kernels.
//!
//! A full conditional of the field is the pair `(Q_p, b)` with target
//! `N(Q_p^{-1} b, Q_p^{-1})`. The kernels leave that distribution invariant in
//! three different ways:
//!
//! * [`FieldState::single_site_sweep`] - sequential scalar updates from the
//!   local characteristics, no factorization;
//! * [`FieldState::chromatic_sweep`] - all sites of one color class drawn at
//!   once given the cut (the rest of the field), no factorization, optionally
//!   in parallel with bit-identical output;
//! * [`BlockSampler`] - one joint draw per iteration via one numeric Cholesky
//!   factorization and three triangular solves over a cached symbolic pattern.
//!
//! Per-site randomness is keyed by `(iteration, node)`, so chromatic updates
//! do not depend on how sites are scheduled within a color.

use crate::graph::{Coloring, MarkovGraph};
use crate::rng::{domains, RngStream};
use crate::sparse::{
    symbolic_cholesky, CholeskyFactor, Ordering, SparseError, SparseMatrix, SymbolicCholesky,
};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GmrfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Instrumentation counters carried through a sampling run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub symbolic_factorizations: u64,
    pub numeric_factorizations: u64,
    pub triangular_solves: u64,
    /// Bytes allocated for Cholesky factor storage (pattern + values).
    /// Stays zero for the sweep kernels.
    pub factor_bytes: u64,
}

fn graph_precision(graph: &MarkovGraph, off_scale: f64) -> SparseMatrix {
    let n = graph.node_count();
    let mut triplets = Vec::with_capacity(n + 2 * graph.edge_count());
    for i in 0..n {
        triplets.push((i, i, graph.weighted_degree(i)));
        for (&j, &w) in graph.neighbors(i).iter().zip(graph.weights_of(i)) {
            triplets.push((i, j, -off_scale * w));
        }
    }
    SparseMatrix::from_triplets(n, &triplets).expect("graph indices are in range")
}

/// Intrinsic autoregressive structure `D - W`: rows sum to zero, positive
/// semidefinite, rank `n - #components`.
pub fn iar_structure(graph: &MarkovGraph) -> SparseMatrix {
    graph_precision(graph, 1.0)
}

/// Proper CAR structure `D - rho W`. Validity of `rho` is established by
/// whether the downstream factorization succeeds.
pub fn proper_car_structure(graph: &MarkovGraph, rho: f64) -> SparseMatrix {
    graph_precision(graph, rho)
}

/// The pair `(Q_p, b)` defining the Gaussian full conditional
/// `N(Q_p^{-1} b, Q_p^{-1})`.
#[derive(Debug, Clone)]
pub struct GmrfConditional {
    pub qp: SparseMatrix,
    pub b: Vec<f64>,
}

impl GmrfConditional {
    pub fn dim(&self) -> usize {
        self.qp.dim()
    }
}

/// Builds `Q_p = diag(noise) + prior / prior_scale` with a pattern fixed at
/// construction (prior pattern plus the full diagonal), so repeated updates
/// inside an MCMC loop rewrite values only and the block sampler can reuse its
/// symbolic factorization.
#[derive(Debug)]
pub struct ConditionalBuilder {
    cond: GmrfConditional,
    diag_pos: Vec<usize>,
    prior_map: Vec<usize>,
}

impl ConditionalBuilder {
    pub fn new(prior: &SparseMatrix) -> Result<Self, GmrfError> {
        if !prior.is_structurally_symmetric() {
            return Err(GmrfError::InvalidArgument(
                "prior pattern must be structurally symmetric".to_string(),
            ));
        }
        let n = prior.dim();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut diag_pos = vec![0usize; n];
        let mut prior_map = vec![0usize; prior.nnz()];
        row_ptr.push(0);
        let mut t = 0usize; // running prior entry index
        for i in 0..n {
            let (cols, _) = prior.row(i);
            let mut wrote_diag = false;
            for &j in cols {
                if !wrote_diag && j >= i {
                    if j != i {
                        diag_pos[i] = col_idx.len();
                        col_idx.push(i);
                    }
                    wrote_diag = true;
                }
                if j == i {
                    diag_pos[i] = col_idx.len();
                }
                prior_map[t] = col_idx.len();
                col_idx.push(j);
                t += 1;
            }
            if !wrote_diag {
                diag_pos[i] = col_idx.len();
                col_idx.push(i);
            }
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        let qp = SparseMatrix::from_raw_csr(n, row_ptr, col_idx, values);
        Ok(ConditionalBuilder {
            cond: GmrfConditional { qp, b: vec![0.0; n] },
            diag_pos,
            prior_map,
        })
    }

    /// Rewrite values: `Q_p = diag(noise_diag) + prior / prior_scale`,
    /// `b = data`. The prior must be the matrix this builder was built from
    /// (same pattern).
    pub fn update(
        &mut self,
        prior: &SparseMatrix,
        prior_scale: f64,
        noise_diag: &[f64],
        data: &[f64],
    ) -> Result<&GmrfConditional, GmrfError> {
        let n = self.cond.dim();
        if prior.dim() != n || prior.nnz() != self.prior_map.len() {
            return Err(GmrfError::InvalidArgument(
                "prior does not match builder pattern".to_string(),
            ));
        }
        if noise_diag.len() != n || data.len() != n {
            return Err(GmrfError::InvalidArgument(
                "noise/data length mismatch".to_string(),
            ));
        }
        if !(prior_scale > 0.0) {
            return Err(GmrfError::InvalidArgument(format!(
                "prior scale must be positive, got {prior_scale}"
            )));
        }
        if let Some(bad) = noise_diag.iter().find(|v| **v < 0.0 || !v.is_finite()) {
            return Err(GmrfError::InvalidArgument(format!(
                "noise diagonal entries must be nonnegative, got {bad}"
            )));
        }
        let values = self.cond.qp.values_mut();
        for v in values.iter_mut() {
            *v = 0.0;
        }
        let inv_scale = 1.0 / prior_scale;
        let (pvals, map) = (prior.values(), &self.prior_map);
        for (t, &pos) in map.iter().enumerate() {
            values[pos] += pvals[t] * inv_scale;
        }
        for (i, &pos) in self.diag_pos.iter().enumerate() {
            values[pos] += noise_diag[i];
        }
        self.cond.b.copy_from_slice(data);
        Ok(&self.cond)
    }

    pub fn conditional(&self) -> &GmrfConditional {
        &self.cond
    }

    pub fn into_conditional(self) -> GmrfConditional {
        self.cond
    }
}

/// One-shot form of [`ConditionalBuilder`]: `Q_p = diag(noise_diag) +
/// prior / prior_scale`, `b = data_vec`.
pub fn posterior_conditional(
    prior: &SparseMatrix,
    prior_scale: f64,
    noise_diag: &[f64],
    data_vec: &[f64],
) -> Result<GmrfConditional, GmrfError> {
    let mut builder = ConditionalBuilder::new(prior)?;
    builder.update(prior, prior_scale, noise_diag, data_vec)?;
    Ok(builder.into_conditional())
}

/// Current field vector plus the per-site conditional variance cache and
/// instrumentation counters. Owned by exactly one chain.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub x: Vec<f64>,
    cond_var: Vec<f64>,
    scratch: Vec<f64>,
    pub counters: Counters,
}

/// Smallest per-worker chunk worth a thread spawn in the parallel chromatic
/// sweep.
const MIN_PARALLEL_CHUNK: usize = 32;

/// One site's conditional draw given the current field. The mean comes from
/// the site's precision row applied to the full field minus the self-term;
/// randomness is the site's `(iteration, node)` substream.
#[inline]
fn site_draw(
    cond: &GmrfConditional,
    x: &[f64],
    cond_var: &[f64],
    base: &RngStream,
    iteration: u64,
    i: usize,
) -> f64 {
    let (cols, vals) = cond.qp.row(i);
    let mut acc = 0.0;
    for (&j, &v) in cols.iter().zip(vals) {
        if j != i {
            acc += v * x[j];
        }
    }
    let mu = (cond.b[i] - acc) * cond_var[i];
    let mut stream = base.substream(domains::FIELD, iteration, i as u64);
    mu + cond_var[i].sqrt() * stream.normal01()
}

impl FieldState {
    pub fn zeros(n: usize) -> Self {
        FieldState {
            x: vec![0.0; n],
            cond_var: vec![0.0; n],
            scratch: vec![0.0; n],
            counters: Counters::default(),
        }
    }

    pub fn from_vec(x: Vec<f64>) -> Self {
        let n = x.len();
        FieldState {
            x,
            cond_var: vec![0.0; n],
            scratch: vec![0.0; n],
            counters: Counters::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Conditional variances are functions of the hyperparameters only, so
    /// they are refreshed once per sweep rather than per site.
    fn prepare(&mut self, cond: &GmrfConditional) -> Result<(), GmrfError> {
        let n = self.x.len();
        if cond.dim() != n || cond.b.len() != n {
            return Err(GmrfError::InvalidArgument(format!(
                "conditional dimension {} does not match field length {n}",
                cond.dim()
            )));
        }
        for i in 0..n {
            let d = cond.qp.get(i, i);
            if !(d > 0.0) {
                return Err(GmrfError::InvalidArgument(format!(
                    "nonpositive conditional precision {d} at site {i}"
                )));
            }
            self.cond_var[i] = 1.0 / d;
        }
        Ok(())
    }

    /// Sequential single-site Gibbs scan in index order; each draw sees the
    /// latest neighbor values. Performs zero factorizations.
    pub fn single_site_sweep(
        &mut self,
        cond: &GmrfConditional,
        base: &RngStream,
        iteration: u64,
    ) -> Result<(), GmrfError> {
        self.prepare(cond)?;
        for i in 0..self.x.len() {
            let v = site_draw(cond, &self.x, &self.cond_var, base, iteration, i);
            self.x[i] = v;
        }
        Ok(())
    }

    /// Chromatic Gibbs scan: color classes in ascending order; within a class
    /// all conditional moments come from the current cut, then every site is
    /// drawn independently and written back before the next color.
    ///
    /// `workers <= 1` runs sequentially. Any worker count produces bit-identical
    /// output because site draws depend only on `(iteration, node)`.
    pub fn chromatic_sweep(
        &mut self,
        cond: &GmrfConditional,
        coloring: &Coloring,
        base: &RngStream,
        iteration: u64,
        workers: usize,
    ) -> Result<(), GmrfError> {
        let n = self.x.len();
        if coloring.node_count() != n
            || coloring.classes.iter().map(|c| c.len()).sum::<usize>() != n
        {
            return Err(GmrfError::InvalidArgument(
                "coloring does not partition the field's sites".to_string(),
            ));
        }
        self.prepare(cond)?;
        if workers <= 1 {
            for class in &coloring.classes {
                // Proper coloring: no member's precision row touches another
                // member, so in-place writes cannot leak into this class's
                // conditional means.
                for &i in class {
                    let v = site_draw(cond, &self.x, &self.cond_var, base, iteration, i);
                    self.x[i] = v;
                }
            }
            return Ok(());
        }
        let FieldState {
            x,
            cond_var,
            scratch,
            ..
        } = self;
        for class in &coloring.classes {
            let m = class.len();
            // Per-site draws are identical whichever thread runs them, so
            // capping the worker count for small classes changes nothing but
            // the thread-spawn overhead.
            let class_workers = workers.min(m / MIN_PARALLEL_CHUNK).max(1);
            if class_workers <= 1 {
                for &i in class {
                    let v = site_draw(cond, x, cond_var, base, iteration, i);
                    x[i] = v;
                }
                continue;
            }
            let chunk = m.div_ceil(class_workers);
            {
                let x_read: &[f64] = x;
                let cv: &[f64] = cond_var;
                std::thread::scope(|scope| {
                    for (sites, out) in class.chunks(chunk).zip(scratch[..m].chunks_mut(chunk)) {
                        scope.spawn(move || {
                            for (slot, &i) in out.iter_mut().zip(sites) {
                                *slot = site_draw(cond, x_read, cv, base, iteration, i);
                            }
                        });
                    }
                });
            }
            for (&i, &v) in class.iter().zip(scratch.iter()) {
                x[i] = v;
            }
        }
        Ok(())
    }

    /// Joint update of the whole field through a [`BlockSampler`].
    pub fn block_update(
        &mut self,
        sampler: &mut BlockSampler,
        cond: &GmrfConditional,
        base: &RngStream,
        iteration: u64,
    ) -> Result<(), GmrfError> {
        let FieldState { x, counters, .. } = self;
        sampler.draw_into(cond, base, iteration, counters, x)
    }
}

/// Joint GMRF draw: one numeric Cholesky factorization and three triangular
/// solves per call, over a symbolic pattern analyzed once at construction.
#[derive(Debug)]
pub struct BlockSampler {
    factor: CholeskyFactor,
    mean_work: Vec<f64>,
    noise_work: Vec<f64>,
    factored: bool,
}

impl BlockSampler {
    /// Analyze the pattern of `Q_p` once. Records the symbolic factorization
    /// and the factor storage footprint in `counters`.
    pub fn new(
        pattern: &SparseMatrix,
        ordering: Ordering,
        counters: &mut Counters,
    ) -> Result<Self, GmrfError> {
        let sym = symbolic_cholesky(pattern, ordering)?;
        counters.symbolic_factorizations += 1;
        counters.factor_bytes += sym.factor_bytes() as u64;
        let n = sym.dim();
        // Storage only; counted numeric factorizations happen in draw_into.
        let factor = CholeskyFactor::uninit(&sym);
        Ok(BlockSampler {
            factor,
            mean_work: vec![0.0; n],
            noise_work: vec![0.0; n],
            factored: false,
        })
    }

    pub fn symbolic(&self) -> &Arc<SymbolicCholesky> {
        self.factor.symbolic()
    }

    /// Draw `x ~ N(Q_p^{-1} b, Q_p^{-1})` into `out`.
    ///
    /// Steps: numeric factorization `P Q_p P' = L L'`; forward solve
    /// `L w = P b`; backward solve `L' m = w`; backward solve `L' v = z` with
    /// `z ~ N(0, I)`; return the unpermuted `m + v`.
    pub fn draw_into(
        &mut self,
        cond: &GmrfConditional,
        base: &RngStream,
        iteration: u64,
        counters: &mut Counters,
        out: &mut [f64],
    ) -> Result<(), GmrfError> {
        let n = self.factor.dim();
        if cond.dim() != n || out.len() != n {
            return Err(GmrfError::InvalidArgument(
                "conditional dimension does not match block sampler".to_string(),
            ));
        }
        self.factor.update(&cond.qp)?;
        self.factored = true;
        counters.numeric_factorizations += 1;
        let perm = self.factor.symbolic().perm();
        for k in 0..n {
            self.mean_work[k] = cond.b[perm[k]];
        }
        self.factor.solve_lower_in_place(&mut self.mean_work)?;
        counters.triangular_solves += 1;
        self.factor.solve_upper_in_place(&mut self.mean_work)?;
        counters.triangular_solves += 1;
        for k in 0..n {
            let mut stream = base.substream(domains::FIELD, iteration, k as u64);
            self.noise_work[k] = stream.normal01();
        }
        self.factor.solve_upper_in_place(&mut self.noise_work)?;
        counters.triangular_solves += 1;
        for k in 0..n {
            out[perm[k]] = self.mean_work[k] + self.noise_work[k];
        }
        Ok(())
    }
}

/// Dense mean and covariance of a conditional: solves `Q_p m = b` and inverts
/// `Q_p` by columns. Test/diagnostic oracle only; guarded to n <= 2000.
pub fn exact_moments_dense(
    cond: &GmrfConditional,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), GmrfError> {
    let n = cond.dim();
    if n > 2000 {
        return Err(GmrfError::InvalidArgument(format!(
            "dense moments guarded to n <= 2000, got {n}"
        )));
    }
    let a = cond.qp.to_dense();
    let l = dense_cholesky(&a).ok_or(SparseError::NotPositiveDefinite { pivot: 0 })?;
    let mean = dense_solve(&l, &cond.b);
    let mut cov = vec![vec![0.0; n]; n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = dense_solve(&l, &e);
        e[j] = 0.0;
        for i in 0..n {
            cov[i][j] = col[i];
        }
    }
    Ok((mean, cov))
}

fn dense_cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    let scale = a
        .iter()
        .enumerate()
        .fold(0.0f64, |m, (i, row)| m.max(row[i].abs()));
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d <= 1e-12 * scale {
            return None;
        }
        l[j][j] = d.sqrt();
        for i in (j + 1)..n {
            let mut v = a[i][j];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / l[j][j];
        }
    }
    Some(l)
}

fn dense_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[i][k] * y[k];
        }
        y[i] = acc / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= l[k][i] * x[k];
        }
        x[i] = acc / l[i][i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{greedy_color, ColorOrder, Neighborhood};
    use crate::sparse::numeric_cholesky;
    use approx::assert_abs_diff_eq;

    fn path(n: usize) -> MarkovGraph {
        MarkovGraph::lattice(1, n, Neighborhood::Rook4).unwrap()
    }

    /// Jacobi eigenvalue iteration for small symmetric matrices; rank oracle.
    fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
        let n = a.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        for _ in 0..100 {
            let mut off = 0.0;
            let (mut p, mut q) = (0, 1);
            for i in 0..n {
                for j in (i + 1)..n {
                    if m[i][j].abs() > off {
                        off = m[i][j].abs();
                        p = i;
                        q = j;
                    }
                }
            }
            if off < 1e-12 {
                break;
            }
            let theta = 0.5 * (m[q][q] - m[p][p]) / m[p][q];
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..n {
                let (mkp, mkq) = (m[k][p], m[k][q]);
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..n {
                let (mpk, mqk) = (m[p][k], m[q][k]);
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
        }
        (0..n).map(|i| m[i][i]).collect()
    }

    #[test]
    fn iar_path3_matrix() {
        let q = iar_structure(&path(3));
        let expected = [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(q.get(i, j), expected[i][j]);
            }
        }
        assert_eq!(q.spmv(&[1.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn iar_rank_is_n_minus_components() {
        let q = iar_structure(&path(3));
        let evs = symmetric_eigenvalues(&q.to_dense());
        let rank = evs.iter().filter(|e| e.abs() > 1e-9).count();
        assert_eq!(rank, 2);

        // Two disjoint paths: rank n - 2.
        let g = MarkovGraph::from_edge_list(6, &[(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        let q = iar_structure(&g);
        let evs = symmetric_eigenvalues(&q.to_dense());
        let rank = evs.iter().filter(|e| e.abs() > 1e-9).count();
        assert_eq!(rank, 4);
    }

    #[test]
    fn proper_car_examples() {
        let g = path(3);
        let d = proper_car_structure(&g, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { g.weighted_degree(i) } else { 0.0 };
                assert_eq!(d.get(i, j), expect);
            }
        }

        // rho = 0.995 keeps the path SPD.
        let q = proper_car_structure(&g, 0.995);
        let cond = GmrfConditional {
            qp: q,
            b: vec![0.0; 3],
        };
        assert!(exact_moments_dense(&cond).is_ok());

        // rho = 1 on a connected graph is the singular IAR.
        let q = proper_car_structure(&g, 1.0);
        let sym = symbolic_cholesky(&q, crate::sparse::Ordering::Natural).unwrap();
        assert!(matches!(
            numeric_cholesky(&sym, &q),
            Err(SparseError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn posterior_conditional_examples() {
        // No smoothing: prior 0, unit noise.
        let cond = posterior_conditional(
            &SparseMatrix::zeros(2),
            1.0,
            &[1.0, 1.0],
            &[3.0, -1.0],
        )
        .unwrap();
        let (mean, cov) = exact_moments_dense(&cond).unwrap();
        assert_eq!(mean, vec![3.0, -1.0]);
        assert_eq!(cov[0][0], 1.0);
        assert_eq!(cov[0][1], 0.0);

        // Symmetric zero data.
        let q = iar_structure(&path(3));
        let cond = posterior_conditional(&q, 1.0, &[1.0; 3], &[0.0; 3]).unwrap();
        let (mean, _) = exact_moments_dense(&cond).unwrap();
        assert_eq!(mean, vec![0.0; 3]);

        // (I + D - W) 1 = 1, so constant data is a fixed point.
        let cond = posterior_conditional(&q, 1.0, &[1.0; 3], &[1.0; 3]).unwrap();
        let (mean, _) = exact_moments_dense(&cond).unwrap();
        for m in mean {
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn posterior_conditional_rejects_bad_args() {
        let q = iar_structure(&path(3));
        assert!(posterior_conditional(&q, 0.0, &[1.0; 3], &[0.0; 3]).is_err());
        assert!(posterior_conditional(&q, 1.0, &[1.0, -1.0, 1.0], &[0.0; 3]).is_err());
        assert!(posterior_conditional(&q, 1.0, &[1.0; 2], &[0.0; 3]).is_err());
    }

    #[test]
    fn exact_moments_examples() {
        let cond = GmrfConditional {
            qp: SparseMatrix::identity(2),
            b: vec![1.0, 2.0],
        };
        let (mean, cov) = exact_moments_dense(&cond).unwrap();
        assert_eq!(mean, vec![1.0, 2.0]);
        assert_eq!(cov, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

        let cond = GmrfConditional {
            qp: SparseMatrix::from_diagonal(&[2.0, 4.0]),
            b: vec![2.0, 4.0],
        };
        let (mean, cov) = exact_moments_dense(&cond).unwrap();
        assert_abs_diff_eq!(mean[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mean[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cov[0][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(cov[1][1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn exact_moments_rejects_singular() {
        let cond = GmrfConditional {
            qp: iar_structure(&path(3)),
            b: vec![0.0; 3],
        };
        assert!(matches!(
            exact_moments_dense(&cond),
            Err(GmrfError::Sparse(SparseError::NotPositiveDefinite { .. }))
        ));
    }

    fn unit_conditional(graph: &MarkovGraph) -> GmrfConditional {
        // Q_p = I + (D - W), b = 0.
        let q = iar_structure(graph);
        posterior_conditional(&q, 1.0, &vec![1.0; graph.node_count()], &vec![0.0; graph.node_count()])
            .unwrap()
    }

    #[test]
    fn block_sampler_counter_contract() {
        let g = MarkovGraph::lattice(3, 3, Neighborhood::King8).unwrap();
        let cond = unit_conditional(&g);
        let mut field = FieldState::zeros(9);
        let mut sampler =
            BlockSampler::new(&cond.qp, Ordering::Rcm, &mut field.counters).unwrap();
        assert_eq!(field.counters.symbolic_factorizations, 1);
        assert!(field.counters.factor_bytes > 0);
        let base = RngStream::new(4, 0);
        for t in 0..7 {
            field.block_update(&mut sampler, &cond, &base, t).unwrap();
        }
        assert_eq!(field.counters.numeric_factorizations, 7);
        assert_eq!(field.counters.triangular_solves, 21);
        assert_eq!(field.counters.symbolic_factorizations, 1);
    }

    #[test]
    fn sweeps_never_factorize() {
        let g = MarkovGraph::lattice(2, 3, Neighborhood::Rook4).unwrap();
        let cond = unit_conditional(&g);
        let coloring = greedy_color(&g, &ColorOrder::Natural.permutation(&g)).unwrap();
        let base = RngStream::new(5, 0);
        let mut field = FieldState::zeros(6);
        for t in 0..50 {
            field.single_site_sweep(&cond, &base, t).unwrap();
            field
                .chromatic_sweep(&cond, &coloring, &base, t + 50, 1)
                .unwrap();
        }
        assert_eq!(field.counters, Counters::default());
    }

    #[test]
    fn block_identity_draws_are_standard_normal() {
        let n = 16;
        let cond = GmrfConditional {
            qp: SparseMatrix::identity(n),
            b: vec![0.0; n],
        };
        let mut counters = Counters::default();
        let mut sampler = BlockSampler::new(&cond.qp, Ordering::Natural, &mut counters).unwrap();
        let base = RngStream::new(8, 0);
        let reps = 20_000usize;
        let mut sums = vec![0.0; n];
        let mut sumsq = vec![0.0; n];
        let mut cross = 0.0;
        let mut out = vec![0.0; n];
        for t in 0..reps {
            sampler
                .draw_into(&cond, &base, t as u64, &mut counters, &mut out)
                .unwrap();
            for i in 0..n {
                sums[i] += out[i];
                sumsq[i] += out[i] * out[i];
            }
            cross += out[0] * out[1];
        }
        for i in 0..n {
            let mean = sums[i] / reps as f64;
            let var = sumsq[i] / reps as f64 - mean * mean;
            assert!(mean.abs() < 0.03, "mean {mean}");
            assert!((var - 1.0).abs() < 0.05, "var {var}");
        }
        assert!((cross / reps as f64).abs() < 0.03);
    }

    #[test]
    fn block_diagonal_case() {
        let n = 4;
        let cond = GmrfConditional {
            qp: SparseMatrix::from_diagonal(&[4.0; 4]),
            b: vec![8.0; 4],
        };
        let mut counters = Counters::default();
        let mut sampler = BlockSampler::new(&cond.qp, Ordering::Natural, &mut counters).unwrap();
        let base = RngStream::new(9, 0);
        let reps = 40_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut out = vec![0.0; n];
        for t in 0..reps {
            sampler
                .draw_into(&cond, &base, t as u64, &mut counters, &mut out)
                .unwrap();
            sum += out[2];
            sumsq += out[2] * out[2];
        }
        let mean = sum / reps as f64;
        let sd = (sumsq / reps as f64 - mean * mean).sqrt();
        assert!((mean - 2.0).abs() < 0.01, "mean {mean}");
        assert!((sd - 0.5).abs() < 0.01, "sd {sd}");
    }

    #[test]
    fn single_site_no_neighbor_case() {
        // One isolated node: conditional is N(y - beta0, sigma^2) exactly.
        let (y, beta0, sigma2) = (3.0, 1.0, 4.0);
        let cond = posterior_conditional(
            &SparseMatrix::zeros(1),
            2.5, // irrelevant with an empty prior
            &[1.0 / sigma2],
            &[(y - beta0) / sigma2],
        )
        .unwrap();
        let base = RngStream::new(10, 0);
        let mut field = FieldState::zeros(1);
        let reps = 40_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for t in 0..reps {
            field.single_site_sweep(&cond, &base, t).unwrap();
            sum += field.x[0];
            sumsq += field.x[0] * field.x[0];
        }
        let mean = sum / reps as f64;
        let var = sumsq / reps as f64 - mean * mean;
        assert!((mean - (y - beta0)).abs() < 0.04, "mean {mean}");
        assert!((var - sigma2).abs() < 0.1, "var {var}");
    }

    #[test]
    fn sweep_replay_is_deterministic() {
        let g = MarkovGraph::lattice(4, 4, Neighborhood::King8).unwrap();
        let cond = unit_conditional(&g);
        let base = RngStream::new(11, 3);
        let mut a = FieldState::zeros(16);
        let mut b = FieldState::zeros(16);
        for t in 0..5 {
            a.single_site_sweep(&cond, &base, t).unwrap();
            b.single_site_sweep(&cond, &base, t).unwrap();
        }
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn chromatic_with_n_colors_matches_single_site_bitwise() {
        // k = n: each site its own color class, scanned in index order.
        let g = MarkovGraph::lattice(3, 4, Neighborhood::King8).unwrap();
        let n = g.node_count();
        let cond = unit_conditional(&g);
        let coloring = Coloring {
            assignment: (1..=n).collect(),
            k: n,
            classes: (0..n).map(|i| vec![i]).collect(),
        };
        let base = RngStream::new(12, 0);
        let mut a = FieldState::zeros(n);
        let mut b = FieldState::zeros(n);
        for t in 0..10 {
            a.single_site_sweep(&cond, &base, t).unwrap();
            b.chromatic_sweep(&cond, &coloring, &base, t, 1).unwrap();
        }
        let bits_a: Vec<u64> = a.x.iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u64> = b.x.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn chromatic_invariant_to_within_color_order_and_workers() {
        // 32x32: color classes of 256 sites, large enough that the parallel
        // path genuinely spawns workers.
        let g = MarkovGraph::lattice(32, 32, Neighborhood::King8).unwrap();
        let n = g.node_count();
        let cond = unit_conditional(&g);
        let coloring = greedy_color(&g, &ColorOrder::Natural.permutation(&g)).unwrap();
        let mut shuffled = coloring.clone();
        for class in shuffled.classes.iter_mut() {
            class.reverse();
        }
        let base = RngStream::new(13, 0);
        let mut reference = FieldState::zeros(n);
        let mut permuted = FieldState::zeros(n);
        let mut parallel2 = FieldState::zeros(n);
        let mut parallel8 = FieldState::zeros(n);
        for t in 0..8 {
            reference.chromatic_sweep(&cond, &coloring, &base, t, 1).unwrap();
            permuted.chromatic_sweep(&cond, &shuffled, &base, t, 1).unwrap();
            parallel2.chromatic_sweep(&cond, &coloring, &base, t, 2).unwrap();
            parallel8.chromatic_sweep(&cond, &shuffled, &base, t, 8).unwrap();
        }
        let bits = |f: &FieldState| f.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&reference), bits(&permuted));
        assert_eq!(bits(&reference), bits(&parallel2));
        assert_eq!(bits(&reference), bits(&parallel8));
    }

    #[test]
    fn within_color_draws_are_conditionally_independent() {
        // Path of 4 with the 2-coloring {0,2},{1,3}: standardized residuals of
        // fresh same-color draws are uncorrelated.
        let g = path(4);
        let cond = unit_conditional(&g);
        let coloring = greedy_color(&g, &ColorOrder::Natural.permutation(&g)).unwrap();
        assert_eq!(coloring.k, 2);
        let base = RngStream::new(14, 0);
        let mut field = FieldState::zeros(4);
        let sweeps = 100_000u64;
        let (mut s00, mut s22, mut s02) = (0.0, 0.0, 0.0);
        for t in 0..sweeps {
            let before = field.x.clone();
            field.chromatic_sweep(&cond, &coloring, &base, t, 1).unwrap();
            // Class 1 = {0, 2} was drawn from the pre-sweep cut {1, 3}.
            let var0 = 1.0 / cond.qp.get(0, 0);
            let var2 = 1.0 / cond.qp.get(2, 2);
            let mu0 = (cond.b[0] - cond.qp.get(0, 1) * before[1]) * var0;
            let mu2 = (cond.b[2]
                - cond.qp.get(2, 1) * before[1]
                - cond.qp.get(2, 3) * before[3])
                * var2;
            let e0 = (field.x[0] - mu0) / var0.sqrt();
            let e2 = (field.x[2] - mu2) / var2.sqrt();
            s00 += e0 * e0;
            s22 += e2 * e2;
            s02 += e0 * e2;
        }
        let r = s02 / (s00 * s22).sqrt();
        assert!(r.abs() < 0.02, "within-color residual correlation {r}");
    }

    #[test]
    fn sweep_rejects_bad_coloring() {
        let g = path(3);
        let cond = unit_conditional(&g);
        let coloring = Coloring {
            assignment: vec![1, 2],
            k: 2,
            classes: vec![vec![0], vec![1]],
        };
        let base = RngStream::new(1, 0);
        let mut field = FieldState::zeros(3);
        assert!(field.chromatic_sweep(&cond, &coloring, &base, 0, 1).is_err());
    }

    #[test]
    fn builder_reuses_pattern_across_updates() {
        let g = MarkovGraph::lattice(4, 4, Neighborhood::King8).unwrap();
        let prior = iar_structure(&g);
        let n = g.node_count();
        let mut builder = ConditionalBuilder::new(&prior).unwrap();
        let mut counters = Counters::default();
        let first = builder.update(&prior, 1.0, &vec![1.0; n], &vec![0.0; n]).unwrap();
        let sampler = BlockSampler::new(&first.qp, Ordering::Rcm, &mut counters);
        assert!(sampler.is_ok());
        let mut sampler = sampler.unwrap();
        let base = RngStream::new(3, 0);
        let mut out = vec![0.0; n];
        // Changing hyperparameters changes values, not the pattern; a single
        // block sampler keeps serving draws.
        for (t, tau2) in [0.5, 1.0, 2.0, 4.0].iter().enumerate() {
            let cond = builder
                .update(&prior, *tau2, &vec![2.0; n], &vec![1.0; n])
                .unwrap();
            sampler
                .draw_into(cond, &base, t as u64, &mut counters, &mut out)
                .unwrap();
        }
        assert_eq!(counters.symbolic_factorizations, 1);
        assert_eq!(counters.numeric_factorizations, 4);
    }
}
