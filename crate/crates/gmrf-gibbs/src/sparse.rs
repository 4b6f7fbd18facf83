//! Sparse symmetric-positive-definite linear algebra.
//!
//! [`SparseMatrix`] is plain CSR holding both triangles of a symmetric matrix.
//! [`SymbolicCholesky`] analyzes a sparsity pattern once (fill-reducing
//! permutation, elimination tree, fill pattern of L); [`CholeskyFactor`] then
//! performs numeric factorizations against that fixed pattern, reusing all of
//! its storage across refactorizations. This is the split that makes repeated
//! block GMRF updates affordable: the symbolic work happens once per MCMC run,
//! the numeric work once per iteration.

use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },
    #[error("singular factor: zero diagonal at index {index}")]
    SingularFactor { index: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Square sparse matrix in compressed sparse row form. Column indices are
/// strictly increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Assemble from `(i, j, v)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, SparseError> {
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(SparseError::InvalidArgument(format!(
                    "entry ({i}, {j}) out of range for n = {n}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_count = vec![0usize; n];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_count[i] += 1;
                last = Some((i, j));
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + row_count[i];
        }
        Ok(SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Assemble directly from CSR parts already satisfying the invariants.
    pub(crate) fn from_raw_csr(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(row_ptr.len(), n + 1);
        debug_assert_eq!(row_ptr[n], col_idx.len());
        debug_assert_eq!(col_idx.len(), values.len());
        debug_assert!(row_ptr.windows(2).all(|w| w[0] <= w[1]));
        debug_assert!((0..n).all(|i| col_idx[row_ptr[i]..row_ptr[i + 1]].windows(2).all(|w| w[0] < w[1])));
        SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Matrix with the given diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    /// All-zero matrix (no stored entries).
    pub fn zeros(n: usize) -> Self {
        SparseMatrix {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sparse matrix-vector product `Ax`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        if x.len() != self.n {
            return Err(SparseError::InvalidArgument(format!(
                "dimension mismatch: matrix is {}x{}, vector has {}",
                self.n,
                self.n,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.n];
        self.spmv_into(x, &mut out);
        Ok(out)
    }

    #[inline]
    pub(crate) fn spmv_into(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            out[i] = acc;
        }
    }

    /// Quadratic form `x' A x`.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64, SparseError> {
        if x.len() != self.n {
            return Err(SparseError::InvalidArgument(
                "dimension mismatch in quadratic form".to_string(),
            ));
        }
        let mut acc = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut r = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                r += v * x[j];
            }
            acc += x[i] * r;
        }
        Ok(acc)
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        for i in 0..self.n {
            for &j in self.row(i).0 {
                let (cols, _) = self.row(j);
                if cols.binary_search(&i).is_err() {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[i][j] = v;
            }
        }
        d
    }

    /// MatrixMarket coordinate text (general symmetry, 1-based).
    pub fn to_matrix_market_string(&self) -> String {
        let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
        out.push_str(&format!("{} {} {}\n", self.n, self.n, self.nnz()));
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out.push_str(&format!("{} {} {:e}\n", i + 1, j + 1, v));
            }
        }
        out
    }

    pub fn from_matrix_market_str(text: &str) -> Result<Self, SparseError> {
        let mut symmetric = false;
        let mut dims: Option<(usize, usize, usize)> = None;
        let mut triplets = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let t = raw.trim();
            if t.is_empty() {
                continue;
            }
            if t.starts_with('%') {
                if lineno == 0 {
                    if !t.contains("matrix") || !t.contains("coordinate") {
                        return Err(SparseError::Parse {
                            line,
                            msg: "unsupported MatrixMarket header".to_string(),
                        });
                    }
                    symmetric = t.contains("symmetric");
                }
                continue;
            }
            let fields: Vec<&str> = t.split_whitespace().collect();
            if dims.is_none() {
                if fields.len() != 3 {
                    return Err(SparseError::Parse {
                        line,
                        msg: "expected 'rows cols nnz'".to_string(),
                    });
                }
                let parse = |s: &str| -> Result<usize, SparseError> {
                    s.parse().map_err(|_| SparseError::Parse {
                        line,
                        msg: format!("bad integer '{s}'"),
                    })
                };
                let (r, c, z) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if r != c {
                    return Err(SparseError::Parse {
                        line,
                        msg: "only square matrices supported".to_string(),
                    });
                }
                dims = Some((r, c, z));
                continue;
            }
            if fields.len() != 3 {
                return Err(SparseError::Parse {
                    line,
                    msg: "expected 'i j value'".to_string(),
                });
            }
            let i: usize = fields[0].parse().map_err(|_| SparseError::Parse {
                line,
                msg: format!("bad index '{}'", fields[0]),
            })?;
            let j: usize = fields[1].parse().map_err(|_| SparseError::Parse {
                line,
                msg: format!("bad index '{}'", fields[1]),
            })?;
            let v: f64 = fields[2].parse().map_err(|_| SparseError::Parse {
                line,
                msg: format!("bad value '{}'", fields[2]),
            })?;
            if i == 0 || j == 0 {
                return Err(SparseError::Parse {
                    line,
                    msg: "MatrixMarket indices are 1-based".to_string(),
                });
            }
            triplets.push((i - 1, j - 1, v));
            if symmetric && i != j {
                triplets.push((j - 1, i - 1, v));
            }
        }
        let (n, _, _) = dims.ok_or(SparseError::Parse {
            line: 0,
            msg: "missing size line".to_string(),
        })?;
        Self::from_triplets(n, &triplets)
    }

    pub fn write_matrix_market(&self, path: &std::path::Path) -> Result<(), SparseError> {
        std::fs::write(path, self.to_matrix_market_string())?;
        Ok(())
    }

    pub fn read_matrix_market(path: &std::path::Path) -> Result<Self, SparseError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_matrix_market_str(&text)
    }
}

/// Fill-reducing ordering for the factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    Natural,
    /// Reverse Cuthill-McKee; bounds bandwidth-driven fill on lattice graphs.
    #[default]
    Rcm,
}

/// Reverse Cuthill-McKee permutation of a structurally symmetric pattern.
/// Returns `perm` with `perm[new] = old`.
fn rcm_permutation(a: &SparseMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree = |i: usize| a.row(i).0.iter().filter(|&&j| j != i).count();
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut nbrs: Vec<usize> = Vec::new();

    // BFS from `start`, appending visited nodes to `out`; neighbors taken in
    // increasing-degree order. Returns the index where the last level begins.
    let bfs = |start: usize, seen: &mut Vec<bool>, out: &mut Vec<usize>, nbrs: &mut Vec<usize>| -> usize {
        let begin = out.len();
        seen[start] = true;
        out.push(start);
        let mut level_start = begin;
        let mut last_level_start = begin;
        while level_start < out.len() {
            let level_end = out.len();
            last_level_start = level_start;
            for qi in level_start..level_end {
                let v = out[qi];
                nbrs.clear();
                for &u in a.row(v).0 {
                    if u != v && !seen[u] {
                        seen[u] = true;
                        nbrs.push(u);
                    }
                }
                nbrs.sort_unstable_by_key(|&u| (degree(u), u));
                out.extend_from_slice(nbrs);
            }
            level_start = level_end;
        }
        last_level_start
    };

    while let Some(found) = (0..n)
        .filter(|&i| !visited[i])
        .min_by_key(|&i| (degree(i), i))
    {
        let mut start = found;
        // Pseudo-peripheral refinement: jump to a minimum-degree node of the
        // last BFS level while the eccentricity keeps growing.
        let mut scratch_seen = visited.clone();
        let mut scratch = Vec::new();
        let mut last = bfs(start, &mut scratch_seen, &mut scratch, &mut nbrs);
        let mut depth = scratch.len() - last;
        loop {
            let cand = *scratch[last..]
                .iter()
                .min_by_key(|&&u| (degree(u), u))
                .unwrap();
            if cand == start {
                break;
            }
            let mut seen2 = visited.clone();
            let mut out2 = Vec::new();
            let last2 = bfs(cand, &mut seen2, &mut out2, &mut nbrs);
            let depth2 = out2.len() - last2;
            if depth2 > depth {
                start = cand;
                scratch = out2;
                last = last2;
                depth = depth2;
            } else {
                start = cand;
                break;
            }
        }
        bfs(start, &mut visited, &mut order, &mut nbrs);
    }
    order.reverse();
    order
}

/// Symbolic Cholesky analysis: permutation, elimination tree, and the fill
/// pattern of L. Reusable across any number of numeric factorizations of
/// matrices with the same sparsity.
///
/// L is stored column-compressed; within a column the diagonal comes first and
/// row indices increase.
#[derive(Debug)]
pub struct SymbolicCholesky {
    n: usize,
    a_nnz: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    parent: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// Per-row ereach patterns in topological order (excludes the diagonal).
    rpat_ptr: Vec<usize>,
    rpat_idx: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl SymbolicCholesky {
    /// Analyze the pattern of a structurally symmetric matrix.
    pub fn new(pattern: &SparseMatrix, ordering: Ordering) -> Result<Self, SparseError> {
        if !pattern.is_structurally_symmetric() {
            return Err(SparseError::InvalidArgument(
                "pattern is structurally asymmetric".to_string(),
            ));
        }
        let n = pattern.dim();
        let perm = match ordering {
            Ordering::Natural => (0..n).collect::<Vec<_>>(),
            Ordering::Rcm => rcm_permutation(pattern),
        };
        let mut iperm = vec![0usize; n];
        for (k, &old) in perm.iter().enumerate() {
            iperm[old] = k;
        }

        // Elimination tree of P A P'.
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for &jold in pattern.row(perm[k]).0 {
                let mut j = iperm[jold];
                while j != NONE && j < k {
                    let next = ancestor[j];
                    ancestor[j] = k;
                    if next == NONE {
                        parent[j] = k;
                        break;
                    }
                    j = next;
                }
            }
        }

        // Row patterns via ereach, kept in topological order; column counts on
        // the way through.
        let mut colcount = vec![1usize; n]; // diagonal
        let mut rpat_ptr = Vec::with_capacity(n + 1);
        let mut rpat_idx = Vec::new();
        let mut mark = vec![NONE; n];
        let mut stack = vec![0usize; n];
        let mut path = vec![0usize; n];
        for k in 0..n {
            rpat_ptr.push(rpat_idx.len());
            mark[k] = k;
            // Stack grows downward from n. Each adjacent entry contributes its
            // unmarked elimination-tree path; prepending whole paths keeps the
            // final slice topological (descendants before ancestors).
            let mut top = n;
            for &jold in pattern.row(perm[k]).0 {
                let mut j = iperm[jold];
                if j >= k {
                    continue;
                }
                let mut len = 0;
                while mark[j] != k {
                    path[len] = j;
                    len += 1;
                    mark[j] = k;
                    j = parent[j];
                    debug_assert!(j != NONE);
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    stack[top] = path[len];
                }
            }
            rpat_idx.extend_from_slice(&stack[top..n]);
            for &i in &rpat_idx[rpat_ptr[k]..] {
                colcount[i] += 1;
            }
        }
        rpat_ptr.push(rpat_idx.len());

        let mut col_ptr = vec![0usize; n + 1];
        for i in 0..n {
            col_ptr[i + 1] = col_ptr[i] + colcount[i];
        }
        let nnz_l = col_ptr[n];
        let mut row_idx = vec![0usize; nnz_l];
        let mut next = vec![0usize; n];
        for i in 0..n {
            row_idx[col_ptr[i]] = i;
            next[i] = col_ptr[i] + 1;
        }
        for k in 0..n {
            for &i in &rpat_idx[rpat_ptr[k]..rpat_ptr[k + 1]] {
                row_idx[next[i]] = k;
                next[i] += 1;
            }
        }

        Ok(SymbolicCholesky {
            n,
            a_nnz: pattern.nnz(),
            perm,
            iperm,
            parent,
            col_ptr,
            row_idx,
            rpat_ptr,
            rpat_idx,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros in L, including the diagonal.
    pub fn factor_nnz(&self) -> usize {
        self.col_ptr[self.n]
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Bytes of factor-related storage implied by this analysis: the pattern
    /// arrays here plus the numeric values a factor will allocate.
    pub fn factor_bytes(&self) -> usize {
        use std::mem::size_of;
        let us = size_of::<usize>();
        (self.perm.len()
            + self.iperm.len()
            + self.parent.len()
            + self.col_ptr.len()
            + self.row_idx.len()
            + self.rpat_ptr.len()
            + self.rpat_idx.len())
            * us
            + self.factor_nnz() * size_of::<f64>()
    }
}

/// Numeric Cholesky factor `P A P' = L L'` over a fixed symbolic pattern.
///
/// `update` refactorizes in place: no allocation, values only.
#[derive(Debug)]
pub struct CholeskyFactor {
    sym: Arc<SymbolicCholesky>,
    values: Vec<f64>,
    work_x: Vec<f64>,
    work_fill: Vec<usize>,
}

/// Analyze a pattern. Free-function form of [`SymbolicCholesky::new`].
pub fn symbolic_cholesky(
    pattern: &SparseMatrix,
    ordering: Ordering,
) -> Result<Arc<SymbolicCholesky>, SparseError> {
    Ok(Arc::new(SymbolicCholesky::new(pattern, ordering)?))
}

/// Numeric factorization of `a` against an existing symbolic analysis.
pub fn numeric_cholesky(
    sym: &Arc<SymbolicCholesky>,
    a: &SparseMatrix,
) -> Result<CholeskyFactor, SparseError> {
    let mut f = CholeskyFactor::uninit(sym);
    f.update(a)?;
    Ok(f)
}

impl CholeskyFactor {
    /// Factor with storage sized for `sym` but no numeric values yet; call
    /// `update` before solving.
    pub(crate) fn uninit(sym: &Arc<SymbolicCholesky>) -> Self {
        CholeskyFactor {
            sym: Arc::clone(sym),
            values: vec![0.0; sym.factor_nnz()],
            work_x: vec![0.0; sym.dim()],
            work_fill: vec![0usize; sym.dim()],
        }
    }

    pub fn symbolic(&self) -> &Arc<SymbolicCholesky> {
        &self.sym
    }

    pub fn dim(&self) -> usize {
        self.sym.n
    }

    /// Refactorize in place. `a` must have exactly the sparsity pattern the
    /// symbolic analysis was built from.
    ///
    /// Up-looking over the elimination tree: row k of L solves
    /// `L[0:k,0:k] y = (PAP')[0:k,k]` with a sparse right-hand side whose
    /// pattern is the precomputed ereach of row k.
    pub fn update(&mut self, a: &SparseMatrix) -> Result<(), SparseError> {
        let s = &*self.sym;
        let n = s.n;
        if a.dim() != n || a.nnz() != s.a_nnz {
            return Err(SparseError::InvalidArgument(format!(
                "matrix does not match symbolic pattern (n {} vs {}, nnz {} vs {})",
                a.dim(),
                n,
                a.nnz(),
                s.a_nnz
            )));
        }
        let mut max_diag = 0.0f64;
        for i in 0..n {
            max_diag = max_diag.max(a.get(i, i).abs());
        }
        let tol = 1e-12 * max_diag;

        let x = &mut self.work_x;
        let fill = &mut self.work_fill;
        let vals = &mut self.values;
        for i in 0..n {
            fill[i] = s.col_ptr[i] + 1;
            x[i] = 0.0;
        }
        for k in 0..n {
            let (cols, avals) = a.row(s.perm[k]);
            let mut d = 0.0;
            for (&jold, &v) in cols.iter().zip(avals) {
                let j = s.iperm[jold];
                if j < k {
                    x[j] = v;
                } else if j == k {
                    d = v;
                }
            }
            for &i in &s.rpat_idx[s.rpat_ptr[k]..s.rpat_ptr[k + 1]] {
                let xi = x[i];
                x[i] = 0.0;
                let lki = xi / vals[s.col_ptr[i]];
                for p in (s.col_ptr[i] + 1)..fill[i] {
                    x[s.row_idx[p]] -= vals[p] * lki;
                }
                d -= lki * lki;
                debug_assert_eq!(s.row_idx[fill[i]], k);
                vals[fill[i]] = lki;
                fill[i] += 1;
            }
            if d <= tol || !d.is_finite() {
                // Leave a clean slate for a future update call.
                for v in x.iter_mut() {
                    *v = 0.0;
                }
                return Err(SparseError::NotPositiveDefinite { pivot: s.perm[k] });
            }
            vals[s.col_ptr[k]] = d.sqrt();
        }
        Ok(())
    }

    /// Forward substitution `L x = b` (permuted coordinates).
    pub fn solve_lower(&self, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_lower_in_place(&self, x: &mut [f64]) -> Result<(), SparseError> {
        let s = &*self.sym;
        if x.len() != s.n {
            return Err(SparseError::InvalidArgument(
                "dimension mismatch in solve".to_string(),
            ));
        }
        for j in 0..s.n {
            let d = self.values[s.col_ptr[j]];
            if d == 0.0 {
                return Err(SparseError::SingularFactor { index: j });
            }
            x[j] /= d;
            let xj = x[j];
            for p in (s.col_ptr[j] + 1)..s.col_ptr[j + 1] {
                x[s.row_idx[p]] -= self.values[p] * xj;
            }
        }
        Ok(())
    }

    /// Backward substitution `L' x = b` (permuted coordinates).
    pub fn solve_upper(&self, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut x = b.to_vec();
        self.solve_upper_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_upper_in_place(&self, x: &mut [f64]) -> Result<(), SparseError> {
        let s = &*self.sym;
        if x.len() != s.n {
            return Err(SparseError::InvalidArgument(
                "dimension mismatch in solve".to_string(),
            ));
        }
        for j in (0..s.n).rev() {
            let d = self.values[s.col_ptr[j]];
            if d == 0.0 {
                return Err(SparseError::SingularFactor { index: j });
            }
            let mut acc = x[j];
            for p in (s.col_ptr[j] + 1)..s.col_ptr[j + 1] {
                acc -= self.values[p] * x[s.row_idx[p]];
            }
            x[j] = acc / d;
        }
        Ok(())
    }

    /// Full solve `A x = b`, chaining the permutation with the two
    /// triangular solves.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        let s = &*self.sym;
        if b.len() != s.n {
            return Err(SparseError::InvalidArgument(
                "dimension mismatch in solve".to_string(),
            ));
        }
        let mut y: Vec<f64> = (0..s.n).map(|k| b[s.perm[k]]).collect();
        self.solve_lower_in_place(&mut y)?;
        self.solve_upper_in_place(&mut y)?;
        let mut x = vec![0.0; s.n];
        for k in 0..s.n {
            x[s.perm[k]] = y[k];
        }
        Ok(x)
    }

    /// L(i, j) in permuted coordinates; zero outside the pattern.
    pub fn l_entry(&self, i: usize, j: usize) -> f64 {
        let s = &*self.sym;
        if j > i {
            return 0.0;
        }
        let range = &s.row_idx[s.col_ptr[j]..s.col_ptr[j + 1]];
        match range.binary_search(&i) {
            Ok(p) => self.values[s.col_ptr[j] + p],
            Err(_) => 0.0,
        }
    }

    /// Max-abs reconstruction error `max |(PAP')_{ij} - (LL')_{ij}|` over the
    /// dense index set; intended for tests on small matrices.
    pub fn reconstruction_error(&self, a: &SparseMatrix) -> f64 {
        let s = &*self.sym;
        let n = s.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut ll = 0.0;
                for k in 0..=i.min(j) {
                    ll += self.l_entry(i, k) * self.l_entry(j, k);
                }
                let aij = a.get(s.perm[i], s.perm[j]);
                worst = worst.max((aij - ll).abs());
            }
        }
        worst
    }
}
