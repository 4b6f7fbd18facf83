//! The symbolic/numeric split of the sparse Cholesky factorization.
//!
//! Inside an MCMC loop the precision matrix changes values every iteration
//! while its sparsity stays fixed: analyze once, refactorize cheaply.
//!
//! ```bash
//! cargo run --release --example sparse_cholesky
//! ```

use gmrf_gibbs::gmrf::iar_structure;
use gmrf_gibbs::graph::{MarkovGraph, Neighborhood};
use gmrf_gibbs::sparse::{numeric_cholesky, symbolic_cholesky, Ordering, SparseMatrix};
use std::time::Instant;

fn posterior_precision(graph: &MarkovGraph, sigma2: f64, tau2: f64) -> SparseMatrix {
    // Qp = I/sigma^2 + (D - W)/tau^2, assembled as triplets for clarity.
    let q = iar_structure(graph);
    let n = graph.node_count();
    let mut triplets = Vec::new();
    for i in 0..n {
        let (cols, vals) = q.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let noise = if i == j { 1.0 / sigma2 } else { 0.0 };
            triplets.push((i, j, v / tau2 + noise));
        }
    }
    SparseMatrix::from_triplets(n, &triplets).unwrap()
}

fn main() {
    let graph = MarkovGraph::lattice(64, 64, Neighborhood::King8).unwrap();
    let n = graph.node_count();
    let qp = posterior_precision(&graph, 1.0, 1.0);
    println!("precision: n = {n}, nnz = {}", qp.nnz());

    // Symbolic analysis once, under reverse Cuthill-McKee.
    let t0 = Instant::now();
    let sym = symbolic_cholesky(&qp, Ordering::Rcm).unwrap();
    println!(
        "symbolic (RCM): nnz(L) = {} in {:.1} ms",
        sym.factor_nnz(),
        t0.elapsed().as_secs_f64() * 1e3
    );
    let natural = symbolic_cholesky(&qp, Ordering::Natural).unwrap();
    println!("symbolic (natural order): nnz(L) = {}", natural.factor_nnz());

    // Numeric factorizations against that pattern as the values change.
    let t1 = Instant::now();
    let mut factor = numeric_cholesky(&sym, &qp).unwrap();
    println!("first numeric factorization: {:.1} ms", t1.elapsed().as_secs_f64() * 1e3);

    let t2 = Instant::now();
    let sweeps = 20;
    for step in 0..sweeps {
        let tau2 = 0.5 + 0.1 * step as f64;
        let qp_step = posterior_precision(&graph, 1.0, tau2);
        factor.update(&qp_step).unwrap();
    }
    println!(
        "{sweeps} refactorizations reusing the pattern: {:.1} ms each",
        t2.elapsed().as_secs_f64() * 1e3 / sweeps as f64
    );

    // Solve Qp x = b and check the residual.
    let b: Vec<f64> = (0..n).map(|i| (i % 7) as f64 - 3.0).collect();
    factor.update(&qp).unwrap();
    let x = factor.solve(&b).unwrap();
    let back = qp.spmv(&x).unwrap();
    let resid = b
        .iter()
        .zip(&back)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0f64, f64::max);
    println!("solve residual max|Qp x - b| = {resid:.2e}");

    // MatrixMarket round trip for debugging interchange.
    let small = posterior_precision(
        &MarkovGraph::lattice(3, 3, Neighborhood::Rook4).unwrap(),
        1.0,
        1.0,
    );
    let text = small.to_matrix_market_string();
    let parsed = SparseMatrix::from_matrix_market_str(&text).unwrap();
    println!(
        "MatrixMarket round trip: {} -> {} nonzeros",
        small.nnz(),
        parsed.nnz()
    );
}
