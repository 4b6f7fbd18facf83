//! ACF, IAT, ESS, CES, and the Gelman-Rubin factor on known chains.
//!
//! ```bash
//! cargo run --release --example chain_diagnostics
//! ```

use gmrf_gibbs::diagnostics::{acf, ces, ess, gelman_rubin, iat};
use gmrf_gibbs::rng::RngStream;

fn ar1(phi: f64, n: usize, seed: u64, shift: f64) -> Vec<f64> {
    let mut s = RngStream::new(seed, 0);
    let mut x = s.normal01() / (1.0 - phi * phi).sqrt();
    (0..n)
        .map(|_| {
            let out = x + shift;
            x = phi * x + s.normal01();
            out
        })
        .collect()
}

fn main() {
    let n = 100_000;
    for phi in [0.0, 0.5, 0.9] {
        let chain = ar1(phi, n, 42 + (phi * 10.0) as u64, 0.0);
        let rho = acf(&chain, 3).unwrap();
        let kappa = iat(&chain).unwrap();
        let theory = (1.0 + phi) / (1.0 - phi);
        println!(
            "AR(1) phi={phi}: acf(1) = {:.3}, IAT = {:.2} (theory {:.2}), ESS = {:.0}",
            rho[1],
            kappa,
            theory,
            ess(&chain).unwrap()
        );
    }

    // Cost per effective sample from (T, N, IAT) triples.
    println!(
        "CES(T=10.99s, N=2000, IAT=30.42) = {:.2}",
        ces(10.99, 2000, 30.42).unwrap()
    );
    println!(
        "CES(T=49.63s, N=2000, IAT=61.15) = {:.2}",
        ces(49.63, 2000, 61.15).unwrap()
    );

    // PSRF: agreeing chains vs one stuck far away.
    let good: Vec<Vec<f64>> = (0..3).map(|i| ar1(0.5, 10_000, 100 + i, 0.0)).collect();
    println!("PSRF, three agreeing chains: {:.3}", gelman_rubin(&good).unwrap());
    let mut bad = good;
    bad[2] = ar1(0.5, 10_000, 103, 8.0);
    println!("PSRF, one shifted chain:     {:.3}", gelman_rubin(&bad).unwrap());
}
