//! Polya-Gamma draws against their analytic moments.
//!
//! ```bash
//! cargo run --release --example polya_gamma
//! ```

use gmrf_gibbs::polyagamma::{draw_pg, pg_mean, pg_var, PgParams};
use gmrf_gibbs::rng::RngStream;

fn main() {
    let reps = 50_000;
    println!("          b      z   sample mean   E PG(b,z)   sample var   Var PG(b,z)");
    for (b, z) in [(1u64, 0.0), (1, 2.0), (5, 0.5), (20, 3.0), (200, 1.0)] {
        let mut s = RngStream::new(b + (z * 100.0) as u64, 0);
        let draws: Vec<f64> = (0..reps)
            .map(|_| draw_pg(&mut s, PgParams { b, z }).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / reps as f64;
        println!(
            "{:>11} {:>6.1}   {:>11.5} {:>11.5}  {:>11.5}  {:>12.5}{}",
            b,
            z,
            mean,
            pg_mean(b, z),
            var,
            pg_var(b, z),
            if b > 50 { "   (normal approx)" } else { "" }
        );
    }

    // The additivity that the b <= 50 path relies on: PG(b, z) is the sum of
    // b independent PG(1, z) draws.
    let mut s = RngStream::new(9, 0);
    let direct: f64 = (0..reps)
        .map(|_| draw_pg(&mut s, PgParams { b: 4, z: 1.0 }).unwrap())
        .sum::<f64>()
        / reps as f64;
    let summed: f64 = (0..reps)
        .map(|_| {
            (0..4)
                .map(|_| draw_pg(&mut s, PgParams { b: 1, z: 1.0 }).unwrap())
                .sum::<f64>()
        })
        .sum::<f64>()
        / reps as f64;
    println!("\nadditivity: mean PG(4,1) = {direct:.5}, mean of four PG(1,1) = {summed:.5}");
}
