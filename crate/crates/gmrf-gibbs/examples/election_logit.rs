//! Binomial voting data on an irregular lattice, fit with Polya-Gamma
//! augmentation and a proper CAR prior.
//!
//! ```bash
//! cargo run --release --example election_logit
//! ```

use gmrf_gibbs::graph::{greedy_color, ColorOrder, MarkovGraph, Neighborhood};
use gmrf_gibbs::models::{run_binomial, simulate_binomial_data, RunConfig, SamplerKind};
use gmrf_gibbs::rng::RngStream;

fn main() {
    // Irregular "precinct map": a king lattice with extra long-range edges.
    let base = MarkovGraph::lattice(12, 12, Neighborhood::King8).unwrap();
    let n = base.node_count();
    let mut edges = Vec::new();
    for i in 0..n {
        for &j in base.neighbors(i) {
            if i < j {
                edges.push((i, j));
            }
        }
    }
    let mut es = RngStream::new(11, 0);
    for _ in 0..80 {
        let i = (es.next_u64() % n as u64) as usize;
        let j = (es.next_u64() % n as u64) as usize;
        if i != j {
            edges.push((i.min(j), i.max(j)));
        }
    }
    let graph = MarkovGraph::from_edge_list(n, &edges).unwrap();
    let coloring = greedy_color(&graph, &ColorOrder::Natural.permutation(&graph)).unwrap();
    println!(
        "precinct graph: {} nodes, {} edges, greedy coloring k = {}",
        n,
        graph.edge_count(),
        coloring.k
    );

    // Synthetic turnout with known intercept.
    let (true_beta0, rho) = (0.5, 0.995);
    let mut data_stream = RngStream::new(12, u64::MAX);
    let (mut model, _) =
        simulate_binomial_data(&graph, rho, 0.01, true_beta0, (150, 250), &mut data_stream)
            .unwrap();
    // A few precincts failed to report.
    for &i in &[5usize, 40, 77] {
        model.observed[i] = false;
    }

    let cfg = RunConfig {
        iterations: 4_000,
        burnin: 1_500,
        thin: 0,
        seed: 13,
        stream_id: 0,
    };
    for kind in [SamplerKind::Chromatic, SamplerKind::Block] {
        let kernel_coloring = (kind == SamplerKind::Chromatic).then_some(&coloring);
        let out = run_binomial(&model, &kind, kernel_coloring, &cfg).unwrap();
        let b = out.beta0_chain();
        let mean = b.iter().sum::<f64>() / b.len() as f64;
        let mut sorted = b.clone();
        sorted.sort_by(|a, c| a.partial_cmp(c).unwrap());
        let (lo, hi) = (
            sorted[(sorted.len() as f64 * 0.025) as usize],
            sorted[(sorted.len() as f64 * 0.975) as usize],
        );
        println!(
            "{:10} beta0 posterior mean {:.3} [{:.3}, {:.3}]  (truth {true_beta0}), {:.2}s",
            out.sampler, mean, lo, hi, out.total_seconds
        );
        let avg_pi = out.field_mean.iter().sum::<f64>() / out.field_mean.len() as f64;
        println!("{:10} average posterior vote share {:.3}", "", avg_pi);
    }
}
