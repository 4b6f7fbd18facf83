//! Harness-level checks: artifact layout, file formats, parse errors, and
//! seed-for-seed reproducibility of the emitted CSVs.

use gmrf_gibbs::cli::{
    cmd_color, cmd_diagnose, cmd_run, cmd_simulate, parse_chain_csv, CliError, ExperimentConfig,
    ModelKind,
};
use gmrf_gibbs::graph::{ColorOrder, MarkovGraph, Neighborhood};
use gmrf_gibbs::models::SamplerKind;
use gmrf_gibbs::rng::RngStream;
use std::path::Path;

fn base_config(model: ModelKind, sampler: SamplerKind, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        model,
        sampler,
        p: Some(8),
        graph_file: None,
        noise_sd: 1.0,
        iterations: 120,
        burnin: 40,
        thin: 0,
        seed: 9,
        stream_id: 0,
        alpha: 0.001,
        rho: 0.995,
        color_order: ColorOrder::Natural,
        input: None,
        data: None,
        out: out.to_path_buf(),
    }
}

/// The chain CSV with the wall-clock column blanked, for bitwise comparison
/// of the draws alone.
fn draws_only(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn simulate_writes_square_matrices() {
    let dir = tempfile::tempdir().unwrap();
    cmd_simulate(10, 1.0, 3, dir.path()).unwrap();
    let truth = std::fs::read_to_string(dir.path().join("truth.csv")).unwrap();
    let observed = std::fs::read_to_string(dir.path().join("observed.csv")).unwrap();
    assert_eq!(truth.lines().count(), 10);
    assert_eq!(truth.lines().next().unwrap().split(',').count(), 10);
    assert_ne!(truth, observed);
}

#[test]
fn simulate_zero_noise_copies_truth() {
    let dir = tempfile::tempdir().unwrap();
    cmd_simulate(6, 0.0, 3, dir.path()).unwrap();
    let truth = std::fs::read_to_string(dir.path().join("truth.csv")).unwrap();
    let observed = std::fs::read_to_string(dir.path().join("observed.csv")).unwrap();
    assert_eq!(truth, observed);
}

#[test]
fn run_gaussian_writes_expected_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(ModelKind::GaussianImage, SamplerKind::Chromatic, dir.path());
    cfg.thin = 20;
    let artifacts = cmd_run(&cfg).unwrap();
    for name in ["chain.csv", "field_mean.csv", "report.csv", "coloring.csv", "meta.txt"] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    // thin = 20 over 80 retained -> 4 snapshots.
    assert_eq!(artifacts.output.field_snapshots.len(), 4);
    assert!(dir.path().join("field_000060.csv").exists());

    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(report.lines().next().unwrap(), "sampler,cpu_seconds,ess,iat,ces");
    assert_eq!(report.lines().count(), 2);

    let meta = std::fs::read_to_string(dir.path().join("meta.txt")).unwrap();
    assert!(meta.contains("k_colors=4"));
    assert!(meta.contains("numeric_factorizations=0"));
    assert!(meta.contains("seed=9"));

    // field_mean is a p x p grid.
    let fm = std::fs::read_to_string(dir.path().join("field_mean.csv")).unwrap();
    assert_eq!(fm.lines().count(), 8);
}

#[test]
fn run_binomial_reports_both_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_config(ModelKind::BinomialLogit, SamplerKind::Block, dir.path());
    cmd_run(&cfg).unwrap();
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.contains("beta0_block"));
    assert!(report.contains("tau2_block"));
    let meta = std::fs::read_to_string(dir.path().join("meta.txt")).unwrap();
    assert!(meta.contains("symbolic_factorizations=1"));
    assert!(meta.contains("synthetic=true"));
}

#[test]
fn run_binomial_from_edge_list_and_data_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("precincts.txt");
    std::fs::write(&graph_path, "# tiny precinct map\n5\n0 1\n1 2\n2 3\n3 4\n0 2\n").unwrap();
    let data_path = dir.path().join("votes.csv");
    std::fs::write(&data_path, "node,trials,successes\n0,100,60\n1,80,30\n2,90,50\n4,70,40\n")
        .unwrap();
    let mut cfg = base_config(ModelKind::BinomialLogit, SamplerKind::Chromatic, dir.path());
    cfg.p = None;
    cfg.graph_file = Some(graph_path);
    cfg.data = Some(data_path);
    cfg.rho = 0.9;
    let artifacts = cmd_run(&cfg).unwrap();
    // Node 3 has no record: prior-only site, still part of the field.
    assert_eq!(artifacts.output.n, 5);
    let fm = std::fs::read_to_string(dir.path().join("field_mean.csv")).unwrap();
    assert!(fm.starts_with("node,value"));
    assert_eq!(fm.lines().count(), 6);
}

#[test]
fn gaussian_rerun_reproduces_draw_columns() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let cfg_a = base_config(ModelKind::GaussianImage, SamplerKind::SingleSite, dir_a.path());
    let cfg_b = base_config(ModelKind::GaussianImage, SamplerKind::SingleSite, dir_b.path());
    cmd_run(&cfg_a).unwrap();
    cmd_run(&cfg_b).unwrap();
    assert_eq!(
        draws_only(&dir_a.path().join("chain.csv")),
        draws_only(&dir_b.path().join("chain.csv"))
    );
    assert_eq!(
        std::fs::read_to_string(dir_a.path().join("field_mean.csv")).unwrap(),
        std::fs::read_to_string(dir_b.path().join("field_mean.csv")).unwrap()
    );
}

#[test]
fn chromatic_parallel_matches_sequential_csv() {
    let dir_seq = tempfile::tempdir().unwrap();
    let dir_par = tempfile::tempdir().unwrap();
    let cfg_seq = base_config(ModelKind::GaussianImage, SamplerKind::Chromatic, dir_seq.path());
    let cfg_par = base_config(
        ModelKind::GaussianImage,
        SamplerKind::ChromaticParallel { workers: 3 },
        dir_par.path(),
    );
    cmd_run(&cfg_seq).unwrap();
    cmd_run(&cfg_par).unwrap();
    assert_eq!(
        draws_only(&dir_seq.path().join("chain.csv")),
        draws_only(&dir_par.path().join("chain.csv"))
    );
}

#[test]
fn color_command_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path_graph = MarkovGraph::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
    let k = cmd_color(&path_graph, ColorOrder::Natural, dir.path()).unwrap();
    assert_eq!(k, 2);
    let csv = std::fs::read_to_string(dir.path().join("coloring.csv")).unwrap();
    assert!(csv.starts_with("node,color"));
    assert_eq!(csv.lines().count(), 4);

    let lattice = MarkovGraph::lattice(50, 50, Neighborhood::King8).unwrap();
    assert_eq!(cmd_color(&lattice, ColorOrder::Natural, dir.path()).unwrap(), 4);

    // Greedy stays within the max-degree + 1 bound on irregular graphs.
    let mut s = RngStream::new(70, 0);
    let mut edges = Vec::new();
    for i in 0..60usize {
        for j in (i + 1)..60 {
            if s.uniform() < 0.08 {
                edges.push((i, j));
            }
        }
    }
    let irregular = MarkovGraph::from_edge_list(60, &edges).unwrap();
    let k = cmd_color(&irregular, ColorOrder::DegreeDesc, dir.path()).unwrap();
    assert!(k <= irregular.max_degree() + 1);
}

#[test]
fn diagnose_iid_chain_has_unit_iat() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = RngStream::new(71, 0);
    let mut csv = String::from("iter,beta0,sigma2,tau2,seconds\n");
    for i in 0..3000 {
        csv.push_str(&format!("{},{},1.0,{},0.001\n", i + 1, s.normal01(), s.normal01()));
    }
    let path = dir.path().join("chain.csv");
    std::fs::write(&path, csv).unwrap();
    let report = cmd_diagnose(&[path], 30, Some(dir.path())).unwrap();
    let beta_row = report.rows.iter().find(|r| r.parameter == "beta0").unwrap();
    assert!((beta_row.iat - 1.0).abs() < 0.15, "iat {}", beta_row.iat);
    // Constant sigma2 column is skipped, not fatal.
    assert!(report.skipped.iter().any(|s| s.contains("sigma2")));
    assert!(dir.path().join("report.csv").exists());
    assert!(dir.path().join("acf.csv").exists());
}

#[test]
fn diagnose_multiple_chains_reports_psrf() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for c in 0..3 {
        let mut s = RngStream::new(72, c);
        let mut csv = String::from("iter,beta0,sigma2,tau2,seconds\n");
        for i in 0..2000 {
            csv.push_str(&format!(
                "{},{},{},{},0.001\n",
                i + 1,
                s.normal01(),
                1.0 + 0.1 * s.normal01(),
                2.0 + s.normal01()
            ));
        }
        let path = dir.path().join(format!("chain_{c}.csv"));
        std::fs::write(&path, csv).unwrap();
        paths.push(path);
    }
    let report = cmd_diagnose(&paths, 20, None).unwrap();
    let psrf_beta = report.psrf.iter().find(|(p, _)| p == "beta0").unwrap().1;
    assert!(psrf_beta < 1.05, "psrf {psrf_beta}");
}

#[test]
fn diagnose_malformed_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "iter,beta0,sigma2,tau2,seconds\n1,0.5,1.0,2.0,0.1\n2,oops,1.0,2.0,0.1\n")
        .unwrap();
    match cmd_diagnose(&[path], 10, None) {
        Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn parse_chain_rejects_wrong_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,b\n1,2\n").unwrap();
    match parse_chain_csv(&path) {
        Err(CliError::Parse { line, .. }) => assert_eq!(line, 1),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn run_input_image_roundtrip() {
    // simulate writes observed.csv; run consumes it via --input.
    let dir = tempfile::tempdir().unwrap();
    cmd_simulate(8, 1.0, 5, dir.path()).unwrap();
    let mut cfg = base_config(ModelKind::GaussianImage, SamplerKind::Chromatic, dir.path());
    cfg.p = None;
    cfg.input = Some(dir.path().join("observed.csv"));
    let artifacts = cmd_run(&cfg).unwrap();
    assert_eq!(artifacts.output.n, 64);
    let meta = std::fs::read_to_string(dir.path().join("meta.txt")).unwrap();
    assert!(meta.contains("input="));
}
