use streamgp::config::{DatasetKind, ExperimentConfig, Lengthscale};
use streamgp::pipeline::{prepare, run_prepared, run_single, run_trace};
use streamgp::runner::{compare_methods, mean_std, parse_methods, run_replicates, ALL_METHODS};
use streamgp::HarnessError;
use streamgp_core::conformal::credible_z;
use streamgp_core::CpMode;

fn small(kind: DatasetKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.dataset.kind = kind;
    c.dataset.n = Some(200);
    c.model.num_frequencies = 30;
    c.runs.replicates = 3;
    c
}

#[test]
fn bcs_sets_are_mean_plus_minus_z_sigma() {
    let mut c = small(DatasetKind::SyntheticHetero);
    c.cp.mode = CpMode::Bcs;
    c.cp.eta = 0.5;
    let (_, rows) = run_trace(&c, 5).unwrap();
    let z = credible_z(0.9).unwrap();
    for r in &rows {
        let half = z * r.var.sqrt();
        assert!((r.lower - (r.mean - half)).abs() < 1e-12);
        assert!((r.upper - (r.mean + half)).abs() < 1e-12);
        assert_eq!(r.covered, r.lower <= r.y && r.y <= r.upper);
    }
}

#[test]
fn fixed_cp_is_ocp_with_zero_rate() {
    let mut fixed = small(DatasetKind::SyntheticLinear);
    fixed.cp.mode = CpMode::FixedCp;
    let mut frozen = fixed.clone();
    frozen.cp.mode = CpMode::Ocp;
    frozen.cp.eta = 0.0;
    let (a, ta) = run_trace(&fixed, 9).unwrap();
    let (b, tb) = run_trace(&frozen, 9).unwrap();
    assert_eq!(ta, tb);
    assert_eq!(a.results[0].coverage, b.results[0].coverage);
    assert_eq!(a.results[0].mean_width, b.results[0].mean_width);
}

#[test]
fn ocp_threshold_moves_by_the_rule() {
    let c = small(DatasetKind::SyntheticHetero);
    let (rec, rows) = run_trace(&c, 2).unwrap();
    assert_eq!(rows[0].threshold, rec.initial_threshold);
    for w in rows.windows(2) {
        let miss = if w[0].covered { 0.0 } else { 1.0 };
        let expect = w[0].threshold - c.cp.eta * (c.cp.alpha - miss);
        assert!((w[1].threshold - expect).abs() < 1e-12);
    }
}

#[test]
fn scoring_modes_together_matches_separate_runs() {
    let c = small(DatasetKind::SyntheticHetero);
    let p = prepare(&c, 4).unwrap();
    let joint = run_prepared(&c, &p, &c.model.members, 4, &[CpMode::Ocp, CpMode::FixedCp, CpMode::Bcs], None).unwrap();
    for mode in [CpMode::Ocp, CpMode::FixedCp, CpMode::Bcs] {
        let solo = run_prepared(&c, &p, &c.model.members, 4, &[mode], None).unwrap();
        assert_eq!(joint.result(mode), solo.result(mode));
    }
}

#[test]
fn linear_single_seed_coverage_in_regime() {
    let mut c = ExperimentConfig::default();
    c.dataset.kind = DatasetKind::SyntheticLinear;
    c.dataset.n = Some(1500);
    let rec = run_single(&c, 0).unwrap();
    let cov = rec.results[0].coverage;
    assert!((0.85..=0.95).contains(&cov), "coverage {cov}");
    assert_eq!(rec.n_init, 450);
    assert_eq!(rec.n_stream, 1050);
    assert!((rec.final_weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn single_replicate_flags_std() {
    let c = small(DatasetKind::SyntheticLinear);
    let (s, recs) = run_replicates(&c, 1, 7).unwrap();
    assert!(!s.std_defined);
    assert_eq!(s.coverage_std, 0.0);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].seed, 7);
}

#[test]
fn aggregates_recompute_from_records() {
    let c = small(DatasetKind::SyntheticHetero);
    let (s, recs) = run_replicates(&c, 4, 100).unwrap();
    assert!(s.std_defined);
    let covs: Vec<f64> = recs.iter().map(|r| r.results[0].coverage).collect();
    let (m, sd) = mean_std(&covs);
    assert_eq!(s.coverage_mean, m);
    assert_eq!(s.coverage_std, sd.unwrap());
    let seeds: Vec<u64> = recs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![100, 101, 102, 103]);
    let widths: Vec<f64> = s.replicates.iter().map(|r| r.mean_width).collect();
    assert_eq!(mean_std(&widths).0, s.width_mean);
}

#[test]
fn comparison_is_paired_and_deterministic() {
    let c = small(DatasetKind::SyntheticLinear);
    let a = compare_methods(&c, &ALL_METHODS).unwrap();
    assert_eq!(a.len(), 6);
    let names: Vec<&str> = a.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(names, ["EGP-OCP", "RBF-OCP", "EGP-CP", "RBF-CP", "EGP-BCS", "RBF-BCS"]);
    assert_eq!(a[0].members, ["rbf", "matern-2.5", "matern-1.5"]);
    assert_eq!(a[1].members, ["rbf"]);
    let b = compare_methods(&c, &ALL_METHODS).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.coverage_mean, x.width_mean, x.coverage_std), (y.coverage_mean, y.width_mean, y.coverage_std));
    }
    // the RBF-single row equals a standalone run of that model
    let mut rbf = c.clone();
    rbf.model.members = parse_members(&["rbf"]);
    let (solo, _) = run_replicates(&rbf, c.runs.replicates, c.runs.base_seed).unwrap();
    assert_eq!(solo.coverage_mean, a[1].coverage_mean);
    assert_eq!(solo.width_mean, a[1].width_mean);
}

fn parse_members(names: &[&str]) -> Vec<streamgp::config::MemberKernel> {
    names.iter().map(|n| n.parse().unwrap()).collect()
}

#[test]
fn unknown_method_lists_valid_names() {
    let err = parse_methods("EGP-OCP,SNAPS").unwrap_err();
    match &err {
        HarnessError::UnknownMethod { name, valid } => {
            assert_eq!(name, "SNAPS");
            for m in ALL_METHODS {
                assert!(valid.contains(&m.to_string()));
            }
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(parse_methods("egp-fixedcp, RBF-single-BCS").unwrap().len(), 2);
}

#[test]
fn explicit_lengthscale_is_used() {
    let mut c = small(DatasetKind::SyntheticHetero);
    c.model.lengthscale = Lengthscale::Explicit(0.42);
    assert_eq!(prepare(&c, 1).unwrap().lengthscale, 0.42);
}

#[test]
fn graph_puts_init_nodes_first() {
    let c = small(DatasetKind::SyntheticLinear);
    let p = prepare(&c, 3).unwrap();
    assert_eq!(p.n_init(), 60);
    assert_eq!(&p.graph.labels()[..60], p.split.init.labels.as_slice());
    assert_eq!(&p.graph.labels()[60..], p.split.stream.labels.as_slice());
}

#[test]
fn per_step_cost_does_not_grow_with_position() {
    let mut c = ExperimentConfig::default();
    c.dataset.n = Some(2900);
    c.model.num_frequencies = 60;
    c.model.members = parse_members(&["rbf"]);
    let rec = run_single(&c, 0).unwrap();
    assert!(rec.n_stream >= 2000);
    let t = &rec.seconds_per_1000;
    assert!(t[1] <= 2.0 * t[0], "{t:?}");
}
