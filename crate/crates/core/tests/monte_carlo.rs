use dimwise::expansion::{first_order_plan, general_plan, IndexSet};
use dimwise::model::ModelSpec;
use dimwise::montecarlo::{estimate_alpha_difference, estimate_price, estimate_truncation_error, MCConfig, PricingProblem};
use dimwise::oracle::{digital_geometric_price, geometric_call_price};
use dimwise::payoff::{preset, PayoffSpec};
use dimwise::Execution;

fn within(mean: f64, stderr: f64, want: f64, sigmas: f64) -> bool {
    (mean - want).abs() <= sigmas * stderr
}

#[test]
fn prices_match_closed_forms() {
    let model = ModelSpec::equicorrelated(6, 0.25, 0.35, 100.0, 1.5);
    let w = vec![1.0 / 6.0; 6];
    for strike in [80.0, 100.0, 120.0] {
        let exact = geometric_call_price(&model, &w, strike).unwrap();
        let p = PricingProblem::new(&model, &PayoffSpec::geometric(w.clone(), strike)).unwrap();
        for antithetic in [false, true] {
            let e = estimate_price(&p, &MCConfig::new(100_000, 3).antithetic(antithetic), Execution::Parallel).unwrap();
            assert!(within(e.mean, e.stderr, exact, 4.0), "K={strike}: {} vs {exact}", e.mean);
        }
        let exact = digital_geometric_price(&model, &w, strike).unwrap();
        let p = PricingProblem::new(&model, &PayoffSpec::digital(w.clone(), strike)).unwrap();
        let e = estimate_price(&p, &MCConfig::new(100_000, 5), Execution::Parallel).unwrap();
        assert!(within(e.mean, e.stderr, exact, 4.0), "digital K={strike}: {} vs {exact}", e.mean);
    }
}

#[test]
fn truncation_error_matches_oracle_difference() {
    let model = ModelSpec::equicorrelated(10, 0.2, 0.6, 1.0, 1.0);
    let payoff = preset("geo-kink-omega1").unwrap().with_strike(0.5);
    let prep = dimwise::harness::Prepared::new(&model, &payoff).unwrap();
    let plan = first_order_plan(1, 10).unwrap();
    let approx = prep
        .expansion_value(&plan, dimwise::harness::SolverKind::ClosedForm, &Default::default(), Execution::Parallel)
        .unwrap();
    let exact = prep.oracle_value().unwrap();
    let e = estimate_truncation_error(&prep.problem, &plan, &MCConfig::new(400_000, 9).antithetic(true), Execution::Parallel)
        .unwrap();
    assert!(within(e.mean, e.stderr, exact - approx, 4.0), "{} ± {} vs {}", e.mean, e.stderr, exact - approx);
}

#[test]
fn alpha_difference_matches_oracle_difference() {
    let model = ModelSpec::equicorrelated(4, 0.3, 0.4, 1.0, 1.0);
    let payoff = PayoffSpec::geometric(vec![0.7, -0.1, 0.2, 0.2], 0.8);
    let prep = dimwise::harness::Prepared::new(&model, &payoff).unwrap();
    let a = prep.problem.initial.geometric_direction().unwrap().to_vec();
    let oracle = |s: &[usize]| {
        dimwise::oracle::geometric_subsolution(
            payoff.kind,
            &a,
            prep.anchor(),
            prep.lambdas(),
            &IndexSet::new(s.to_vec()).unwrap(),
            1.0,
            payoff.strike,
        )
        .unwrap()
    };
    // Û_{2,3} = u^{0,1,2} − u^{0,1} − u^{0,2} + u^{0}
    let want = oracle(&[0, 1, 2]) - oracle(&[0, 1]) - oracle(&[0, 2]) + oracle(&[0]);
    let alpha = IndexSet::new(vec![1, 2]).unwrap();
    let e = estimate_alpha_difference(&prep.problem, 1, &alpha, &MCConfig::new(400_000, 2).antithetic(true), Execution::Parallel)
        .unwrap();
    assert!(within(e.mean, e.stderr, want, 4.0), "{} ± {} vs {want}", e.mean, e.stderr);
}

#[test]
fn estimates_are_independent_of_execution_mode() {
    let model = ModelSpec::equicorrelated(5, 0.2, 0.5, 100.0, 1.0);
    let p = PricingProblem::new(&model, &preset("arith5-omega1").unwrap()).unwrap();
    let cfg = MCConfig { batch: 1000, ..MCConfig::new(25_000, 42) };
    let a = estimate_price(&p, &cfg, Execution::Sequential).unwrap();
    let b = estimate_price(&p, &cfg, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    let plan = general_plan(1, 2, 5).unwrap();
    let a = estimate_truncation_error(&p, &plan, &cfg, Execution::Sequential).unwrap();
    let b = estimate_truncation_error(&p, &plan, &cfg, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_used, 25_000);
}
