//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use dimwise::expansion::{
    bound_first_order, bound_second_order, combine_with, first_order_plan, general_plan, second_order_plan, IndexSet,
    MixedNormTable,
};
use dimwise::harness::{experiment_preset, fit_points, fit_power_law, run_sweep, Prepared, SolverKind};
use dimwise::model::ModelSpec;
use dimwise::montecarlo::{coupled_alpha_sample, estimate_alpha_difference, estimate_price, MCConfig, PricingProblem};
use dimwise::oracle::{cosine_solution, geometric_call_price};
use dimwise::payoff::{preset, PayoffSpec};
use dimwise::pde::{solve_subproblem, thomas_solve, GridResolution, SubProblem, Tridiagonal};
use dimwise::{Execution, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXEC: Execution = Execution::Parallel;

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

/// Cosine payoff with a prescribed spectrum, anchored at the origin.
fn cosine_expansion_error(lambdas: &[f64], order: usize) -> Result<(f64, f64)> {
    let n = lambdas.len();
    let zero = vec![0.0; n];
    let plan = general_plan(1, order, n)?;
    let approx = combine_with(&plan, |nu| Ok(cosine_solution(&zero, 1.0, lambdas, nu)))?;
    let exact = cosine_solution(&zero, 1.0, lambdas, &IndexSet::full(n));
    let norms = MixedNormTable::cosine(n, 1);
    let bound = match order {
        1 => bound_first_order(1.0, lambdas, 1, &norms)?,
        _ => bound_second_order(1.0, lambdas, 1, &norms)?,
    };
    Ok(((exact - approx).abs(), bound))
}

fn sharpness() -> Result<Outcome> {
    let tail = [0.02, 0.018, 0.016, 0.014, 0.012];
    let scales = [1.0, 0.5, 0.25, 0.125, 0.0625];
    let mut detail = Vec::new();
    let mut pass = true;
    for (order, want) in [(1usize, 2.0), (2, 3.0)] {
        let mut pts = Vec::new();
        let mut ratio = 0.0;
        for &s in &scales {
            let mut l = vec![0.02];
            l.extend(tail.iter().map(|v| v * s));
            let (err, bound) = cosine_expansion_error(&l, order)?;
            pts.push((s, err));
            ratio = err / bound;
        }
        let fit = fit_points(&pts)?;
        let ok = (fit.exponent - want).abs() <= 0.05 && (0.9..=1.1).contains(&ratio);
        pass &= ok;
        detail.push(format!("m={order} exponent={:.4} error/bound={ratio:.4}", fit.exponent));
    }
    outcome(pass, detail.join("; "))
}

fn exact_integration() -> Result<Outcome> {
    let lambdas = [0.2f64, 0.1, 0.08, 0.05, 0.03];
    let anchor = [0.3f64, -0.2, 0.5, 0.1, 0.4];
    let plan = first_order_plan(1, 5)?;
    // g(z) = cos z₁ cos z₃
    let exact = |nu: &IndexSet| {
        let decay: f64 = [0, 2].iter().filter(|&&k| nu.contains(k)).map(|&k| lambdas[k]).sum();
        (-decay).exp() * anchor[0].cos() * anchor[2].cos()
    };
    let full = exact(&IndexSet::full(5));
    let closed = (combine_with(&plan, |nu| Ok(exact(nu)))? - full).abs();

    let g = |z: &[f64]| z[0].cos() * z[2].cos();
    let res = GridResolution::new(200, 24);
    let pde = combine_with(&plan, |nu| {
        match SubProblem::new(nu, &lambdas, &anchor, 1.0, &res, &g, None)? {
            Some(p) => solve_subproblem(&p, EXEC),
            None => Ok(g(&anchor)),
        }
    })?;
    let numerical = (pde - full).abs();
    outcome(
        closed <= 1e-8 && numerical <= 1e-4,
        format!("closed-form error={closed:.2e} PDE error={numerical:.2e}"),
    )
}

fn pde_orders() -> Result<Outcome> {
    let start = Instant::now();
    let cases: [(&[f64], &[f64]); 3] = [
        (&[0.2], &[0.3]),
        (&[0.2, 0.05], &[0.3, -0.4]),
        (&[0.2, 0.1, 0.05], &[0.3, -0.4, 0.2]),
    ];
    let levels = [(50, 6), (100, 12), (200, 24)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (lambdas, anchor) in cases {
        let d = lambdas.len();
        let nu = IndexSet::full(d);
        let exact = cosine_solution(anchor, 1.0, lambdas, &nu);
        let g = |z: &[f64]| z.iter().map(|v| v.cos()).product::<f64>();
        let mut pts = Vec::new();
        for (j, m) in levels {
            let p = SubProblem::new(&nu, lambdas, anchor, 1.0, &GridResolution::new(j, m), &g, None)?
                .expect("positive diffusion");
            let err = (solve_subproblem(&p, EXEC)? - exact).abs();
            pts.push((1.0 / j as f64, err));
        }
        let order = fit_points(&pts)?.exponent;
        pass &= (1.7..=2.3).contains(&order);
        detail.push(format!("{d}D order={order:.3} (finest error {:.2e})", pts[2].1));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    outcome(pass, format!("{}; {secs:.1}s", detail.join(", ")))
}

fn figure2() -> Result<Outcome> {
    let start = Instant::now();
    let cfg = experiment_preset("fig2-desk")?;
    let records = run_sweep(&cfg)?;
    let fit = fit_power_law(&records)?;
    let at_half = records.iter().find(|r| (r.gamma - 0.5).abs() < 1e-12).expect("gamma 0.5 in sweep");
    let within = (1.1e-2 / 2.0..=1.1e-2 * 2.0).contains(&at_half.abs_error);
    outcome(
        (fit.exponent - 2.0).abs() <= 0.4 && within,
        format!(
            "{fit} error(gamma=0.5)={:.3e} stderr={:.1e}; {:.1}s",
            at_half.abs_error,
            at_half.stderr,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn figure3() -> Result<Outcome> {
    let start = Instant::now();
    let cfg = experiment_preset("fig3-desk")?;
    let records = run_sweep(&cfg)?;
    let fit = fit_power_law(&records)?;
    let worst = records.iter().map(|r| r.stderr / r.abs_error).fold(0.0, f64::max);
    outcome(
        (fit.exponent - 3.0).abs() <= 0.6,
        format!(
            "{fit} max stderr/error={worst:.3}; {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn kink_study() -> Result<Outcome> {
    let base = experiment_preset("fig4-desk")?;
    let aligned = dimwise::harness::ExperimentConfig {
        payoff: dimwise::harness::PayoffChoice::Preset("geo-aligned".into()),
        ..base.clone()
    };
    let worst_aligned = run_sweep(&aligned)?.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    let smooth = dimwise::harness::ExperimentConfig { strike: Some(0.5), ..base.clone() };
    let smooth_fit = fit_power_law(&run_sweep(&smooth)?)?;
    let kink_fit = fit_power_law(&run_sweep(&base)?)?;
    let pass = worst_aligned < 1e-5
        && (smooth_fit.exponent - 2.0).abs() <= 0.4
        && (0.4..=1.1).contains(&kink_fit.exponent);
    outcome(
        pass,
        format!(
            "aligned max error={worst_aligned:.2e}; K=0.5 {smooth_fit}; K=1 {kink_fit}"
        ),
    )
}

/// Single-sample variance of `Û_α`, `|α| = 1`, against `λ_k`.
fn variance_slopes(antithetic: bool) -> Result<f64> {
    let model = ModelSpec::equicorrelated(10, 0.2, 0.5, 1.0, 1.0);
    let payoff = preset("geo-kink-omega1")?.with_strike(0.5);
    let mut pts = Vec::new();
    let mut k_fixed = None;
    for &gamma in &dimwise::harness::DESK_GAMMAS {
        let prep = Prepared::new(&model.with_gamma(gamma), &payoff)?;
        let a = prep.problem.initial.geometric_direction().expect("geometric").to_vec();
        // the tail basis does not depend on γ, so the chosen direction is stable
        let k = *k_fixed.get_or_insert_with(|| {
            (1..a.len()).max_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs())).expect("tail")
        });
        let alpha = IndexSet::new(vec![k])?;
        let cfg = MCConfig::new(200_000, 7).antithetic(antithetic);
        let est = estimate_alpha_difference(&prep.problem, 1, &alpha, &cfg, EXEC)?;
        pts.push((prep.lambdas()[k], est.sample_variance));
    }
    Ok(fit_points(&pts)?.exponent)
}

fn variance_reduction() -> Result<Outcome> {
    let slope = variance_slopes(true)?;
    let plain = variance_slopes(false)?;
    outcome(
        (slope - 2.0).abs() <= 0.5,
        format!("antithetic slope={slope:.3} (without reflection {plain:.3})"),
    )
}

fn structural() -> Result<Outcome> {
    let mut detail = Vec::new();

    let sums = (1..=12usize)
        .all(|n| (1..=n).all(|r| (0..=n - r).all(|m| general_plan(r, m, n).map(|p| p.weight_sum() == 1).unwrap_or(false))));
    detail.push(format!("weights={sums}"));

    let mut same = true;
    for n in 2..=12 {
        for r in 1..n {
            same &= general_plan(r, 1, n)? == first_order_plan(r, n)?;
            if r + 2 <= n {
                same &= general_plan(r, 2, n)? == second_order_plan(r, n)?;
            }
        }
    }
    detail.push(format!("plans={same}"));

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for size in [3usize, 17, 64, 200] {
        let lower: Vec<f64> = (1..size).map(|_| rng.random_range(-1.0..0.0)).collect();
        let upper: Vec<f64> = (1..size).map(|_| rng.random_range(-1.0..0.0)).collect();
        let diag: Vec<f64> = (0..size).map(|_| 2.5 + rng.random_range(0.0..1.0)).collect();
        let rhs: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = thomas_solve(&lower, &diag, &upper, &rhs)?;
        let dense = DMatrix::from_fn(size, size, |i, j| match j as i64 - i as i64 {
            0 => diag[i],
            -1 => lower[j],
            1 => upper[i],
            _ => 0.0,
        });
        let y = dense.lu().solve(&DVector::from_vec(rhs.clone())).expect("non-singular");
        let mut z = rhs;
        Tridiagonal::new(lower, diag, upper)?.factor()?.solve_in_place(&mut z);
        for v in [&x, &z] {
            worst = worst.max(v.iter().zip(y.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    detail.push(format!("thomas-dense={worst:.1e}"));

    let mut telescope = 0.0f64;
    for n in 2..=4 {
        let model = ModelSpec::equicorrelated(n, 0.25, 0.3, 1.0, 1.0);
        let problem = PricingProblem::new(&model, &PayoffSpec::geometric(vec![1.0 / n as f64; n], 0.9))?;
        for _ in 0..50 {
            let zeta: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
            let full = problem.initial.eval(&dimwise::montecarlo::sample_terminal_z(
                &problem.lambdas,
                &problem.anchor,
                problem.horizon,
                &zeta,
            )?);
            let mut lead = problem.lambdas.clone();
            lead[1..].iter_mut().for_each(|l| *l = 0.0);
            let base =
                problem.initial.eval(&dimwise::montecarlo::sample_terminal_z(&lead, &problem.anchor, problem.horizon, &zeta)?);
            let tail: Vec<usize> = (1..n).collect();
            let mut sum = base;
            for mask in 1u32..(1 << tail.len()) {
                let alpha: Vec<usize> = tail.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &k)| k).collect();
                sum += coupled_alpha_sample(&problem, 1, &IndexSet::new(alpha)?, &zeta)?;
            }
            telescope = telescope.max((sum - full).abs());
        }
    }
    detail.push(format!("telescoping={telescope:.1e}"));

    let model = ModelSpec::equicorrelated(10, 0.2, 0.6, 100.0, 1.0);
    let payoff = preset("geo-kink-omega1")?.with_strike(1.0);
    let exact = geometric_call_price(&model, &payoff.weights, payoff.strike)?;
    let problem = PricingProblem::new(&model, &payoff)?;
    let mut hits = 0;
    for seed in 0..100u64 {
        let e = estimate_price(&problem, &MCConfig::new(50_000, 1000 + seed), EXEC)?;
        hits += usize::from((e.mean - exact).abs() <= 3.0 * e.stderr);
    }
    detail.push(format!("battery={hits}/100"));

    let pass = sums && same && worst < 1e-10 && telescope < 1e-12 && hits >= 99;
    outcome(pass, detail.join(" "))
}

/// Table 1 style timings; hardware-bound, never a gate.
fn timings() -> Result<String> {
    let model = ModelSpec::equicorrelated(10, 0.2, 0.5, 100.0, 1.0);
    let prep = Prepared::new(&model, &preset("arith-omega1")?)?;
    let plan = first_order_plan(1, 10)?;
    let start = Instant::now();
    prep.expansion_value(&plan, SolverKind::Pde, &GridResolution::new(800, 50), EXEC)?;
    let first = start.elapsed().as_secs_f64();

    let model = ModelSpec::equicorrelated(5, 0.2, 0.5, 100.0, 1.0);
    let prep = Prepared::new(&model, &preset("arith5-omega1")?)?;
    let start = Instant::now();
    prep.subsolution(&IndexSet::new(vec![0, 1, 2])?, SolverKind::Pde, &GridResolution::new(200, 50), EXEC)?;
    let cube = start.elapsed().as_secs_f64();
    Ok(format!(
        "first order N=10 J=800 M=50: {first:.2}s; one 3D solve J=200 M=50: {cube:.2}s"
    ))
}

fn main() -> ExitCode {
    let _ = env_logger::builder().is_test(true).try_init();
    let criteria: [(&str, Criterion); 8] = [
        ("1 sharpness", sharpness),
        ("2 exact integration", exact_integration),
        ("3 PDE orders", pde_orders),
        ("4 figure 2 desk", figure2),
        ("5 figure 3 desk", figure3),
        ("6 kink study", kink_study),
        ("7 variance reduction", variance_reduction),
        ("8 structural invariants", structural),
    ];
    // `cargo test --test acceptance -- kink` runs the matching criteria only
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match run() {
            Ok(o) => {
                println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
                failed += usize::from(!o.pass);
            }
            Err(e) => {
                println!("FAIL criterion {name}: error: {e}");
                failed += 1;
            }
        }
    }
    if !filters.is_empty() {
        return if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE };
    }
    match timings() {
        Ok(t) => println!("INFO timings: {t}"),
        Err(e) => println!("INFO timings unavailable: {e}"),
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
