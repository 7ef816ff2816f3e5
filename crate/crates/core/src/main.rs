use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dimwise::error::{Error, Result};
use dimwise::expansion::{general_plan, IndexSet};
use dimwise::harness::{
    emit_csv, experiment_preset, fit_power_law, fit_subset, run_point, run_sweep, ExperimentConfig, Prepared,
    ReferenceKind, SolverKind,
};
use dimwise::model::ModelSpec;
use dimwise::montecarlo::{estimate_price, MCConfig, PricingProblem};
use dimwise::oracle::{cosine_solution, geometric_call_price};
use dimwise::payoff::PayoffSpec;
use dimwise::pde::GridResolution;
use dimwise::Execution;

#[derive(Parser)]
#[command(name = "dimwise", version, about = "Dimension-wise expansion pricer for multi-asset Black-Scholes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the expansion plan for N directions.
    Plan {
        #[arg(long, short = 'n')]
        dim: usize,
        #[arg(long, short = 'r', default_value_t = 1)]
        retained: usize,
        #[arg(long, short = 'm', default_value_t = 1)]
        order: usize,
    },
    /// Price at a single correlation level.
    Solve(Experiment),
    /// Correlation sweep, CSV output and power-law fit.
    Converge(Experiment),
    /// Plain Monte Carlo reference price.
    Mc(Experiment),
    /// Quick oracle and invariant battery.
    Selftest,
}

#[derive(Args)]
struct Experiment {
    /// JSON config file.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// Named experiment (fig2-desk, fig3-desk, fig4-desk).
    #[arg(long, short = 'p')]
    preset: Option<String>,
    /// Comma-separated correlation levels.
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    #[arg(long)]
    payoff: Option<String>,
    #[arg(long)]
    strike: Option<f64>,
    #[arg(long)]
    retained: Option<usize>,
    #[arg(long)]
    order: Option<usize>,
    /// Mesh intervals per direction.
    #[arg(long)]
    j: Option<usize>,
    /// Time steps.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_parser = parse_reference)]
    reference: Option<ReferenceKind>,
    #[arg(long, value_parser = parse_solver)]
    solver: Option<SolverKind>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    antithetic: Option<bool>,
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    #[arg(long)]
    lambda2_max: Option<f64>,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// Print the resolved config and exit.
    #[arg(long)]
    dump_config: bool,
}

fn parse_reference(s: &str) -> std::result::Result<ReferenceKind, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|_| format!("unknown reference '{s}'"))
}

fn parse_solver(s: &str) -> std::result::Result<SolverKind, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|_| format!("unknown solver '{s}'"))
}

impl Experiment {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => experiment_preset(name)?,
            (None, None) => experiment_preset("fig2-desk")?,
        };
        if let Some(g) = &self.gamma {
            cfg.gamma_list = g.clone();
        }
        if let Some(p) = &self.payoff {
            cfg.payoff = dimwise::harness::PayoffChoice::Preset(p.clone());
        }
        if self.strike.is_some() {
            cfg.strike = self.strike;
        }
        if let Some(r) = self.retained {
            cfg.expansion.retained = r;
        }
        if let Some(m) = self.order {
            cfg.expansion.order = m;
        }
        if let Some(j) = self.j {
            cfg.pde.j_points = j;
        }
        if let Some(m) = self.m {
            cfg.pde.m_steps = m;
        }
        if let Some(r) = self.reference {
            cfg.reference = r;
        }
        if let Some(s) = self.solver {
            cfg.solver = s;
        }
        if let Some(n) = self.samples {
            cfg.mc.n_samples = n;
        }
        if let Some(s) = self.seed {
            cfg.mc.seed = s;
        }
        if let Some(a) = self.antithetic {
            cfg.mc.antithetic = a;
        }
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
        if self.lambda2_max.is_some() {
            cfg.lambda2_max = self.lambda2_max;
        }
        if self.sequential {
            cfg.execution = Execution::Sequential;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Plan { dim, retained, order } => {
            let plan = general_plan(retained, order, dim)?;
            println!("# N={dim} r={retained} m={order} terms={}", plan.terms().len());
            print!("{plan}");
        }
        Command::Solve(exp) => {
            let cfg = exp.resolve()?;
            if exp.dump_config {
                println!("{}", cfg.to_json());
                return Ok(ExitCode::SUCCESS);
            }
            let gamma = cfg.gamma_list[0];
            let rec = run_point(&cfg, gamma).map_err(|e| e.context(format!("gamma = {gamma}")))?;
            println!(
                "gamma={} lambda2={} expansion={:.10} reference={:.10} abs_error={:.4e} stderr={:.2e}",
                rec.gamma, rec.lambda2, rec.expansion, rec.reference, rec.abs_error, rec.stderr
            );
        }
        Command::Converge(exp) => {
            let cfg = exp.resolve()?;
            if exp.dump_config {
                println!("{}", cfg.to_json());
                return Ok(ExitCode::SUCCESS);
            }
            let records = run_sweep(&cfg)?;
            if let Some(path) = &cfg.output {
                emit_csv(&records, path)?;
            }
            println!("gamma,lambda2,expansion,reference,abs_error,stderr,bound");
            for r in &records {
                let b = r.bound.map(|b| b.to_string()).unwrap_or_default();
                println!(
                    "{},{},{},{},{},{},{b}",
                    r.gamma, r.lambda2, r.expansion, r.reference, r.abs_error, r.stderr
                );
            }
            // the records are already out; a sweep too short to fit is not an error
            match fit_power_law(&fit_subset(&records, cfg.lambda2_max)) {
                Ok(fit) => println!("{fit}"),
                Err(e) => eprintln!("warning: no power-law fit: {e}"),
            }
        }
        Command::Mc(exp) => {
            let cfg = exp.resolve()?;
            let model = cfg.resolve_model()?;
            let payoff = cfg.resolve_payoff()?;
            for &g in &cfg.gamma_list {
                let prep = Prepared::new(&model.with_gamma(g), &payoff)?;
                let e = prep.mc_price(&cfg.mc, cfg.execution)?;
                println!("gamma={g} value={:.10} stderr={:.3e} n={}", e.mean, e.stderr, e.n_used);
            }
        }
        Command::Selftest => return selftest(),
    }
    Ok(ExitCode::SUCCESS)
}

fn check(name: &str, ok: bool, detail: String) -> bool {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn selftest() -> Result<ExitCode> {
    let mut ok = true;

    let sums = (1..=12).all(|n| {
        (1..=n).all(|r| (0..=n - r).all(|m| general_plan(r, m, n).map(|p| p.weight_sum() == 1).unwrap_or(false)))
    });
    ok &= check("plan weights", sums, "all (r, m, N <= 12) sum to 1".into());

    let model = ModelSpec::equicorrelated(3, 0.2, 0.5, 1.0, 1.0);
    let cos = Prepared::new(&model, &PayoffSpec::cosine())?;
    let full = IndexSet::full(3);
    let pde = cos.subsolution(&IndexSet::new(vec![0, 1])?, SolverKind::Pde, &GridResolution::new(200, 24), Execution::Parallel)?;
    let exact = cosine_solution(cos.anchor(), 1.0, cos.lambdas(), &IndexSet::new(vec![0, 1])?);
    ok &= check("2D ADI vs cosine", (pde - exact).abs() < 1e-4, format!("|diff| = {:.2e}", (pde - exact).abs()));
    let v = cos.oracle_value()?;
    ok &= check(
        "cosine oracle",
        (v - cosine_solution(cos.anchor(), 1.0, cos.lambdas(), &full)).abs() == 0.0,
        format!("{v:.12}"),
    );

    let model = ModelSpec::equicorrelated(4, 0.2, 0.4, 100.0, 1.0);
    let w = vec![0.25; 4];
    let price = geometric_call_price(&model, &w, 100.0)?;
    let mc = estimate_price(&PricingProblem::new(&model, &PayoffSpec::geometric(w, 100.0))?, &MCConfig::new(200_000, 1), Execution::Parallel)?;
    ok &= check(
        "MC vs geometric closed form",
        (mc.mean - price).abs() < 3.0 * mc.stderr,
        format!("{:.5} vs {price:.5} (stderr {:.1e})", mc.mean, mc.stderr),
    );

    let fit = dimwise::harness::fit_points(&[(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)])?;
    ok &= check("power-law fit", (fit.exponent - 2.0).abs() < 1e-12, fit.to_string());

    if ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Error::Numerical("self-test failed".into()))
    }
}
