use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use firsthit::config::RunConfig;
use firsthit::export::{density_csv, ladder_csv, sweep_csv, sweep_curves_csv};
use firsthit::scenarios::{
    price_eds, run_ladder, run_sweep, Assumptions, LadderTable, Scenario, StressLadder, SweepSpec, SweepTable,
};
use firsthit::solver::NegativityPolicy;
use firsthit::validation::{run_triangle, TriangleReport};
use serde::Serialize;

use crate::error::CliError;
use crate::CommonArgs;

type Result<T> = std::result::Result<T, CliError>;

/// Loads the config and folds the command-line overrides into it, so the
/// embedded copy in every output is what actually ran.
fn load(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(n) = args.steps {
        if n == 0 {
            return Err(CliError::Config("--steps must be positive".into()));
        }
        cfg.solver.n_steps = n;
        if let Some(grid) = &mut cfg.validate {
            grid.solver.n_steps = n;
        }
    }
    if args.clamp_density {
        cfg.solver.negativity = NegativityPolicy::ClampToZero;
        if let Some(grid) = &mut cfg.validate {
            grid.solver.negativity = NegativityPolicy::ClampToZero;
        }
    }
    if let Some(seed) = args.seed {
        if let Some(mc) = &mut cfg.mc {
            mc.seed = seed;
        }
        if let Some(mc) = cfg.validate.as_mut().and_then(|g| g.mc.as_mut()) {
            mc.seed = seed;
        }
    }
    Ok(cfg)
}

fn scenario(cfg: &RunConfig) -> Result<Scenario> {
    let market = cfg.market()?;
    let contract = cfg.contract(market.spot)?;
    contract.validate_against(&market)?;
    let forward_skew = cfg.forward_skew.build(market.spot, contract.barrier)?;
    Ok(Scenario {
        market,
        forward_skew,
        contract,
        solver: cfg.solver,
    })
}

fn assumptions(cfg: &RunConfig, s: &Scenario) -> Result<Assumptions> {
    let mut a = Assumptions::describe(s)?;
    a.day_count = cfg.market_config()?.day_count.clone();
    Ok(a)
}

fn metadata(command: &str, a: &Assumptions, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut m = vec![("command".to_string(), command.to_string())];
    m.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    m.extend([
        ("rates".into(), a.rates.clone()),
        ("dividends".into(), a.dividends.clone()),
        ("surface".into(), a.surface.clone()),
        ("slope_unit".into(), a.slope_unit.clone()),
        ("forward_skew".into(), a.forward_skew.clone()),
        ("payout".into(), a.payout.clone()),
        ("day_count".into(), a.day_count.clone()),
        ("solver".into(), a.solver.clone()),
    ]);
    m
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs serialize");
    s.push('\n');
    s
}

/// Writes every file only once all of them have been computed.
fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    let io = |e: std::io::Error| CliError::Config(format!("cannot write to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    for (name, body) in files {
        fs::write(dir.join(name), body).map_err(io)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    command: &'static str,
    /// `notional ·` the per-unit price.
    price: f64,
    price_per_unit: f64,
    hit_probability: f64,
    clamp_events: usize,
    n_steps: usize,
    spot: f64,
    barrier: f64,
    maturity: f64,
    payout: firsthit::Payout,
    notional: f64,
    assumptions: &'a Assumptions,
    config: &'a RunConfig,
}

pub fn solve(args: &CommonArgs) -> Result<()> {
    let cfg = load(args)?;
    let s = scenario(&cfg)?;
    let (unit, density) = s.price()?;
    let a = assumptions(&cfg, &s)?;
    let c = &s.contract;
    let summary = SolveSummary {
        command: "solve",
        price: c.notional * unit,
        price_per_unit: unit,
        hit_probability: density.total(),
        clamp_events: density.clamp_events,
        n_steps: density.len(),
        spot: s.market.spot,
        barrier: c.barrier,
        maturity: c.maturity,
        payout: c.payout,
        notional: c.notional,
        assumptions: &a,
        config: &cfg,
    };
    let meta = metadata(
        "solve",
        &a,
        &[
            ("spot", s.market.spot.to_string()),
            ("barrier", c.barrier.to_string()),
            ("maturity", c.maturity.to_string()),
            ("notional", c.notional.to_string()),
            ("price", summary.price.to_string()),
            ("hit_probability", summary.hit_probability.to_string()),
        ],
    );
    write_all(
        &args.out_dir,
        &[("density.csv", density_csv(&density, &meta)), ("summary.json", json(&summary))],
    )
}

fn opt(x: Option<impl std::fmt::Debug>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn triangle_csv(r: &TriangleReport) -> String {
    let mut out = String::from(
        "vol,barrier_fraction,maturity,solver,closed_form,solver_error,solver_ok,mc,mc_standard_error,mc_ok,two_eur_dip,heuristic_deviation\n",
    );
    for p in &r.points {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{},{},{},{},{:?},{:?}",
            p.vol,
            p.barrier_fraction,
            p.maturity,
            p.solver,
            p.closed_form,
            p.solver_error,
            p.solver_ok,
            opt(p.mc),
            opt(p.mc_standard_error),
            opt(p.mc_ok),
            p.two_eur_dip,
            p.heuristic_deviation
        );
    }
    out
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    command: &'static str,
    passed: bool,
    report: &'a TriangleReport,
}

pub fn validate(args: &CommonArgs) -> Result<()> {
    let cfg = load(args)?;
    let grid = cfg.validate.clone().unwrap_or_default();
    let report = run_triangle(&grid)?;
    let out = ValidateOutput {
        command: "validate",
        passed: report.passed(),
        report: &report,
    };
    write_all(
        &args.out_dir,
        &[("validate.json", json(&out)), ("validate.csv", triangle_csv(&report))],
    )?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{} of {} grid points outside tolerance",
            report.breaches,
            report.points.len()
        )))
    }
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    command: &'static str,
    assumptions: &'a Assumptions,
    table: &'a SweepTable,
    config: &'a RunConfig,
}

pub fn sweep(args: &CommonArgs) -> Result<()> {
    let cfg = load(args)?;
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("missing 'sweep' section".into()))?;
    let base = scenario(&cfg)?;
    let a = assumptions(&cfg, &base)?;
    let table = run_sweep(&SweepSpec {
        axis: sweep.axis,
        values: sweep.values,
        base,
    })?;
    let meta = metadata(
        "sweep",
        &a,
        &[
            ("barrier", table.spec.base.contract.barrier.to_string()),
            ("maturity", table.spec.base.contract.maturity.to_string()),
            ("price_unit", "per unit notional".to_string()),
        ],
    );
    let out = SweepOutput {
        command: "sweep",
        assumptions: &a,
        table: &table,
        config: &cfg,
    };
    write_all(
        &args.out_dir,
        &[
            ("sweep.csv", sweep_csv(&table, &meta)),
            ("sweep_curves.csv", sweep_curves_csv(&table)),
            ("sweep.json", json(&out)),
        ],
    )?;
    let failures = table.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{} sweep point(s) failed: {}",
            failures.len(),
            failures.iter().map(|(_, e)| *e).collect::<Vec<_>>().join("; ")
        )))
    }
}

#[derive(Serialize)]
struct EdsOutput<'a> {
    command: &'static str,
    price_bp: f64,
    price: f64,
    notional: f64,
    assumptions: &'a Assumptions,
    ladder: &'a LadderTable,
    config: &'a RunConfig,
}

pub fn eds(args: &CommonArgs) -> Result<()> {
    let cfg = load(args)?;
    let market = cfg.market()?;
    let contract_cfg = cfg
        .contract
        .as_ref()
        .ok_or_else(|| CliError::Config("missing 'contract' section".into()))?;
    let trade = contract_cfg.eds_trade(market.spot)?;
    let contract = trade.contract(market.spot)?;
    contract.validate_against(&market)?;
    let spec = cfg.forward_skew.build(market.spot, contract.barrier)?;
    let quote = price_eds(&trade, &market, &spec, &cfg.solver)?;
    let ladder_cfg = cfg.ladder.clone().unwrap_or_default();
    let ladder = StressLadder {
        rungs: ladder_cfg.rungs,
        mode: ladder_cfg.mode,
    };
    let table = run_ladder(&trade, &market, &spec, &ladder, &cfg.solver)?;
    let mut a = quote.assumptions.clone();
    a.day_count = cfg.market_config()?.day_count.clone();

    let meta = metadata(
        "eds",
        &a,
        &[
            ("spot", market.spot.to_string()),
            ("barrier", contract.barrier.to_string()),
            ("maturity", contract.maturity.to_string()),
            ("notional", trade.notional.to_string()),
            ("price_bp", quote.price_bp.to_string()),
        ],
    );
    let out = EdsOutput {
        command: "eds",
        price_bp: quote.price_bp,
        price: quote.price,
        notional: trade.notional,
        assumptions: &a,
        ladder: &table,
        config: &cfg,
    };
    write_all(
        &args.out_dir,
        &[
            ("eds_density.csv", density_csv(&quote.density, &meta)),
            ("eds_ladder.csv", ladder_csv(&table, &meta)),
            ("eds.json", json(&out)),
        ],
    )?;
    let failed: Vec<String> = table
        .rows
        .iter()
        .filter_map(|r| match &r.outcome {
            firsthit::scenarios::Outcome::Failed { error } => Some(error.clone()),
            firsthit::scenarios::Outcome::Ok(_) => None,
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{} ladder rung(s) failed: {}", failed.len(), failed.join("; "))))
    }
}
