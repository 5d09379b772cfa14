//! `contract-offload` command line.
//!
//! Exit codes: 0 success, 1 infeasible/nonregular instance or failed check,
//! 2 usage error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::economy::{EconomyConfig, Mechanism, ValuationKind};
use crate::verifier;

use super::checks::{check_orderings, check_sweep, run_oracle_checks, CheckOutcome};
use super::config::{default_sweep, ConfigOverrides, OUTPUT_DIR_ENV};
use super::experiment::{self, run_experiment, solve_and_verify, write_atomic, MechanismAggregate};
use super::menu_io::{menu_from_csv, menu_to_csv};
use super::HarnessError;

#[derive(Debug, Parser)]
#[command(name = "contract-offload", version, about = "Contract menus for incentivized traffic offloading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
struct CommonArgs {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// sqrt | log1p | power:<alpha>
    #[arg(long, global = true)]
    valuation: Option<String>,
    /// BS unit payment cost
    #[arg(long = "c", global = true)]
    c: Option<f64>,
    /// Number of types
    #[arg(long = "K", visible_alias = "k", global = true)]
    num_types: Option<usize>,
    /// Comma-separated increasing type values
    #[arg(long, value_delimiter = ',', global = true)]
    theta: Option<Vec<f64>>,
    /// Comma-separated type probabilities
    #[arg(long, value_delimiter = ',', global = true)]
    beta: Option<Vec<f64>>,
    /// Output directory (overrides CONTRACT_OFFLOAD_OUT and the config file)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cross-check the solvers against brute-force oracles
    #[arg(long, global = true)]
    with_oracle: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the requested mechanisms and write one menu file per mechanism
    Solve {
        /// Comma-separated subset of pd,aas,lp
        #[arg(long, value_delimiter = ',')]
        mechanisms: Option<Vec<String>>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check a k,T,q menu file against the configured economy
    Verify {
        #[arg(long)]
        menu: PathBuf,
        /// Judge feasibility under this mechanism's constraints (pd: IR only);
        /// by default both IR and IC must hold
        #[arg(long)]
        mechanism: Option<String>,
        /// Write the per-type feasibility report as CSV
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Expected payoffs as the number of types varies
    Sweep {
        /// Comma-separated type counts (default 2..20)
        #[arg(long = "k-values", value_delimiter = ',')]
        k_values: Option<Vec<usize>>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the default study end to end and write every figure table
    ReproduceFigures {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare every solver with its brute-force oracle
    OracleCheck {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn usage(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Usage(e.to_string())
}

impl CommonArgs {
    fn overrides(&self) -> Result<ConfigOverrides, HarnessError> {
        let file = match &self.config {
            Some(path) => ConfigOverrides::load(path)?,
            None => ConfigOverrides::default(),
        };
        let valuation = self.valuation.as_deref().map(str::parse::<ValuationKind<f64>>).transpose().map_err(usage)?;
        let cli = ConfigOverrides {
            num_types: self.num_types,
            theta: self.theta.clone(),
            beta: self.beta.clone(),
            unit_cost: self.c,
            valuation,
            // the environment outranks the config file, --out outranks both
            output_dir: self.out.clone().or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from)),
            emit_oracle_checks: self.with_oracle.then_some(true),
            ..Default::default()
        };
        Ok(file.merge(cli))
    }
}

fn print_checks(checks: &[CheckOutcome]) -> bool {
    for c in checks {
        println!("{c}");
    }
    checks.iter().all(|c| !c.is_failure())
}

fn print_aggregates(aggregates: &[MechanismAggregate]) {
    println!("{:<6} {:>16} {:>16} {:>16}", "mech", "E[U] (BS)", "E[V] (AP)", "welfare");
    for a in aggregates {
        println!(
            "{:<6} {:>16.6} {:>16.6} {:>16.6}",
            a.mechanism.code(),
            a.expected_bs_payoff,
            a.expected_ap_payoff,
            a.expected_welfare
        );
    }
}

fn failed(ok: bool) -> Result<i32, HarnessError> {
    Ok(if ok { 0 } else { 1 })
}

fn solve(mechanisms: Option<Vec<String>>, common: &CommonArgs) -> Result<i32, HarnessError> {
    let mut overrides = common.overrides()?;
    if let Some(ms) = mechanisms {
        overrides.mechanisms =
            Some(ms.iter().map(|m| m.parse::<Mechanism>()).collect::<Result<_, _>>().map_err(usage)?);
    }
    let cfg = overrides.build()?;
    let (menus, reports) = solve_and_verify(&cfg.economy, &cfg.mechanisms)?;
    for (menu, (mechanism, report)) in menus.iter().zip(&reports) {
        println!("== {mechanism} ==");
        if let Some(p) = menu.price_per_unit {
            println!("monopoly price P_m = {p:.9}");
        }
        println!("{:>4} {:>12} {:>20} {:>20}", "k", "theta", "T", "q");
        for (k, (b, th)) in menu.bundles.iter().zip(cfg.economy.theta()).enumerate() {
            println!("{:>4} {:>12.6} {:>20.9} {:>20.9}", k + 1, th, b.payment, b.traffic);
        }
        print!("{}", report.summary(Some(*mechanism)));
        write_atomic(&cfg.output_dir.join(format!("menu_{}.csv", mechanism.code())), &menu_to_csv(menu))?;
        write_atomic(&cfg.output_dir.join(format!("feasibility_{}.csv", mechanism.code())), &report.to_csv())?;
    }
    let table = verifier::payoff_table(&menus, &cfg.economy)?;
    print_aggregates(&experiment::aggregates_of(&table));
    let mut ok = true;
    if cfg.emit_oracle_checks {
        ok &= print_checks(&run_oracle_checks(&cfg.economy));
    }
    println!("menus written to {}", cfg.output_dir.display());
    failed(ok)
}

fn verify(
    menu_path: &PathBuf,
    mechanism: Option<String>,
    report_path: Option<PathBuf>,
    common: &CommonArgs,
) -> Result<i32, HarnessError> {
    let mechanism = mechanism.as_deref().map(str::parse::<Mechanism>).transpose().map_err(usage)?;
    let text = std::fs::read_to_string(menu_path)
        .map_err(|e| HarnessError::Usage(format!("cannot read menu {}: {e}", menu_path.display())))?;
    let menu = menu_from_csv(&text, mechanism.unwrap_or(Mechanism::AntiAdverseSelection))?;
    let mut overrides = common.overrides()?;
    if overrides.num_types.is_none() && overrides.theta.is_none() && overrides.beta.is_none() {
        overrides.num_types = Some(menu.len());
    }
    let economy = overrides.economy()?;
    if economy.num_types() != menu.len() {
        return Err(HarnessError::Usage(format!(
            "menu has {} rows but the economy has {} types",
            menu.len(),
            economy.num_types()
        )));
    }
    let report = verifier::verify(&menu, &economy)?;
    print!("{}", report.summary(mechanism));
    if let Some(path) = report_path {
        write_atomic(&path, &report.to_csv())?;
    }
    let ok = match mechanism {
        Some(m) => report.is_feasible_for(m),
        None => report.is_feasible(),
    };
    if !ok {
        let require_ic = mechanism.is_none_or(Mechanism::requires_incentive_compatibility);
        if let Some((constraint, slack)) = report.first_violation(require_ic) {
            eprintln!("infeasible: {constraint} has slack {slack:.6e}");
        }
    }
    failed(ok)
}

fn sweep(k_values: Option<Vec<usize>>, common: &CommonArgs) -> Result<i32, HarnessError> {
    let mut overrides = common.overrides()?;
    if let Some(ks) = k_values {
        overrides.sweep = Some(ks);
    }
    if overrides.sweep.is_none() {
        overrides.sweep = Some(default_sweep());
    }
    let cfg = overrides.build()?;
    let ks = cfg.sweep.clone().unwrap_or_default();
    let rows = experiment::run_sweep(&cfg.economy, &cfg.mechanisms, &ks)?;
    let sweep_csv = experiment::render_sweep(&rows);
    let path = cfg.output_dir.join(experiment::SWEEP_CSV);
    write_atomic(&path, &sweep_csv)?;
    for row in &rows {
        println!("K = {}", row.num_types);
        print_aggregates(&row.aggregates);
    }
    let ok = print_checks(&check_sweep(&rows));
    println!("wrote {}", path.display());
    failed(ok)
}

fn reproduce_figures(common: &CommonArgs) -> Result<i32, HarnessError> {
    let mut overrides = common.overrides()?;
    if overrides.sweep.is_none() {
        overrides.sweep = Some(default_sweep());
    }
    let cfg = overrides.build()?;
    let result = run_experiment(&cfg)?;
    print_aggregates(&result.aggregates());
    let mut checks = check_orderings(&result);
    if let Some(rows) = &result.sweep_rows {
        checks.extend(check_sweep(rows));
    }
    checks.extend(result.oracle_checks.iter().cloned());
    let ok = print_checks(&checks);
    println!("figure data written to {}", cfg.output_dir.display());
    failed(ok)
}

fn oracle_check(common: &CommonArgs) -> Result<i32, HarnessError> {
    let overrides = common.overrides()?;
    let unset = overrides.num_types.is_none() && overrides.theta.is_none() && overrides.beta.is_none();
    let mut economy = if unset {
        EconomyConfig::new(vec![1.0, 1.5], vec![0.5, 0.5], 0.01, ValuationKind::SquareRoot)?
    } else {
        overrides.economy()?
    };
    if unset {
        if let Some(c) = overrides.unit_cost {
            economy = economy.with_unit_cost(c)?;
        }
        if let Some(v) = overrides.valuation {
            economy = economy.with_valuation(v)?;
        }
    }
    println!(
        "theta = {:?}, beta = {:?}, c = {}, valuation = {}",
        economy.theta(),
        economy.beta(),
        economy.unit_cost(),
        economy.valuation()
    );
    failed(print_checks(&run_oracle_checks(&economy)))
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Solve { mechanisms, common } => solve(mechanisms, &common),
        Command::Verify { menu, mechanism, report, common } => verify(&menu, mechanism, report, &common),
        Command::Sweep { k_values, common } => sweep(k_values, &common),
        Command::ReproduceFigures { common } => reproduce_figures(&common),
        Command::OracleCheck { common } => oracle_check(&common),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
