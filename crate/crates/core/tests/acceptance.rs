//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};

use contract_offload::harness::checks::{check_orderings, check_sweep, default_oracle_grid};
use contract_offload::harness::config::ExperimentConfig;
use contract_offload::harness::experiment::{assemble_experiment, run_sweep};
use contract_offload::oracle::{self, OracleMode, PriceGrid};
use contract_offload::{economy, solvers, verifier, EconomyConfig, Error, Mechanism, ValuationKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_contract-offload");
const SQRT: ValuationKind<f64> = ValuationKind::SquareRoot;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn default_config() -> EconomyConfig<f64> {
    EconomyConfig::default_study()
}

fn k2_instance() -> EconomyConfig<f64> {
    EconomyConfig::new(vec![1.0, 1.5], vec![0.5, 0.5], 0.01, SQRT).unwrap()
}

/// PD first-order conditions and full extraction, on the literal integer
/// grid and on the default grid.
fn pd_exactness() -> Outcome {
    let integer = EconomyConfig::uniform((1..=20).map(f64::from).collect(), 0.01, SQRT).map_err(err)?;
    let mut worst: f64 = 0.0;
    for cfg in [integer, default_config()] {
        let menu = solvers::solve_perfect_discrimination(&cfg).map_err(err)?;
        for (k, (b, &th)) in menu.bundles.iter().zip(cfg.theta()).enumerate() {
            let foc = (th * economy::valuation_derivative(SQRT, b.payment).map_err(err)? - 0.01).abs();
            let ext = (b.traffic - th * economy::valuation(SQRT, b.payment).map_err(err)?).abs();
            let v = economy::ap_payoff(th, b, SQRT).map_err(err)?.abs();
            ensure(foc <= 1e-9, format!("type {}: |θv'(T) - c| = {foc:e}", k + 1))?;
            ensure(ext <= 1e-9, format!("type {}: |q - θv(T)| = {ext:e}", k + 1))?;
            ensure(v <= 1e-9, format!("type {}: |V| = {v:e}", k + 1))?;
            worst = worst.max(foc).max(ext).max(v);
        }
    }
    Ok(format!("worst residual {worst:.1e}"))
}

fn monopoly_price() -> Outcome {
    let cfg = default_config();
    let lp = solvers::solve_linear_pricing(&cfg).map_err(err)?;
    let rel = (lp.price_per_unit - 0.02).abs() / 0.02;
    ensure(rel <= 1e-6, format!("P_m = {} (relative error {rel:e})", lp.price_per_unit))?;
    let scan = oracle::oracle_linear_pricing(&cfg, &PriceGrid { p_max: 1.0, points: 2000 }).map_err(err)?;
    let scan_rel = (scan.price - 0.02).abs() / 0.02;
    ensure(scan_rel <= 1e-6, format!("oracle scan P = {} (relative error {scan_rel:e})", scan.price))?;
    let profit = oracle::linear_pricing_profit(&cfg, lp.price_per_unit);
    ensure(profit >= scan.profit - 1e-9, format!("solver profit {profit} below scan {}", scan.profit))?;
    Ok(format!("P_m = {:.12}, scan {:.12}", lp.price_per_unit, scan.price))
}

fn random_regular_config(rng: &mut ChaCha8Rng) -> EconomyConfig<f64> {
    let k = rng.gen_range(2..=3);
    let mut theta: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..4.0)).collect();
    theta.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let beta = raw.iter().map(|b| b / total).collect();
    let c = rng.gen_range(0.005..0.05);
    let valuation = match rng.gen_range(0..3) {
        0 => ValuationKind::SquareRoot,
        1 => ValuationKind::LogOnePlus,
        _ => ValuationKind::PowerAlpha(rng.gen_range(0.3..0.8)),
    };
    EconomyConfig::new(theta, beta, c, valuation).expect("sampled config is valid")
}

fn screening_oracle() -> Outcome {
    let grid = default_oracle_grid();
    let cfg = k2_instance();
    let menu = solvers::solve_anti_adverse_selection(&cfg).map_err(err)?;
    let sol = oracle::oracle_anti_adverse_selection(&cfg, &grid, OracleMode::FullConstraint).map_err(err)?;
    let expected = [(625.0, 25.0), (5625.0, 100.0)];
    for (k, (b, &(t, q))) in menu.bundles.iter().zip(&expected).enumerate() {
        ensure(
            sol.payment_within_final_cell(k, b.payment),
            format!("type {}: T = {} outside oracle cell", k + 1, b.payment),
        )?;
        ensure(
            sol.payment_within_final_cell(k, t),
            format!("type {}: oracle T = {} not near {t}", k + 1, sol.menu.bundles[k].payment),
        )?;
        ensure((b.payment - t).abs() <= 1e-9 * t, format!("type {}: T = {} vs {t}", k + 1, b.payment))?;
        ensure((b.traffic - q).abs() <= 1e-9 * q, format!("type {}: q = {} vs {q}", k + 1, b.traffic))?;
        let oq = sol.menu.bundles[k].traffic;
        let cell = sol.final_log_spacing[k];
        ensure((oq - q).abs() <= cell * q, format!("type {}: oracle q = {oq} vs {q} (cell {cell:e})", k + 1))?;
    }
    let objective = economy::expected_bs_payoff(&menu, &cfg).map_err(err)?;
    ensure(objective >= sol.objective - 1e-6, format!("solver {objective} < oracle {}", sol.objective))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0ff1);
    let mut accepted = 0;
    let mut worst_rel: f64 = 0.0;
    let mut drawn = 0;
    while accepted < 20 {
        drawn += 1;
        ensure(drawn <= 1000, "could not draw 20 regular configs")?;
        let cfg = random_regular_config(&mut rng);
        let Ok(menu) = solvers::solve_anti_adverse_selection(&cfg) else {
            continue;
        };
        accepted += 1;
        let sol = oracle::oracle_anti_adverse_selection(&cfg, &grid, OracleMode::FullConstraint).map_err(err)?;
        let s = economy::expected_bs_payoff(&menu, &cfg).map_err(err)?;
        let rel = (s - sol.objective).abs() / s.abs().max(sol.objective.abs());
        ensure(
            rel <= 5e-3 && s >= sol.objective - 1e-6,
            format!("config {accepted} ({:?}): solver {s}, oracle {}", cfg, sol.objective),
        )?;
        worst_rel = worst_rel.max(rel);
    }
    Ok(format!(
        "K=2 objective {objective:.6} vs oracle {:.6}; 20 random configs ({drawn} drawn), worst relative gap {worst_rel:.1e}",
        sol.objective
    ))
}

fn feasibility() -> Outcome {
    let cfg = default_config();
    let menu = solvers::solve_anti_adverse_selection(&cfg).map_err(err)?;
    let report = verifier::verify(&menu, &cfg).map_err(err)?;
    let k = cfg.num_types();
    ensure(report.ir_slacks.len() == k, "IR count")?;
    let ic_count: usize = report
        .ic_slack_matrix
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().filter(|(j, _)| *j != i).count())
        .sum();
    ensure(ic_count == k * (k - 1), format!("{ic_count} IC checks"))?;
    ensure(report.min_ir_slack() >= -1e-9, format!("min IR slack {}", report.min_ir_slack()))?;
    ensure(report.min_ic_slack() >= -1e-9, format!("min IC slack {}", report.min_ic_slack()))?;
    let adjacent = report.adjacent_downward_ic_slacks();
    let worst_adj = adjacent.iter().fold(0.0_f64, |a, s| a.max(s.abs()));
    ensure(worst_adj <= 1e-9, format!("adjacent downward IC slack {worst_adj:e}"))?;
    let mono = verifier::check_monotonicity(&menu, &cfg).map_err(err)?;
    ensure(mono.payment && mono.traffic, "T or q not strictly increasing")?;
    let v = verifier::check_ir(&menu, &cfg).map_err(err)?;
    ensure(v[1..].windows(2).all(|w| w[1] > w[0]), "V not strictly increasing for k >= 2")?;
    ensure(v[1] > v[0], "V(2) <= V(1)")?;
    Ok(format!(
        "{k} IR + {ic_count} IC; min slacks {:.1e} / {:.1e}; max |adjacent downward IC| {worst_adj:.1e}",
        report.min_ir_slack(),
        report.min_ic_slack()
    ))
}

fn self_revelation() -> Outcome {
    let cfg = default_config();
    let menu = solvers::solve_anti_adverse_selection(&cfg).map_err(err)?;
    let sel = verifier::check_self_revealing(&menu, &cfg).map_err(err)?;
    let table = verifier::selection_payoffs(&menu, &cfg).map_err(err)?;
    ensure(table.len() == 20 && table.iter().all(|r| r.len() == 20), "selection table is not 20x20")?;
    for k in [5usize, 10, 15] {
        ensure(sel.selected[k - 1] == k - 1, format!("type {k} selects bundle {}", sel.selected[k - 1] + 1))?;
        ensure(verifier::is_unimodal(&table[k - 1], 1e-9), format!("type {k} payoffs are not unimodal"))?;
    }
    Ok("types 5, 10, 15 pick their own bundle; payoff sequences unimodal".into())
}

fn experiment() -> Result<contract_offload::harness::experiment::ExperimentResult, String> {
    assemble_experiment(&ExperimentConfig::default()).map_err(err)
}

fn orderings() -> Outcome {
    let result = experiment()?;
    let checks = check_orderings(&result);
    let wanted = ["payment T", "traffic q", "BS payoff", "welfare", "no distortion at the top"];
    for w in wanted {
        let c = checks.iter().find(|c| c.name.contains(w)).ok_or(format!("no check named {w}"))?;
        ensure(c.passed, c.to_string())?;
    }
    let pd = result.table.column(Mechanism::PerfectDiscrimination).unwrap();
    let aas = result.table.column(Mechanism::AntiAdverseSelection).unwrap();
    let top = pd.bundles.len() - 1;
    let dt = (aas.bundles[top].payment - pd.bundles[top].payment).abs();
    let dw = (aas.welfare[top] - pd.welfare[top]).abs();
    ensure(dt <= 1e-9 && dw <= 1e-9, format!("top type: |ΔT| = {dt:e}, |Δwelfare| = {dw:e}"))?;
    Ok(format!("per-type T, q, U, welfare ordered; top |ΔT| = {dt:.1e}, |Δwelfare| = {dw:.1e}"))
}

fn ap_payoffs() -> Outcome {
    let result = experiment()?;
    let pd = result.table.column(Mechanism::PerfectDiscrimination).unwrap();
    let aas = result.table.column(Mechanism::AntiAdverseSelection).unwrap();
    let lp = result.table.column(Mechanism::LinearPricing).unwrap();
    ensure(pd.ap_payoff.iter().all(|v| v.abs() <= 1e-9), "PD leaves a positive AP payoff")?;
    ensure(aas.ap_payoff[0].abs() <= 1e-9, format!("AAS V(1) = {}", aas.ap_payoff[0]))?;
    ensure(aas.ap_payoff.windows(2).all(|w| w[1] > w[0]), "AAS V not strictly increasing")?;
    let crossing: Vec<usize> =
        (0..aas.ap_payoff.len()).filter(|&k| aas.ap_payoff[k] > lp.ap_payoff[k]).map(|k| k + 1).collect();
    let note = if crossing.is_empty() {
        "no type earns more under AAS than LP (reported)".to_string()
    } else {
        format!("types earning more under AAS than LP: {crossing:?} (reported)")
    };
    Ok(format!("PD V = 0, AAS V(1) = 0 and strictly increasing; {note}"))
}

fn sweep() -> Outcome {
    let ks: Vec<usize> = (2..=20).collect();
    let rows = run_sweep(&default_config(), &Mechanism::ALL, &ks).map_err(err)?;
    ensure(rows.iter().map(|r| r.num_types).eq(ks.iter().copied()), "sweep rows out of order")?;
    for c in check_sweep(&rows) {
        ensure(!c.is_failure(), c.to_string())?;
    }
    Ok("K = 2..20 welfare nondecreasing for every mechanism, PD >= AAS >= LP".into())
}

fn run_cli(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(BIN).args(args).arg("--out").arg(out).env_remove("CONTRACT_OFFLOAD_OUT").output().expect("binary runs")
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(err)?;
    let b = tempfile::tempdir().map_err(err)?;
    for dir in [a.path(), b.path()] {
        let out = run_cli(&["reproduce-figures"], dir);
        ensure(
            out.status.code() == Some(0),
            format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)),
        )?;
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).map_err(err)?.map(|e| e.unwrap().file_name()).collect();
    names.sort();
    ensure(names.len() == 6, format!("{} files written", names.len()))?;
    let mut bytes = 0;
    for name in &names {
        let x = fs::read(a.path().join(name)).map_err(err)?;
        let y = fs::read(b.path().join(name)).map_err(err)?;
        ensure(x == y, format!("{name:?} differs between runs"))?;
        bytes += x.len();
    }
    Ok(format!("{} CSV files, {bytes} bytes, identical across runs", names.len()))
}

fn nonregular() -> Outcome {
    let cfg = EconomyConfig::new(vec![1.0, 2.0], vec![0.5, 0.5], 0.01, SQRT).map_err(err)?;
    match solvers::solve_anti_adverse_selection(&cfg) {
        Err(Error::NonRegular { index: 1, .. }) => {}
        other => return Err(format!("solver returned {other:?}")),
    }
    let dir = tempfile::tempdir().map_err(err)?;
    let out = run_cli(&["solve", "--K", "2", "--theta", "1,2", "--beta", "0.5,0.5", "--c", "0.01"], dir.path());
    let stderr = String::from_utf8_lossy(&out.stderr);
    ensure(out.status.code() == Some(1), format!("exit {:?}", out.status.code()))?;
    ensure(stderr.contains("nonregular") && stderr.contains("index 1"), format!("stderr: {stderr}"))?;
    Ok(format!("exit 1: {}", stderr.trim()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("perfect discrimination FOC exactness", pd_exactness),
        ("linear pricing monopoly price", monopoly_price),
        ("screening solver vs brute-force oracle", screening_oracle),
        ("screening menu feasibility", feasibility),
        ("self-revelation of types 5, 10, 15", self_revelation),
        ("cross-mechanism orderings", orderings),
        ("AP payoff structure", ap_payoffs),
        ("welfare sweep over K", sweep),
        ("reproduce-figures determinism", determinism),
        ("nonregular instance detection", nonregular),
    ];
    let default_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("[PASS] criterion {:>2}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {:>2}: {name}: {detail}", i + 1);
            }
        }
    }
    panic::set_hook(default_hook);
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
