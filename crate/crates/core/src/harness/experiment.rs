use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::economy::{ContractMenu, EconomyConfig, Mechanism};
use crate::solvers;
use crate::verifier::{self, FeasibilityReport, PayoffTable};

use super::checks::{run_oracle_checks, CheckOutcome};
use super::config::ExperimentConfig;
use super::csv::{format_float, CsvTable};
use super::HarnessError;

pub const CONTRACT_MENUS_CSV: &str = "contract_menus.csv";
pub const SELECTION_PAYOFFS_CSV: &str = "selection_payoffs.csv";
pub const PAYOFFS_BS_CSV: &str = "payoffs_bs.csv";
pub const PAYOFFS_AP_CSV: &str = "payoffs_ap.csv";
pub const WELFARE_CSV: &str = "welfare.csv";
pub const SWEEP_CSV: &str = "sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanismAggregate {
    pub mechanism: Mechanism,
    pub expected_bs_payoff: f64,
    pub expected_ap_payoff: f64,
    pub expected_welfare: f64,
}

/// Expected payoffs of every mechanism at one type count.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub num_types: usize,
    pub aggregates: Vec<MechanismAggregate>,
}

impl SweepRow {
    pub fn get(&self, mechanism: Mechanism) -> Option<&MechanismAggregate> {
        self.aggregates.iter().find(|a| a.mechanism == mechanism)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub table: PayoffTable<f64>,
    pub reports: Vec<(Mechanism, FeasibilityReport<f64>)>,
    /// Row `k`: type `k`'s payoff from every bundle of the screening menu.
    pub selection_payoffs: Option<Vec<Vec<f64>>>,
    pub sweep_rows: Option<Vec<SweepRow>>,
    pub oracle_checks: Vec<CheckOutcome>,
}

impl ExperimentResult {
    pub fn report(&self, mechanism: Mechanism) -> Option<&FeasibilityReport<f64>> {
        self.reports.iter().find(|(m, _)| *m == mechanism).map(|(_, r)| r)
    }

    pub fn aggregates(&self) -> Vec<MechanismAggregate> {
        aggregates_of(&self.table)
    }
}

pub fn aggregates_of(table: &PayoffTable<f64>) -> Vec<MechanismAggregate> {
    table
        .columns
        .iter()
        .map(|c| MechanismAggregate {
            mechanism: c.mechanism,
            expected_bs_payoff: c.expected_bs_payoff,
            expected_ap_payoff: c.expected_ap_payoff,
            expected_welfare: c.expected_welfare,
        })
        .collect()
}

/// Menus with their feasibility reports, in the requested mechanism order.
pub type Solved = (Vec<ContractMenu<f64>>, Vec<(Mechanism, FeasibilityReport<f64>)>);

/// Solves each mechanism and rejects any menu that fails the constraints it
/// is bound by.
pub fn solve_and_verify(economy: &EconomyConfig<f64>, mechanisms: &[Mechanism]) -> Result<Solved, HarnessError> {
    let mut menus = Vec::with_capacity(mechanisms.len());
    let mut reports = Vec::with_capacity(mechanisms.len());
    for &mechanism in mechanisms {
        let menu = solvers::solve(economy, mechanism)?;
        let report = verifier::verify(&menu, economy)?;
        if !report.is_feasible_for(mechanism) {
            let (constraint, slack) = report
                .first_violation(mechanism.requires_incentive_compatibility())
                .unwrap_or_else(|| ("unknown constraint".into(), f64::NAN));
            return Err(HarnessError::Infeasible { mechanism, constraint, slack });
        }
        menus.push(menu);
        reports.push((mechanism, report));
    }
    Ok((menus, reports))
}

/// Expected payoffs of each mechanism for every `K` in `type_counts`, on the
/// default grid with uniform probabilities.
pub fn run_sweep(
    base: &EconomyConfig<f64>,
    mechanisms: &[Mechanism],
    type_counts: &[usize],
) -> Result<Vec<SweepRow>, HarnessError> {
    type_counts.par_iter().map(|&k| sweep_point(k, base, mechanisms)).collect()
}

fn sweep_point(
    num_types: usize,
    base: &EconomyConfig<f64>,
    mechanisms: &[Mechanism],
) -> Result<SweepRow, HarnessError> {
    let economy = EconomyConfig::default_grid(num_types, base.unit_cost(), base.valuation())?;
    let (menus, _) = solve_and_verify(&economy, mechanisms)?;
    let table = verifier::payoff_table(&menus, &economy)?;
    Ok(SweepRow { num_types, aggregates: aggregates_of(&table) })
}

/// Solves, verifies and tabulates without touching the filesystem.
pub fn assemble_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    let (menus, reports) = solve_and_verify(&cfg.economy, &cfg.mechanisms)?;
    let table = verifier::payoff_table(&menus, &cfg.economy)?;
    let selection_payoffs = menus
        .iter()
        .find(|m| m.mechanism == Mechanism::AntiAdverseSelection)
        .map(|m| verifier::selection_payoffs(m, &cfg.economy))
        .transpose()?;
    let sweep_rows = cfg.sweep.as_ref().map(|ks| run_sweep(&cfg.economy, &cfg.mechanisms, ks)).transpose()?;
    let oracle_checks = if cfg.emit_oracle_checks { run_oracle_checks(&cfg.economy) } else { Vec::new() };
    Ok(ExperimentResult { table, reports, selection_payoffs, sweep_rows, oracle_checks })
}

/// Assembles the experiment and writes its CSV files to `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    let result = assemble_experiment(cfg)?;
    emit_figure_data(&result, &cfg.output_dir)?;
    Ok(result)
}

fn per_type_table(
    table: &PayoffTable<f64>,
    prefixes: &[&str],
    cells: impl Fn(&verifier::MechanismColumn<f64>, usize) -> Vec<f64>,
) -> CsvTable {
    let mut header = vec!["k".to_string(), "theta".to_string()];
    for col in &table.columns {
        for p in prefixes {
            header.push(format!("{p}_{}", col.mechanism.code()));
        }
    }
    let mut csv = CsvTable::new(header);
    for k in 0..table.num_types() {
        let mut row = vec![(k + 1).to_string(), format_float(table.theta[k])];
        for col in &table.columns {
            row.extend(cells(col, k).into_iter().map(format_float));
        }
        csv.push_row(row);
    }
    csv
}

/// Renders every figure table as `(file name, contents)`.
pub fn render_figure_data(result: &ExperimentResult) -> Vec<(&'static str, String)> {
    let t = &result.table;
    let mut files = vec![
        (
            CONTRACT_MENUS_CSV,
            per_type_table(t, &["T", "q"], |c, k| vec![c.bundles[k].payment, c.bundles[k].traffic]).render(),
        ),
        (PAYOFFS_BS_CSV, per_type_table(t, &["U"], |c, k| vec![c.bs_payoff[k]]).render()),
        (PAYOFFS_AP_CSV, per_type_table(t, &["V"], |c, k| vec![c.ap_payoff[k]]).render()),
        (WELFARE_CSV, per_type_table(t, &["welfare"], |c, k| vec![c.welfare[k]]).render()),
    ];
    if let Some(sel) = &result.selection_payoffs {
        let mut header = vec!["k".to_string(), "theta".to_string()];
        header.extend((1..=sel.len()).map(|l| format!("bundle_{l}")));
        let mut csv = CsvTable::new(header);
        for (k, row) in sel.iter().enumerate() {
            let mut cells = vec![(k + 1).to_string(), format_float(t.theta[k])];
            cells.extend(row.iter().map(|&x| format_float(x)));
            csv.push_row(cells);
        }
        files.insert(1, (SELECTION_PAYOFFS_CSV, csv.render()));
    }
    if let Some(rows) = &result.sweep_rows {
        files.push((SWEEP_CSV, render_sweep(rows)));
    }
    files
}

/// Per-K expected payoffs, columns grouped by quantity then mechanism.
pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mechs: Vec<Mechanism> =
        rows.first().map(|r| r.aggregates.iter().map(|a| a.mechanism).collect()).unwrap_or_default();
    let mut header = vec!["K".to_string()];
    for p in ["U", "V", "welfare"] {
        header.extend(mechs.iter().map(|m| format!("{p}_{}", m.code())));
    }
    let mut csv = CsvTable::new(header);
    let picks: [fn(&MechanismAggregate) -> f64; 3] =
        [|a| a.expected_bs_payoff, |a| a.expected_ap_payoff, |a| a.expected_welfare];
    for row in rows {
        let mut cells = vec![row.num_types.to_string()];
        for pick in picks {
            cells.extend(mechs.iter().map(|&m| format_float(row.get(m).map_or(f64::NAN, pick))));
        }
        csv.push_row(cells);
    }
    csv.render()
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Io { path: path.to_path_buf(), source };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Writes the figure tables into `output_dir`, returning the paths written.
pub fn emit_figure_data(result: &ExperimentResult, output_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    for (name, contents) in render_figure_data(result) {
        let path = output_dir.join(name);
        write_atomic(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pd_only_has_zero_ap_column() {
        let cfg = ExperimentConfig { mechanisms: vec![Mechanism::PerfectDiscrimination], ..Default::default() };
        let result = assemble_experiment(&cfg).unwrap();
        assert_eq!(result.table.columns.len(), 1);
        assert!(result.table.columns[0].ap_payoff.iter().all(|v| v.abs() <= 1e-9));
        assert!(result.selection_payoffs.is_none());
        let files = render_figure_data(&result);
        let names: Vec<&str> = files.iter().map(|f| f.0).collect();
        assert_eq!(names, vec![CONTRACT_MENUS_CSV, PAYOFFS_BS_CSV, PAYOFFS_AP_CSV, WELFARE_CSV]);
        assert!(files[2].1.starts_with("k,theta,V_pd\n"));
    }

    #[test]
    fn headers_for_full_run() {
        let cfg = ExperimentConfig { sweep: Some(vec![2, 3]), ..Default::default() };
        let result = assemble_experiment(&cfg).unwrap();
        let files = render_figure_data(&result);
        let header = |name: &str| files.iter().find(|f| f.0 == name).unwrap().1.lines().next().unwrap().to_string();
        assert_eq!(header(WELFARE_CSV), "k,theta,welfare_pd,welfare_aas,welfare_lp");
        assert_eq!(header(CONTRACT_MENUS_CSV), "k,theta,T_pd,q_pd,T_aas,q_aas,T_lp,q_lp");
        assert_eq!(header(PAYOFFS_BS_CSV), "k,theta,U_pd,U_aas,U_lp");
        assert!(header(SELECTION_PAYOFFS_CSV).ends_with(",bundle_19,bundle_20"));
        assert_eq!(header(SWEEP_CSV), "K,U_pd,U_aas,U_lp,V_pd,V_aas,V_lp,welfare_pd,welfare_aas,welfare_lp");
        for (_, body) in &files {
            assert!(!body.contains('\r'));
        }
    }

    #[test]
    fn aggregates_match_weighted_sums() {
        let result = assemble_experiment(&ExperimentConfig::default()).unwrap();
        for col in &result.table.columns {
            let w: f64 = col.welfare.iter().zip(&result.table.beta).map(|(x, b)| x * b).sum();
            assert!((w - col.expected_welfare).abs() <= 1e-9);
            assert!((col.expected_welfare - col.expected_bs_payoff - col.expected_ap_payoff).abs() <= 1e-9);
        }
    }

    #[test]
    fn nonregular_economy_aborts() {
        let economy = EconomyConfig::new(vec![1.0, 2.0], vec![0.5, 0.5], 0.01, Default::default()).unwrap();
        let cfg = ExperimentConfig { economy, ..Default::default() };
        let err = assemble_experiment(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("nonregular instance at type index 1"));
    }
}
