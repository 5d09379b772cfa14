//! `k,T,q` menu interchange files.

use crate::economy::{ContractBundle, ContractMenu, Mechanism};

use super::csv::{format_float, CsvTable};
use super::HarnessError;

pub const MENU_HEADER: &str = "k,T,q";

pub fn menu_to_csv(menu: &ContractMenu<f64>) -> String {
    let mut t = CsvTable::new(["k", "T", "q"]);
    for (k, b) in menu.bundles.iter().enumerate() {
        t.push_row(vec![(k + 1).to_string(), format_float(b.payment), format_float(b.traffic)]);
    }
    t.render()
}

/// Reads a menu file. Rows must be numbered `1..=K` in order.
pub fn menu_from_csv(text: &str, mechanism: Mechanism) -> Result<ContractMenu<f64>, HarnessError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| HarnessError::Usage("menu file is empty".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["k", "T", "q"] {
        return Err(HarnessError::Usage(format!("menu header must be '{MENU_HEADER}', found '{header}'")));
    }
    let mut bundles = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || HarnessError::Usage(format!("menu row {}: malformed '{line}'", i + 1));
        if fields.len() != 3 {
            return Err(bad());
        }
        let k: usize = fields[0].parse().map_err(|_| bad())?;
        if k != i + 1 {
            return Err(HarnessError::Usage(format!("menu row {} has k = {k}; rows must be 1..K in order", i + 1)));
        }
        let t: f64 = fields[1].parse().map_err(|_| bad())?;
        let q: f64 = fields[2].parse().map_err(|_| bad())?;
        bundles.push(ContractBundle::new(t, q).map_err(|e| HarnessError::Usage(format!("menu row {}: {e}", i + 1)))?);
    }
    if bundles.is_empty() {
        return Err(HarnessError::Usage("menu file has no rows".into()));
    }
    Ok(ContractMenu::new(mechanism, bundles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::EconomyConfig;
    use crate::solvers::solve_anti_adverse_selection;

    #[test]
    fn round_trip_is_exact() {
        let cfg = EconomyConfig::<f64>::default_study();
        let menu = solve_anti_adverse_selection(&cfg).unwrap();
        let text = menu_to_csv(&menu);
        assert!(text.starts_with("k,T,q\n"));
        let back = menu_from_csv(&text, Mechanism::AntiAdverseSelection).unwrap();
        assert_eq!(back.bundles, menu.bundles);
    }

    #[test]
    fn rejects_malformed_files() {
        let m = Mechanism::LinearPricing;
        assert!(menu_from_csv("", m).is_err());
        assert!(menu_from_csv("k,q,T\n1,2,3\n", m).is_err());
        assert!(menu_from_csv("k,T,q\n", m).is_err());
        assert!(menu_from_csv("k,T,q\n2,1,1\n", m).is_err());
        assert!(menu_from_csv("k,T,q\n1,-1,1\n", m).is_err());
        assert!(menu_from_csv("k,T,q\n1,abc,1\n", m).is_err());
    }
}
