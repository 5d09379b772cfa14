use contract_offload::harness::menu_io::{menu_from_csv, menu_to_csv};
use contract_offload::{economy, solvers, verifier, EconomyConfig, Error, Mechanism, ValuationKind};
use proptest::prelude::*;

fn valuation() -> impl Strategy<Value = ValuationKind<f64>> {
    prop_oneof![
        Just(ValuationKind::SquareRoot),
        Just(ValuationKind::LogOnePlus),
        (0.2..0.85f64).prop_map(ValuationKind::PowerAlpha),
    ]
}

/// Random economies; half of them put more mass on low types, which keeps
/// most of those regular.
fn economy() -> impl Strategy<Value = EconomyConfig<f64>> {
    (2usize..8)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.02..1.0f64, k),
                prop::collection::vec(0.05..1.0f64, k),
                0.002..0.05f64,
                valuation(),
                any::<bool>(),
            )
        })
        .prop_map(|(steps, mut raw, c, v, descending)| {
            if descending {
                raw.sort_by(|a, b| b.partial_cmp(a).unwrap());
            }
            let mut theta = Vec::with_capacity(steps.len());
            let mut acc = 0.5;
            for s in steps {
                acc += s;
                theta.push(acc);
            }
            let total: f64 = raw.iter().sum();
            let beta = raw.iter().map(|b| b / total).collect();
            EconomyConfig::new(theta, beta, c, v).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn screening_menus_are_feasible(cfg in economy()) {
        let menu = match solvers::solve_anti_adverse_selection(&cfg) {
            Ok(m) => m,
            Err(Error::NonRegular { .. }) | Err(Error::NonMonotoneAllocation { .. }) => return Ok(()),
            // bounded marginal valuation: the optimum would exclude a type
            Err(Error::NoSolution(_)) if cfg.valuation() == ValuationKind::LogOnePlus => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        let report = verifier::verify(&menu, &cfg).unwrap();
        let scale = menu.traffic().fold(1.0f64, f64::max);
        prop_assert!(report.min_ir_slack() >= -1e-9 * scale, "{}", report.min_ir_slack());
        prop_assert!(report.min_ic_slack() >= -1e-9 * scale, "{}", report.min_ic_slack());
        prop_assert!(report.ir_slacks[0].abs() <= 1e-9 * scale);
        for s in report.adjacent_downward_ic_slacks() {
            prop_assert!(s.abs() <= 1e-9 * scale, "{s}");
        }
        prop_assert!(report.monotone_payment && report.monotone_traffic);
    }

    #[test]
    fn regular_instances_are_solved(cfg in economy()) {
        let mu = solvers::kkt_multipliers(&cfg);
        let regular = solvers::regularity_margins(&cfg, &mu).iter().all(|&m| m > 0.0);
        match solvers::solve_anti_adverse_selection(&cfg) {
            Ok(_) | Err(Error::NonMonotoneAllocation { .. }) => prop_assert!(regular),
            Err(Error::NoSolution(_)) => prop_assert!(regular && cfg.valuation() == ValuationKind::LogOnePlus),
            Err(Error::NonRegular { index, margin }) => {
                prop_assert!(!regular);
                prop_assert!(margin <= 0.0 && index >= 1 && index < cfg.num_types());
            }
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        }
    }

    #[test]
    fn expected_payoffs_are_ordered(cfg in economy()) {
        let Ok(aas) = solvers::solve_anti_adverse_selection(&cfg) else { return Ok(()) };
        let pd = solvers::solve_perfect_discrimination(&cfg).unwrap();
        let lp = solvers::solve_linear_pricing(&cfg).unwrap().menu;
        let u = |m| economy::expected_bs_payoff(m, &cfg).unwrap();
        let w = |m| economy::social_welfare(m, &cfg).unwrap();
        let tol = 1e-9 * w(&pd).abs().max(1.0);
        prop_assert!(u(&pd) >= u(&aas) - tol);
        prop_assert!(u(&aas) >= u(&lp) - tol, "aas {} lp {}", u(&aas), u(&lp));
        prop_assert!(w(&pd) >= w(&aas) - tol);
        prop_assert!(w(&pd) >= w(&lp) - tol);
    }

    #[test]
    fn payoffs_split_welfare(cfg in economy()) {
        for m in Mechanism::ALL {
            let Ok(menu) = solvers::solve(&cfg, m) else { continue };
            let u = economy::expected_bs_payoff(&menu, &cfg).unwrap();
            let v = economy::expected_ap_payoff(&menu, &cfg).unwrap();
            let w = economy::social_welfare(&menu, &cfg).unwrap();
            prop_assert!((u + v - w).abs() <= 1e-9 * w.abs().max(1.0));
        }
    }

    #[test]
    fn linear_pricing_menus_are_self_selected(cfg in economy()) {
        let lp = solvers::solve_linear_pricing(&cfg).unwrap();
        prop_assert!(lp.price_per_unit > cfg.unit_cost());
        let report = verifier::verify(&lp.menu, &cfg).unwrap();
        let scale = lp.menu.traffic().fold(1.0f64, f64::max);
        prop_assert!(report.min_ir_slack() >= -1e-9 * scale);
        prop_assert!(report.min_ic_slack() >= -1e-9 * scale);
    }

    #[test]
    fn menu_csv_round_trips(cfg in economy()) {
        let menu = solvers::solve_perfect_discrimination(&cfg).unwrap();
        let back = menu_from_csv(&menu_to_csv(&menu), Mechanism::PerfectDiscrimination).unwrap();
        prop_assert_eq!(back.bundles, menu.bundles);
    }
}
