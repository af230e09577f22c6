use super::*;
use crate::grid::test_grids::*;
use crate::milp::{solve_milp, write_lp};

fn candidate_line(fl_limit: f64) -> Grid {
    let mut g = two_bus();
    g.buses[1].demand_p = vec![0.0];
    g.lines[0].s_max = fl_limit;
    g.gens.push(unit("c", "1", GenKind::PvCandidate, 1.0, &[1.0]));
    g
}

#[test]
fn residual_demand_examples() {
    let mut g = two_bus();
    g.buses[1].demand_p = vec![0.0014];
    let s = Scenario::new(0.7, Case::A);
    assert!((residual_demand(&g, &s, 0, 1) - 0.0014).abs() < 1e-15);

    g.buses[1].demand_p = vec![1.0];
    g.gens.push(unit("w", "1", GenKind::Wind, 3.0, &[1.0]));
    assert_eq!(residual_demand(&g, &s, 0, 1), 0.0);

    let mut g = two_bus();
    g.buses[1].demand_p = vec![1.0];
    g.gens.push(unit("pv", "1", GenKind::PvExistingFixed, 2.0, &[1.0]));
    assert_eq!(residual_demand(&g, &Scenario::new(1.0, Case::B), 0, 1), 1.0);
    assert_eq!(residual_demand(&g, &Scenario::new(1.0, Case::A), 0, 1), 0.0);
}

#[test]
fn demand_multiplier_scales_residual() {
    let mut g = two_bus();
    g.buses[1].demand_p = vec![2.0];
    let s = Scenario::new(1.0, Case::A).with_demand_multiplier(1.2);
    assert!((residual_demand(&g, &s, 0, 1) - 2.4).abs() < 1e-12);
}

#[test]
fn household_rule_values() {
    let (produced, curtailed) = curtailment_rule(7.0, 7.0, 1.4, 0.7);
    assert!((curtailed - 0.7).abs() < 1e-9);
    assert!((produced - 6.3).abs() < 1e-9);
    assert!((produced - 1.4 - 4.9).abs() < 1e-9);
    let (_, curtailed) = curtailment_rule(7.0, 7.0, 0.0, 0.7);
    assert!((curtailed - 2.1).abs() < 1e-9);
    assert_eq!(curtailment_rule(5.0, 7.0, 0.0, 1.0), (5.0, 0.0));
    assert_eq!(curtailment_rule(7.0, 7.0, 0.0, 1.0), (7.0, 0.0));
}

#[test]
fn unconstrained_expansion_saturates_its_bound() {
    let g = Grid {
        base_mva: 1.0,
        base_kv: 0.4,
        hour_duration_h: 1.0,
        hour_count: 1,
        buses: vec![bus("0", &[0.0], true)],
        lines: vec![],
        gens: vec![unit("c", "0", GenKind::PvCandidate, 1.0, &[1.0])],
    };
    let cfg = SolverConfig::default();
    let inst = build_problem(&g, &Scenario::new(1.0, Case::A), &cfg).unwrap();
    assert_eq!(inst.mip.binaries.len(), 1);
    // scal, 4 exchange, p, sp, 4 bus slacks, alpha.
    assert_eq!(inst.mip.lp.var_count(), 12);
    let plan = extract_solution(&inst, &solve_milp(&inst.mip, &cfg), &g).unwrap();
    assert_eq!(plan.status, PlanStatus::Optimal);
    assert!((plan.scal_star - cfg.scal_max).abs() < 1e-6);
}

#[test]
fn single_thermal_limit_binds() {
    let g = candidate_line(5.0);
    let cfg = SolverConfig::default();
    let plan = plan(&g, &Scenario::new(1.0, Case::A), &cfg).unwrap();
    assert_eq!(plan.status, PlanStatus::Optimal);
    assert!((plan.scal_star - 5.0).abs() < 1e-6, "{}", plan.scal_star);
    assert!((plan.added_capacity_mw - 5.0).abs() < 1e-6);
    assert_eq!(plan.slack_usage, 0.0);
}

#[test]
fn overloaded_grid_is_infeasible_at_zero() {
    let mut g = candidate_line(5.0);
    g.gens.push(unit("old", "1", GenKind::PvExistingFixed, 6.0, &[1.0]));
    let p = plan(&g, &Scenario::new(1.0, Case::A), &SolverConfig::default()).unwrap();
    assert_eq!(p.status, PlanStatus::InfeasibleAtZero);
    assert!((p.slack_usage - 1.0).abs() < 1e-6);
    assert!(p.scal_star.abs() < 1e-9);
}

#[test]
fn feed_in_limit_raises_thermal_hosting() {
    let g = candidate_line(5.0);
    let plan = plan(&g, &Scenario::new(0.7, Case::A), &SolverConfig::default()).unwrap();
    assert!((plan.scal_star - 5.0 / 0.7).abs() < 1e-5, "{}", plan.scal_star);
    let hr = &plan.hours[0];
    assert_eq!(hr.alpha[1], Some(true));
    assert!((hr.generation[0] - 5.0).abs() < 1e-6);
    assert!((hr.curtailment[0] - 0.3 * 5.0 / 0.7).abs() < 1e-6);
    assert!((hr.flow_p[0] - 5.0).abs() < 1e-6);
}

#[test]
fn household_node_reproduces_rule() {
    // 7 kWp candidate with 1.4 kW demand at full sun, scal pinned to 1.
    let mut g = two_bus();
    g.buses[1].demand_p = vec![0.0014];
    g.lines[0].s_max = 1.0;
    g.gens.push(unit("c", "1", GenKind::PvCandidate, 0.007, &[1.0]));
    let cfg = SolverConfig {
        scal_max: 1.0,
        ..SolverConfig::default()
    };
    let plan = plan(&g, &Scenario::new(0.7, Case::A), &cfg).unwrap();
    let hr = &plan.hours[0];
    assert!((plan.scal_star - 1.0).abs() < 1e-9);
    assert!((hr.curtailment[0] - 0.0007).abs() < 1e-9);
    assert!((hr.injection_p[1] - 0.0049).abs() < 1e-9);
}

fn mixed_grid() -> Grid {
    let mut g = two_bus();
    g.hour_count = 3;
    g.buses[0].demand_p = vec![0.0; 3];
    g.buses[0].demand_q = vec![0.0; 3];
    g.buses[1].demand_p = vec![0.3, 0.1, 0.0];
    g.buses[1].demand_q = vec![0.0; 3];
    g.buses.push(bus("2", &[0.2, 0.4, 0.1], false));
    g.lines.push(line("1", "2", 0.02, 4.0));
    g.lines[0].s_max = 6.0;
    g.gens.push(unit("old", "1", GenKind::PvExistingScalable, 1.0, &[0.9, 0.5, 0.0]));
    g.gens.push(unit("c1", "1", GenKind::PvCandidate, 1.0, &[0.9, 0.5, 0.0]));
    g.gens.push(unit("c2", "2", GenKind::PvCandidate, 0.5, &[0.8, 0.6, 0.1]));
    g.gens.push(unit("w", "2", GenKind::Wind, 0.3, &[0.2, 1.0, 0.5]));
    g
}

#[test]
fn solution_realizes_indicator_logic() {
    let g = mixed_grid();
    for case in [Case::A, Case::B] {
        for fl in [1.0, 0.8, 0.7] {
            let cfg = SolverConfig::default();
            let inst = build_problem(&g, &Scenario::new(fl, case), &cfg).unwrap();
            let sol = solve_milp(&inst.mip, &cfg);
            let plan = extract_solution(&inst, &sol, &g).unwrap();
            assert_eq!(plan.status, PlanStatus::Optimal);
            for (hv, hr) in inst.hours.iter().zip(&plan.hours) {
                for g_ in 0..g.gens.len() {
                    let r = hr.generation[g_] + hr.curtailment[g_] - hr.available[g_];
                    assert!(r.abs() <= 1e-7, "availability residual {r}");
                }
                let index = g.index().unwrap();
                for (i, a) in hr.alpha.iter().enumerate() {
                    let Some(a) = a else { continue };
                    let elig: Vec<usize> = index.gens_at_bus[i].iter().copied().filter(|&u| inst.eligible[u]).collect();
                    let sp: f64 = elig.iter().map(|&u| hr.curtailment[u]).sum();
                    let p: f64 = elig.iter().map(|&u| hr.generation[u]).sum();
                    let t = hv.terms[i];
                    if *a {
                        assert!((p - fl * t.cap(plan.scal_star) - t.residual).abs() <= 1e-6);
                    } else {
                        assert!(sp <= 1e-7);
                    }
                    let (rule_p, _) = curtailment_rule(t.avail(plan.scal_star), t.cap(plan.scal_star), t.residual, fl);
                    assert!((rule_p - p).abs() <= 1e-6, "rule {rule_p} vs {p}");
                }
            }
        }
    }
}

#[test]
fn cost_scaling_keeps_the_argmin() {
    let g = mixed_grid();
    let cfg = SolverConfig::default();
    let base = Scenario::new(0.8, Case::B);
    let a = plan(&g, &base, &cfg).unwrap();
    let mut scaled = base.clone();
    scaled.costs = base.costs.scaled(3.5);
    let b = plan(&g, &scaled, &cfg).unwrap();
    assert!((a.scal_star - b.scal_star).abs() <= 1e-9);
    let alphas = |p: &PlanResult| p.hours.iter().map(|h| h.alpha.clone()).collect::<Vec<_>>();
    assert_eq!(alphas(&a), alphas(&b));
    assert!((b.objective - 3.5 * a.objective).abs() <= 1e-6 * a.objective.abs().max(1.0));
}

#[test]
fn non_eligible_units_cannot_curtail() {
    let g = mixed_grid();
    let inst = build_problem(&g, &Scenario::new(0.7, Case::A), &SolverConfig::default()).unwrap();
    for hv in &inst.hours {
        let old = &inst.mip.lp.vars[hv.sp[0]];
        assert_eq!((old.lower, old.upper), (0.0, 0.0));
        let wind = &inst.mip.lp.vars[hv.sp[3]];
        assert_eq!((wind.lower, wind.upper), (0.0, 0.0));
    }
    // Case b frees the existing PV unit.
    let inst = build_problem(&g, &Scenario::new(0.7, Case::B), &SolverConfig::default()).unwrap();
    assert_eq!(inst.mip.lp.vars[inst.hours[0].sp[0]].upper, f64::INFINITY);
}

#[test]
fn hour_out_of_range_is_an_error() {
    let g = candidate_line(5.0);
    let s = Scenario::new(1.0, Case::A).with_hours(vec![4]);
    assert!(matches!(
        build_problem(&g, &s, &SolverConfig::default()),
        Err(FormulationError::HourOutOfRange { hour: 4, count: 1 })
    ));
}

#[test]
fn model_dump_is_stable() {
    let g = mixed_grid();
    let s = Scenario::new(0.7, Case::B);
    let cfg = SolverConfig::default();
    let a = write_lp(&build_problem(&g, &s, &cfg).unwrap().mip);
    let b = write_lp(&build_problem(&g, &s, &cfg).unwrap().mip);
    assert_eq!(a, b);
    assert!(a.contains("trigger[0,1]"));
    assert!(a.contains("Binaries\n alpha[0,1]"));
}

