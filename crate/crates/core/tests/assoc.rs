mod common;

use oranplan::assoc::{
    build_p1, check_feasible, lp_lower_bound, objective, ota_latency, solve_exact, Assignment,
    AssocInstance, ExactLimits, P1Family, P1Model, RuSpec, SolveStatus, UeSpec,
};
use oranplan::models::PhysicalConstants;
use oranplan::scenario::{generate, AreaClass, Point, ScenarioConfig, SliceId};
use proptest::prelude::*;
use rand::Rng;

fn ue(x: f64, y: f64, slice: SliceId, demand: f64) -> UeSpec {
    UeSpec {
        position: Point::new(x, y),
        slice,
        ul_demand: demand,
        dl_demand: demand,
    }
}

fn ru(x: f64, y: f64, slice: SliceId, cap: f64) -> RuSpec {
    RuSpec {
        position: Point::new(x, y),
        slice,
        coverage_km: 1.0,
        ul_cap: cap,
        dl_cap: cap,
    }
}

fn instance(ues: Vec<UeSpec>, rus: Vec<RuSpec>) -> AssocInstance {
    AssocInstance {
        tti: common::TTI,
        ota_budget: common::OTA,
        ru_ids: (0..rus.len()).collect(),
        ue_ids: (0..ues.len()).collect(),
        ues,
        rus,
        constants: PhysicalConstants::default(),
    }
}

#[test]
fn exact_matches_exhaustive_on_six_ues_three_rus() {
    let mut r = common::rng(11);
    let mut feasible = 0;
    for _ in 0..60 {
        let inst = common::random_assoc(&mut r, 6, 3);
        let model = P1Model::new(inst.clone()).unwrap();
        let ex = solve_exact(&model, &ExactLimits::default());
        match (ex.assignment, common::brute_p1(&inst)) {
            (Some(a), Some(b)) => {
                feasible += 1;
                assert!(ex.proven_optimal);
                assert!((a.objective - b.objective).abs() <= 1e-9 * b.objective);
                assert!(
                    (common::brute_objective(&inst, &b.map) - a.objective).abs()
                        <= 1e-9 * b.objective
                );
                assert_eq!(a.installed_count(), b.installed);
            }
            (None, None) => assert_eq!(ex.status, SolveStatus::Infeasible),
            (a, b) => panic!(
                "exact {:?} vs exhaustive {:?}",
                a.map(|a| a.objective),
                b.map(|b| b.objective)
            ),
        }
    }
    assert!(feasible > 30);
}

#[test]
fn ota_budget_forces_second_ru() {
    // 50 Mbps on a 1e8 bps RU loads 250 µs per TTI: two such uRLLC UEs
    // exceed the 200 µs budget together but fit alone.
    let inst = instance(
        vec![
            ue(0.0, 0.0, SliceId::Urllc, 3e7),
            ue(0.1, 0.0, SliceId::Urllc, 3e7),
        ],
        vec![
            ru(0.05, 0.0, SliceId::Urllc, 1e8),
            ru(0.0, 0.1, SliceId::Urllc, 1e8),
        ],
    );
    let one_ru_load = 2.0 * 3e7 * common::TTI / 1e8;
    assert!(one_ru_load > common::OTA[0]);
    let model = P1Model::new(inst.clone()).unwrap();
    let ex = solve_exact(&model, &ExactLimits::default());
    assert_eq!(ex.assignment.unwrap().installed_count(), 2);
    assert_eq!(common::brute_p1(&inst).unwrap().installed, 2);
}

#[test]
fn single_ue_two_rus_installs_one() {
    let inst = instance(
        vec![ue(0.0, 0.0, SliceId::Embb, 1e7)],
        vec![
            ru(0.3, 0.0, SliceId::Embb, 28e9),
            ru(0.6, 0.0, SliceId::Embb, 28e9),
        ],
    );
    let model = P1Model::new(inst).unwrap();
    let a = solve_exact(&model, &ExactLimits::default())
        .assignment
        .unwrap();
    assert_eq!(a.installed, vec![0]);
    let (ul, dl) = ota_latency(&model, &a, 0, 0);
    let want = model.alpha + model.beta * (ul + dl);
    assert!((a.objective - want).abs() < 1e-15);
}

#[test]
fn ota_latency_single_ue() {
    let inst = AssocInstance {
        ues: vec![UeSpec {
            position: Point::new(0.0, 0.0),
            slice: SliceId::Embb,
            ul_demand: 10e6,
            dl_demand: 10e6,
        }],
        rus: vec![RuSpec {
            position: Point::new(0.3, 0.0),
            slice: SliceId::Embb,
            coverage_km: 1.0,
            ul_cap: 28e9,
            dl_cap: 30e9,
        }],
        ..instance(vec![], vec![])
    };
    let inst = AssocInstance {
        ru_ids: vec![0],
        ue_ids: vec![0],
        ..inst
    };
    let model = P1Model::new(inst).unwrap();
    let a = Assignment::from_map(&model, &[0]);
    let (ul, _) = ota_latency(&model, &a, 0, 0);
    // 0.3 km / c = 1 µs, 10 Mbps · 0.5 ms / 28 Gbps = 178.57 ns.
    assert!((ul - (1e-6 + 10e6 * 0.5e-3 / 28e9)).abs() < 1e-15);
    assert!((ul * 1e6 - 1.17857).abs() < 1e-5, "{ul}");
}

#[test]
fn second_ue_raises_latency() {
    let inst = instance(
        vec![
            ue(0.0, 0.0, SliceId::Embb, 1e7),
            ue(0.1, 0.0, SliceId::Embb, 1e7),
        ],
        vec![ru(0.2, 0.0, SliceId::Embb, 1e9)],
    );
    let model = P1Model::new(inst).unwrap();
    let one = Assignment::new(&model, vec![0], vec![vec![0], vec![]]);
    let two = Assignment::from_map(&model, &[0, 0]);
    let (u1, d1) = ota_latency(&model, &one, 0, 0);
    let (u2, d2) = ota_latency(&model, &two, 0, 0);
    assert!(u2 > u1 && d2 > d1);
}

#[test]
fn eligibility_mask_matches_raw_distances() {
    let s = generate(AreaClass::Rural, 1.0, 5, &ScenarioConfig::default()).unwrap();
    let model = build_p1(&s).unwrap();
    for (u, ue) in s.ues.iter().enumerate() {
        for (b, r) in s.candidate_rus.iter().enumerate() {
            let dx = ue.position.x - r.position.x;
            let dy = ue.position.y - r.position.y;
            let inside = (dx * dx + dy * dy).sqrt() <= r.coverage_km && ue.slice == r.slice;
            assert_eq!(model.pair(u, b).is_some(), inside, "ue {u} ru {b}");
        }
    }
}

#[test]
fn uncovered_ue_is_reported() {
    let inst = instance(
        vec![
            ue(0.0, 0.0, SliceId::Mmtc, 1e6),
            ue(5.0, 5.0, SliceId::Mmtc, 1e6),
        ],
        vec![ru(0.1, 0.0, SliceId::Mmtc, 1e9)],
    );
    let model = P1Model::new(inst).unwrap();
    assert_eq!(model.uncovered_ues(), vec![1]);
    assert_eq!(
        solve_exact(&model, &ExactLimits::default()).status,
        SolveStatus::Infeasible
    );
}

#[test]
fn lp_bound_below_exact() {
    let mut r = common::rng(12);
    let mut compared = 0;
    for _ in 0..40 {
        let model = common::random_p1(&mut r, 6, 4);
        let Some(a) = solve_exact(&model, &ExactLimits::default()).assignment else {
            continue;
        };
        let lp = lp_lower_bound(&model).unwrap();
        assert!(lp.objective <= a.objective + 1e-9);
        compared += 1;
    }
    assert!(compared > 10);
}

#[test]
fn lp_bound_tight_when_forced() {
    // Each UE reaches exactly one RU, so the relaxation has no freedom.
    let inst = instance(
        vec![
            ue(0.0, 0.0, SliceId::Urllc, 1e6),
            ue(0.0, 0.0, SliceId::Embb, 2e6),
            ue(0.0, 0.0, SliceId::Mmtc, 3e6),
        ],
        vec![
            ru(0.2, 0.0, SliceId::Urllc, 1e9),
            ru(0.0, 0.3, SliceId::Embb, 1e9),
            ru(0.4, 0.4, SliceId::Mmtc, 1e9),
        ],
    );
    let model = P1Model::new(inst).unwrap();
    let exact = solve_exact(&model, &ExactLimits::default())
        .assignment
        .unwrap();
    let lp = lp_lower_bound(&model).unwrap();
    assert!((lp.objective - exact.objective).abs() < 1e-9);
    // One UE, two RUs: θ only needs to cover x, so the bound is α + the
    // cheaper pair.
    let inst = instance(
        vec![ue(0.0, 0.0, SliceId::Embb, 1e7)],
        vec![
            ru(0.3, 0.0, SliceId::Embb, 1e9),
            ru(0.1, 0.0, SliceId::Embb, 1e9),
        ],
    );
    let model = P1Model::new(inst).unwrap();
    let cheaper = model.eligible[0]
        .iter()
        .map(|p| p.cost)
        .fold(f64::INFINITY, f64::min);
    let lp = lp_lower_bound(&model).unwrap();
    assert!((lp.objective - (model.alpha + cheaper)).abs() < 1e-9);
}

#[test]
fn checker_accepts_exact_and_flags_mutations() {
    let mut r = common::rng(13);
    let mut done = 0;
    while done < 10 {
        let model = common::random_p1(&mut r, 6, 4);
        let Some(a) = solve_exact(&model, &ExactLimits::default()).assignment else {
            continue;
        };
        done += 1;
        assert!(check_feasible(&model, &a).is_empty());

        // Attach UE 0 twice.
        let other = (0..model.n_rus()).find(|&b| Some(b) != a.ru_of(0)).unwrap();
        let mut twice = a.clone();
        twice.attach[0].push(other);
        twice.installed.push(other);
        twice.installed.sort_unstable();
        twice.installed.dedup();
        twice.refresh(&model);
        let v = check_feasible(&model, &twice);
        assert_eq!(
            v.iter()
                .filter(|v| v.family == P1Family::Uniqueness)
                .count(),
            1
        );

        // Drop the attachment of UE 0.
        let mut none = a.clone();
        none.attach[0].clear();
        none.refresh(&model);
        assert!(check_feasible(&model, &none)
            .iter()
            .any(|v| v.family == P1Family::Uniqueness && v.ue == 0));

        // Uninstall the RU of UE 0.
        let mut off = a.clone();
        off.installed.retain(|&b| Some(b) != a.ru_of(0));
        assert!(check_feasible(&model, &off)
            .iter()
            .any(|v| v.family == P1Family::Installation));

        // Move UE 0 to an RU it cannot use.
        if let Some(bad) = (0..model.n_rus()).find(|&b| model.pair(0, b).is_none()) {
            let mut moved = a.clone();
            moved.attach[0] = vec![bad];
            moved.installed.push(bad);
            moved.installed.sort_unstable();
            moved.refresh(&model);
            assert!(check_feasible(&model, &moved)
                .iter()
                .any(|v| v.family == P1Family::Coverage));
        }

        // Pile every UE of one slice onto one RU until the budget breaks.
        let mut heavy = model.clone();
        heavy.instance.ota_budget = [1e-9; 3];
        let v = check_feasible(&heavy, &a);
        assert!(v.iter().any(|v| v.family == P1Family::OtaUplink));
        assert!(v.iter().any(|v| v.family == P1Family::OtaDownlink));
    }
}

#[test]
fn dropping_latency_term_keeps_installed_count() {
    let mut r = common::rng(14);
    let mut compared = 0;
    for _ in 0..40 {
        let model = common::random_p1(&mut r, 7, 4);
        let Some(full) = solve_exact(&model, &ExactLimits::default()).assignment else {
            continue;
        };
        let mut count_only = model.clone();
        count_only.beta = 0.0;
        for pairs in &mut count_only.eligible {
            for p in pairs {
                p.cost = 0.0;
            }
        }
        let bare = solve_exact(&count_only, &ExactLimits::default())
            .assignment
            .unwrap();
        assert_eq!(bare.installed_count(), full.installed_count());
        assert_eq!(
            Some(full.installed_count()),
            common::brute_min_rus(&model.instance)
        );
        compared += 1;
    }
    assert!(compared > 20);
}

#[test]
fn exact_is_deterministic() {
    let mut r = common::rng(15);
    let model = common::random_p1(&mut r, 8, 4);
    let a = solve_exact(&model, &ExactLimits::default());
    let b = solve_exact(&model, &ExactLimits::default());
    assert_eq!(a, b);
}

#[test]
fn node_limit_reports_partial_result() {
    let mut r = common::rng(16);
    let model = common::random_p1(&mut r, 12, 6);
    let res = solve_exact(
        &model,
        &ExactLimits {
            max_nodes: 1,
            time_limit: None,
        },
    );
    assert!(!res.proven_optimal);
    assert!(matches!(
        res.status,
        SolveStatus::Feasible | SolveStatus::Unknown | SolveStatus::Infeasible
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stored_objective_matches_pairwise_sum(seed in any::<u64>(), nu in 1usize..7, nb in 1usize..4) {
        let mut r = common::rng(seed);
        let inst = common::random_assoc(&mut r, nu, nb);
        let model = P1Model::new(inst.clone()).unwrap();
        let map: Vec<usize> = inst
            .ues
            .iter()
            .map(|u| {
                let same: Vec<usize> = (0..nb).filter(|&b| inst.rus[b].slice == u.slice).collect();
                same[r.gen_range(0..same.len())]
            })
            .collect();
        let a = Assignment::from_map(&model, &map);
        let want = common::brute_objective(&inst, &map);
        prop_assert!((a.objective - want).abs() <= 1e-9 * want.abs());
        prop_assert!((objective(&model, &a.installed, &a.attach) - want).abs() <= 1e-9 * want.abs());
    }

    #[test]
    fn exact_result_is_feasible(seed in any::<u64>(), nu in 1usize..7, nb in 1usize..4) {
        let mut r = common::rng(seed);
        let model = common::random_p1(&mut r, nu, nb);
        let ex = solve_exact(&model, &ExactLimits::default());
        if let Some(a) = &ex.assignment {
            prop_assert!(check_feasible(&model, a).is_empty());
            prop_assert!(common::brute_feasible(&model.instance, &a.attach.iter().map(|x| x[0]).collect::<Vec<_>>()));
        }
    }
}
