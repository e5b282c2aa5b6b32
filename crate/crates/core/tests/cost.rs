mod common;

use oranplan::cost::{
    cents, plan_cost, price_otn, price_plan, savings, stage2_scaling, CostBreakdown, OtnConfig,
    OtnDevicePricing, PriceBook,
};
use oranplan::deploy::{
    check_plan, greedy_deploy, solve_p2_exact_small, DeployConfig, DeploymentPlan, P2Limits,
    P2Model,
};
use oranplan::report::two_stage_halved;
use oranplan::scenario::{Point, SliceId};
use proptest::prelude::*;

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn sum_of_parts(c: &CostBreakdown) -> i64 {
    c.olt_onu + c.fiber + c.splitters + c.servers_install + c.servers_gops + c.switching
}

/// One RU 2 km from its OLT (1 km to the RN, 1 km on to the OLT), DU on
/// the OLT server, CU local.
fn one_olt_plan() -> (P2Model, DeploymentPlan) {
    let config = DeployConfig {
        stage1_server_gops: 1e5,
        ..DeployConfig::default()
    };
    let model = common::manual_p2(
        vec![common::deploy_ru(0, p(0.0, 0.0), SliceId::Embb)],
        &[(p(2.0, 0.0), p(1.0, 0.0))],
        &[],
        config,
    );
    let mut plan = DeploymentPlan::default();
    plan.y.insert((0, 0));
    plan.du_at_olt.insert((0, 0));
    plan.cu_stage1.insert((0, SliceId::Embb));
    plan.finalize(&model);
    (model, plan)
}

#[test]
fn single_pon_itemized() {
    let (model, plan) = one_olt_plan();
    assert!(check_plan(&model, &plan).is_empty());
    let c = price_plan(&model, &plan, &PriceBook::default());
    assert_eq!(c.olt_onu, cents(18_000.0));
    assert_eq!(c.fiber, cents(5_200.0));
    assert_eq!(c.splitters, cents(200.0));
    assert_eq!(c.servers_install, cents(3_800.0));
    assert_eq!(c.servers_gops, cents(150_000.0));
    assert_eq!(c.switching, 0);
    assert_eq!(c.total, cents(177_200.0));
    assert_eq!(plan_cost(&model, &plan), c.total);
}

#[test]
fn empty_plan_is_free() {
    let (model, _) = one_olt_plan();
    let c = price_plan(&model, &DeploymentPlan::default(), &PriceBook::default());
    assert_eq!(c, CostBreakdown::default());
}

#[test]
fn doubling_fiber_touches_only_the_fiber_line() {
    let (model, plan) = one_olt_plan();
    let mut longer = plan.clone();
    for km in longer.fiber_stage1_km.values_mut() {
        *km *= 2.0;
    }
    let a = price_plan(&model, &plan, &PriceBook::default());
    let b = price_plan(&model, &longer, &PriceBook::default());
    assert_eq!(b.fiber, 2 * a.fiber);
    assert_eq!(
        (
            b.olt_onu,
            b.splitters,
            b.servers_install,
            b.servers_gops,
            b.switching
        ),
        (
            a.olt_onu,
            a.splitters,
            a.servers_install,
            a.servers_gops,
            a.switching
        )
    );
}

#[test]
fn otn_two_nodes_one_link() {
    let config = DeployConfig {
        ethernet: None,
        ..DeployConfig::default()
    };
    let model = common::manual_p2(
        vec![common::deploy_ru(0, p(0.0, 0.0), SliceId::Embb)],
        &[(p(3.0, 0.0), p(3.0, 0.0))],
        &[],
        config,
    );
    let mut plan = DeploymentPlan::default();
    plan.y.insert((0, 0));
    plan.du_at_olt.insert((0, 0));
    plan.cu_stage1.insert((0, SliceId::Embb));
    plan.finalize(&model);
    let book = PriceBook::default();
    let design = price_otn(&model, &plan, &book, &OtnConfig::default()).unwrap();
    assert_eq!(design.nodes.len(), 2);
    assert_eq!(design.links.len(), 1);
    assert!((design.links[0].km - 3.0).abs() < 1e-12);
    assert_eq!(design.links[0].fibers, 1);
    let c = design.cost;
    assert_eq!(c.switching, cents(2.0 * (19_200.0 + 19_200.0)));
    assert_eq!(c.fiber, cents(3.0 * 2_600.0));
    let pon = price_plan(&model, &plan, &book);
    assert_eq!(
        (c.servers_install, c.servers_gops),
        (pon.servers_install, pon.servers_gops)
    );
    assert_eq!(c.total, sum_of_parts(&c));

    let pair = PriceBook {
        otn_pricing: OtnDevicePricing::PerPair,
        ..book
    };
    let d = price_otn(&model, &plan, &pair, &OtnConfig::default()).unwrap();
    assert_eq!(d.cost.switching, cents(2.0 * 19_200.0));
}

#[test]
fn otn_single_node_costs_switching_only() {
    let config = DeployConfig {
        ru_server_gops: 0.0,
        stage1_server_gops: 0.0,
        stage2_server_gops: 0.0,
        ..DeployConfig::default()
    };
    let model = common::manual_p2(
        vec![common::deploy_ru(0, p(1.0, 1.0), SliceId::Mmtc)],
        &[(p(1.0, 1.0), p(1.0, 1.0))],
        &[],
        config,
    );
    let mut plan = DeploymentPlan::default();
    plan.y.insert((0, 0));
    plan.du_at_olt.insert((0, 0));
    plan.cu_stage1.insert((0, SliceId::Mmtc));
    plan.finalize(&model);
    let c = price_otn(&model, &plan, &PriceBook::default(), &OtnConfig::default())
        .unwrap()
        .cost;
    assert_eq!(c.total, c.switching);
    assert_eq!(c.switching, cents(38_400.0));
}

#[test]
fn otn_latency_miss_is_infeasible() {
    let model = common::manual_p2(
        vec![common::deploy_ru(0, p(0.0, 0.0), SliceId::Urllc)],
        &[(p(3.0, 0.0), p(3.0, 0.0))],
        &[],
        DeployConfig::default(),
    );
    let mut plan = DeploymentPlan::default();
    plan.y.insert((0, 0));
    plan.du_at_olt.insert((0, 0));
    plan.cu_stage1.insert((0, SliceId::Urllc));
    plan.finalize(&model);
    let slow = OtnConfig {
        switch_latency: 1e-3,
        ..OtnConfig::default()
    };
    assert!(price_otn(&model, &plan, &PriceBook::default(), &slow)
        .unwrap_err()
        .is_infeasible());
}

#[test]
fn savings_formula() {
    let pon = CostBreakdown {
        total: 80,
        ..Default::default()
    };
    let otn = CostBreakdown {
        total: 100,
        ..Default::default()
    };
    assert!((savings(&pon, &otn) - 0.2).abs() < 1e-15);
}

#[test]
fn negative_price_is_rejected() {
    let book = PriceBook {
        onu: -1.0,
        ..PriceBook::default()
    };
    assert!(book.validate().is_err());
    assert!(PriceBook::default().validate().is_ok());
}

type Field = fn(&mut PriceBook) -> &mut f64;

const FIELDS: [Field; 7] = [
    |b| &mut b.olt,
    |b| &mut b.onu,
    |b| &mut b.splitter,
    |b| &mut b.fiber_material_per_km,
    |b| &mut b.fiber_install_per_km,
    |b| &mut b.server_install,
    |b| &mut b.per_gops,
];

#[test]
fn price_is_linear_in_each_field() {
    for seed in 0..8u64 {
        let model = common::random_p2(2000 + seed, 5, 3, 2, two_stage_halved().deploy);
        let Ok(plan) = greedy_deploy(&model) else {
            continue;
        };
        for field in FIELDS {
            let at = |v: f64| {
                let mut book = PriceBook::default();
                *field(&mut book) = v;
                price_plan(&model, &plan, &book).total
            };
            let base = *field(&mut PriceBook::default());
            let (f0, f1, f2) = (at(0.0), at(base), at(2.0 * base));
            // Each line is rounded to cents on its own.
            assert!(
                ((f2 - f1) - (f1 - f0)).abs() <= 2,
                "seed {seed}: {f0} {f1} {f2}"
            );
        }
    }
}

#[test]
fn scaling_prices_keeps_the_exact_argmin() {
    let mut checked = 0;
    for seed in 0..16u64 {
        let model = common::random_p2(2100 + seed, 3, 2, 2, two_stage_halved().deploy);
        let base = solve_p2_exact_small(&model, &P2Limits::default());
        let Some(plan) = base.plan else {
            continue;
        };
        let mut scaled = model.clone();
        scaled.config.prices = model.config.prices.scaled(3.0);
        let s = solve_p2_exact_small(&scaled, &P2Limits::default());
        assert_eq!(s.plan.as_ref(), Some(&plan), "seed {seed}");
        assert!((s.cost_cents.unwrap() - 3 * base.cost_cents.unwrap()).abs() <= 3);
        checked += 1;
    }
    assert!(checked > 5);
}

#[test]
fn scaling_curve_points_reprice_independently() {
    let mut checked = 0;
    for seed in 0..6u64 {
        let model = common::random_p2(2200 + seed, 6, 3, 2, two_stage_halved().deploy);
        let Ok(plan) = greedy_deploy(&model) else {
            continue;
        };
        let curve = stage2_scaling(&model, &[1, 2, 3, 4]);
        assert_eq!(
            curve.iter().map(|pt| pt.n).collect::<Vec<_>>(),
            vec![1, 2, 3, 4]
        );
        assert_eq!(
            curve[0].cost.unwrap(),
            price_plan(&model, &plan, &model.config.prices)
        );
        for pt in &curve {
            let (Some(c), Some(pl)) = (pt.cost, &pt.plan) else {
                continue;
            };
            let mut m = model.clone();
            m.config.stage2_rate_multiplier = f64::from(pt.n);
            assert!(check_plan(&m, pl).is_empty());
            assert_eq!(c, price_plan(&m, pl, &m.config.prices));
            assert_eq!(pt.stage2_olts, pl.stage2_installed.len());
        }
        checked += 1;
    }
    assert!(checked > 2);
}

#[test]
fn stage2_prices_scale_with_wavelengths() {
    let model = common::manual_p2(
        vec![common::deploy_ru(0, p(0.0, 0.0), SliceId::Mmtc)],
        &[(p(0.0, 0.0), p(0.0, 0.0))],
        &[(p(1.0, 0.0), p(1.0, 0.0))],
        DeployConfig::default(),
    );
    let mut plan = DeploymentPlan::default();
    plan.y.insert((0, 0));
    plan.du_at_ru.insert(0);
    plan.z.insert((0, 0));
    plan.cu_stage2.insert((0, 0, SliceId::Mmtc));
    plan.finalize(&model);
    let mut m3 = model.clone();
    m3.config.stage2_rate_multiplier = 3.0;
    let a = price_plan(&model, &plan, &PriceBook::default());
    let b = price_plan(&m3, &plan, &PriceBook::default());
    assert_eq!(b.olt_onu - a.olt_onu, 2 * cents(16_000.0 + 2_000.0));
    assert_eq!(b.total - a.total, b.olt_onu - a.olt_onu);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parts_sum_to_total(seed in 0u64..5000, k in 0.0f64..5.0) {
        let model = common::random_p2(seed, 4, 3, 2, DeployConfig::default());
        if let Ok(plan) = greedy_deploy(&model) {
            let c = price_plan(&model, &plan, &PriceBook::default().scaled(k));
            prop_assert_eq!(c.total, sum_of_parts(&c));
            prop_assert!(c.total >= 0);
            if let Ok(d) = price_otn(&model, &plan, &PriceBook::default(), &OtnConfig::default()) {
                prop_assert_eq!(d.cost.total, sum_of_parts(&d.cost));
            }
        }
    }
}
