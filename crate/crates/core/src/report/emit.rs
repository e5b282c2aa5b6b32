use std::fs;
use std::path::Path;

use super::{ResultBundle, RunRecord, RunStatus, SliceLatency};
use crate::error::Result;

pub const BUNDLE_FILES: &[&str] = &[
    "bundle.json",
    "runs.csv",
    "fig_ru_counts.csv",
    "fig_fronthaul_latency.csv",
    "fig_midhaul_latency.csv",
    "fig_bbu_latency.csv",
    "fig_cost.csv",
    "fig_stage2_scaling.csv",
    "gap_trace.csv",
    "oracles.csv",
    "schema.json",
];

const SLICES: [&str; 3] = ["urllc", "embb", "mmtc"];

fn ul_dl_columns(prefix: &[&str]) -> Vec<String> {
    let mut cols: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    for s in SLICES {
        cols.push(format!("{s}_ul_us"));
        cols.push(format!("{s}_dl_us"));
    }
    cols
}

/// Column names of every CSV file.
pub fn schema() -> Vec<(&'static str, Vec<String>)> {
    let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        (
            "runs.csv",
            strs(&[
                "run_id",
                "config_hash",
                "class",
                "side_km",
                "seed",
                "variant",
                "p1_solver",
                "p2_solver",
                "status",
                "failed_stage",
                "n_ues",
                "n_candidate_rus",
                "rus_urllc",
                "rus_embb",
                "rus_mmtc",
                "rus_total",
                "olts_stage1",
                "olts_stage2",
                "du_at_ru",
                "budgets_met",
                "pon_total_eur",
                "olt_onu_eur",
                "fiber_eur",
                "splitters_eur",
                "servers_install_eur",
                "servers_gops_eur",
                "otn_total_eur",
                "otn_switching_eur",
                "otn_fiber_eur",
                "savings",
                "lgr_iterations",
                "lgr_best_lb",
                "lgr_ub",
                "lgr_gap",
                "lgr_gap_bound",
            ]),
        ),
        (
            "fig_ru_counts.csv",
            strs(&[
                "config_hash",
                "class",
                "side_km",
                "runs",
                "urllc",
                "embb",
                "mmtc",
                "total",
            ]),
        ),
        (
            "fig_fronthaul_latency.csv",
            ul_dl_columns(&["config_hash", "class", "side_km", "variant", "runs"]),
        ),
        (
            "fig_midhaul_latency.csv",
            ul_dl_columns(&[
                "config_hash",
                "class",
                "side_km",
                "variant",
                "stage",
                "runs",
            ]),
        ),
        (
            "fig_bbu_latency.csv",
            ul_dl_columns(&["config_hash", "class", "side_km", "variant", "runs"]),
        ),
        (
            "fig_cost.csv",
            strs(&[
                "config_hash",
                "class",
                "side_km",
                "variant",
                "runs",
                "pon_total_eur",
                "otn_total_eur",
                "savings",
            ]),
        ),
        (
            "fig_stage2_scaling.csv",
            strs(&[
                "config_hash",
                "class",
                "side_km",
                "variant",
                "n",
                "runs",
                "total_eur",
            ]),
        ),
        (
            "gap_trace.csv",
            strs(&["run_id", "config_hash", "iteration", "lb", "ub", "lambda"]),
        ),
        (
            "oracles.csv",
            strs(&[
                "run_id",
                "config_hash",
                "stage",
                "label",
                "n_ues",
                "n_rus",
                "n_stage1",
                "n_stage2",
                "exact_status",
                "heuristic_rus",
                "exact_rus",
                "heuristic_olts",
                "exact_olts",
                "heuristic_cost_eur",
                "exact_cost_eur",
                "factor_bound",
            ]),
        ),
    ]
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn eur(c: i64) -> String {
    num(c as f64 / 100.0)
}

fn opt_eur(c: Option<i64>) -> String {
    c.map(eur).unwrap_or_default()
}

fn opt_int(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn us(v: Option<f64>) -> String {
    opt(v.map(|x| x * 1e6))
}

/// (UL, DL) pair of one link type of a slice.
type UlDlPick = fn(&SliceLatency) -> (Option<f64>, Option<f64>);

/// Groups in first-seen order, keyed by the fields that form the x axis.
fn groups<K: PartialEq + Clone>(
    runs: &[RunRecord],
    key: impl Fn(&RunRecord) -> K,
) -> Vec<(K, Vec<&RunRecord>)> {
    let mut out: Vec<(K, Vec<&RunRecord>)> = Vec::new();
    for r in runs {
        let k = key(r);
        match out.iter_mut().find(|(kk, _)| *kk == k) {
            Some((_, v)) => v.push(r),
            None => out.push((k, vec![r])),
        }
    }
    out
}

struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(cols: &[String]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(cols)?;
        Ok(Self { w })
    }

    fn row(&mut self, r: Vec<String>) -> Result<()> {
        self.w.write_record(r)?;
        Ok(())
    }

    fn finish(self) -> Result<Vec<u8>> {
        self.w
            .into_inner()
            .map_err(|e| crate::error::Error::Io(e.into_error()))
    }
}

/// Writes the bundle as JSON plus flat CSV tables. Output bytes depend only
/// on the bundle.
pub fn emit(bundle: &ResultBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let schema = schema();
    let cols = |name: &str| {
        schema
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, c)| c.clone())
            .unwrap()
    };
    let ok = |r: &&RunRecord| r.status == RunStatus::Ok;

    let mut t = Table::new(&cols("runs.csv"))?;
    for r in &bundle.runs {
        let c = r.cost.unwrap_or_default();
        let has_cost = r.cost.is_some();
        let line = |v: i64| if has_cost { eur(v) } else { String::new() };
        let lg = r.lagrangian;
        t.row(vec![
            r.run_id.clone(),
            r.config_hash.clone(),
            r.class.name().into(),
            num(r.side_km),
            r.seed.to_string(),
            r.variant.clone(),
            r.p1_solver.clone(),
            r.p2_solver.clone(),
            format!("{:?}", r.status).to_lowercase(),
            r.failed_stage.clone().unwrap_or_default(),
            r.n_ues.to_string(),
            r.n_candidate_rus.to_string(),
            r.rus[0].to_string(),
            r.rus[1].to_string(),
            r.rus[2].to_string(),
            r.rus_total.to_string(),
            r.olts_stage1.to_string(),
            r.olts_stage2.to_string(),
            r.du_at_ru.to_string(),
            r.budgets_met.to_string(),
            line(c.total),
            line(c.olt_onu),
            line(c.fiber),
            line(c.splitters),
            line(c.servers_install),
            line(c.servers_gops),
            opt_eur(r.otn.map(|o| o.total)),
            opt_eur(r.otn.map(|o| o.switching)),
            opt_eur(r.otn.map(|o| o.fiber)),
            opt(r.savings),
            lg.map(|l| l.iterations.to_string()).unwrap_or_default(),
            opt(lg.map(|l| l.best_lb)),
            opt(lg.map(|l| l.ub)),
            opt(lg.map(|l| l.gap)),
            opt(lg.and_then(|l| l.gap_bound)),
        ])?;
    }
    let runs_csv = t.finish()?;

    let first_variant = bundle.runs.first().map(|r| r.variant.clone());
    let mut t = Table::new(&cols("fig_ru_counts.csv"))?;
    let counted: Vec<RunRecord> = bundle
        .runs
        .iter()
        .filter(|r| Some(&r.variant) == first_variant.as_ref() && r.rus_total > 0)
        .cloned()
        .collect();
    for ((class, side), rs) in groups(&counted, |r| (r.class, r.side_km)) {
        let m = |i: usize| opt(mean(rs.iter().map(|r| r.rus[i] as f64)));
        t.row(vec![
            bundle.config_hash.clone(),
            class.name().into(),
            num(side),
            rs.len().to_string(),
            m(0),
            m(1),
            m(2),
            opt(mean(rs.iter().map(|r| r.rus_total as f64))),
        ])?;
    }
    let ru_csv = t.finish()?;

    let okruns: Vec<RunRecord> = bundle.runs.iter().filter(ok).cloned().collect();
    let by_variant = groups(&okruns, |r| (r.class, r.side_km, r.variant.clone()));
    let latency_table = |name: &str, stages: &[(&str, UlDlPick)]| -> Result<Vec<u8>> {
        let mut t = Table::new(&cols(name))?;
        for ((class, side, variant), rs) in &by_variant {
            for (stage, pick) in stages {
                let mut row = vec![
                    bundle.config_hash.clone(),
                    class.name().into(),
                    num(*side),
                    variant.clone(),
                ];
                if !stage.is_empty() {
                    row.push(stage.to_string());
                }
                row.push(rs.len().to_string());
                for i in 0..3 {
                    row.push(us(mean(rs.iter().filter_map(|r| pick(&r.latency[i]).0))));
                    row.push(us(mean(rs.iter().filter_map(|r| pick(&r.latency[i]).1))));
                }
                t.row(row)?;
            }
        }
        t.finish()
    };
    let fh_csv = latency_table("fig_fronthaul_latency.csv", &[("", |l| (l.fh_ul, l.fh_dl))])?;
    let mh_csv = latency_table(
        "fig_midhaul_latency.csv",
        &[
            ("stage1", |l| (l.mh1_ul, l.mh1_dl)),
            ("stage2", |l| (l.mh2_ul, l.mh2_dl)),
        ],
    )?;
    let bbu_csv = latency_table("fig_bbu_latency.csv", &[("", |l| (l.bbu_ul, l.bbu_dl))])?;

    let mut t = Table::new(&cols("fig_cost.csv"))?;
    for ((class, side, variant), rs) in &by_variant {
        t.row(vec![
            bundle.config_hash.clone(),
            class.name().into(),
            num(*side),
            variant.clone(),
            rs.len().to_string(),
            opt(mean(
                rs.iter()
                    .filter_map(|r| r.cost.map(|c| c.total as f64 / 100.0)),
            )),
            opt(mean(
                rs.iter()
                    .filter_map(|r| r.otn.map(|c| c.total as f64 / 100.0)),
            )),
            opt(mean(rs.iter().filter_map(|r| r.savings))),
        ])?;
    }
    let cost_csv = t.finish()?;

    let mut t = Table::new(&cols("fig_stage2_scaling.csv"))?;
    let mut keys: Vec<(String, f64, String, u32)> = Vec::new();
    for s in &bundle.scaling {
        let k = (
            s.class.name().to_string(),
            s.side_km,
            s.variant.clone(),
            s.n,
        );
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    for (class, side, variant, n) in keys {
        let pts: Vec<f64> = bundle
            .scaling
            .iter()
            .filter(|s| {
                s.class.name() == class && s.side_km == side && s.variant == variant && s.n == n
            })
            .filter_map(|s| s.total.map(|c| c as f64 / 100.0))
            .collect();
        t.row(vec![
            bundle.config_hash.clone(),
            class,
            num(side),
            variant,
            n.to_string(),
            pts.len().to_string(),
            opt(mean(pts.into_iter())),
        ])?;
    }
    let scaling_csv = t.finish()?;

    let mut t = Table::new(&cols("gap_trace.csv"))?;
    for r in &bundle.traces {
        t.row(vec![
            r.run_id.clone(),
            r.config_hash.clone(),
            r.iteration.to_string(),
            num(r.lb),
            num(r.ub),
            num(r.lambda),
        ])?;
    }
    let trace_csv = t.finish()?;

    let mut t = Table::new(&cols("oracles.csv"))?;
    for o in &bundle.oracles {
        t.row(vec![
            o.run_id.clone(),
            o.config_hash.clone(),
            format!("{:?}", o.stage).to_lowercase(),
            o.label.clone(),
            o.n_ues.to_string(),
            o.n_rus.to_string(),
            o.n_stage1.to_string(),
            o.n_stage2.to_string(),
            o.exact_status.clone(),
            o.heuristic_rus.to_string(),
            opt_int(o.exact_rus),
            o.heuristic_olts.to_string(),
            opt_int(o.exact_olts),
            opt_eur(o.heuristic_cost),
            opt_eur(o.exact_cost),
            opt(o.factor_bound),
        ])?;
    }
    let oracle_csv = t.finish()?;

    let schema_doc: serde_json::Map<String, serde_json::Value> = schema
        .iter()
        .map(|(n, c)| (n.to_string(), serde_json::Value::from(c.clone())))
        .collect();

    fs::write(
        dir.join("bundle.json"),
        serde_json::to_string_pretty(bundle)? + "\n",
    )?;
    fs::write(dir.join("runs.csv"), runs_csv)?;
    fs::write(dir.join("fig_ru_counts.csv"), ru_csv)?;
    fs::write(dir.join("fig_fronthaul_latency.csv"), fh_csv)?;
    fs::write(dir.join("fig_midhaul_latency.csv"), mh_csv)?;
    fs::write(dir.join("fig_bbu_latency.csv"), bbu_csv)?;
    fs::write(dir.join("fig_cost.csv"), cost_csv)?;
    fs::write(dir.join("fig_stage2_scaling.csv"), scaling_csv)?;
    fs::write(dir.join("gap_trace.csv"), trace_csv)?;
    fs::write(dir.join("oracles.csv"), oracle_csv)?;
    fs::write(
        dir.join("schema.json"),
        serde_json::to_string_pretty(&schema_doc)? + "\n",
    )?;
    Ok(())
}

pub fn load_bundle(dir: &Path) -> Result<ResultBundle> {
    let text = fs::read_to_string(dir.join("bundle.json"))?;
    Ok(serde_json::from_str(&text)?)
}
