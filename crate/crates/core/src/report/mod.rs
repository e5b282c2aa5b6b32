//! Experiment harness: scenario sweeps through the full
//! generate → associate → deploy → price pipeline, result bundles and their
//! plot-ready CSV export.

mod compare;
mod emit;
mod pipeline;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use compare::{compare_solvers, write_gap_table, GapRow};
pub use emit::{emit, load_bundle, schema, BUNDLE_FILES};
pub use pipeline::{
    associate_stage, deploy_stage, latency_summary, price_stage, run_case, run_pipeline,
    scenario_for, AssocOutcome, CaseOutput, PricedPlan,
};

use crate::cost::{CostBreakdown, OtnConfig};
use crate::deploy::DeployConfig;
use crate::error::{Error, Result};
use crate::lagrangian::LagrangianConfig;
use crate::scenario::{AreaClass, ScenarioConfig, SliceSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Exact,
    Heuristic,
    Both,
}

impl SolverChoice {
    pub fn wants_exact(self) -> bool {
        matches!(self, SolverChoice::Exact | SolverChoice::Both)
    }
}

/// Per-slice budgets in seconds, ordered uRLLC, eMBB, mMTC.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyBudgets {
    pub ota: [f64; 3],
    pub fronthaul: [f64; 3],
    pub midhaul: [f64; 3],
    pub bbu: [f64; 3],
}

impl LatencyBudgets {
    pub fn apply(&self, slices: &mut [SliceSpec]) {
        for s in slices {
            let i = s.id.index();
            s.ota_budget = self.ota[i];
            s.fh_budget = self.fronthaul[i];
            s.mh_budget = self.midhaul[i];
            s.bbu_budget = self.bbu[i];
        }
    }
}

/// A named deployment configuration; every scenario is planned once per variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub deploy: DeployConfig,
    #[serde(default)]
    pub scaling: bool,
    #[serde(default = "yes")]
    pub otn: bool,
}

fn yes() -> bool {
    true
}

/// Size caps for the exact solvers; larger instances are subsampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleLimits {
    pub p1_max_ues: usize,
    pub p1_max_rus: usize,
    pub p2_max_rus: usize,
    pub p2_max_stage1: usize,
    pub p2_max_stage2: usize,
    pub max_nodes: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            p1_max_ues: 60,
            p1_max_rus: 12,
            p2_max_rus: 5,
            p2_max_stage1: 3,
            p2_max_stage2: 2,
            max_nodes: 5_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub classes: Vec<AreaClass>,
    pub sides_km: Vec<f64>,
    pub seeds: Vec<u64>,
    pub p1_solver: SolverChoice,
    pub p2_solver: SolverChoice,
    pub budgets: Option<LatencyBudgets>,
    pub scenario: ScenarioConfig,
    pub lagrangian: LagrangianConfig,
    pub variants: Vec<Variant>,
    pub otn: OtnConfig,
    pub scaling_n: Vec<u32>,
    pub oracle: OracleLimits,
    /// Worker threads; unset uses the rayon default.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            classes: vec![AreaClass::Industrial, AreaClass::Urban, AreaClass::Rural],
            sides_km: vec![1.0, 2.0],
            seeds: vec![1, 2, 3, 4, 5],
            p1_solver: SolverChoice::Heuristic,
            p2_solver: SolverChoice::Heuristic,
            budgets: None,
            scenario: ScenarioConfig::default(),
            lagrangian: LagrangianConfig::default(),
            variants: vec![Variant {
                name: "default".into(),
                deploy: DeployConfig::default(),
                scaling: false,
                otn: true,
            }],
            otn: OtnConfig::default(),
            scaling_n: vec![1, 2, 3, 4],
            oracle: OracleLimits::default(),
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::param("seeds", "at least one seed is required"));
        }
        if self.classes.is_empty() || self.sides_km.is_empty() {
            return Err(Error::param(
                "classes",
                "at least one class and one side are required",
            ));
        }
        if let Some(side) = self.sides_km.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::param(
                "sides_km",
                format!("side {side} must be positive"),
            ));
        }
        if self.variants.is_empty() {
            return Err(Error::param(
                "variants",
                "at least one deployment variant is required",
            ));
        }
        let mut names: Vec<&str> = self.variants.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("variants", "variant names must be unique"));
        }
        if let Some(b) = &self.budgets {
            for v in b
                .ota
                .iter()
                .chain(&b.fronthaul)
                .chain(&b.midhaul)
                .chain(&b.bbu)
            {
                if !(*v > 0.0) {
                    return Err(Error::param("budgets", "latency budgets must be positive"));
                }
            }
        }
        if self.scaling_n.contains(&0) {
            return Err(Error::param("scaling_n", "N must be at least 1"));
        }
        for v in &self.variants {
            v.deploy.validate()?;
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form. The
    /// thread count does not influence results and is left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        let digest = Sha256::digest(&json);
        hex::encode(digest)[..16].to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn variant(&self, name: Option<&str>) -> Result<&Variant> {
        match name {
            None => Ok(&self.variants[0]),
            Some(n) => self
                .variants
                .iter()
                .find(|v| v.name == n)
                .ok_or_else(|| Error::param("variant", format!("no variant named `{n}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Infeasible,
    Error,
}

/// Averages and maxima over the RUs of one slice, in seconds. Means are
/// absent when no RU of the slice uses that link type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SliceLatency {
    pub rus: usize,
    pub fh_ul: Option<f64>,
    pub fh_dl: Option<f64>,
    pub mh1_ul: Option<f64>,
    pub mh1_dl: Option<f64>,
    pub mh2_ul: Option<f64>,
    pub mh2_dl: Option<f64>,
    pub bbu_ul: Option<f64>,
    pub bbu_dl: Option<f64>,
    pub max_fh: Option<f64>,
    pub max_mh: Option<f64>,
    pub max_bbu: Option<f64>,
    pub fh_budget: f64,
    pub mh_budget: f64,
    pub bbu_budget: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianSummary {
    pub iterations: usize,
    pub best_lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub gap_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub class: AreaClass,
    pub side_km: f64,
    pub seed: u64,
    pub variant: String,
    pub p1_solver: String,
    pub p2_solver: String,
    pub config_hash: String,
    pub status: RunStatus,
    pub failed_stage: Option<String>,
    pub detail: Option<String>,
    pub n_ues: usize,
    pub n_candidate_rus: usize,
    pub rus: [usize; 3],
    pub rus_total: usize,
    pub olts_stage1: usize,
    pub olts_stage2: usize,
    pub du_at_ru: usize,
    pub latency: [SliceLatency; 3],
    pub budgets_met: bool,
    pub cost: Option<CostBreakdown>,
    pub otn: Option<CostBreakdown>,
    pub otn_detail: Option<String>,
    pub savings: Option<f64>,
    pub lagrangian: Option<LagrangianSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub run_id: String,
    pub config_hash: String,
    pub iteration: usize,
    pub lb: f64,
    pub ub: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub run_id: String,
    pub class: AreaClass,
    pub side_km: f64,
    pub seed: u64,
    pub variant: String,
    pub config_hash: String,
    pub n: u32,
    pub total: Option<i64>,
    pub stage2_olts: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleStage {
    P1,
    P2,
}

/// Heuristic and exact solutions of the same oracle subsample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub run_id: String,
    pub stage: OracleStage,
    pub config_hash: String,
    pub label: String,
    pub n_ues: usize,
    pub n_rus: usize,
    pub n_stage1: usize,
    pub n_stage2: usize,
    pub exact_status: String,
    pub heuristic_rus: usize,
    pub exact_rus: Option<usize>,
    pub heuristic_olts: usize,
    pub exact_olts: Option<usize>,
    pub heuristic_cost: Option<i64>,
    pub exact_cost: Option<i64>,
    /// ln(O·ΣB) for P2 subsamples.
    pub factor_bound: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub config_hash: String,
    pub runs: Vec<RunRecord>,
    pub traces: Vec<TraceRow>,
    pub scaling: Vec<ScalingRow>,
    pub oracles: Vec<OracleRecord>,
}

/// Two-stage design with Stage-I servers halved to 0.5e5 GOPS and hosting
/// only DUs, so every CU goes to a 0.5e5 GOPS Stage-II server.
pub fn two_stage_halved() -> Variant {
    Variant {
        name: "two_stage_half".into(),
        deploy: DeployConfig {
            stage1_server_gops: 0.5e5,
            stage1_du_fraction: 1.0,
            stage2_server_gops: 0.5e5,
            ..DeployConfig::default()
        },
        scaling: false,
        otn: true,
    }
}

/// Two-stage design for the wavelength scaling study: DU-only Stage-I servers
/// at 0.5e5 GOPS and full 1e5 GOPS Stage-II servers, so that the Stage-II
/// PON rate rather than CU processing limits how many OLTs share a Stage-II OLT.
pub fn two_stage_scaling() -> Variant {
    Variant {
        name: "two_stage_scaling".into(),
        deploy: DeployConfig {
            stage1_server_gops: 0.5e5,
            stage1_du_fraction: 1.0,
            ..DeployConfig::default()
        },
        scaling: true,
        otn: false,
    }
}

/// Single-stage design: Stage-II disabled, full 1e5 GOPS Stage-I servers
/// host both DUs and CUs.
pub fn single_stage_full() -> Variant {
    Variant {
        name: "single_stage_full".into(),
        deploy: DeployConfig {
            stage2_enabled: false,
            ..DeployConfig::default()
        },
        scaling: false,
        otn: true,
    }
}
