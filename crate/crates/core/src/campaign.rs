//! Curriculum-biased data collection: attempt allocation, the campaign
//! runner and per-bucket Bernoulli yield analysis.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{AvoidanceEnv, EnvConfig, EnvError, SceneConfig, SceneType, TerminationReason};
use crate::ops::{
    atomic_write, dataset_audit, AuditReport, AuditSpec, Commitment, DatasetHeader, DatasetWriter, EvaluationReport,
    Metrics, OpsError, PreRegistration,
};
use crate::pipeline::{run_episode, Algorithm, PipelineError, ScriptedTeacher};
use crate::safety::{BarrierParams, DualBarrierCbf, SafetyError};

const DISTRIBUTION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid attempt distribution: {0}")]
    InvalidDistribution(String),
    #[error("distribution and predicted yields cover different buckets: {0}")]
    KeyMismatch(String),
    #[error("bucket {bucket}, attempt {attempt}: {source}")]
    Attempt {
        bucket: SceneType,
        attempt: u64,
        #[source]
        source: PipelineError,
    },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Safety(#[from] SafetyError),
    #[error(transparent)]
    Ops(#[from] OpsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub scene_type: SceneType,
    pub attempts: u64,
    pub accepted: u64,
    /// NaN when the pre-registration predicts nothing for this bucket.
    #[serde(with = "crate::ops::nonfinite::scalar")]
    pub predicted_yield: f64,
    pub observed_yield: f64,
}

impl BucketStats {
    pub fn new(scene_type: SceneType, attempts: u64, accepted: u64, predicted_yield: f64) -> Self {
        let observed_yield = if attempts == 0 {
            0.0
        } else {
            accepted as f64 / attempts as f64
        };
        Self {
            scene_type,
            attempts,
            accepted,
            predicted_yield,
            observed_yield,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    #[serde(with = "crate::ops::nonfinite::scalar")]
    pub delta_pp: f64,
    #[serde(with = "crate::ops::nonfinite::scalar")]
    pub sigma: f64,
    /// Absent when σ is zero (p ∈ {0, 1}) or undefined.
    pub delta_over_sigma: Option<f64>,
}

fn validate_distribution(distribution: &BTreeMap<SceneType, f64>) -> Result<(), CampaignError> {
    if distribution.is_empty() {
        return Err(CampaignError::InvalidDistribution("no buckets".into()));
    }
    if let Some((s, f)) = distribution.iter().find(|(_, f)| !f.is_finite() || **f < 0.0) {
        return Err(CampaignError::InvalidDistribution(format!("{s} has fraction {f}")));
    }
    let sum: f64 = distribution.values().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(CampaignError::InvalidDistribution(format!("fractions sum to {sum}")));
    }
    Ok(())
}

/// Largest-remainder rounding of `total · fraction`. Ties go to the bucket
/// that comes first in enumeration order.
pub fn allocate_attempts(
    distribution: &BTreeMap<SceneType, f64>,
    total: u64,
) -> Result<BTreeMap<SceneType, u64>, CampaignError> {
    validate_distribution(distribution)?;
    if total == 0 {
        return Err(CampaignError::InvalidDistribution(
            "total attempts must be at least 1".into(),
        ));
    }
    let mut counts = BTreeMap::new();
    let mut remainders = Vec::with_capacity(distribution.len());
    let mut assigned = 0u64;
    for (&s, &f) in distribution {
        let exact = f * total as f64;
        let floor = exact.floor();
        counts.insert(s, floor as u64);
        assigned += floor as u64;
        remainders.push((s, exact - floor));
    }
    // Stable sort keeps enumeration order among equal remainders.
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1));
    if assigned <= total {
        for (s, _) in remainders.iter().cycle().take((total - assigned) as usize) {
            *counts.get_mut(s).expect("bucket present") += 1;
        }
    } else {
        // Only reachable through the 1e-9 slack on the fraction sum.
        let mut excess = assigned - total;
        for (s, _) in remainders.iter().rev().cycle() {
            if excess == 0 {
                break;
            }
            let c = counts.get_mut(s).expect("bucket present");
            if *c > 0 {
                *c -= 1;
                excess -= 1;
            }
        }
    }
    Ok(counts)
}

pub fn expected_aggregate_yield(
    distribution: &BTreeMap<SceneType, f64>,
    predicted_yields: &BTreeMap<SceneType, f64>,
) -> Result<f64, CampaignError> {
    if !distribution.keys().eq(predicted_yields.keys()) {
        let names = |m: &BTreeMap<SceneType, f64>| m.keys().map(|s| s.as_str()).collect::<Vec<_>>().join(",");
        return Err(CampaignError::KeyMismatch(format!(
            "[{}] vs [{}]",
            names(distribution),
            names(predicted_yields)
        )));
    }
    Ok(distribution.iter().map(|(s, f)| f * predicted_yields[s]).sum())
}

/// Δ = observed − predicted; σ = sqrt(p(1−p)/N) with the predicted p.
pub fn deviation_row(stats: &BucketStats) -> DeviationRow {
    let p = stats.predicted_yield;
    let delta = stats.observed_yield - p;
    let sigma = if stats.attempts == 0 {
        f64::NAN
    } else {
        (p * (1.0 - p) / stats.attempts as f64).sqrt()
    };
    let delta_over_sigma = (sigma.is_finite() && sigma > 0.0).then(|| delta / sigma);
    DeviationRow {
        delta_pp: 100.0 * delta,
        sigma,
        delta_over_sigma,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldRow {
    #[serde(flatten)]
    pub stats: BucketStats,
    #[serde(flatten)]
    pub deviation: DeviationRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub attempts: u64,
    pub accepted: u64,
    pub observed_yield: f64,
    pub expected_yield: f64,
    pub delta_pp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldTable {
    pub buckets: Vec<YieldRow>,
    pub aggregate: Option<AggregateRow>,
}

/// Builds per-bucket rows plus the aggregate. The expected aggregate yield
/// uses `distribution` when it covers exactly the buckets in `stats`, and the
/// attempt-weighted predicted yield otherwise.
pub fn yield_table(stats: &[BucketStats], distribution: &BTreeMap<SceneType, f64>) -> YieldTable {
    let buckets: Vec<YieldRow> = stats
        .iter()
        .map(|s| YieldRow {
            stats: *s,
            deviation: deviation_row(s),
        })
        .collect();
    if stats.is_empty() {
        return YieldTable {
            buckets,
            aggregate: None,
        };
    }
    let attempts: u64 = stats.iter().map(|s| s.attempts).sum();
    let accepted: u64 = stats.iter().map(|s| s.accepted).sum();
    let observed = if attempts == 0 {
        0.0
    } else {
        accepted as f64 / attempts as f64
    };
    let predicted: BTreeMap<SceneType, f64> = stats.iter().map(|s| (s.scene_type, s.predicted_yield)).collect();
    let expected = expected_aggregate_yield(distribution, &predicted).unwrap_or_else(|_| {
        if attempts == 0 {
            0.0
        } else {
            stats.iter().map(|s| s.attempts as f64 * s.predicted_yield).sum::<f64>() / attempts as f64
        }
    });
    YieldTable {
        buckets,
        aggregate: Some(AggregateRow {
            attempts,
            accepted,
            observed_yield: observed,
            expected_yield: expected,
            delta_pp: 100.0 * (observed - expected),
        }),
    }
}

impl YieldTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6}",
            "Bucket", "Att.", "Acc.", "Obs.", "Pred.", "Δ (pp)", "Δ/σ"
        );
        for row in &self.buckets {
            let s = &row.stats;
            let z = row
                .deviation
                .delta_over_sigma
                .map_or_else(|| "---".to_string(), |z| format!("{z:.1}"));
            let _ = writeln!(
                out,
                "{:<16} {:>8} {:>8} {:>7.2}% {:>7.2}% {:>+8.2} {:>6}",
                s.scene_type.label(),
                s.attempts,
                s.accepted,
                100.0 * s.observed_yield,
                100.0 * s.predicted_yield,
                row.deviation.delta_pp,
                z
            );
        }
        if let Some(a) = &self.aggregate {
            let _ = writeln!(
                out,
                "{:<16} {:>8} {:>8} {:>7.2}% {:>7.2}% {:>+8.2} {:>6}",
                "Aggregate",
                a.attempts,
                a.accepted,
                100.0 * a.observed_yield,
                100.0 * a.expected_yield,
                a.delta_pp,
                "---"
            );
        }
        out
    }
}

/// Builds a nominal policy for one attempt from the attempt's env config
/// and derived seed.
pub type PolicyFactory<'a> = dyn Fn(&EnvConfig, u64) -> Box<dyn Algorithm> + 'a;

pub fn scripted_teacher_factory(config: &EnvConfig, _seed: u64) -> Box<dyn Algorithm> {
    Box::new(ScriptedTeacher::new(config.v_max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignOptions {
    /// Template environment; its scene is replaced per bucket.
    pub env: EnvConfig,
    pub barrier: BarrierParams,
    pub total: u64,
    pub seed: u64,
    /// Truncated-BPTT chunk length recorded in the dataset header.
    pub chunk_length: usize,
}

impl CampaignOptions {
    pub const DEFAULT_CHUNK_LENGTH: usize = 32;

    pub fn new(total: u64, seed: u64) -> Self {
        Self {
            env: EnvConfig::default(),
            barrier: BarrierParams::default(),
            total,
            seed,
            chunk_length: Self::DEFAULT_CHUNK_LENGTH,
        }
    }
}

/// File names inside the campaign output directory.
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const AUDIT_FILE: &str = "audit.json";
pub const YIELD_JSON_FILE: &str = "yield_table.json";
pub const YIELD_TEXT_FILE: &str = "yield_table.txt";
pub const EVALUATION_FILE: &str = "evaluation.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignManifest {
    pub prereg_artifact: String,
    pub prereg_sha256: String,
    pub total: u64,
    pub seed: u64,
    pub dataset: String,
    pub dataset_sha256: String,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutcome {
    pub dataset_path: PathBuf,
    pub dataset_sha256: String,
    pub stats: Vec<BucketStats>,
    pub commitment: Commitment,
    pub audit: AuditReport,
    pub evaluation: EvaluationReport,
    pub table: YieldTable,
    pub metrics: Metrics,
}

/// Seed of attempt `index` in `bucket`. Each bucket draws from its own
/// ChaCha stream so allocations in one bucket never shift another's seeds.
fn attempt_seeds(seed: u64, bucket: SceneType, count: u64) -> Vec<u64> {
    let stream = SceneType::ALL.iter().position(|s| *s == bucket).expect("known bucket") as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| rng.next_u64()).collect()
}

fn campaign_metrics(stats: &[BucketStats], expected: Option<f64>, audit: &AuditReport, collisions: u64) -> Metrics {
    let attempts: u64 = stats.iter().map(|s| s.attempts).sum();
    let accepted: u64 = stats.iter().map(|s| s.accepted).sum();
    let rate = |n: u64| if attempts == 0 { 0.0 } else { n as f64 / attempts as f64 };
    let mut m = Metrics::new();
    m.insert("attempts".into(), attempts as f64);
    m.insert("accepted".into(), accepted as f64);
    m.insert("aggregate_yield".into(), rate(accepted));
    m.insert("success_rate".into(), rate(accepted));
    m.insert("collision_rate".into(), rate(collisions));
    m.insert("audit_pass".into(), if audit.overall.is_pass() { 1.0 } else { 0.0 });
    if let Some(e) = expected {
        m.insert("expected_aggregate_yield".into(), e);
    }
    for s in stats {
        m.insert(format!("yield.{}", s.scene_type.as_str()), s.observed_yield);
    }
    m
}

/// Runs the campaign described by a committed pre-registration and writes
/// every artifact into `out_dir`.
///
/// Each attempt is one filtered episode; it is accepted when it ends in
/// success. Records stream to the dataset in (bucket, attempt) order. The
/// pre-registration is evaluated afterwards and deviations are reported, not
/// acted on.
pub fn run_campaign(
    prereg: &PreRegistration,
    commitment: &Commitment,
    options: &CampaignOptions,
    policy_factory: &PolicyFactory<'_>,
    out_dir: &Path,
) -> Result<CampaignOutcome, CampaignError> {
    options.env.validate()?;
    let filter = DualBarrierCbf::new(options.barrier)?;
    let allocation = allocate_attempts(&prereg.attempt_distribution, options.total)?;
    std::fs::create_dir_all(out_dir).map_err(|e| OpsError::io(out_dir, e))?;

    let dataset_path = out_dir.join(DATASET_FILE);
    let mut writer = DatasetWriter::create(
        &dataset_path,
        &DatasetHeader::new(options.env.v_max, options.chunk_length),
    )?;
    let mut stats = Vec::with_capacity(allocation.len());
    let mut collisions = 0u64;

    for (&bucket, &attempts) in &allocation {
        let config = options
            .env
            .clone()
            .with_scene(SceneConfig::Generated { scene_type: bucket });
        let mut env = AvoidanceEnv::new(config.clone())?;
        env.set_metric_params(options.barrier);
        let mut accepted = 0u64;
        for (index, seed) in attempt_seeds(options.seed, bucket, attempts).into_iter().enumerate() {
            let attempt = index as u64;
            let wrap = |source: PipelineError| CampaignError::Attempt {
                bucket,
                attempt,
                source,
            };
            let mut policy = policy_factory(&config, seed);
            let record = run_episode(&mut env, Some(&filter), policy.as_mut(), seed).map_err(wrap)?;
            match record.termination_reason {
                TerminationReason::Success => {
                    writer.append(&record).map_err(|e| wrap(e.into()))?;
                    accepted += 1;
                }
                TerminationReason::Collision => collisions += 1,
                _ => {}
            }
        }
        let predicted = prereg.predicted_yields.get(&bucket).copied().unwrap_or(f64::NAN);
        stats.push(BucketStats::new(bucket, attempts, accepted, predicted));
    }
    let (dataset_path, dataset_sha256) = writer.finish()?;

    // The audit checks the file against the campaign's own accounting.
    let accepted_total: u64 = stats.iter().map(|s| s.accepted).sum();
    let target = stats
        .iter()
        .filter(|s| s.accepted > 0)
        .map(|s| (s.scene_type, s.accepted as f64 / accepted_total as f64))
        .collect();
    let audit = dataset_audit(&dataset_path, &AuditSpec::new(target))?;

    let table = yield_table(&stats, &prereg.attempt_distribution);
    let expected = expected_aggregate_yield(&prereg.attempt_distribution, &prereg.predicted_yields).ok();
    let metrics = campaign_metrics(&stats, expected, &audit, collisions);
    let evaluation = prereg.evaluate(&metrics);

    let write_json = |name: &str, bytes: Vec<u8>| atomic_write(&out_dir.join(name), &bytes);
    write_json(AUDIT_FILE, serde_json::to_vec_pretty(&audit).map_err(OpsError::from)?)?;
    write_json(
        YIELD_JSON_FILE,
        serde_json::to_vec_pretty(&table).map_err(OpsError::from)?,
    )?;
    write_json(YIELD_TEXT_FILE, table.render().into_bytes())?;
    write_json(
        EVALUATION_FILE,
        serde_json::to_vec_pretty(&serde_json::json!({ "report": evaluation, "metrics": metrics }))
            .map_err(OpsError::from)?,
    )?;
    let manifest = CampaignManifest {
        prereg_artifact: commitment.artifact_path.clone(),
        prereg_sha256: commitment.sha256.clone(),
        total: options.total,
        seed: options.seed,
        dataset: DATASET_FILE.into(),
        dataset_sha256: dataset_sha256.clone(),
        files: [
            DATASET_FILE,
            AUDIT_FILE,
            YIELD_JSON_FILE,
            YIELD_TEXT_FILE,
            EVALUATION_FILE,
        ]
        .map(String::from)
        .to_vec(),
    };
    write_json(
        MANIFEST_FILE,
        serde_json::to_vec_pretty(&manifest).map_err(OpsError::from)?,
    )?;

    Ok(CampaignOutcome {
        dataset_path,
        dataset_sha256,
        stats,
        commitment: commitment.clone(),
        audit,
        evaluation,
        table,
        metrics,
    })
}
