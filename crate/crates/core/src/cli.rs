//! Command-line front end. Exit codes are the only status channel:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success, or evaluation/audit passed |
//! | 1 | evaluation or audit failed |
//! | 2 | malformed input (config, spec, dataset, schema, arguments) |
//! | 3 | runtime failure (I/O, environment, filter) |
//! | 4 | committed artifact does not match its recorded hash |
//! | 5 | halt demo failed its own verification |

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::campaign::{
    run_campaign, scripted_teacher_factory, yield_table, BucketStats, CampaignError, CampaignOptions, YieldTable,
    YIELD_JSON_FILE, YIELD_TEXT_FILE,
};
use crate::env::{EnvConfig, EnvError, SceneType, TerminationReason, VecAvoidanceEnv};
use crate::ops::{
    atomic_write, dataset_audit, load_verified_artifact, sha256_file, watchdogs_from_preregistration, AuditSpec,
    Comparator, Criterion, DatasetHeader, DatasetWriter, ForensicsBuffer, ForensicsDump, Metrics, OpsError,
    PreRegistration, WatchdogEvent,
};
use crate::pipeline::{
    run_episodes_vec, termination_breakdown, Algorithm, PipelineError, RandomActionAlgorithm, ScriptedTeacher,
    TerminationBreakdown,
};
use crate::safety::{BarrierParams, DualBarrierCbf, SafetyError};

/// Writes to stdout, ignoring failures such as a closed pipe: human output
/// must never change the exit code.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! sayln {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_TAMPER: i32 = 4;
pub const EXIT_DEMO_FAILED: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "shieldrl",
    version,
    about = "Safety-filtered rollouts, campaigns, audits and pre-registration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run episodes and print the termination breakdown.
    Rollout {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Send nominal actions to the environment unfiltered.
        #[arg(long)]
        no_filter: bool,
    },
    /// Commit or evaluate a pre-registration.
    Prereg {
        #[command(subcommand)]
        action: PreregCommand,
    },
    /// Run a data-collection campaign from a committed pre-registration.
    Campaign {
        /// Committed pre-registration artifact.
        #[arg(long)]
        prereg: PathBuf,
        /// Total number of attempts across all buckets.
        #[arg(long, required_unless_present = "replay_counts")]
        total: Option<u64>,
        /// Campaign seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// JSON campaign configuration: {"env": ..., "barrier": ..., "chunk_length": ...}.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Skip execution and build the yield table from recorded per-bucket
        /// counts: {"<scene_type>": {"attempts": N, "accepted": K}, ...}.
        #[arg(long)]
        replay_counts: Option<PathBuf>,
    },
    /// Audit an episode dataset.
    Audit {
        /// Dataset in the episode JSON-lines format.
        #[arg(long)]
        dataset: PathBuf,
        /// JSON audit schema (target distribution and tolerances).
        #[arg(long)]
        schema: PathBuf,
    },
    /// End-to-end demonstration of a contractual halt.
    HaltDemo {
        /// Output directory for the artifact, forensics dump and report.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum PreregCommand {
    /// Write the canonical artifact and its run manifest; print the SHA-256.
    Commit {
        /// Pre-registration specification (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Artifact path; the manifest lands next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a committed pre-registration against observed metrics.
    Eval {
        /// Committed artifact.
        #[arg(long)]
        artifact: PathBuf,
        /// JSON object of metric name to value.
        #[arg(long)]
        metrics: PathBuf,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Random,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub barrier: BarrierParams,
    #[serde(default)]
    pub policy: PolicyKind,
    #[serde(default = "one")]
    pub num_envs: usize,
    #[serde(default = "one")]
    pub episodes: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.env.validate().map_err(|e| e.to_string())?;
        self.barrier.validate().map_err(|e| e.to_string())?;
        if self.num_envs == 0 {
            return Err("num_envs must be at least 1".into());
        }
        if self.episodes == 0 {
            return Err("episodes must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub barrier: BarrierParams,
    #[serde(default = "default_chunk")]
    pub chunk_length: usize,
}

fn default_chunk() -> usize {
    CampaignOptions::DEFAULT_CHUNK_LENGTH
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            barrier: BarrierParams::default(),
            chunk_length: default_chunk(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayCount {
    pub attempts: u64,
    pub accepted: u64,
}

/// Rollout summary written next to the episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSummary {
    pub filtered: bool,
    pub policy: PolicyKind,
    pub seed: u64,
    pub breakdown: TerminationBreakdown,
    pub episodes_file: String,
    pub episodes_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaltDemoReport {
    pub prereg_sha256: String,
    pub halt_event: Option<WatchdogEvent>,
    pub forensics_file: Option<String>,
    pub downstream_marker: String,
    pub halt_cites_commitment: bool,
    pub forensics_has_trigger: bool,
    pub downstream_skipped: bool,
}

impl HaltDemoReport {
    pub fn all_verified(&self) -> bool {
        self.halt_cites_commitment && self.forensics_has_trigger && self.downstream_skipped
    }
}

/// A failed command: exit code plus the message for stderr.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
    fn malformed(message: impl std::fmt::Display) -> Self {
        Self::new(EXIT_MALFORMED, message.to_string())
    }
    fn runtime(message: impl std::fmt::Display) -> Self {
        Self::new(EXIT_RUNTIME, message.to_string())
    }
}

fn ops_failure(e: OpsError) -> Failure {
    match e {
        OpsError::Tampered { .. } => Failure::new(EXIT_TAMPER, format!("tamper: {e}")),
        OpsError::Json(_)
        | OpsError::InvalidPreRegistration(_)
        | OpsError::MalformedDataset { .. }
        | OpsError::InvalidConfig(_) => Failure::malformed(e),
        OpsError::Io { .. } | OpsError::InjectedCrash(_) | OpsError::NonMonotonicStep { .. } => Failure::runtime(e),
    }
}

fn campaign_failure(e: CampaignError) -> Failure {
    match e {
        CampaignError::InvalidDistribution(_) | CampaignError::KeyMismatch(_) => Failure::malformed(e),
        CampaignError::Env(EnvError::InvalidConfig(_)) | CampaignError::Safety(SafetyError::InvalidParams(_)) => {
            Failure::malformed(e)
        }
        CampaignError::Ops(o) => ops_failure(o),
        _ => Failure::runtime(e),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let bytes =
        std::fs::read(path).map_err(|e| Failure::malformed(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| Failure::malformed(format!("invalid {what} {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let bytes = serde_json::to_vec_pretty(value).map_err(Failure::runtime)?;
    atomic_write(path, &bytes).map_err(Failure::runtime)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", dir.display())))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_MALFORMED } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Rollout { config, no_filter } => cmd_rollout(&config, !no_filter),
        Command::Prereg {
            action: PreregCommand::Commit { spec, out },
        } => cmd_prereg_commit(&spec, &out),
        Command::Prereg {
            action:
                PreregCommand::Eval {
                    artifact,
                    metrics,
                    json,
                },
        } => cmd_prereg_eval(&artifact, &metrics, json),
        Command::Campaign {
            prereg,
            total,
            seed,
            out,
            config,
            replay_counts,
        } => cmd_campaign(&prereg, total, seed, &out, config.as_deref(), replay_counts.as_deref()),
        Command::Audit { dataset, schema } => cmd_audit(&dataset, &schema),
        Command::HaltDemo { out } => cmd_halt_demo(&out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn render_breakdown(b: &TerminationBreakdown) -> String {
    let mut out = format!("{:<14} {:>14}\n", "Termination", "Episodes");
    for reason in TerminationReason::ALL {
        let cell = format!("{} ({:.2}%)", b.count(reason), 100.0 * b.rate(reason));
        out.push_str(&format!("{:<14} {:>14}\n", reason.as_str(), cell));
    }
    out.push_str(&format!("{:<14} {:>14}\n", "total", b.episodes));
    out
}

fn make_policy(kind: PolicyKind, v_max: f64, seed: u64) -> Box<dyn Algorithm> {
    match kind {
        PolicyKind::Random => Box::new(RandomActionAlgorithm::new(v_max, seed)),
        PolicyKind::Scripted => Box::new(ScriptedTeacher::new(v_max)),
    }
}

pub const ROLLOUT_EPISODES_FILE: &str = "rollouts.jsonl";
pub const ROLLOUT_SUMMARY_FILE: &str = "rollout_summary.json";
pub const ROLLOUT_TABLE_FILE: &str = "rollout_breakdown.txt";

fn cmd_rollout(config_path: &Path, filtered: bool) -> Result<i32, Failure> {
    let config: RunConfig = read_json(config_path, "run config")?;
    config.validate().map_err(Failure::malformed)?;
    let filter = DualBarrierCbf::new(config.barrier).map_err(Failure::malformed)?;
    create_dir(&config.output_dir)?;

    let episodes_path = config.output_dir.join(ROLLOUT_EPISODES_FILE);
    let mut writer =
        DatasetWriter::create(&episodes_path, &DatasetHeader::new(config.env.v_max, 1)).map_err(Failure::runtime)?;
    // Policy seeds come from their own stream so they never alias env seeds.
    let mut policy_seeds = ChaCha8Rng::seed_from_u64(config.seed);
    policy_seeds.set_stream(1);

    let mut records = Vec::with_capacity(config.episodes);
    let mut start = 0usize;
    while start < config.episodes {
        let batch = config.num_envs.min(config.episodes - start);
        let mut envs = VecAvoidanceEnv::new(config.env.clone(), batch).map_err(Failure::malformed)?;
        envs.set_metric_params(config.barrier);
        let mut policies: Vec<Box<dyn Algorithm>> = (0..batch)
            .map(|_| make_policy(config.policy, config.env.v_max, policy_seeds.next_u64()))
            .collect();
        let seed = config.seed.wrapping_add(start as u64);
        let f: Option<&dyn crate::safety::SafetyFilter> = if filtered { Some(&filter) } else { None };
        let batch_records = run_episodes_vec(&mut envs, f, &mut policies, seed).map_err(|e| match e {
            PipelineError::Env(EnvError::InvalidConfig(m)) => Failure::malformed(m),
            other => Failure::runtime(other),
        })?;
        for r in &batch_records {
            writer.append(r).map_err(Failure::runtime)?;
        }
        records.extend(batch_records);
        start += batch;
    }
    let (_, episodes_sha256) = writer.finish().map_err(Failure::runtime)?;

    let breakdown = termination_breakdown(&records);
    let table = render_breakdown(&breakdown);
    say!("{}", table);
    atomic_write(&config.output_dir.join(ROLLOUT_TABLE_FILE), table.as_bytes()).map_err(Failure::runtime)?;
    let summary = RolloutSummary {
        filtered,
        policy: config.policy,
        seed: config.seed,
        breakdown,
        episodes_file: ROLLOUT_EPISODES_FILE.into(),
        episodes_sha256,
    };
    write_json(&config.output_dir.join(ROLLOUT_SUMMARY_FILE), &summary)?;
    Ok(EXIT_OK)
}

fn cmd_prereg_commit(spec: &Path, out: &Path) -> Result<i32, Failure> {
    let prereg: PreRegistration = read_json(spec, "pre-registration")?;
    prereg.validate().map_err(Failure::malformed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let commitment = prereg.commit_with_manifest(out).map_err(ops_failure)?;
    sayln!("{}", commitment.sha256);
    Ok(EXIT_OK)
}

fn cmd_prereg_eval(artifact: &Path, metrics_path: &Path, json: bool) -> Result<i32, Failure> {
    let (prereg, commitment) = load_verified_artifact(artifact).map_err(ops_failure)?;
    let metrics: Metrics = read_json(metrics_path, "metrics")?;
    let report = prereg.evaluate(&metrics);
    if json {
        sayln!("{}", serde_json::to_string_pretty(&report).map_err(Failure::runtime)?);
    } else {
        sayln!("pre-registration {} ({})", report.name, commitment.sha256);
        for o in &report.outcomes {
            let observed = o.observed.map_or_else(|| "absent".to_string(), |v| v.to_string());
            sayln!(
                "  {:<14} {} {} {}: observed {observed}",
                format!("{:?}", o.status).to_lowercase(),
                o.metric,
                o.comparator.symbol(),
                o.threshold
            );
        }
        sayln!("overall: {}", if report.overall_pass { "pass" } else { "fail" });
    }
    Ok(if report.overall_pass { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_campaign(
    prereg_path: &Path,
    total: Option<u64>,
    seed: u64,
    out: &Path,
    config: Option<&Path>,
    replay: Option<&Path>,
) -> Result<i32, Failure> {
    let (prereg, commitment) = load_verified_artifact(prereg_path).map_err(ops_failure)?;
    create_dir(out)?;

    if let Some(replay) = replay {
        let counts: BTreeMap<SceneType, ReplayCount> = read_json(replay, "replay counts")?;
        let stats: Vec<BucketStats> = counts
            .iter()
            .map(|(s, c)| {
                if c.accepted > c.attempts {
                    return Err(Failure::malformed(format!("{s}: accepted exceeds attempts")));
                }
                let p = prereg.predicted_yields.get(s).copied().unwrap_or(f64::NAN);
                Ok(BucketStats::new(*s, c.attempts, c.accepted, p))
            })
            .collect::<Result<_, _>>()?;
        let table = yield_table(&stats, &prereg.attempt_distribution);
        emit_table(out, &table)?;
        return Ok(EXIT_OK);
    }

    let cfg: CampaignConfig = match config {
        Some(p) => read_json(p, "campaign config")?,
        None => CampaignConfig::default(),
    };
    let options = CampaignOptions {
        env: cfg.env,
        barrier: cfg.barrier,
        total: total.ok_or_else(|| Failure::malformed("--total is required"))?,
        seed,
        chunk_length: cfg.chunk_length,
    };
    let outcome =
        run_campaign(&prereg, &commitment, &options, &scripted_teacher_factory, out).map_err(campaign_failure)?;
    say!("{}", outcome.table.render());
    sayln!(
        "dataset {} sha256 {}",
        outcome.dataset_path.display(),
        outcome.dataset_sha256
    );
    sayln!(
        "audit: {}",
        if outcome.audit.overall.is_pass() {
            "PASS"
        } else {
            "FAIL"
        }
    );
    for c in &outcome.audit.checks {
        sayln!("  {:<20} {:?}: {}", c.name, c.verdict, c.detail);
    }
    sayln!(
        "pre-registration {}: {}",
        commitment.sha256,
        if outcome.evaluation.overall_pass {
            "criteria met"
        } else {
            "deviation flagged (campaign not halted)"
        }
    );
    Ok(EXIT_OK)
}

fn emit_table(out: &Path, table: &YieldTable) -> Result<(), Failure> {
    let text = table.render();
    say!("{text}");
    atomic_write(&out.join(YIELD_TEXT_FILE), text.as_bytes()).map_err(Failure::runtime)?;
    write_json(&out.join(YIELD_JSON_FILE), table)
}

fn cmd_audit(dataset: &Path, schema: &Path) -> Result<i32, Failure> {
    let spec: AuditSpec = read_json(schema, "audit schema")?;
    if !dataset.exists() {
        return Err(Failure::malformed(format!(
            "dataset {} does not exist",
            dataset.display()
        )));
    }
    let report = dataset_audit(dataset, &spec).map_err(ops_failure)?;
    sayln!("{}", serde_json::to_string_pretty(&report).map_err(Failure::runtime)?);
    Ok(if report.overall.is_pass() { EXIT_OK } else { EXIT_FAIL })
}

pub const HALT_DEMO_PREREG_FILE: &str = "prereg.json";
pub const HALT_DEMO_REPORT_FILE: &str = "halt_report.json";
pub const DOWNSTREAM_MARKER_FILE: &str = "downstream_stage.done";
const DEMO_STEPS: u64 = 200;
const DEMO_EVAL_EVERY: u64 = 25;

/// Synthetic training metrics: the loss decays every step, and a success
/// rate that plateaus far below the committed threshold is reported at each
/// evaluation step.
fn demo_metrics(step: u64) -> Metrics {
    let mut m = Metrics::new();
    m.insert("train_loss".into(), 1.0 / (1.0 + 0.05 * step as f64));
    if step.is_multiple_of(DEMO_EVAL_EVERY) {
        m.insert("success_rate".into(), 0.02 * (1.0 - (-(step as f64) / 50.0).exp()));
    }
    m
}

fn cmd_halt_demo(out: &Path) -> Result<i32, Failure> {
    create_dir(out)?;
    let marker = out.join(DOWNSTREAM_MARKER_FILE);
    if marker.exists() {
        std::fs::remove_file(&marker).map_err(Failure::runtime)?;
    }

    let mut prereg = PreRegistration::new("halt-demo");
    prereg.criteria = vec![Criterion {
        metric: "success_rate".into(),
        comparator: Comparator::Ge,
        threshold: 0.85,
    }];
    prereg.attempt_distribution = BTreeMap::from([(SceneType::Open, 1.0)]);
    prereg.notes = "success_rate >= 0.85 is unreachable for the synthetic stage".into();
    let artifact = out.join(HALT_DEMO_PREREG_FILE);
    let commitment = prereg.commit_with_manifest(&artifact).map_err(Failure::runtime)?;
    sayln!("committed {} sha256 {}", artifact.display(), commitment.sha256);

    let mut registry = watchdogs_from_preregistration(&prereg, &commitment);
    let mut forensics = ForensicsBuffer::new(64);
    let mut halt: Option<WatchdogEvent> = None;
    let mut dump_path: Option<PathBuf> = None;

    // Training stage.
    for step in 1..=DEMO_STEPS {
        let metrics = demo_metrics(step);
        forensics.record(step, metrics.clone()).map_err(Failure::runtime)?;
        registry.update(&metrics, step).map_err(Failure::runtime)?;
        if let Some(event) = registry.should_halt() {
            sayln!(
                "halt at step {}: {} {} {} {} (pre-registration {})",
                event.step,
                event.metric,
                event.observed,
                event.comparator.symbol(),
                event.threshold,
                event.commitment_sha256.as_deref().unwrap_or("none")
            );
            dump_path = Some(forensics.dump(out, Some(event)).map_err(Failure::runtime)?);
            halt = Some(event.clone());
            break;
        }
    }

    // Downstream stage runs only when training was not halted.
    if halt.is_none() {
        atomic_write(&marker, b"downstream stage executed\n").map_err(Failure::runtime)?;
    }

    let on_disk = sha256_file(&artifact).map_err(Failure::runtime)?;
    let halt_cites_commitment = halt.as_ref().is_some_and(|e| {
        e.is_halt && e.commitment_sha256.as_deref() == Some(commitment.sha256.as_str()) && on_disk == commitment.sha256
    });
    let forensics_has_trigger = match (&dump_path, &halt) {
        (Some(p), Some(event)) => std::fs::read(p)
            .ok()
            .and_then(|b| serde_json::from_slice::<ForensicsDump>(&b).ok())
            .is_some_and(|d| {
                d.trigger.as_ref() == Some(event) && d.entries.last().is_some_and(|e| e.step == event.step)
            }),
        _ => false,
    };
    let downstream_skipped = !marker.exists();

    let report = HaltDemoReport {
        prereg_sha256: commitment.sha256.clone(),
        halt_event: halt,
        forensics_file: dump_path.map(|p| p.display().to_string()),
        downstream_marker: marker.display().to_string(),
        halt_cites_commitment,
        forensics_has_trigger,
        downstream_skipped,
    };
    write_json(&out.join(HALT_DEMO_REPORT_FILE), &report)?;

    let tick = |ok: bool| if ok { "[x]" } else { "[ ]" };
    sayln!(
        "{} contractual halt cites the committed SHA-256",
        tick(report.halt_cites_commitment)
    );
    sayln!(
        "{} forensics dump written with the trigger event",
        tick(report.forensics_has_trigger)
    );
    sayln!("{} downstream stage not executed", tick(report.downstream_skipped));
    Ok(if report.all_verified() {
        EXIT_OK
    } else {
        EXIT_DEMO_FAILED
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("shieldrl").chain(args.iter().copied()))
    }

    #[test]
    fn help_and_bad_args() {
        assert_eq!(run_args(&["--help"]), EXIT_OK);
        assert_eq!(run_args(&["no-such-command"]), EXIT_MALFORMED);
        assert_eq!(run_args(&["rollout"]), EXIT_MALFORMED);
    }

    #[test]
    fn run_config_rejects_unknown_keys() {
        let ok: RunConfig = serde_json::from_str(r#"{"output_dir": "x", "policy": "scripted"}"#).unwrap();
        assert_eq!(ok.policy, PolicyKind::Scripted);
        assert_eq!(ok.num_envs, 1);
        assert!(serde_json::from_str::<RunConfig>(r#"{"output_dir": "x", "bogus": 1}"#).is_err());
    }

    #[test]
    fn rollout_config_errors_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"output_dir": "x", "num_envs": 0}"#).unwrap();
        assert_eq!(
            run_args(&["rollout", "--config", cfg.to_str().unwrap()]),
            EXIT_MALFORMED
        );
        std::fs::write(&cfg, "{not json").unwrap();
        assert_eq!(
            run_args(&["rollout", "--config", cfg.to_str().unwrap()]),
            EXIT_MALFORMED
        );
    }

    #[test]
    fn demo_metrics_never_meet_threshold() {
        for step in 1..=DEMO_STEPS {
            if let Some(v) = demo_metrics(step).get("success_rate") {
                assert!(*v < 0.85);
            }
        }
        assert!(!demo_metrics(1).contains_key("success_rate"));
        assert!(demo_metrics(DEMO_EVAL_EVERY).contains_key("success_rate"));
    }

    #[test]
    fn breakdown_table_lists_every_reason() {
        let t = render_breakdown(&TerminationBreakdown::default());
        for r in TerminationReason::ALL {
            assert!(t.contains(r.as_str()));
        }
        assert!(t.contains("0 (0.00%)"));
    }
}
