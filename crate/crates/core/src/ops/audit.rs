//! Dataset audit: scene-type mix, action sanity, episode-length outliers and
//! truncated-BPTT integrity. Every check runs regardless of earlier failures.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{dataset::read_dataset, sha256_file, OpsError};
use crate::env::SceneType;
use crate::pipeline::RolloutRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    /// Expected fraction of episodes per scene type.
    pub target_distribution: BTreeMap<SceneType, f64>,
    /// Allowed absolute deviation per bucket, as a fraction (0.02 = 2 pp).
    #[serde(default = "default_tolerance")]
    pub distribution_tolerance: f64,
    /// Overrides the header's action bound.
    #[serde(default)]
    pub v_max: Option<f64>,
    /// Overrides the header's truncation chunk length.
    #[serde(default)]
    pub chunk_length: Option<usize>,
    #[serde(default = "default_mad_multiplier")]
    pub outlier_mad_multiplier: f64,
    #[serde(default = "default_outlier_fraction")]
    pub max_outlier_fraction: f64,
}

fn default_tolerance() -> f64 {
    0.02
}
fn default_mad_multiplier() -> f64 {
    5.0
}
fn default_outlier_fraction() -> f64 {
    0.01
}

impl AuditSpec {
    pub fn new(target_distribution: BTreeMap<SceneType, f64>) -> Self {
        Self {
            target_distribution,
            distribution_tolerance: default_tolerance(),
            v_max: None,
            chunk_length: None,
            outlier_mad_multiplier: default_mad_multiplier(),
            max_outlier_fraction: default_outlier_fraction(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub overall: Verdict,
    pub checks: Vec<AuditCheck>,
    pub dataset_sha256: String,
    pub episodes: usize,
}

pub fn dataset_audit(path: &Path, spec: &AuditSpec) -> Result<AuditReport, OpsError> {
    let digest = sha256_file(path)?;
    let (header, records) = read_dataset(path)?;
    let v_max = spec.v_max.unwrap_or(header.v_max);
    let chunk = spec.chunk_length.unwrap_or(header.chunk_length);

    let checks = vec![
        check_distribution(&records, spec),
        check_actions(&records, v_max),
        check_lengths(&records, spec),
        check_bptt(&records, chunk),
    ];
    let overall = Verdict::from_bool(checks.iter().all(|c| c.verdict.is_pass()));
    Ok(AuditReport {
        overall,
        checks,
        dataset_sha256: digest,
        episodes: records.len(),
    })
}

fn check_distribution(records: &[RolloutRecord], spec: &AuditSpec) -> AuditCheck {
    let mut counts: BTreeMap<SceneType, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.scene_type).or_default() += 1;
    }
    let total = records.len();
    let buckets: BTreeSet<SceneType> = counts.keys().chain(spec.target_distribution.keys()).copied().collect();
    let mut worst: Option<(SceneType, f64)> = None;
    let mut ok = total > 0 || spec.target_distribution.values().all(|f| *f == 0.0);
    for b in buckets {
        let observed = if total == 0 {
            0.0
        } else {
            counts.get(&b).copied().unwrap_or(0) as f64 / total as f64
        };
        let target = spec.target_distribution.get(&b).copied().unwrap_or(0.0);
        let dev = (observed - target).abs();
        if dev > spec.distribution_tolerance {
            ok = false;
        }
        if worst.is_none_or(|(_, w)| dev > w) {
            worst = Some((b, dev));
        }
    }
    let detail = match worst {
        Some((b, dev)) => format!(
            "{total} episodes; largest deviation {:.2} pp on {b} (tolerance {:.2} pp)",
            100.0 * dev,
            100.0 * spec.distribution_tolerance
        ),
        None => "no buckets".into(),
    };
    AuditCheck {
        name: "scene_distribution".into(),
        verdict: Verdict::from_bool(ok),
        detail,
    }
}

fn check_actions(records: &[RolloutRecord], v_max: f64) -> AuditCheck {
    let mut non_finite = 0usize;
    let mut out_of_range = 0usize;
    for step in records.iter().flat_map(|r| &r.steps) {
        for a in [step.nominal_action, step.safe_action] {
            if !a.is_finite() {
                non_finite += 1;
            } else if a.max_abs() > v_max {
                out_of_range += 1;
            }
        }
    }
    AuditCheck {
        name: "action_sanity".into(),
        verdict: Verdict::from_bool(non_finite == 0 && out_of_range == 0),
        detail: format!("{non_finite} non-finite actions, {out_of_range} outside [-{v_max}, {v_max}]"),
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Normal-consistency factor turning a MAD into a standard-deviation estimate.
const MAD_SCALE: f64 = 1.4826;

/// Flags episodes outside `median ± k·MAD` of their own scene type, since
/// lengths differ systematically between scene types. The MAD is the
/// normal-consistent one and, as lengths are integers, floored at one step.
fn check_lengths(records: &[RolloutRecord], spec: &AuditSpec) -> AuditCheck {
    if records.is_empty() {
        return AuditCheck {
            name: "length_outliers".into(),
            verdict: Verdict::Pass,
            detail: "no episodes".into(),
        };
    }
    let mut by_scene: BTreeMap<SceneType, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_scene.entry(r.scene_type).or_default().push(r.length as f64);
    }
    let mut flagged = 0usize;
    let mut bands = Vec::new();
    for (scene, lengths) in &mut by_scene {
        lengths.sort_by(f64::total_cmp);
        let med = median(lengths);
        let mut deviations: Vec<f64> = lengths.iter().map(|l| (l - med).abs()).collect();
        deviations.sort_by(f64::total_cmp);
        let mad = (MAD_SCALE * median(&deviations)).max(1.0);
        let band = spec.outlier_mad_multiplier * mad;
        flagged += lengths.iter().filter(|l| (*l - med).abs() > band).count();
        bands.push(format!("{scene}: {med}±{band:.1}"));
    }
    let fraction = flagged as f64 / records.len() as f64;
    AuditCheck {
        name: "length_outliers".into(),
        verdict: Verdict::from_bool(fraction <= spec.max_outlier_fraction),
        detail: format!(
            "{flagged} of {} outside median ± {}·MAD ({:.2}%); bands {}",
            records.len(),
            spec.outlier_mad_multiplier,
            100.0 * fraction,
            bands.join(", ")
        ),
    }
}

fn check_bptt(records: &[RolloutRecord], chunk: usize) -> AuditCheck {
    let short = records.iter().filter(|r| r.steps.len() < chunk).count();
    let inconsistent = records.iter().filter(|r| r.length != r.steps.len()).count();
    let mut seen = BTreeSet::new();
    let duplicated = records.iter().filter(|r| !seen.insert((r.scene_type, r.seed))).count();
    AuditCheck {
        name: "bptt_integrity".into(),
        verdict: Verdict::from_bool(short == 0 && inconsistent == 0 && duplicated == 0),
        detail: format!(
            "chunk length {chunk}: {short} episodes too short, {inconsistent} with length mismatch, {duplicated} split or duplicated"
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TerminationReason;
    use crate::math::Vec2;
    use crate::ops::{DatasetHeader, DatasetWriter};
    use crate::pipeline::StepRecord;

    fn record(scene_type: SceneType, seed: u64, length: usize) -> RolloutRecord {
        let step = StepRecord {
            observation: vec![0.0; 9],
            nominal_action: Vec2::new(1.0, -1.0),
            safe_action: Vec2::new(0.5, -0.5),
            modified: true,
            h_hard: 2.0,
            h_soft: 0.5,
        };
        RolloutRecord {
            scene_type,
            seed,
            steps: vec![step; length],
            termination_reason: TerminationReason::Success,
            length,
        }
    }

    /// 100 episodes split 50/30/20, lengths 40..=49.
    fn clean() -> Vec<RolloutRecord> {
        let mix = [
            (SceneType::Open, 50),
            (SceneType::SingleStatic, 30),
            (SceneType::DynamicObstacle, 20),
        ];
        let mut out = Vec::new();
        for (scene, n) in mix {
            for i in 0..n {
                out.push(record(scene, i, 40 + (i as usize % 10)));
            }
        }
        out
    }

    fn target() -> AuditSpec {
        AuditSpec::new(BTreeMap::from([
            (SceneType::Open, 0.5),
            (SceneType::SingleStatic, 0.3),
            (SceneType::DynamicObstacle, 0.2),
        ]))
    }

    fn write(dir: &Path, records: &[RolloutRecord]) -> std::path::PathBuf {
        let path = dir.join("d.jsonl");
        let mut w = DatasetWriter::create(&path, &DatasetHeader::new(5.0, 16)).unwrap();
        for r in records {
            w.append(r).unwrap();
        }
        w.finish().unwrap().0
    }

    fn verdicts(report: &AuditReport) -> Vec<(&str, bool)> {
        report
            .checks
            .iter()
            .map(|c| (c.name.as_str(), c.verdict.is_pass()))
            .collect()
    }

    #[test]
    fn clean_dataset_passes() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), &clean());
        let report = dataset_audit(&path, &target()).unwrap();
        assert_eq!(report.overall, Verdict::Pass, "{report:#?}");
        assert_eq!(report.checks.len(), 4);
        assert_eq!(report.episodes, 100);
        assert_eq!(report.dataset_sha256, sha256_file(&path).unwrap());
    }

    #[test]
    fn nan_action_fails_only_action_sanity() {
        let dir = tempfile::tempdir().unwrap();
        let mut recs = clean();
        recs[7].steps[3].nominal_action = Vec2::new(f64::NAN, 0.0);
        let report = dataset_audit(&write(dir.path(), &recs), &target()).unwrap();
        assert_eq!(report.overall, Verdict::Fail);
        assert_eq!(
            verdicts(&report),
            vec![
                ("scene_distribution", true),
                ("action_sanity", false),
                ("length_outliers", true),
                ("bptt_integrity", true)
            ]
        );
    }

    #[test]
    fn out_of_range_action_fails() {
        let dir = tempfile::tempdir().unwrap();
        let mut recs = clean();
        recs[0].steps[0].safe_action = Vec2::new(5.5, 0.0);
        let report = dataset_audit(&write(dir.path(), &recs), &target()).unwrap();
        assert!(!report.checks[1].verdict.is_pass());
    }

    #[test]
    fn distribution_drift_detected() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = target();
        spec.target_distribution.insert(SceneType::Open, 0.47);
        spec.target_distribution.insert(SceneType::SingleStatic, 0.33);
        let report = dataset_audit(&write(dir.path(), &clean()), &spec).unwrap();
        assert!(!report.checks[0].verdict.is_pass());
        assert!(report.checks[1..].iter().all(|c| c.verdict.is_pass()));
    }

    #[test]
    fn length_outliers_fail_above_one_percent() {
        let dir = tempfile::tempdir().unwrap();
        let mut recs = clean();
        recs[10] = record(SceneType::Open, 10, 400);
        let one = dataset_audit(&write(dir.path(), &recs), &target()).unwrap();
        assert!(one.checks[2].verdict.is_pass(), "{}", one.checks[2].detail);
        recs[11] = record(SceneType::Open, 11, 400);
        let two = dataset_audit(&write(dir.path(), &recs), &target()).unwrap();
        assert!(!two.checks[2].verdict.is_pass(), "{}", two.checks[2].detail);
    }

    #[test]
    fn constant_lengths_are_not_outliers() {
        let dir = tempfile::tempdir().unwrap();
        let recs: Vec<_> = (0..50).map(|i| record(SceneType::Open, i, 30)).collect();
        let spec = AuditSpec::new(BTreeMap::from([(SceneType::Open, 1.0)]));
        let report = dataset_audit(&write(dir.path(), &recs), &spec).unwrap();
        assert_eq!(report.overall, Verdict::Pass);
    }

    #[test]
    fn bptt_violations_detected() {
        let dir = tempfile::tempdir().unwrap();
        for mutate in [
            (|r: &mut Vec<RolloutRecord>| r[0].steps.truncate(10)) as fn(&mut Vec<RolloutRecord>),
            |r| r[0].length = 5,
            |r| r[1].seed = r[0].seed,
        ] {
            let mut recs = clean();
            mutate(&mut recs);
            if recs[0].steps.len() == 10 {
                recs[0].length = 10;
            }
            let report = dataset_audit(&write(dir.path(), &recs), &target()).unwrap();
            assert!(!report.checks[3].verdict.is_pass(), "{}", report.checks[3].detail);
        }
    }

    #[test]
    fn empty_dataset_against_nonempty_target_fails() {
        let dir = tempfile::tempdir().unwrap();
        let report = dataset_audit(&write(dir.path(), &[]), &target()).unwrap();
        assert!(!report.checks[0].verdict.is_pass());
        assert_eq!(report.checks.len(), 4);
    }
}
