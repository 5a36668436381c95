//! Metric watchdogs with latching halt semantics.

use serde::{Deserialize, Serialize};

use super::{Commitment, Comparator, Metrics, OpsError, PreRegistration};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Watchdog {
    pub name: String,
    pub metric: String,
    pub comparator: Comparator,
    pub threshold: f64,
    #[serde(default = "default_consecutive")]
    pub consecutive_required: u32,
    pub halt: bool,
}

fn default_consecutive() -> u32 {
    1
}

impl Watchdog {
    pub fn new(name: impl Into<String>, metric: impl Into<String>, comparator: Comparator, threshold: f64) -> Self {
        Self {
            name: name.into(),
            metric: metric.into(),
            comparator,
            threshold,
            consecutive_required: 1,
            halt: false,
        }
    }

    pub fn halting(mut self) -> Self {
        self.halt = true;
        self
    }

    pub fn consecutive(mut self, n: u32) -> Self {
        self.consecutive_required = n.max(1);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatchdogEvent {
    pub watchdog_name: String,
    pub metric: String,
    pub step: u64,
    pub observed: f64,
    pub comparator: Comparator,
    pub threshold: f64,
    pub is_halt: bool,
    /// Hash of the pre-registration the watchdog was derived from, if any.
    pub commitment_sha256: Option<String>,
}

/// A set of watchdogs updated together. Single writer; use
/// [`WatchdogRegistry::snapshot`] to hand a copy to readers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WatchdogRegistry {
    watchdogs: Vec<Watchdog>,
    run_lengths: Vec<u32>,
    last_step: Option<u64>,
    halt_event: Option<WatchdogEvent>,
    commitment_sha256: Option<String>,
}

impl WatchdogRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, watchdog: Watchdog) {
        self.watchdogs.push(watchdog);
        self.run_lengths.push(0);
    }

    pub fn watchdogs(&self) -> &[Watchdog] {
        &self.watchdogs
    }

    pub fn len(&self) -> usize {
        self.watchdogs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.watchdogs.is_empty()
    }

    pub fn commitment_sha256(&self) -> Option<&str> {
        self.commitment_sha256.as_deref()
    }

    /// Feeds one metric sample. A watchdog fires on every update at which its
    /// condition has held for at least `consecutive_required` consecutive
    /// updates. Updates that lack the watchdog's metric leave its run length
    /// unchanged.
    pub fn update(&mut self, metrics: &Metrics, step: u64) -> Result<Vec<WatchdogEvent>, OpsError> {
        if let Some(last) = self.last_step {
            if step < last {
                return Err(OpsError::NonMonotonicStep { last, got: step });
            }
        }
        self.last_step = Some(step);

        let mut events = Vec::new();
        for (w, run) in self.watchdogs.iter().zip(self.run_lengths.iter_mut()) {
            let Some(&observed) = metrics.get(&w.metric) else {
                continue;
            };
            if w.comparator.holds(observed, w.threshold) {
                *run = run.saturating_add(1);
            } else {
                *run = 0;
            }
            if *run >= w.consecutive_required {
                events.push(WatchdogEvent {
                    watchdog_name: w.name.clone(),
                    metric: w.metric.clone(),
                    step,
                    observed,
                    comparator: w.comparator,
                    threshold: w.threshold,
                    is_halt: w.halt,
                    commitment_sha256: self.commitment_sha256.clone(),
                });
            }
        }
        if self.halt_event.is_none() {
            self.halt_event = events.iter().find(|e| e.is_halt).cloned();
        }
        Ok(events)
    }

    /// First halt event ever observed. Latches: never cleared once set.
    pub fn should_halt(&self) -> Option<&WatchdogEvent> {
        self.halt_event.as_ref()
    }

    pub fn snapshot(&self) -> WatchdogRegistry {
        self.clone()
    }
}

/// One halting watchdog per criterion, firing when the criterion is violated.
pub fn watchdogs_from_preregistration(prereg: &PreRegistration, commitment: &Commitment) -> WatchdogRegistry {
    let mut registry = WatchdogRegistry {
        commitment_sha256: Some(commitment.sha256.clone()),
        ..Default::default()
    };
    for c in &prereg.criteria {
        registry.register(
            Watchdog::new(
                format!("prereg:{}", c.metric),
                c.metric.clone(),
                c.comparator.negate(),
                c.threshold,
            )
            .halting(),
        );
    }
    registry
}
