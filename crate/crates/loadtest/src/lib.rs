//! Load harness: virtual students log in, list tutorials and fetch a section
//! bundle, closed-loop, against a running service. Reports latency
//! percentiles per route and end to end and checks them against a budget.

mod runner;
mod stats;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use runner::{provision, run_load, run_provisioned, sweep, Fixture};
pub use stats::{percentile, LatencyStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Login,
    ListTutorials,
    FetchBundle,
}

impl Step {
    pub fn name(self) -> &'static str {
        match self {
            Step::Login => "login",
            Step::ListTutorials => "list_tutorials",
            Step::FetchBundle => "fetch_bundle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub users: usize,
    /// Coding sections provisioned; users spread across them.
    pub sections: usize,
    /// Users start evenly spread over this window.
    pub ramp_ms: u64,
    pub iterations: usize,
    pub scenario: Vec<Step>,
}

impl Default for LoadProfile {
    fn default() -> Self {
        LoadProfile { users: 50, sections: 1, ramp_ms: 0, iterations: 1, scenario: vec![Step::Login, Step::ListTutorials, Step::FetchBundle] }
    }
}

impl LoadProfile {
    pub fn with_users(users: usize) -> Self {
        LoadProfile { users, ..LoadProfile::default() }
    }

    pub fn check(&self) -> Result<(), LoadError> {
        if self.users == 0 || self.sections == 0 || self.iterations == 0 {
            return Err(LoadError::InvalidProfile("users, sections and iterations must be at least 1".into()));
        }
        if self.scenario.is_empty() {
            return Err(LoadError::InvalidProfile("scenario is empty".into()));
        }
        if self.scenario.contains(&Step::FetchBundle) && !self.scenario.contains(&Step::ListTutorials) {
            return Err(LoadError::InvalidProfile("fetch_bundle needs list_tutorials earlier in the scenario".into()));
        }
        if self.scenario.first() != Some(&Step::Login) {
            return Err(LoadError::InvalidProfile("scenario must start with login".into()));
        }
        Ok(())
    }

    pub fn total_requests(&self) -> usize {
        self.users * self.scenario.len() * self.iterations
    }
}

/// One request made by one virtual user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub user: usize,
    pub iteration: usize,
    pub step: Step,
    /// Send to last body byte, as seen by the harness.
    pub client_ms: f64,
    /// The service's own `x-server-duration-ms`, when present.
    pub server_ms: Option<f64>,
    /// 0 when no response arrived or the step was skipped.
    pub status: u16,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Sample {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub target: String,
    pub budget_ms: u64,
    pub profile: LoadProfile,
    pub total_requests: usize,
    pub errors: usize,
    pub wall_ms: f64,
    pub throughput_rps: f64,
    pub per_route: BTreeMap<String, LatencyStats>,
    /// Sum of one iteration's step latencies.
    pub end_to_end: LatencyStats,
    /// Samples whose client time was below the server's own duration.
    pub soundness_violations: usize,
    pub pass: bool,
}

impl LoadReport {
    pub fn from_samples(target: &str, budget_ms: u64, profile: &LoadProfile, samples: &[Sample], wall_ms: f64) -> Self {
        let mut per_route: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut journeys: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for s in samples {
            per_route.entry(s.step.name().to_owned()).or_default().push(s.client_ms);
            *journeys.entry((s.user, s.iteration)).or_default() += s.client_ms;
        }
        let errors = samples.iter().filter(|s| !s.ok()).count();
        let end_to_end = LatencyStats::from_samples(journeys.into_values());
        let soundness_violations = samples.iter().filter(|s| s.server_ms.is_some_and(|server| s.client_ms < server)).count();
        LoadReport {
            target: target.to_owned(),
            budget_ms,
            profile: profile.clone(),
            total_requests: samples.len(),
            errors,
            wall_ms,
            throughput_rps: if wall_ms > 0.0 { samples.len() as f64 / (wall_ms / 1000.0) } else { 0.0 },
            per_route: per_route.into_iter().map(|(k, v)| (k, LatencyStats::from_samples(v))).collect(),
            pass: errors == 0 && !samples.is_empty() && end_to_end.p95 <= budget_ms as f64,
            end_to_end,
            soundness_violations,
        }
    }

    pub fn table(&self) -> String {
        let mut out = format!("{} users x {} iterations against {}\n", self.profile.users, self.profile.iterations, self.target);
        out += &format!("{:<16}{:>8}{:>10}{:>10}{:>10}{:>10}\n", "route", "count", "p50 ms", "p95 ms", "p99 ms", "max ms");
        let rows = self.per_route.iter().map(|(k, v)| (k.as_str(), v)).chain(std::iter::once(("end_to_end", &self.end_to_end)));
        for (name, s) in rows {
            out += &format!("{:<16}{:>8}{:>10.1}{:>10.1}{:>10.1}{:>10.1}\n", name, s.count, s.p50, s.p95, s.p99, s.max);
        }
        out += &format!(
            "requests {}  errors {}  throughput {:.1} req/s  budget p95 <= {} ms  {}\n",
            self.total_requests,
            self.errors,
            self.throughput_rps,
            self.budget_ms,
            if self.pass { "PASS" } else { "FAIL" }
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub runs: Vec<LoadReport>,
    /// Whether end-to-end p95 never decreased as users grew. Reported, not enforced.
    pub monotone_p95: bool,
}

impl SweepReport {
    pub fn new(runs: Vec<LoadReport>) -> Self {
        let mut by_users: Vec<(usize, f64)> = runs.iter().map(|r| (r.profile.users, r.end_to_end.p95)).collect();
        by_users.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let monotone_p95 = by_users.windows(2).all(|w| w[0].0 == w[1].0 || w[0].1 <= w[1].1);
        SweepReport { runs, monotone_p95 }
    }

    pub fn pass(&self) -> bool {
        self.runs.iter().all(|r| r.pass)
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:>8}{:>12}{:>12}{:>10}{:>8}\n", "users", "p50 ms", "p95 ms", "errors", "pass");
        for r in &self.runs {
            out += &format!("{:>8}{:>12.1}{:>12.1}{:>10}{:>8}\n", r.profile.users, r.end_to_end.p50, r.end_to_end.p95, r.errors, if r.pass { "yes" } else { "no" });
        }
        out += &format!("p95 non-decreasing in users: {}\n", if self.monotone_p95 { "yes" } else { "no" });
        out
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("invalid load profile: {0}")]
    InvalidProfile(String),
    #[error("sweep needs at least one profile")]
    EmptySweep,
    #[error("target {target} unreachable: {reason}")]
    Unreachable { target: String, reason: String },
    #[error("provisioning failed: {0}")]
    Setup(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Line-delimited JSON: every sample, then one summary per run, then the
/// sweep summary when there is more than one run.
pub fn write_report(path: &Path, runs: &[(LoadReport, Vec<Sample>)]) -> Result<(), LoadError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let line = |out: &mut std::io::BufWriter<std::fs::File>, v: serde_json::Value| -> std::io::Result<()> {
        serde_json::to_writer(&mut *out, &v)?;
        out.write_all(b"\n")
    };
    for (i, (report, samples)) in runs.iter().enumerate() {
        for s in samples {
            let mut v = serde_json::to_value(s).expect("sample serializes");
            v["record"] = "sample".into();
            v["run"] = i.into();
            line(&mut out, v)?;
        }
        let mut v = serde_json::to_value(report).expect("report serializes");
        v["record"] = "summary".into();
        v["run"] = i.into();
        line(&mut out, v)?;
    }
    if runs.len() > 1 {
        let sweep = SweepReport::new(runs.iter().map(|r| r.0.clone()).collect());
        let points: Vec<_> = sweep.runs.iter().map(|r| serde_json::json!({ "users": r.profile.users, "p95": r.end_to_end.p95, "pass": r.pass })).collect();
        line(&mut out, serde_json::json!({ "record": "sweep", "points": points, "monotone_p95": sweep.monotone_p95 }))?;
    }
    out.flush()?;
    Ok(())
}
