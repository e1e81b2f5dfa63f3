use std::time::{Duration, Instant};

use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use tokio::sync::mpsc;
use tokio::task::JoinSet;

use crate::{LoadError, LoadProfile, LoadReport, Sample, Step};

const PASSWORD: &str = "load-harness-password";
const EVENT_BATCH: usize = 500;
const FAKE_AUDIO_BYTES: usize = 48 * 1024;
const REQUEST_TIMEOUT: Duration = Duration::from_secs(120);

/// What `provision` created on the target.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub target: String,
    pub tutorial_id: String,
    pub section_ids: Vec<String>,
    pub students: Vec<String>,
}

fn base(target: &str) -> String {
    target.trim_end_matches('/').to_owned()
}

fn setup(what: &str, err: impl std::fmt::Display) -> LoadError {
    LoadError::Setup(format!("{what}: {err}"))
}

async fn expect_json(what: &str, resp: Result<reqwest::Response, reqwest::Error>, want: StatusCode) -> Result<Value, LoadError> {
    let resp = resp.map_err(|e| setup(what, e))?;
    let status = resp.status();
    let body: Value = resp.json().await.unwrap_or(Value::Null);
    if status != want {
        return Err(setup(what, format!("status {status}: {body}")));
    }
    Ok(body)
}

async fn preflight(client: &Client, target: &str) -> Result<(), LoadError> {
    let unreachable = |reason: String| LoadError::Unreachable { target: target.to_owned(), reason };
    let resp = client.get(format!("{target}/health")).timeout(Duration::from_secs(5)).send().await.map_err(|e| unreachable(e.to_string()))?;
    if !resp.status().is_success() {
        return Err(unreachable(format!("health returned {}", resp.status())));
    }
    Ok(())
}

async fn register(client: &Client, target: &str, username: &str, role: &str) -> Result<String, LoadError> {
    let body = json!({ "username": username, "password": PASSWORD, "role": role });
    let v = expect_json("register", client.post(format!("{target}/auth/register")).json(&body).send().await, StatusCode::CREATED).await?;
    v["token"].as_str().map(str::to_owned).ok_or_else(|| setup("register", "no token in reply"))
}

/// Creates one released tutorial with `profile.sections` recorded coding
/// sections and `profile.users` student accounts.
pub async fn provision(target: &str, profile: &LoadProfile) -> Result<Fixture, LoadError> {
    profile.check()?;
    let target = base(target);
    let client = Client::builder().timeout(REQUEST_TIMEOUT).build().map_err(|e| setup("client", e))?;
    preflight(&client, &target).await?;
    let run = uuid::Uuid::new_v4().simple().to_string();
    let run = &run[..12];

    let author = register(&client, &target, &format!("load-{run}-author"), "author").await?;
    let t = expect_json(
        "create tutorial",
        client.post(format!("{target}/tutorials")).bearer_auth(&author).json(&json!({ "title": format!("Load {run}"), "language": "python" })).send().await,
        StatusCode::CREATED,
    )
    .await?;
    let tutorial_id = t["tutorial_id"].as_str().ok_or_else(|| setup("create tutorial", "no id"))?.to_owned();

    let mut section_ids = Vec::with_capacity(profile.sections);
    for slot in 0..profile.sections {
        let recording = tutorcast_core::script::reference_recording("draft");
        let s = expect_json(
            "begin session",
            client
                .post(format!("{target}/sessions"))
                .bearer_auth(&author)
                .json(&json!({ "tutorial_id": tutorial_id, "section_slot": slot, "language": recording.language, "notes_source": recording.notes_source }))
                .send()
                .await,
            StatusCode::CREATED,
        )
        .await?;
        let session = s["session_id"].as_str().ok_or_else(|| setup("begin session", "no id"))?.to_owned();
        for chunk in recording.events.chunks(EVENT_BATCH) {
            expect_json("append events", client.post(format!("{target}/sessions/{session}/events")).bearer_auth(&author).json(&json!({ "events": chunk })).send().await, StatusCode::OK)
                .await?;
        }
        let audio = reqwest::multipart::Part::bytes(vec![0u8; FAKE_AUDIO_BYTES]).file_name("audio.mp3").mime_str("audio/mpeg").map_err(|e| setup("finalize", e))?;
        let form = reqwest::multipart::Form::new().text("duration_ms", recording.duration.0.to_string()).part("audio", audio);
        let f = expect_json("finalize", client.post(format!("{target}/sessions/{session}/finalize")).bearer_auth(&author).multipart(form).send().await, StatusCode::CREATED).await?;
        section_ids.push(f["section_id"].as_str().ok_or_else(|| setup("finalize", "no section id"))?.to_owned());
    }
    expect_json("release", client.post(format!("{target}/tutorials/{tutorial_id}/release")).bearer_auth(&author).send().await, StatusCode::OK).await?;

    let mut tasks = JoinSet::new();
    for i in 0..profile.users {
        let (client, target, name) = (client.clone(), target.clone(), format!("load-{run}-{i}"));
        tasks.spawn(async move { register(&client, &target, &name, "student").await.map(|_| (i, name)) });
    }
    let mut students = vec![String::new(); profile.users];
    while let Some(joined) = tasks.join_next().await {
        let (i, name) = joined.map_err(|e| setup("register students", e))??;
        students[i] = name;
    }
    Ok(Fixture { target, tutorial_id, section_ids, students })
}

/// Provisions the target, then runs the profile.
pub async fn run_load(profile: &LoadProfile, target: &str, budget_ms: u64) -> Result<(LoadReport, Vec<Sample>), LoadError> {
    let fixture = provision(target, profile).await?;
    run_provisioned(&fixture, profile, budget_ms).await
}

/// Runs the virtual users against an already provisioned target.
pub async fn run_provisioned(fixture: &Fixture, profile: &LoadProfile, budget_ms: u64) -> Result<(LoadReport, Vec<Sample>), LoadError> {
    profile.check()?;
    if fixture.students.len() < profile.users || fixture.section_ids.is_empty() {
        return Err(LoadError::InvalidProfile(format!("fixture has {} students for {} users", fixture.students.len(), profile.users)));
    }
    let (tx, mut rx) = mpsc::unbounded_channel::<Sample>();
    let started = Instant::now();
    let mut users = JoinSet::new();
    for user in 0..profile.users {
        let offset = Duration::from_millis(profile.ramp_ms * user as u64 / profile.users as u64);
        let vu = VirtualUser {
            user,
            client: Client::builder().timeout(REQUEST_TIMEOUT).build().map_err(|e| setup("client", e))?,
            target: fixture.target.clone(),
            username: fixture.students[user].clone(),
            tutorial_id: fixture.tutorial_id.clone(),
            section_id: fixture.section_ids[user % fixture.section_ids.len()].clone(),
            token: None,
        };
        let (tx, scenario, iterations) = (tx.clone(), profile.scenario.clone(), profile.iterations);
        users.spawn(async move {
            tokio::time::sleep(offset).await;
            vu.run(&scenario, iterations, &tx).await;
        });
    }
    drop(tx);
    let mut samples = Vec::with_capacity(profile.total_requests());
    while let Some(s) = rx.recv().await {
        samples.push(s);
    }
    while users.join_next().await.is_some() {}
    let wall_ms = started.elapsed().as_secs_f64() * 1000.0;
    samples.sort_by_key(|s| (s.user, s.iteration, s.step));
    Ok((LoadReport::from_samples(&fixture.target, budget_ms, profile, &samples, wall_ms), samples))
}

/// Runs each profile in order against the same target. Duplicates run again.
pub async fn sweep(profiles: &[LoadProfile], target: &str, budget_ms: u64) -> Result<Vec<(LoadReport, Vec<Sample>)>, LoadError> {
    if profiles.is_empty() {
        return Err(LoadError::EmptySweep);
    }
    for p in profiles {
        p.check()?;
    }
    let mut runs = Vec::with_capacity(profiles.len());
    for p in profiles {
        runs.push(run_load(p, target, budget_ms).await?);
    }
    Ok(runs)
}

struct VirtualUser {
    user: usize,
    client: Client,
    target: String,
    username: String,
    tutorial_id: String,
    section_id: String,
    token: Option<String>,
}

struct Outcome {
    status: u16,
    server_ms: Option<f64>,
    error: Option<String>,
}

impl VirtualUser {
    async fn run(mut self, scenario: &[Step], iterations: usize, tx: &mpsc::UnboundedSender<Sample>) {
        for iteration in 0..iterations {
            // The catalog must contain the provisioned tutorial before its bundle is fetched.
            let mut listed = false;
            self.token = None;
            for &step in scenario {
                let started = Instant::now();
                let outcome = match step {
                    Step::Login => self.login().await,
                    Step::ListTutorials if self.token.is_none() => skipped("no token"),
                    Step::ListTutorials => {
                        let o = self.list().await;
                        listed = o.error.is_none();
                        o
                    }
                    Step::FetchBundle if !listed => skipped("tutorial not listed"),
                    Step::FetchBundle => self.bundle().await,
                };
                let sample = Sample {
                    user: self.user,
                    iteration,
                    step,
                    client_ms: started.elapsed().as_secs_f64() * 1000.0,
                    server_ms: outcome.server_ms,
                    status: outcome.status,
                    error: outcome.error,
                };
                let _ = tx.send(sample);
            }
        }
    }

    async fn call(&self, request: reqwest::RequestBuilder) -> (Outcome, Value) {
        let resp = match request.send().await {
            Ok(r) => r,
            Err(e) => return (Outcome { status: 0, server_ms: None, error: Some(e.to_string()) }, Value::Null),
        };
        let status = resp.status();
        let server_ms = resp.headers().get("x-server-duration-ms").and_then(|v| v.to_str().ok()).and_then(|v| v.parse().ok());
        let body = match resp.bytes().await {
            Ok(b) => b,
            Err(e) => return (Outcome { status: status.as_u16(), server_ms, error: Some(e.to_string()) }, Value::Null),
        };
        let value: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
        let error = (!status.is_success()).then(|| format!("status {status}"));
        (Outcome { status: status.as_u16(), server_ms, error }, value)
    }

    async fn login(&mut self) -> Outcome {
        let req = self.client.post(format!("{}/auth/login", self.target)).json(&json!({ "username": self.username, "password": PASSWORD }));
        let (mut outcome, body) = self.call(req).await;
        if outcome.error.is_none() {
            match body["token"].as_str() {
                Some(t) => self.token = Some(t.to_owned()),
                None => outcome.error = Some("login reply has no token".into()),
            }
        }
        outcome
    }

    async fn list(&self) -> Outcome {
        let req = self.client.get(format!("{}/tutorials", self.target)).bearer_auth(self.token.as_deref().unwrap_or_default());
        let (mut outcome, body) = self.call(req).await;
        if outcome.error.is_none() {
            let found = body.as_array().is_some_and(|list| list.iter().any(|t| t["tutorial_id"] == self.tutorial_id.as_str()));
            if !found {
                outcome.error = Some("provisioned tutorial missing from catalog".into());
            }
        }
        outcome
    }

    async fn bundle(&self) -> Outcome {
        let url = format!("{}/tutorials/{}/sections/{}/bundle", self.target, self.tutorial_id, self.section_id);
        let (mut outcome, body) = self.call(self.client.get(url).bearer_auth(self.token.as_deref().unwrap_or_default())).await;
        if outcome.error.is_none() && body["files"][tutorcast_core::model::BUNDLE_ACTIONS].is_null() {
            outcome.error = Some("bundle reply has no actions.json".into());
        }
        outcome
    }
}

fn skipped(reason: &str) -> Outcome {
    Outcome { status: 0, server_ms: None, error: Some(format!("skipped: {reason}")) }
}
