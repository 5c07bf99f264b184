//! One isolated run per parameter value, joined into a summary table.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use sha2::{Digest, Sha256};

use bosetunnel::Error;

use crate::config::RunConfig;
use crate::output::{fmt_num, hashed_config, manifest_text, write_run, Artifacts, Check, Csv, ManifestInfo, MANIFEST_FILE};
use crate::run::{execute, Command};
use crate::CliError;

pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Threshold,
    Lambda0,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::Threshold => "threshold",
            SweepParam::Lambda0 => "lambda0",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "threshold" | "T" => Ok(SweepParam::Threshold),
            "lambda0" => Ok(SweepParam::Lambda0),
            _ => Err(Error::Config(format!("sweep parameter must be threshold or lambda0, got `{s}`")).into()),
        }
    }

    fn apply(&self, config: &mut RunConfig, value: f64) {
        match self {
            SweepParam::Threshold => config.threshold = value,
            SweepParam::Lambda0 => config.lambda0 = value,
        }
    }
}

/// Comma separated list of finite numbers; empty is a configuration error.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Config(format!("sweep value `{s}` is not a finite number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()).into());
    }
    Ok(values)
}

#[derive(Debug, Clone)]
pub struct MemberOutcome {
    pub value: f64,
    pub dir: PathBuf,
    pub result: Result<Artifacts, String>,
}

fn member_dir(out: &Path, param: SweepParam, value: f64) -> PathBuf {
    out.join(format!("{}={}", param.as_str(), value))
}

fn run_member(base: &RunConfig, command: Command, param: SweepParam, value: f64, out: &Path) -> MemberOutcome {
    let dir = member_dir(out, param, value);
    let mut config = base.clone();
    param.apply(&mut config, value);
    config.output_dir = dir.clone();
    let result = execute(command, &config)
        .map_err(CliError::from)
        .and_then(|run| {
            let info = ManifestInfo {
                command: command.as_str(),
                config: &config,
                hash: &run.hash,
                wall_seconds: run.wall_seconds,
            };
            write_run(&dir, &info, &run.artifacts)?;
            Ok(run.artifacts)
        })
        .map_err(|e| format!("{}: {e}", e.category()));
    MemberOutcome { value, dir, result }
}

/// Run every member on up to `workers` threads; outcomes keep the value order.
pub fn run_members(
    base: &RunConfig,
    command: Command,
    param: SweepParam,
    values: &[f64],
    workers: usize,
    out: &Path,
) -> Vec<MemberOutcome> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<MemberOutcome>>> = Mutex::new(vec![None; values.len()]);
    thread::scope(|scope| {
        for _ in 0..workers.clamp(1, values.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= values.len() {
                    break;
                }
                let outcome = run_member(base, command, param, values[i], out);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(outcome);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|o| o.expect("every member ran"))
        .collect()
}

fn lookup<'a>(artifacts: &'a Artifacts, key: &str) -> Option<&'a str> {
    artifacts.results.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn numeric(artifacts: &Artifacts, key: &str) -> String {
    match lookup(artifacts, key) {
        Some(v) if v.parse::<f64>().is_ok() => v.to_string(),
        Some("closed") => "closed".into(),
        _ => "nan".into(),
    }
}

pub fn sweep_hash(base: &RunConfig, command: Command, param: SweepParam, values: &[f64]) -> String {
    let mut h = Sha256::new();
    h.update(b"sweep\n");
    h.update(command.as_str().as_bytes());
    h.update(param.as_str().as_bytes());
    for v in values {
        h.update(v.to_bits().to_le_bytes());
    }
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(hashed_config(base).as_bytes());
    format!("{:x}", h.finalize())
}

/// Sweep driver: validates the shared inputs, runs the members, then writes
/// `summary.csv` and the sweep manifest.
pub fn sweep(
    base: &RunConfig,
    command: Command,
    param: SweepParam,
    values: &[f64],
    workers: usize,
    out: &Path,
) -> Result<Vec<MemberOutcome>, CliError> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()).into());
    }
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()).into());
    }
    let hash = sweep_hash(base, command, param, values);
    let outcomes = run_members(base, command, param, values, workers, out);

    let n = base.particles;
    let mut columns = vec![param.as_str().to_string(), "status".into(), "n_in_model".into(), "n_out_model".into()];
    columns.push("pnot_model".into());
    columns.extend((1..=n).map(|i| format!("k_model_{i}")));
    columns.extend(["pnot_final", "k_peak", "energy", "error"].map(String::from));
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut summary = Csv::new(&hash, &refs);
    let mut failed = 0;
    for o in &outcomes {
        let mut fields = vec![fmt_num(o.value)];
        match &o.result {
            Ok(a) => {
                fields.push("ok".into());
                for key in ["n_in_model", "n_out_model", "pnot_model"] {
                    fields.push(numeric(a, key));
                }
                fields.extend((1..=n).map(|i| numeric(a, &format!("k_model_{i}"))));
                fields.push(numeric(a, "pnot_final"));
                fields.push(numeric(a, "leading_peak_final"));
                let energy = lookup(a, "energy").or(lookup(a, "energy_initial"));
                fields.push(energy.unwrap_or("nan").to_string());
                fields.push(String::new());
            }
            Err(e) => {
                failed += 1;
                fields.push("failed".into());
                fields.extend(std::iter::repeat_n("nan".to_string(), n + 6));
                // messages must not break the column layout
                fields.push(e.replace([',', '\n'], ";"));
            }
        }
        summary.raw_row(&fields);
    }

    let mut artifacts = Artifacts::default();
    artifacts.add_csv(SUMMARY_FILE, summary);
    artifacts.result("command", command.as_str());
    artifacts.result("parameter", param.as_str());
    artifacts.result(
        "values",
        values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(";"),
    );
    for o in &outcomes {
        artifacts.result("member", o.dir.display());
    }
    artifacts.check(Check::new(
        "members_ok",
        failed == 0,
        format!("{failed} of {} failed", outcomes.len()),
    ));
    let info = ManifestInfo {
        command: "sweep",
        config: base,
        hash: &hash,
        wall_seconds: 0.0,
    };
    std::fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    for (name, text) in &artifacts.files {
        let path = out.join(name);
        std::fs::write(&path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
    }
    let path = out.join(MANIFEST_FILE);
    std::fs::write(&path, manifest_text(&info, &artifacts)).map_err(|source| CliError::Io { path, source })?;
    Ok(outcomes)
}
