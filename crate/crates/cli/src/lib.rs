//! Batch harness for plab: JSON job configs, job orchestration on a fixed
//! worker pool, append-only run logs and report emission.

pub mod config;
pub mod jobs;
pub mod table;

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{Command, JobConfig, Registry, ReportFormat};
pub use jobs::JobOutput;
pub use table::{Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("aggregation error: {0}")]
    Aggregation(String),
    #[error(transparent)]
    Core(#[from] plab_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Default output directory.
pub const DEFAULT_OUT: &str = "plab-out";

/// One executed job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// SHA-256 of the canonical config JSON.
    pub config_hash: String,
    pub command: Command,
    pub config: JobConfig,
    pub tables: Vec<Table>,
    pub summary: Value,
    pub passed: bool,
    pub failures: Vec<String>,
    pub versions: BTreeMap<String, String>,
}

impl RunRecord {
    /// The `results` table.
    pub fn results(&self) -> &Table {
        &self.tables[0]
    }
}

/// SHA-256 (hex) of the canonical form of a config.
pub fn config_hash(cfg: &JobConfig) -> Result<String> {
    let bytes = serde_json::to_vec(&cfg.canonical())?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("plab".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("plab_core".to_string(), plab_core::VERSION.to_string()),
    ])
}

/// Executes a job on a pool of `cfg.workers` threads (1 when absent) without
/// touching the file system (except reading report inputs).
pub fn execute(cfg: &JobConfig) -> Result<RunRecord> {
    let registry = Registry::load()?;
    let workers = cfg.workers.unwrap_or(1).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let out = pool.install(|| match cfg.command {
        Command::Report => report_job(cfg),
        _ => jobs::run_command(cfg, &registry),
    })?;
    Ok(RunRecord {
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        config_hash: config_hash(cfg)?,
        command: cfg.command,
        config: cfg.canonical(),
        passed: out.failures.is_empty(),
        tables: out.tables,
        summary: out.summary,
        failures: out.failures,
        versions: versions(),
    })
}

/// Runs a job and writes `results.tsv`, `summary.json`, `plotdata/*.csv`
/// and appends the record to `runs.jsonl` in the output directory.
pub fn run_job(cfg: &JobConfig) -> Result<RunRecord> {
    let rec = execute(cfg)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    write_outputs(&rec, &out)?;
    Ok(rec)
}

/// Writes the outputs of a record into `dir`.
pub fn write_outputs(rec: &RunRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    rec.results().write_tsv(fs::File::create(dir.join("results.tsv"))?)?;
    let summary = json!({
        "command": rec.command,
        "config_hash": rec.config_hash,
        "passed": rec.passed,
        "failures": rec.failures,
        "summary": rec.summary,
    });
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    if rec.tables.len() > 1 {
        let plots = dir.join("plotdata");
        fs::create_dir_all(&plots)?;
        for t in &rec.tables[1..] {
            t.write_csv(fs::File::create(plots.join(format!("{}.csv", t.name)))?)?;
        }
    }
    let mut log = OpenOptions::new().create(true).append(true).open(dir.join("runs.jsonl"))?;
    writeln!(log, "{}", serde_json::to_string(rec)?)?;
    Ok(())
}

/// Reads every record of a `runs.jsonl` file (or of `dir/runs.jsonl`).
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = if path.is_dir() { path.join("runs.jsonl") } else { path.to_path_buf() };
    let r = BufReader::new(fs::File::open(&file)?);
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Re-executes the config stored in a record; the result tables must match.
pub fn rerun(rec: &RunRecord) -> Result<RunRecord> {
    let again = execute(&rec.config)?;
    if again.config_hash != rec.config_hash {
        return Err(CliError::Aggregation("stored config no longer hashes to the recorded value".into()));
    }
    Ok(again)
}

/// Aggregates records of one command: concatenated tables by name, rows
/// sorted by `J` when that column exists.
pub fn aggregate(records: &[RunRecord]) -> Result<Vec<Table>> {
    let first = records.first().ok_or_else(|| CliError::Aggregation("no records to aggregate".into()))?;
    if let Some(r) = records.iter().find(|r| r.command != first.command) {
        return Err(CliError::Aggregation(format!(
            "cannot mix {} and {} records",
            first.command.name(),
            r.command.name()
        )));
    }
    let mut tables: Vec<Table> = Vec::new();
    for rec in records {
        for t in &rec.tables {
            match tables.iter_mut().find(|x| x.name == t.name) {
                Some(x) => x.extend(t)?,
                None => tables.push(t.clone()),
            }
        }
    }
    for t in &mut tables {
        t.sort_by_numeric("J");
    }
    Ok(tables)
}

fn report_job(cfg: &JobConfig) -> Result<JobOutput> {
    let job = cfg
        .report
        .as_ref()
        .ok_or_else(|| CliError::Config("command report needs a `report` block".into()))?;
    let mut records = Vec::new();
    for p in &job.inputs {
        records.extend(read_records(p)?);
    }
    let tables = aggregate(&records)?;
    let hashes: Vec<&str> = records.iter().map(|r| r.config_hash.as_str()).collect();
    let summary = json!({
        "format": job.format,
        "records": records.len(),
        "config_hashes": hashes,
        "all_passed": records.iter().all(|r| r.passed),
        "summaries": records.iter().map(|r| &r.summary).collect::<Vec<_>>(),
    });
    let tables = match job.format {
        ReportFormat::Tsv | ReportFormat::Json => tables.into_iter().take(1).collect(),
        ReportFormat::Plotdata => {
            let mut t = tables;
            if t.len() == 1 {
                // No plot series recorded: plot the results table itself.
                let mut p = t[0].clone();
                p.name = "results".into();
                t.push(p);
            }
            t
        }
    };
    Ok(JobOutput { tables, summary, failures: Vec::new() })
}
