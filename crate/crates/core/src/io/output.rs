//! CSV outputs. Every file starts with `# ` comment lines (seed and RNG
//! layout), then a fixed header row. Floats are written in shortest
//! round-trip form so that downstream readers recover them exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::attack::AttackReport;
use crate::error::Result;
use crate::guideline::{GuidelineDecision, GuidelineReport};
use crate::protocol::Transcript;
use crate::randomness::TestResult;

pub const TRANSCRIPT_HEADER: [&str; 8] = ["round_id", "seed", "L", "verified", "theta", "beta", "phi", "z"];
pub const ATTACK_HEADER: [&str; 9] = [
    "trial_id",
    "seed",
    "rho",
    "L",
    "m",
    "N",
    "success",
    "candidates_tried",
    "n_reached",
];
pub const SWEEP_HEADER: [&str; 10] = [
    "rho",
    "L",
    "S",
    "m",
    "N",
    "p_analytic",
    "log10_p_analytic",
    "p_empirical",
    "stderr",
    "trials",
];
pub const TEST_HEADER: [&str; 6] = ["snapshot_id", "n", "ones", "p_value", "alpha", "accepted"];
pub const GUIDELINE_HEADER: [&str; 5] = ["alpha", "p_accept", "p_mdlg_mode", "p_eve", "feasible"];

pub struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, comments: &[String], header: &[&str]) -> Result<Self> {
        let mut file = BufWriter::new(File::create(path)?);
        for c in comments {
            writeln!(file, "# {c}")?;
        }
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    /// Flushes, appends trailing comment lines, and returns the path.
    pub fn finish(self, trailer: &[String]) -> Result<PathBuf> {
        let mut file = self
            .writer
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        for c in trailer {
            writeln!(file, "# {c}")?;
        }
        file.flush()?;
        Ok(self.path)
    }
}

pub fn join_vec(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

pub fn split_vec(field: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field.split(';').map(str::parse).collect()
}

pub fn transcript_row(t: &Transcript) -> [String; 8] {
    [
        t.round_id.to_string(),
        t.seed.to_string(),
        t.theta.len().to_string(),
        t.verified.to_string(),
        join_vec(&t.theta),
        join_vec(&t.beta),
        join_vec(&t.phi),
        join_vec(&t.z),
    ]
}

#[allow(clippy::too_many_arguments)]
pub fn attack_row(trial: u64, seed: u64, rho: f64, l: usize, m: u32, n: u64, r: &AttackReport) -> [String; 9] {
    [
        trial.to_string(),
        seed.to_string(),
        rho.to_string(),
        l.to_string(),
        m.to_string(),
        n.to_string(),
        r.success.to_string(),
        r.candidates_tried.to_string(),
        r.n_reached.to_string(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub l: usize,
    pub s: usize,
    pub m: u32,
    pub n: u64,
    pub p_analytic: f64,
    pub log10_p_analytic: f64,
    /// Empty when no Monte Carlo was run.
    pub p_empirical: Option<f64>,
    pub stderr: Option<f64>,
    pub trials: u64,
}

impl SweepRow {
    pub fn record(&self) -> [String; 10] {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.rho.to_string(),
            self.l.to_string(),
            self.s.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            self.p_analytic.to_string(),
            self.log10_p_analytic.to_string(),
            opt(self.p_empirical),
            opt(self.stderr),
            self.trials.to_string(),
        ]
    }
}

pub fn test_row(snapshot_id: u64, alpha: f64, r: &TestResult) -> [String; 6] {
    [
        snapshot_id.to_string(),
        r.sequence_length.to_string(),
        r.ones_count.to_string(),
        r.p_value.to_string(),
        alpha.to_string(),
        r.accepted.to_string(),
    ]
}

pub fn write_guideline(path: &Path, comments: &[String], report: &GuidelineReport) -> Result<PathBuf> {
    let mut out = CsvOut::create(path, comments, &GUIDELINE_HEADER)?;
    for r in &report.rows {
        out.row([
            r.alpha.to_string(),
            r.p_accept.to_string(),
            r.p_mdlg_mode.to_string(),
            r.p_eve.to_string(),
            r.feasible.to_string(),
        ])?;
    }
    out.finish(&[guideline_summary(report)])
}

pub fn guideline_summary(report: &GuidelineReport) -> String {
    let rho = report.rho_used.map(|r| format!(" rho_used={r}")).unwrap_or_default();
    match report.decision {
        GuidelineDecision::Use {
            alpha_star,
            p_accept,
            p_eve,
        } => format!("decision=use alpha_star={alpha_star} p_accept={p_accept} p_eve={p_eve}{rho}"),
        GuidelineDecision::RejectPla => format!("decision=reject_pla{rho}"),
    }
}

/// A CSV file read back: comment lines, header and string rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    let comments = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .map(str::to_string)
        .collect();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Table { comments, header, rows })
}
