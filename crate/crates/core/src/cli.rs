//! `pla` command-line front end. Each verb reads the experiment config,
//! runs the corresponding module, and writes one CSV into the output
//! directory. A short `key=value` summary goes to stdout.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::analytics::{monte_carlo_success, p_m_mdlg, simulate_attack_trial, AnalyticQuery, MonteCarloEstimate};
use crate::attack::{run_m_mdlg, AttackReport, EqualityOracle};
use crate::channel::{
    estimate_correlation, estimate_transition_probability, ChannelModelConfig, ChannelModelKind, ChannelSampler,
    TraceStore,
};
use crate::error::{Error, Result};
use crate::guideline::{optimize_alpha, ChannelEnsemble};
use crate::io::output::{
    attack_row, guideline_summary, test_row, transcript_row, write_guideline, CsvOut, SweepRow, ATTACK_HEADER,
    SWEEP_HEADER, TEST_HEADER, TRANSCRIPT_HEADER,
};
use crate::io::{read_trace, write_trace_file, ExperimentConfig};
use crate::keyphase::{KeyPhaseMapping, SecretKey};
use crate::protocol::{run_authentication_round, EveObservation};
use crate::randomness::test_trial;
use crate::rng::{describe, substream, Stream};

#[derive(Debug, Parser)]
#[command(
    name = "pla",
    version,
    about = "OFDM physical-layer authentication: simulation, attacks, analytics"
)]
pub struct Cli {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Top-level seed; overrides channel.seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory; overrides output.directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run authentication rounds and write their transcripts.
    Simulate,
    /// Run the key-recovery attack on simulated rounds or a replay fixture.
    Attack,
    /// Closed-form success probabilities over the configured grid.
    Analytic,
    /// Frequency-test channel responses from the model or a trace file.
    TestRandomness {
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Grid-search the randomness-test threshold.
    OptimizeAlpha,
    /// Parse a trace CSV and summarize it.
    IngestTrace { path: PathBuf },
    /// Closed form plus Monte Carlo over the configured grid.
    Sweep,
}

/// Output of one command: files written and summary lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

pub fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let cfg = match cli.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = load_config(cli)?;
    if let Command::IngestTrace { path } = &cli.command {
        return ingest_trace(path);
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    std::fs::create_dir_all(&out_dir)?;
    let ctx = Context { cfg, out_dir };
    match &cli.command {
        Command::Simulate => ctx.simulate(),
        Command::Attack => ctx.attack(),
        Command::Analytic => ctx.sweep(false),
        Command::Sweep => ctx.sweep(true),
        Command::TestRandomness { trace } => ctx.test_randomness(trace.as_deref()),
        Command::OptimizeAlpha => ctx.optimize_alpha(),
        Command::IngestTrace { .. } => unreachable!("handled above"),
    }
}

struct Context {
    cfg: ExperimentConfig,
    out_dir: PathBuf,
}

impl Context {
    fn seed(&self) -> u64 {
        self.cfg.seed()
    }

    fn comments(&self, command: &str) -> Vec<String> {
        let c = &self.cfg.channel;
        vec![
            describe(self.seed()),
            format!(
                "command={command} model={} rho={} L={} m={} N={}",
                c.model, c.rho, c.l, self.cfg.protocol.m, self.cfg.attack.n
            ),
        ]
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Sampler for the configured channel, with `l` subcarriers.
    fn sampler(&self, l: usize, trace: Option<TraceStore>) -> Result<ChannelSampler> {
        let c = &self.cfg.channel;
        let (kind, trace) = match (trace, c.model) {
            (Some(t), _) => (ChannelModelKind::TraceReplay, Some(t)),
            (None, ChannelModelKind::TraceReplay) => {
                let path = c.trace.as_ref().expect("validated");
                (ChannelModelKind::TraceReplay, Some(read_trace(path)?))
            }
            (None, kind) => (kind, None),
        };
        let l = trace.as_ref().map_or(l, |t| t.num_subcarriers());
        ChannelSampler::new(ChannelModelConfig::new(kind, c.rho, l, self.seed())?, trace)
    }

    fn simulate(&self) -> Result<Outcome> {
        let mapping = self.cfg.mapping()?;
        let channel = self.sampler(self.cfg.channel.l, None)?;
        let l = channel.config().num_subcarriers;
        let bits = l * mapping.bits_per_subkey() as usize;
        let proto = self.cfg.protocol_config();
        let seed = self.seed();
        let transcripts = (0..self.cfg.protocol.rounds)
            .into_par_iter()
            .map(|i| {
                let key = SecretKey::random(bits, &mut substream(seed, Stream::Key, i))?;
                run_authentication_round(&channel, &key, mapping, &proto, seed, i).map(|(t, _)| t)
            })
            .collect::<Result<Vec<_>>>()?;
        assert_eq!(transcripts.len() as u64, self.cfg.protocol.rounds);

        let mut out = CsvOut::create(
            &self.path("transcripts.csv"),
            &self.comments("simulate"),
            &TRANSCRIPT_HEADER,
        )?;
        for t in &transcripts {
            out.row(transcript_row(t))?;
        }
        let mut files = vec![out.finish(&[])?];
        if self.cfg.output.export_trace {
            let snaps = (0..self.cfg.protocol.rounds)
                .map(|i| channel.sample_indexed(i))
                .collect::<Result<Vec<_>>>()?;
            files.push(write_trace_file(
                &self.path("channel_trace.csv"),
                &snaps,
                Some(&describe(seed)),
            )?);
        }
        let verified = transcripts.iter().filter(|t| t.verified).count();
        Ok(Outcome {
            files,
            summary: vec![format!("rounds={} verified={verified}", transcripts.len())],
        })
    }

    fn attack(&self) -> Result<Outcome> {
        let mapping = self.cfg.mapping()?;
        let budget = self.cfg.budget()?;
        let seed = self.seed();
        let m = mapping.bits_per_subkey();
        let rho = self.cfg.channel.rho;
        let path = self.path("attack.csv");
        let mut out = CsvOut::create(&path, &self.comments("attack"), &ATTACK_HEADER)?;

        let (reports, l): (Vec<AttackReport>, usize) = match self.cfg.replay_fixture()? {
            Some((key, z)) => {
                let l = z.len();
                let r = run_m_mdlg(&EveObservation::new(z), mapping, &mut EqualityOracle::new(key), budget)?;
                (vec![r], l)
            }
            None => {
                let channel = self.sampler(self.cfg.channel.l, None)?;
                let route = self.cfg.route();
                let reports = (0..self.cfg.attack.trials)
                    .into_par_iter()
                    .map(|t| simulate_attack_trial(&channel, mapping, budget, seed, t, route))
                    .collect::<Result<Vec<_>>>()?;
                (reports, channel.config().num_subcarriers)
            }
        };
        for (t, r) in reports.iter().enumerate() {
            out.row(attack_row(t as u64, seed, rho, l, m, budget.get(), r))?;
        }
        let files = vec![out.finish(&[])?];

        let mut summary = Vec::new();
        if !reports.is_empty() {
            let hits = reports.iter().filter(|r| r.success).count() as u64;
            let est = MonteCarloEstimate::from_counts(hits, reports.len() as u64);
            summary.push(format!(
                "trials={} success_rate={} stderr={}",
                est.trials, est.rate, est.stderr
            ));
            if let Ok(q) = AnalyticQuery::m_ary(l * m as usize, m, rho, budget.get()) {
                summary.push(format!("p_analytic={}", p_m_mdlg(&q)?.value));
            }
        }
        Ok(Outcome { files, summary })
    }

    fn grid(&self) -> Vec<(f64, u64, u32)> {
        let a = &self.cfg.analytics;
        let rhos = if a.rho_grid.is_empty() {
            vec![self.cfg.channel.rho]
        } else {
            a.rho_grid.clone()
        };
        let ns = if a.n_grid.is_empty() {
            vec![self.cfg.attack.n]
        } else {
            a.n_grid.clone()
        };
        let ms = if a.m_grid.is_empty() {
            vec![self.cfg.protocol.m]
        } else {
            a.m_grid.clone()
        };
        let mut points = Vec::new();
        for &m in &ms {
            for &rho in &rhos {
                for &n in &ns {
                    points.push((rho, n, m));
                }
            }
        }
        points
    }

    fn sweep(&self, with_monte_carlo: bool) -> Result<Outcome> {
        let s = self.cfg.key_bits();
        let trials = if with_monte_carlo { self.cfg.analytics.trials } else { 0 };
        let seed = self.seed();
        let name = if with_monte_carlo { "sweep" } else { "analytic" };
        let path = self.path(&format!("{name}.csv"));
        let mut out = CsvOut::create(&path, &self.comments(name), &SWEEP_HEADER)?;
        let mut skipped = Vec::new();
        let mut rows = 0;
        for (rho, n, m) in self.grid() {
            let mapping = KeyPhaseMapping::new(m)?;
            if mapping.subkey_count(s).is_err() {
                log::warn!("skipping m = {m}: S = {s} is not a multiple");
                skipped.push(format!("skipped m={m}: S={s} not divisible"));
                continue;
            }
            let q = AnalyticQuery::m_ary(s, m, rho, n)?;
            let p = p_m_mdlg(&q)?;
            let (p_emp, se) = if trials > 0 {
                let mut c = self.cfg.clone();
                c.channel.rho = rho;
                let ctx = Context {
                    cfg: c,
                    out_dir: self.out_dir.clone(),
                };
                let channel = ctx.sampler(q.l, None)?;
                let budget = crate::attack::AttackBudget::new(n)?;
                let est = monte_carlo_success(&channel, mapping, budget, trials, seed, self.cfg.route())?;
                (Some(est.rate), Some(est.stderr))
            } else {
                (None, None)
            };
            let row = SweepRow {
                rho,
                l: q.l,
                s,
                m,
                n,
                p_analytic: p.value,
                log10_p_analytic: p.log10,
                p_empirical: p_emp,
                stderr: se,
                trials,
            };
            out.row(row.record())?;
            rows += 1;
        }
        let files = vec![out.finish(&skipped)?];
        let summary = vec![format!("rows={rows}")];
        Ok(Outcome { files, summary })
    }

    fn test_randomness(&self, trace: Option<&Path>) -> Result<Outcome> {
        let test_cfg = self.cfg.randomness_config()?;
        let store = trace.map(read_trace).transpose()?;
        let trials = match &store {
            Some(s) => (s.len() / test_cfg.concat_snapshots) as u64,
            None => self.cfg.randomness.trials,
        };
        if store.is_some() && trials == 0 {
            return Err(Error::Trace {
                path: trace.unwrap().to_path_buf(),
                line: 0,
                msg: format!("fewer snapshots than concat = {}", test_cfg.concat_snapshots),
            });
        }
        let channel = self.sampler(self.cfg.channel.l, store)?;
        let n_bits = channel.config().num_subcarriers * test_cfg.concat_snapshots;
        if n_bits < test_cfg.min_sequence_length {
            log::warn!(
                "testing {n_bits}-bit sequences, below the recommended minimum of {}",
                test_cfg.min_sequence_length
            );
        }
        let mapping = KeyPhaseMapping::binary();
        let results = (0..trials)
            .into_par_iter()
            .map(|t| test_trial(&channel, &test_cfg, mapping, t))
            .collect::<Result<Vec<_>>>()?;

        let mut out = CsvOut::create(
            &self.path("randomness.csv"),
            &self.comments("test-randomness"),
            &TEST_HEADER,
        )?;
        let c = test_cfg.concat_snapshots as u64;
        for (t, r) in results.iter().enumerate() {
            out.row(test_row(t as u64 * c, test_cfg.alpha, &r.result))?;
        }
        let files = vec![out.finish(&[])?];
        let accepted = results.iter().filter(|r| r.result.accepted).count();
        Ok(Outcome {
            files,
            summary: vec![format!("tests={} accepted={accepted}", results.len())],
        })
    }

    fn optimize_alpha(&self) -> Result<Outcome> {
        let g = self.cfg.guideline_config()?;
        let channel = self.sampler(self.cfg.channel.l, None)?;
        let ensemble = ChannelEnsemble::simulate(&channel, self.cfg.guideline.trials, self.seed())?;
        let report = optimize_alpha(&g, &ensemble)?;
        let mut comments = self.comments("optimize-alpha");
        comments.push(format!(
            "mode={:?} p_benchmark={} trials={}",
            g.mode, g.p_benchmark, self.cfg.guideline.trials
        ));
        let file = write_guideline(&self.path("guideline.csv"), &comments, &report)?;
        Ok(Outcome {
            files: vec![file],
            summary: vec![guideline_summary(&report)],
        })
    }
}

fn ingest_trace(path: &Path) -> Result<Outcome> {
    let store = read_trace(path)?;
    let t = estimate_transition_probability(store.snapshots())?;
    let corr = match estimate_correlation(store.snapshots()) {
        Ok(c) => c.to_string(),
        Err(e) => format!("n/a ({e})"),
    };
    Ok(Outcome {
        files: Vec::new(),
        summary: vec![
            format!("snapshots={}", store.len()),
            format!("L={}", store.num_subcarriers()),
            format!("p_flip={}", t.p_flip),
            format!("rho_eff={}", t.rho_eff),
            format!("correlation={corr}"),
        ],
    })
}
