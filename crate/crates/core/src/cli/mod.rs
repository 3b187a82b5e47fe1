//! The `zkaudit` command line: commit a dataset, train and prove, verify,
//! run audits.
//!
//! Exit codes: 0 accept/success, 1 verifier reject, 2 I/O or malformed
//! input, 3 validation failure, 4 range or capacity abort, 5 commitment
//! mismatch. Output files are written atomically.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{DataConfig, FixedPointConfig, ModelConfig, OutputConfig, ProofConfig, RunConfig, SyntheticConfig};

use crate::air::AirError;
use crate::audits::{
    counterfactual_audit, verify_counterfactual, write_copyright_csv, AuditError, CensorshipAudit, CopyrightAudit,
    CounterfactualReport, DemographicAudit, MeanItemScore,
};
use crate::commit::opens_weights;
use crate::fxp::{FxpError, FxpSpec};
use crate::nn::{read_vectors, ModelGraph, NnError, Rating, Weights};
use crate::protocol::{
    commit_dataset, security_bits, zkaudit_i_prove, zkaudit_i_verify, zkaudit_t_prove, zkaudit_t_verify,
    AuditFunction, AuditOutput, AuditReport, DatasetSection, MockBackend, ProtocolError, RejectReason, TrainingInput,
    TrainingTranscript, FORMAT_VERSION,
};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "ZKAUDIT_THREADS";

pub const EXIT_REJECT: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_CAPACITY: u8 = 4;
pub const EXIT_COMMITMENT: u8 = 5;

const COMMITMENTS_FILE: &str = "commitments.json";
const TRANSCRIPT_FILE: &str = "transcript.zka.json";
const WEIGHTS_FILE: &str = "weights.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("{0}")]
    Validation(String),
    #[error("commitment mismatch: {0}")]
    Commitment(String),
}

#[derive(Debug, Parser)]
#[command(name = "zkaudit", version, about = "Provable fixed-point training and audits")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `output.dir` from the config.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Commit to the dataset and publish the Merkle root and traversal.
    Commit,
    /// Train in fixed point and prove every SGD step.
    TrainProve,
    /// Verify a training transcript and optionally an audit report.
    Verify(VerifyArgs),
    #[command(subcommand)]
    Audit(AuditCommand),
    /// Soundness left after a union bound over dataset and step proofs.
    SecurityBits(SecurityArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Defaults to the transcript in the config's output directory.
    pub transcript: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Second transcript, for counterfactual reports.
    #[arg(long)]
    pub transcript_b: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelFiles {
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AuditCommand {
    /// Quantile of an item's score among sampled items for one user.
    Censor {
        #[arg(long)]
        user: u32,
        #[arg(long)]
        item: u32,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Comma-separated candidate item ids; all items when absent.
        #[arg(long, value_delimiter = ',')]
        population: Option<Vec<u32>>,
        /// Score every candidate instead of sampling.
        #[arg(long)]
        exhaustive: bool,
        #[command(flatten)]
        files: ModelFiles,
    },
    /// Retrain under a second configuration and prove the change in one
    /// item's mean predicted score.
    Counterfactual {
        #[arg(long)]
        item: u32,
        /// Users averaged over; all users when absent.
        #[arg(long)]
        users: Option<usize>,
        /// Configuration of arm B.
        #[arg(long, conflicts_with = "drop_item")]
        config_b: Option<PathBuf>,
        /// Arm B drops a fraction of this item's ratings.
        #[arg(long)]
        drop_item: Option<u32>,
        #[arg(long, default_value_t = 0.5)]
        drop_fraction: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cosine similarity of every item's features to a claimant's.
    Copyright {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        claimant: PathBuf,
        #[arg(long)]
        tau: f64,
        /// Per-item verdicts as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        files: ModelFiles,
    },
    /// Per-category counts and proportions of item labels.
    Demographic {
        /// CSV with header `item_id,category`, one row per item in order.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        categories: usize,
        #[command(flatten)]
        files: ModelFiles,
    },
}

#[derive(Debug, Args)]
pub struct SecurityArgs {
    #[arg(long, default_value_t = 128.0)]
    pub lambda: f64,
    /// Dataset size; taken from the config when absent.
    #[arg(long)]
    pub dataset: Option<u64>,
    /// Step count; taken from the config when absent.
    #[arg(long)]
    pub steps: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommitmentsFile {
    format: String,
    version: u32,
    hash: crate::commit::HashKind,
    dataset: DatasetSection,
    /// One permutation of committed positions per epoch.
    orderings: Vec<Vec<usize>>,
}

/// Private weights as kept by the model provider.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    format: String,
    spec: FxpSpec,
    raw: Vec<Vec<Vec<i64>>>,
}

/// Entry point of the `zkaudit` binary.
pub fn run() -> ExitCode {
    ExitCode::from(run_from(std::env::args_os()))
}

/// Parses `args` (program name first), runs the command and returns its
/// exit code. Human-readable output goes to stdout, errors to stderr.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO } else { 0 };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return exit_code(&e);
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV}={v} is not a positive integer")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Commit => cmd_commit(&load_config(cli)?),
        Command::TrainProve => cmd_train_prove(&load_config(cli)?),
        Command::Verify(a) => cmd_verify(cli, a),
        Command::Audit(a) => cmd_audit(cli, a),
        Command::SecurityBits(a) => cmd_security_bits(cli, a),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Validation("this command needs --config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(d) = &cli.out_dir {
        cfg.output.dir = std::env::current_dir().context("current directory")?.join(d);
    }
    Ok(cfg)
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?)
}

fn read_transcript(path: &Path) -> Result<TrainingTranscript> {
    let text = read_text(path)?;
    TrainingTranscript::parse(&text).map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())).into())
}

fn read_weights(path: &Path, model: &ModelGraph) -> Result<Weights> {
    let text = read_text(path)?;
    let f: WeightsFile =
        serde_json::from_str(&text).map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
    if f.format != "zkaudit-weights" {
        return Err(CliError::Malformed(format!("{}: not a weights file", path.display())).into());
    }
    Weights::from_raw(model, f.spec, f.raw)
        .map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())).into())
}

fn weights_json(w: &Weights) -> String {
    let f = WeightsFile { format: "zkaudit-weights".into(), spec: w.spec, raw: w.raw() };
    let mut s = serde_json::to_string(&f).expect("weights serialize");
    s.push('\n');
    s
}

fn backend(t: &TrainingTranscript) -> MockBackend {
    MockBackend::new(t.header.hash)
}

fn cmd_commit(cfg: &RunConfig) -> Result<u8> {
    let ratings = cfg.ratings()?;
    let examples = cfg.examples(&ratings)?;
    let c = commit_dataset(&examples, cfg.proof.hash, &cfg.salt_seed()?, cfg.train.epochs)?;
    let file = CommitmentsFile {
        format: "zkaudit-commitments".into(),
        version: FORMAT_VERSION,
        hash: cfg.proof.hash,
        dataset: c.section,
        orderings: c.orderings,
    };
    let path = cfg.out_dir().join(COMMITMENTS_FILE);
    let mut text = serde_json::to_string_pretty(&file).expect("commitments serialize");
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    println!("committed {} examples", file.dataset.commitments.len());
    println!("merkle root {}", file.dataset.merkle_root);
    println!("wrote {}", path.display());
    Ok(0)
}

fn train_input<'a>(cfg: &'a RunConfig, examples: &'a [crate::nn::Example], model: &'a crate::nn::ModelGraph, seed: &'a [u8]) -> Result<TrainingInput<'a>> {
    Ok(TrainingInput {
        dataset: examples,
        model,
        spec: cfg.spec()?,
        config: &cfg.train,
        hash: cfg.proof.hash,
        columns: cfg.proof.columns,
        salt_seed: seed,
    })
}

fn cmd_train_prove(cfg: &RunConfig) -> Result<u8> {
    let cpath = cfg.out_dir().join(COMMITMENTS_FILE);
    if !cpath.exists() {
        return Err(CliError::Io(format!("{}: missing; run `zkaudit commit` first", cpath.display())).into());
    }
    let published: CommitmentsFile = serde_json::from_str(&read_text(&cpath)?)
        .map_err(|e| CliError::Malformed(format!("{}: {e}", cpath.display())))?;
    let ratings = cfg.ratings()?;
    let examples = cfg.examples(&ratings)?;
    let model = cfg.model()?;
    let seed = cfg.salt_seed()?;
    let art = zkaudit_t_prove(&train_input(cfg, &examples, &model, &seed)?, &MockBackend::new(cfg.proof.hash))?;
    if art.transcript.dataset != published.dataset || published.hash != cfg.proof.hash {
        return Err(CliError::Commitment(format!("dataset no longer matches {}", cpath.display())).into());
    }
    let dir = cfg.out_dir();
    write_atomic(&dir.join(WEIGHTS_FILE), weights_json(&art.final_weights).as_bytes())?;
    write_atomic(&dir.join(TRANSCRIPT_FILE), art.transcript.to_canonical_string().as_bytes())?;
    println!("proved {} steps", art.transcript.steps.len());
    println!("final weights commitment {}", art.transcript.final_weights.digest);
    println!("wrote {}", dir.join(TRANSCRIPT_FILE).display());
    Ok(0)
}

fn default_path(cli: &Cli, given: &Option<PathBuf>, file: &str) -> Result<PathBuf> {
    if let Some(p) = given {
        return Ok(p.clone());
    }
    Ok(load_config(cli)?.out_dir().join(file))
}

fn reject(what: &str, r: &RejectReason) -> u8 {
    println!("REJECT {what}: {r}");
    EXIT_REJECT
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs) -> Result<u8> {
    let tpath = default_path(cli, &a.transcript, TRANSCRIPT_FILE)?;
    let t = read_transcript(&tpath)?;
    let be = backend(&t);
    let Some(rpath) = &a.report else {
        if let Err(r) = zkaudit_t_verify(&t, &be) {
            return Ok(reject("transcript", &r));
        }
        println!("ACCEPT transcript: {} steps over {} examples", t.steps.len(), t.dataset.commitments.len());
        return Ok(0);
    };
    let text = read_text(rpath)?;
    let kind: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Malformed(format!("{}: {e}", rpath.display())))?;
    if kind.get("format").and_then(|f| f.as_str()) == Some("zkaudit-counterfactual") {
        let bpath = a
            .transcript_b
            .as_ref()
            .ok_or_else(|| CliError::Validation("counterfactual reports need --transcript-b".into()))?;
        let tb = read_transcript(bpath)?;
        let report = CounterfactualReport::parse(&text).map_err(|e| CliError::Malformed(e.to_string()))?;
        if let Err(r) = verify_counterfactual(&report, &t, &tb, &be) {
            return Ok(reject("counterfactual", &r));
        }
        println!("ACCEPT counterfactual: delta_raw {}", report.delta_raw);
        return Ok(0);
    }
    let report = AuditReport::parse(&text).map_err(|e| CliError::Malformed(format!("{}: {e}", rpath.display())))?;
    if let Err(r) = zkaudit_t_verify(&t, &be) {
        return Ok(reject("transcript", &r));
    }
    if let Err(r) = zkaudit_i_verify(&report, &t, &be) {
        return Ok(reject("audit", &r));
    }
    println!("ACCEPT audit: {}", summarize(&report.output, &t.header.spec));
    Ok(0)
}

fn summarize(out: &AuditOutput, spec: &FxpSpec) -> String {
    match out {
        AuditOutput::WeightsDigest { digest } => format!("weights digest {digest}"),
        AuditOutput::Quantile { at_or_below, samples, estimate, .. } => {
            format!("quantile {estimate:.4} ({at_or_below} of {samples} samples at or below the item)")
        }
        AuditOutput::MeanScore { mean_raw, count, .. } => {
            format!("mean score {:.4} over {count} users", spec.dequantize(*mean_raw))
        }
        AuditOutput::Copyright { flagged, pass, .. } => {
            let n = flagged.iter().filter(|&&f| f).count();
            format!("{} ({n} of {} items flagged)", if *pass { "pass" } else { "flag" }, flagged.len())
        }
        AuditOutput::Demographic { counts, proportions_raw } => {
            let parts: Vec<String> = counts
                .iter()
                .zip(proportions_raw)
                .enumerate()
                .map(|(k, (c, p))| format!("{k}: {c} ({:.4})", spec.dequantize(*p)))
                .collect();
            format!("categories {}", parts.join(", "))
        }
    }
}

/// Loads and checks the transcript and weights an audit runs against.
fn audit_inputs(cli: &Cli, files: &ModelFiles) -> Result<std::result::Result<(TrainingTranscript, Weights), u8>> {
    let t = read_transcript(&default_path(cli, &files.transcript, TRANSCRIPT_FILE)?)?;
    let w = read_weights(&default_path(cli, &files.weights, WEIGHTS_FILE)?, &t.header.model)?;
    if let Err(r) = zkaudit_t_verify(&t, &backend(&t)) {
        return Ok(Err(reject("transcript", &r)));
    }
    if !opens_weights(t.header.hash, &t.final_weights, &w) {
        return Err(CliError::Commitment("weights do not open the transcript's final commitment".into()).into());
    }
    Ok(Ok((t, w)))
}

fn audit_out(cli: &Cli, out: &Option<PathBuf>, kind: &str) -> Result<PathBuf> {
    default_path(cli, out, &format!("audit-{kind}.json"))
}

fn prove_audit(cli: &Cli, files: &ModelFiles, kind: &str, f: &dyn AuditFunction) -> Result<u8> {
    let (t, w) = match audit_inputs(cli, files)? {
        Ok(v) => v,
        Err(code) => return Ok(code),
    };
    let report = zkaudit_i_prove(f, &w, &t, &backend(&t))?;
    let path = audit_out(cli, &files.out, kind)?;
    write_atomic(&path, report.to_canonical_string().as_bytes())?;
    println!("{kind}: {}", summarize(&report.output, &t.header.spec));
    println!("{} audit proofs; wrote {}", report.proofs.len(), path.display());
    Ok(0)
}

fn cmd_audit(cli: &Cli, a: &AuditCommand) -> Result<u8> {
    match a {
        AuditCommand::Censor { user, item, epsilon, delta, population, exhaustive, files } => {
            let f = CensorshipAudit {
                user: *user,
                item: *item,
                epsilon: *epsilon,
                delta: *delta,
                population: population.clone(),
                exhaustive: *exhaustive,
            };
            prove_audit(cli, files, "censor", &f)
        }
        AuditCommand::Copyright { features, claimant, tau, csv, files } => {
            let feats = read_vectors(features)?;
            let c = read_vectors(claimant)?;
            if c.data.is_empty() || c.shape.iter().rev().skip(1).any(|&d| d != 1) {
                return Err(CliError::Validation("claimant file must hold a single vector".into()).into());
            }
            let t = read_transcript(&default_path(cli, &files.transcript, TRANSCRIPT_FILE)?)?;
            let f = CopyrightAudit { features: feats, claimant: c.data, tau: *tau, hash: t.header.hash };
            let code = prove_audit(cli, files, "copyright", &f)?;
            if let (0, Some(p)) = (code, csv) {
                let report = AuditReport::parse(&read_text(&audit_out(cli, &files.out, "copyright")?)?)?;
                let tmp = p.with_extension("csv.tmp");
                write_copyright_csv(&tmp, &report.output, &t.header.spec)?;
                fs::rename(&tmp, p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                println!("wrote {}", p.display());
            }
            Ok(code)
        }
        AuditCommand::Demographic { labels, categories, files } => {
            let t = read_transcript(&default_path(cli, &files.transcript, TRANSCRIPT_FILE)?)?;
            let f = DemographicAudit { labels: read_labels(labels)?, categories: *categories, hash: t.header.hash };
            prove_audit(cli, files, "demographic", &f)
        }
        AuditCommand::Counterfactual { item, users, config_b, drop_item, drop_fraction, out } => {
            let cfg_a = load_config(cli)?;
            let (cfg_b, ratings_b) = match (config_b, drop_item) {
                (Some(p), None) => {
                    let c = RunConfig::load(p)?;
                    let r = c.ratings()?;
                    (c, r)
                }
                (None, Some(id)) => (cfg_a.clone(), drop_ratings(&cfg_a.ratings()?, *id, *drop_fraction)?),
                (None, None) => (cfg_a.clone(), cfg_a.ratings()?),
                (Some(_), Some(_)) => unreachable!("clap rejects both"),
            };
            let users = users.unwrap_or(cfg_a.model.users);
            let metric = MeanItemScore { item: *item, users };
            let (ex_a, ex_b) = (cfg_a.examples(&cfg_a.ratings()?)?, cfg_b.examples(&ratings_b)?);
            let (m_a, m_b) = (cfg_a.model()?, cfg_b.model()?);
            let (s_a, s_b) = (cfg_a.salt_seed()?, cfg_b.salt_seed()?);
            let be = MockBackend::new(cfg_a.proof.hash);
            if cfg_b.proof.hash != cfg_a.proof.hash {
                return Err(CliError::Validation("both arms must use the same hash".into()).into());
            }
            let run = counterfactual_audit(
                &train_input(&cfg_a, &ex_a, &m_a, &s_a)?,
                &train_input(&cfg_b, &ex_b, &m_b, &s_b)?,
                &metric,
                &be,
            )?;
            let path = default_path(cli, out, "counterfactual.json")?;
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            write_atomic(&dir.join("counterfactual-a.zka.json"), run.arm_a.transcript.to_canonical_string().as_bytes())?;
            write_atomic(&dir.join("counterfactual-b.zka.json"), run.arm_b.transcript.to_canonical_string().as_bytes())?;
            write_atomic(&path, run.report.to_canonical_string().as_bytes())?;
            let spec = cfg_a.spec()?;
            println!(
                "mean score of item {item}: A {:.4}, B {:.4}, delta {:.4} (raw {})",
                spec.dequantize(run.report.arm_a.metric_raw),
                spec.dequantize(run.report.arm_b.metric_raw),
                spec.dequantize(run.report.delta_raw),
                run.report.delta_raw
            );
            println!("wrote {}", path.display());
            Ok(0)
        }
    }
}

/// Removes the first `round(fraction · k)` of item `item`'s `k` ratings.
pub fn drop_ratings(ratings: &[Rating], item: u32, fraction: f64) -> Result<Vec<Rating>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CliError::Validation(format!("drop fraction {fraction} outside [0, 1]")).into());
    }
    let k = ratings.iter().filter(|r| r.item_id == item).count();
    let mut drop = (fraction * k as f64).round() as usize;
    let out: Vec<Rating> = ratings
        .iter()
        .filter(|r| {
            if r.item_id == item && drop > 0 {
                drop -= 1;
                return false;
            }
            true
        })
        .copied()
        .collect();
    if out.is_empty() {
        return Err(CliError::Validation("arm B would have no ratings".into()).into());
    }
    Ok(out)
}

#[derive(Deserialize)]
struct LabelRow {
    item_id: usize,
    category: u32,
}

fn read_labels(path: &Path) -> Result<Vec<u32>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<LabelRow>().enumerate() {
        let r = rec.map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
        if r.item_id != i {
            return Err(CliError::Malformed(format!("{}: row {i} has item_id {}", path.display(), r.item_id)).into());
        }
        out.push(r.category);
    }
    Ok(out)
}

fn cmd_security_bits(cli: &Cli, a: &SecurityArgs) -> Result<u8> {
    let (dataset, steps) = match (a.dataset, a.steps) {
        (Some(d), Some(t)) => (d, t),
        (d, t) => {
            let cfg = load_config(cli)?;
            let n = cfg.ratings()?.len() as u64;
            let per_epoch = cfg.train.steps_per_epoch(n as usize) as u64;
            (d.unwrap_or(n), t.unwrap_or(per_epoch * cfg.train.epochs as u64))
        }
    };
    if !(a.lambda > 0.0) || dataset == 0 {
        return Err(CliError::Validation("lambda and dataset size must be positive".into()).into());
    }
    let bits = security_bits(a.lambda, dataset, steps);
    println!("{bits:.4} bits (lambda {}, dataset {dataset}, steps {steps})", a.lambda);
    Ok(0)
}

fn classify_fxp(e: &FxpError) -> u8 {
    match e {
        FxpError::RangeOverflow { .. } | FxpError::DivisionByZero => EXIT_CAPACITY,
        FxpError::NotFinite | FxpError::InvalidSpec(_) | FxpError::SpecMismatch => EXIT_VALIDATION,
    }
}

fn classify_air(e: &AirError) -> u8 {
    match e {
        AirError::CapacityExceeded { .. }
        | AirError::WidthExceeded { .. }
        | AirError::RangeOverflow { .. }
        | AirError::DivisionByZero
        | AirError::DomainMiss { .. } => EXIT_CAPACITY,
        _ => EXIT_VALIDATION,
    }
}

fn classify_nn(e: &NnError) -> u8 {
    match e {
        NnError::Fxp(f) => classify_fxp(f),
        NnError::Air(a) => classify_air(a),
        NnError::Io(_) => EXIT_IO,
        NnError::Data(_) => EXIT_IO,
        NnError::Step { source, .. } => classify_nn(source),
        NnError::Model(_) | NnError::Shape(_) | NnError::Config(_) => EXIT_VALIDATION,
    }
}

fn classify_protocol(e: &ProtocolError) -> u8 {
    match e {
        ProtocolError::Nn(n) => classify_nn(n),
        ProtocolError::Air(a) => classify_air(a),
        ProtocolError::Step { source, .. } => classify_protocol(source),
        ProtocolError::WeightCommitmentMismatch => EXIT_COMMITMENT,
        ProtocolError::Malformed(_) => EXIT_IO,
        ProtocolError::Commit(_) | ProtocolError::Unsatisfied(_) | ProtocolError::Invalid(_) => EXIT_VALIDATION,
    }
}

fn classify_audit(e: &AuditError) -> u8 {
    match e {
        AuditError::Protocol(p) => classify_protocol(p),
        AuditError::Arm { source, .. } => classify_protocol(source),
        _ => EXIT_VALIDATION,
    }
}

/// Exit code for a failed command.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(c) = cause.downcast_ref::<CliError>() {
            return match c {
                CliError::Io(_) | CliError::Malformed(_) => EXIT_IO,
                CliError::Validation(_) => EXIT_VALIDATION,
                CliError::Commitment(_) => EXIT_COMMITMENT,
            };
        }
        if let Some(a) = cause.downcast_ref::<AuditError>() {
            return classify_audit(a);
        }
        if let Some(p) = cause.downcast_ref::<ProtocolError>() {
            return classify_protocol(p);
        }
        if let Some(n) = cause.downcast_ref::<NnError>() {
            return classify_nn(n);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_VALIDATION
}
