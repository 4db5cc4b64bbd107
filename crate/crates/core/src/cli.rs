//! The `mdsaudit` command line.
//!
//! Exit codes: 0 clean (or success), 2 errors located, 3 undecodable,
//! 4 a corruption was missed according to available ground truth,
//! 1 malformed input or any other error.
//!
//! Directory layout used by `encode`, `corrupt`, `hash` and `repair`:
//! `data.nxm`, `node-<i>.nxm` for `i = 1..=n`, `hashes.nxm`,
//! `projection.nxm` and, for `--mode small-bias`, `seed.nxm`.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;

use crate::code::{make_code, Code};
use crate::experiments::{bias_sweep, mc_failure_rate, stream_rng, Stream, TrialConfig};
use crate::field::{field_of_order, Field};
use crate::format::{deserialize, serialize, symbol_bytes, Container, Payload};
use crate::hashing::{
    draw_random_vector, minimal_extension_degree, prg_expand, HashVector, PrgSeed, RandomVector,
    RandomnessKind,
};
use crate::matrix::Matrix;
use crate::report::ReportDocument;
use crate::storage::{ingest, sample_error_plan, ErrorModel, SystemState};
use crate::verifier::{
    accounting, choose_field, collect_hashes, collect_hashes_with, repair_node, verify,
    AuditStatus, NodeBehavior, VerificationReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_ERRORS_LOCATED: i32 = 2;
pub const EXIT_UNDECODABLE: i32 = 3;
pub const EXIT_MISSED: i32 = 4;

type CliResult<T> = Result<T, String>;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

#[derive(Debug, Parser)]
#[command(
    name = "mdsaudit",
    version,
    about = "Locate corrupted nodes in MDS-coded storage by hashing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode data (random or from a file) into node files.
    Encode(EncodeArgs),
    /// Add committed errors to node files in place.
    Corrupt(CorruptArgs),
    /// Draw a projection and write every node's hash block.
    Hash(HashArgs),
    /// Decode a hash file and report flagged nodes.
    Verify(VerifyArgs),
    /// Rebuild one node from helper nodes.
    Repair(RepairArgs),
    /// Run draw, hash, verify end to end, simulated or on a directory.
    Audit(AuditArgs),
    /// Monte Carlo miss-rate sweep, written as CSV.
    Experiment(ExperimentArgs),
    /// Exhaustive bias check of the small-bias generator.
    BiasCheck(BiasArgs),
    /// Field size and communication figures for a file of M bits.
    Params(ParamsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Uniform projection vector.
    #[value(alias = "true-random")]
    Uniform,
    /// Projection expanded from a short seed.
    #[value(alias = "pseudorandom")]
    SmallBias,
}

impl Mode {
    fn kind(self) -> RandomnessKind {
        match self {
            Mode::Uniform => RandomnessKind::TrueRandom,
            Mode::SmallBias => RandomnessKind::Pseudorandom,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CodeArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Field order, a prime power.
    #[arg(long, default_value_t = 257)]
    pub q: u64,
    /// Columns of the data matrix.
    #[arg(long = "N", default_value_t = 8)]
    pub columns: usize,
}

impl CodeArgs {
    fn code(&self) -> CliResult<Code> {
        let field = field_of_order(self.q).map_err(fail)?;
        make_code(self.n, self.k, &field, self.columns).map_err(fail)
    }
}

/// `model:t`, e.g. `rank1:1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptSpec {
    pub model: ErrorModel,
    pub t: usize,
}

impl std::str::FromStr for CorruptSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (model, t) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("expected model:t, got {s}"))?;
        Ok(CorruptSpec {
            model: model.parse().map_err(fail)?,
            t: t.parse().map_err(|_| format!("bad node count in {s}"))?,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// File to pack into the data matrix; random data when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CorruptArgs {
    /// Directory written by `encode`.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long)]
    pub corrupt: CorruptSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct HashArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Uniform)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hash file; defaults to `<dir>/hashes.nxm`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// A hash file written by `hash`.
    pub hashes: PathBuf,
    /// Defaults to `small-bias` when a `seed.nxm` sits next to the hash file.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RepairArgs {
    #[arg(long)]
    pub dir: PathBuf,
    /// Node to rebuild.
    #[arg(long)]
    pub node: usize,
    /// Comma-separated helper nodes; all other nodes when absent.
    #[arg(long, value_delimiter = ',')]
    pub helpers: Vec<usize>,
    /// Where to write the rebuilt slice; overwrites the node file when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// Audit node files in this directory instead of simulating.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    #[arg(long)]
    pub corrupt: Option<CorruptSpec>,
    #[arg(long, value_enum, default_value_t = Mode::Uniform)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corrupted nodes reply with arbitrary symbols instead of hashing.
    #[arg(long)]
    pub liar: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Comma-separated field orders.
    #[arg(long, value_delimiter = ',', default_values_t = [17u64, 101, 257])]
    pub q: Vec<u64>,
    #[arg(long = "N", default_value_t = 4)]
    pub columns: usize,
    #[arg(long, default_value = "rank1")]
    pub model: String,
    /// Corrupted nodes per trial.
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, value_enum, default_value_t = Mode::Uniform)]
    pub mode: Mode,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BiasArgs {
    #[arg(long, default_value_t = 2)]
    pub q: u64,
    #[arg(long = "N", default_value_t = 6)]
    pub columns: usize,
    /// Extension degree; the smallest admissible one when absent.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ParamsArgs {
    /// File size in bits.
    #[arg(long = "M")]
    pub m_bits: u64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = Mode::Uniform)]
    pub mode: Mode,
    /// Columns used for the naive-download comparison; `M / (k(n-k)·⌈log2 q⌉)` when absent.
    #[arg(long = "N")]
    pub columns: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_FAILURE
            } else {
                EXIT_OK
            };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult<i32> {
    match command {
        Command::Encode(a) => cmd_encode(&a, out),
        Command::Corrupt(a) => cmd_corrupt(&a, out),
        Command::Hash(a) => cmd_hash(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Repair(a) => cmd_repair(&a, out),
        Command::Audit(a) => cmd_audit(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out),
        Command::BiasCheck(a) => cmd_bias_check(&a, out),
        Command::Params(a) => cmd_params(&a, out),
    }
}

fn emit(doc: &ReportDocument, path: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, doc.to_string()).map_err(fail),
        None => write!(out, "{doc}").map_err(fail),
    }
}

pub fn node_path(dir: &Path, node: usize) -> PathBuf {
    dir.join(format!("node-{node}.nxm"))
}

fn read_container(path: &Path) -> CliResult<Container> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    deserialize(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_payload(path: &Path, code: &Code, payload: &Payload) -> CliResult<()> {
    let bytes = serialize(code, payload).map_err(fail)?;
    fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))
}

/// Reads every node file of a directory and checks they share one code.
fn read_nodes(dir: &Path) -> CliResult<(Code, Vec<Matrix>)> {
    let first = read_container(&node_path(dir, 1))?;
    let code = first.code.clone();
    let mut slices = Vec::with_capacity(code.params.n);
    for i in 1..=code.params.n {
        let c = if i == 1 {
            first.clone()
        } else {
            read_container(&node_path(dir, i))?
        };
        if c.code.params != code.params {
            return Err(format!("node {i} was written with different parameters"));
        }
        match c.payload {
            Payload::Node { node, slice } if node == i => slices.push(slice),
            _ => {
                return Err(format!(
                    "{} is not the slice of node {i}",
                    node_path(dir, i).display()
                ))
            }
        }
    }
    Ok((code, slices))
}

fn read_data(dir: &Path, code: &Code) -> CliResult<Option<Matrix>> {
    let path = dir.join("data.nxm");
    if !path.exists() {
        return Ok(None);
    }
    let c = read_container(&path)?;
    match c.payload {
        Payload::Data(x) if c.code.params == code.params => Ok(Some(x)),
        _ => Err(format!(
            "{} does not hold data for this code",
            path.display()
        )),
    }
}

/// Loads a directory as a system state, with ground truth when `data.nxm`
/// is present.
fn load_state(dir: &Path) -> CliResult<SystemState> {
    let (code, slices) = read_nodes(dir)?;
    match read_data(dir, &code)? {
        Some(x) => {
            let mut state = SystemState::new(&code, x).map_err(fail)?;
            for (i, s) in slices.into_iter().enumerate() {
                if state.node(i + 1).map_err(fail)? != &s {
                    state.overwrite(i + 1, s).map_err(fail)?;
                }
            }
            Ok(state)
        }
        None => SystemState::from_nodes(&code, slices).map_err(fail),
    }
}

fn draw_projection(
    code: &Code,
    mode: Mode,
    master: u64,
) -> CliResult<(RandomVector, Option<PrgSeed>)> {
    let mut rng = stream_rng(master, Stream::Challenge, 0);
    let n_cols = code.params.columns;
    match mode {
        Mode::Uniform => Ok((draw_random_vector(n_cols, code.field(), &mut rng), None)),
        Mode::SmallBias => {
            let seed = PrgSeed::draw(code.field(), n_cols, &mut rng).map_err(fail)?;
            Ok((prg_expand(&seed, n_cols).map_err(fail)?, Some(seed)))
        }
    }
}

fn status_code(status: AuditStatus) -> i32 {
    match status {
        AuditStatus::Clean => EXIT_OK,
        AuditStatus::ErrorsLocated => EXIT_ERRORS_LOCATED,
        AuditStatus::Undecodable => EXIT_UNDECODABLE,
    }
}

fn cmd_encode(a: &EncodeArgs, out: &mut dyn Write) -> CliResult<i32> {
    let code = a.code.code()?;
    let params = &code.params;
    let x = match &a.input {
        Some(path) => {
            let data = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ingest(&data, params).map_err(fail)?
        }
        None => {
            let mut rng = stream_rng(a.seed, Stream::Simulation, 0);
            Matrix::random(
                code.field(),
                params.message_rows(),
                params.columns,
                &mut rng,
            )
        }
    };
    fs::create_dir_all(&a.out).map_err(fail)?;
    let coded = code.encode(&x).map_err(fail)?;
    write_payload(&a.out.join("data.nxm"), &code, &Payload::Data(x))?;
    for i in 1..=params.n {
        let slice = coded.node_slice(params.alpha, i);
        write_payload(
            &node_path(&a.out, i),
            &code,
            &Payload::Node { node: i, slice },
        )?;
    }
    let mut doc = ReportDocument::new();
    doc.push("command", "encode")
        .push_params(params)
        .push("seed", a.seed)
        .push("nodes_written", params.n);
    emit(&doc, None, out)?;
    Ok(EXIT_OK)
}

fn cmd_corrupt(a: &CorruptArgs, out: &mut dyn Write) -> CliResult<i32> {
    let (code, slices) = read_nodes(&a.dir)?;
    let mut state = SystemState::from_nodes(&code, slices).map_err(fail)?;
    let mut rng = stream_rng(a.seed, Stream::Simulation, 1);
    let plan =
        sample_error_plan(&a.corrupt.model, a.corrupt.t, &mut rng, &code.params).map_err(fail)?;
    let nodes = plan.nodes();
    state.corrupt(plan).map_err(fail)?;
    for &i in &nodes {
        let slice = state.node(i).map_err(fail)?.clone();
        write_payload(
            &node_path(&a.dir, i),
            &code,
            &Payload::Node { node: i, slice },
        )?;
    }
    let mut doc = ReportDocument::new();
    doc.push("command", "corrupt")
        .push("model", &a.corrupt.model)
        .push("t", a.corrupt.t)
        .push("seed", a.seed)
        .push_set("corrupted", &nodes);
    emit(&doc, None, out)?;
    Ok(EXIT_OK)
}

fn cmd_hash(a: &HashArgs, out: &mut dyn Write) -> CliResult<i32> {
    let (code, slices) = read_nodes(&a.dir)?;
    let state = SystemState::from_nodes(&code, slices).map_err(fail)?;
    let (r, seed) = draw_projection(&code, a.mode, a.seed)?;
    let hashes = collect_hashes(&state, &r).map_err(fail)?;
    let hash_path = a.out.clone().unwrap_or_else(|| a.dir.join("hashes.nxm"));
    write_payload(
        &hash_path,
        &code,
        &Payload::Hashes(hashes.symbols().to_vec()),
    )?;
    write_payload(
        &a.dir.join("projection.nxm"),
        &code,
        &Payload::Projection(r.values().to_vec()),
    )?;
    if let Some(seed) = &seed {
        write_payload(&a.dir.join("seed.nxm"), &code, &Payload::seed(seed))?;
    }
    let mut doc = ReportDocument::new();
    doc.push("command", "hash")
        .push("mode", a.mode.kind().name())
        .push("seed", a.seed)
        .push("hash_symbols", hashes.symbols().len())
        .push(
            "hash_payload_bytes",
            hashes.symbols().len() * symbol_bytes(code.field()),
        )
        .push("projection_seed_m", seed.as_ref().map_or(0, |s| s.degree()));
    emit(&doc, None, out)?;
    Ok(EXIT_OK)
}

fn verification_doc(
    code: &Code,
    report: &VerificationReport,
    kind: RandomnessKind,
) -> ReportDocument {
    let mut doc = ReportDocument::new();
    doc.push_params(&code.params)
        .push_verification(report)
        .push_budget(&accounting(&code.params, kind));
    doc
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult<i32> {
    let c = read_container(&a.hashes)?;
    let symbols = match c.payload {
        Payload::Hashes(s) => s,
        _ => return Err(format!("{} is not a hash file", a.hashes.display())),
    };
    let seed_file = a.hashes.with_file_name("seed.nxm");
    let mode = a.mode.unwrap_or(if seed_file.exists() {
        Mode::SmallBias
    } else {
        Mode::Uniform
    });
    let kind = mode.kind();
    let params = &c.code.params;
    let seed_bits = crate::hashing::seed_bit_count(kind, params.field.order(), params.columns);
    let h = HashVector::new(symbols, params.alpha, kind, seed_bits);
    let report = verify(&c.code, &h).map_err(fail)?;
    let mut doc = ReportDocument::new();
    doc.push("command", "verify");
    for (k, v) in verification_doc(&c.code, &report, kind).entries() {
        doc.push(k, v);
    }
    emit(&doc, a.out.as_deref(), out)?;
    Ok(status_code(report.status))
}

fn cmd_repair(a: &RepairArgs, out: &mut dyn Write) -> CliResult<i32> {
    let (code, slices) = read_nodes(&a.dir)?;
    let state = SystemState::from_nodes(&code, slices).map_err(fail)?;
    let helpers: Vec<usize> = if a.helpers.is_empty() {
        (1..=code.params.n).filter(|&i| i != a.node).collect()
    } else {
        a.helpers.clone()
    };
    let slice = repair_node(&state, a.node, &helpers).map_err(fail)?;
    let changed = state.node(a.node).map_err(fail)? != &slice;
    let path = a.out.clone().unwrap_or_else(|| node_path(&a.dir, a.node));
    write_payload(
        &path,
        &code,
        &Payload::Node {
            node: a.node,
            slice,
        },
    )?;
    let mut doc = ReportDocument::new();
    doc.push("command", "repair")
        .push("node", a.node)
        .push_set("helpers", &helpers.iter().copied().collect())
        .push("changed", changed);
    emit(&doc, None, out)?;
    Ok(EXIT_OK)
}

fn cmd_audit(a: &AuditArgs, out: &mut dyn Write) -> CliResult<i32> {
    let (state, source) = match &a.dir {
        Some(dir) => {
            if a.corrupt.is_some() {
                return Err("--corrupt applies to simulated audits only".into());
            }
            (load_state(dir)?, "directory")
        }
        None => {
            let code = a.code.code()?;
            let params = &code.params;
            let mut sim = stream_rng(a.seed, Stream::Simulation, 0);
            let x = Matrix::random(
                code.field(),
                params.message_rows(),
                params.columns,
                &mut sim,
            );
            let mut state = SystemState::new(&code, x).map_err(fail)?;
            if let Some(spec) = &a.corrupt {
                let mut rng = stream_rng(a.seed, Stream::Simulation, 1);
                let plan =
                    sample_error_plan(&spec.model, spec.t, &mut rng, params).map_err(fail)?;
                state.corrupt(plan).map_err(fail)?;
            }
            (state, "simulation")
        }
    };
    let code = state.code().clone();
    // errors are committed above, so the projection is drawn strictly later
    let (r, seed) = draw_projection(&code, a.mode, a.seed)?;
    let behavior = if a.liar {
        NodeBehavior::Arbitrary {
            seed: stream_rng(a.seed, Stream::Liar, 0).next_u64(),
        }
    } else {
        NodeBehavior::HashStored
    };
    let hashes = collect_hashes_with(&state, &r, behavior).map_err(fail)?;
    let report = verify(&code, &hashes).map_err(fail)?;

    let mut doc = ReportDocument::new();
    doc.push("command", "audit")
        .push("source", source)
        .push("seed", a.seed);
    if let Some(spec) = &a.corrupt {
        doc.push("corrupt", format!("{}:{}", spec.model, spec.t));
    }
    doc.push("liar", a.liar);
    for (k, v) in verification_doc(&code, &report, a.mode.kind()).entries() {
        doc.push(k, v);
    }
    if let Some(seed) = &seed {
        let coords: Vec<String> = seed
            .to_coords()
            .iter()
            .map(|c| c.index().to_string())
            .collect();
        doc.push("seed_m", seed.degree())
            .push("seed_coords", format!("[{}]", coords.join(", ")));
    }
    let mut exit = status_code(report.status);
    if let Ok(truth) = state.true_error_set() {
        let matched = truth == report.flagged;
        doc.push_set("truth", &truth).push("truth_match", matched);
        if report.status == AuditStatus::Clean && !truth.is_empty() {
            exit = EXIT_MISSED;
        }
    }
    emit(&doc, a.out.as_deref(), out)?;
    Ok(exit)
}

pub const EXPERIMENT_HEADER: [&str; 14] = [
    "mode", "n", "k", "q", "N", "model", "t", "trials", "failures", "estimate", "ci_low",
    "ci_high", "bound", "pass",
];

fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write) -> CliResult<i32> {
    let model: ErrorModel = a.model.parse().map_err(fail)?;
    let fields =
        a.q.iter()
            .map(|&q| field_of_order(q).map_err(fail))
            .collect::<CliResult<Vec<Field>>>()?;
    let mut configs = Vec::new();
    for f in &fields {
        let code = make_code(a.n, a.k, f, a.columns).map_err(fail)?;
        configs.push(TrialConfig::new(code, model.clone(), a.t, a.mode.kind()).map_err(fail)?);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(EXPERIMENT_HEADER).map_err(fail)?;
    if a.trials > 0 {
        for (i, cfg) in configs.iter().enumerate() {
            // each grid point gets its own master seed
            let master = stream_rng(a.seed, Stream::Simulation, 1 << 40 | i as u64).next_u64();
            let est = mc_failure_rate(cfg, a.trials, master).map_err(fail)?;
            w.write_record([
                a.mode.kind().name().to_string(),
                a.n.to_string(),
                a.k.to_string(),
                cfg.code.field().order().to_string(),
                a.columns.to_string(),
                model.name(),
                a.t.to_string(),
                est.trials.to_string(),
                est.failures.to_string(),
                format!("{:.6}", est.estimate),
                format!("{:.6}", est.low),
                format!("{:.6}", est.high),
                format!("{:.6}", est.bound),
                est.respects_bound(3.0).to_string(),
            ])
            .map_err(fail)?;
        }
    }
    let bytes = w.into_inner().map_err(fail)?;
    match &a.out {
        Some(p) => fs::write(p, &bytes).map_err(fail)?,
        None => out.write_all(&bytes).map_err(fail)?,
    }
    Ok(EXIT_OK)
}

fn cmd_bias_check(a: &BiasArgs, out: &mut dyn Write) -> CliResult<i32> {
    let field = field_of_order(a.q).map_err(fail)?;
    let m =
        a.m.unwrap_or_else(|| minimal_extension_degree(a.q, a.columns));
    let sweep = bias_sweep(&field, m, a.columns).map_err(fail)?;
    let mut doc = ReportDocument::new();
    doc.push("command", "bias-check")
        .push("q", a.q)
        .push("N", a.columns)
        .push("m", m)
        .push("tests", sweep.tests)
        .push("max_abs_bias", sweep.max_abs_bias)
        .push("bias_bound", sweep.bias_bound)
        .push("max_zero_probability", sweep.max_zero_probability)
        .push("zero_probability_bound", format!("2/{}", a.q))
        .push("pass", sweep.within_bounds());
    emit(&doc, a.out.as_deref(), out)?;
    Ok(if sweep.within_bounds() {
        EXIT_OK
    } else {
        EXIT_ERRORS_LOCATED
    })
}

fn cmd_params(a: &ParamsArgs, out: &mut dyn Write) -> CliResult<i32> {
    let kind = a.mode.kind();
    let field = choose_field(a.m_bits, a.n, a.k, kind).map_err(fail)?;
    let alpha = a.n - a.k;
    let columns = a.columns.unwrap_or_else(|| {
        (a.m_bits
            .div_ceil((a.k * alpha) as u64 * field.symbol_bits() as u64))
        .max(1) as usize
    });
    let code = make_code(a.n, a.k, &field, columns).map_err(fail)?;
    let budget = accounting(&code.params, kind);
    let m = match kind {
        RandomnessKind::TrueRandom => 0,
        RandomnessKind::Pseudorandom => minimal_extension_degree(field.order(), columns),
    };
    let mut doc = ReportDocument::new();
    doc.push("command", "params")
        .push("M", a.m_bits)
        .push("mode", kind.name())
        .push_params(&code.params)
        .push(
            "prime_power",
            format!("{}^{}", field.characteristic(), field.degree()),
        )
        .push("m", m)
        .push_budget(&budget)
        .push("bound", format!("1/{}", a.m_bits));
    emit(&doc, a.out.as_deref(), out)?;
    Ok(EXIT_OK)
}

/// The set of nodes a report flags, parsed back from its text.
pub fn parse_flagged(text: &str) -> Option<BTreeSet<usize>> {
    let doc = ReportDocument::parse(text)?;
    let list = doc
        .get("flagged")?
        .trim_start_matches('[')
        .trim_end_matches(']');
    if list.is_empty() {
        return Some(BTreeSet::new());
    }
    list.split(", ").map(|s| s.parse().ok()).collect()
}
