//! Command-line front end for the `qnogo` binary.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attack::{attack_sweep, epr_attack, AttackReport, SweepRow};
use crate::builtin;
use crate::cointoss::{induction_report, min_rounds, parse_epsilon, CoinProtocol, InductionReport};
use crate::fidelity::{
    fidelity_povm, fidelity_purification, fidelity_trace, random_povm_with, FidelityError,
};
use crate::protocol::{
    default_custody, holdings, parse_document, purify_protocol, run_commit, run_open, Actor,
    Ancilla, Document, Protocol, SectionKind,
};
use crate::qcore::random::{random_density_matrix, random_unitary};
use crate::qcore::{apply_unitary, partial_trace, PureState};
use crate::report::{csv_float, csv_opt, to_csv, to_json};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

/// Largest disagreement tolerated between the three fidelity routes.
pub const ROUTE_TOL: f64 = 1e-7;
/// Slack for the one-sided measurement and purification bounds.
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "qnogo",
    version,
    about = "Analyse quantum bit-commitment and coin-tossing protocols"
)]
pub struct Cli {
    /// Built-in name (`bell-bc`, `leaky-bc(0.3)`, ...) or path to a protocol file.
    #[arg(long, global = true)]
    pub protocol: Option<String>,
    /// Override a document parameter, as `name=value`. Repeatable.
    #[arg(long = "set", global = true, value_name = "NAME=VALUE", value_parser = parse_assignment)]
    pub set: Vec<(String, f64)>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Who holds the channel between commit and open.
    #[arg(long, global = true, value_enum)]
    pub channel_custody: Option<Custody>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Custody {
    Alice,
    Bob,
}

impl From<Custody> for Actor {
    fn from(c: Custody) -> Self {
        match c {
            Custody::Alice => Actor::Alice,
            Custody::Bob => Actor::Bob,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Honest runs: acceptance for every committed/claimed pair, or the outcome distribution of a coin toss.
    Simulate,
    /// Alice's entanglement attack on a bit commitment.
    Attack,
    /// The attack over a grid of parameter values.
    Sweep {
        /// Parameter to vary; defaults to the built-in's parameter.
        #[arg(long)]
        param: Option<String>,
        /// `start:stop:count` (inclusive) or a comma-separated list.
        #[arg(long)]
        grid: String,
    },
    /// Cross-check the three fidelity routes on random states, or on a protocol's committed states.
    Fidelity {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Random measurements and random purifications per sample.
        #[arg(long, default_value_t = 200)]
        povms: usize,
        /// Fix the dimension instead of cycling through 2, 4, 8.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Truncation analysis of a coin-tossing protocol and/or the round bound for an imbalance.
    Cointoss {
        /// Per-round imbalance, as a decimal or a fraction such as 1/3.
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Show the ancillas introduced by purification and the purified acceptance probabilities.
    Purify,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, found '{s}'"))?;
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("cannot read '{value}' as a number"))?;
    if !v.is_finite() {
        return Err(format!("'{value}' is not finite"));
    }
    Ok((name.trim().to_string(), v))
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Invariant { output: String, message: String },
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    finish(execute(&cli), cli.out.as_deref(), stdout, stderr)
}

/// Writes the report (also after an invariant violation) and picks the exit code.
fn finish(
    result: Result<String, CliError>,
    out: Option<&std::path::Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let (text, code) = match result {
        Ok(text) => (text, EXIT_OK),
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
        Err(CliError::Invariant { output, message }) => {
            let _ = writeln!(stderr, "invariant violated: {message}");
            (output, EXIT_INVARIANT)
        }
    };
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let _ = writeln!(stderr, "error: cannot write '{}': {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => {
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    code
}

struct Source {
    text: String,
    overrides: BTreeMap<String, f64>,
    param: Option<&'static str>,
    doc: Document,
}

enum Loaded {
    Commitment(Protocol),
    Coin(CoinProtocol),
}

fn load_source(cli: &Cli) -> Result<Option<Source>, CliError> {
    let Some(spec) = &cli.protocol else {
        return Ok(None);
    };
    let (text, mut overrides, param) = match builtin::resolve(spec) {
        Some(Ok((b, o))) => (b.source.to_string(), o, b.param),
        Some(Err(e)) => return Err(CliError::Usage(e)),
        None => {
            let text = std::fs::read_to_string(spec).map_err(|e| {
                CliError::Usage(format!(
                    "'{spec}' is neither a built-in protocol nor a readable file: {e}"
                ))
            })?;
            (text, BTreeMap::new(), None)
        }
    };
    for (k, v) in &cli.set {
        overrides.insert(k.clone(), *v);
    }
    let doc = parse_document(&text, &overrides).map_err(usage)?;
    Ok(Some(Source {
        text,
        overrides,
        param,
        doc,
    }))
}

fn is_coin(doc: &Document) -> bool {
    doc.sections.iter().any(|s| {
        matches!(
            s.kind,
            SectionKind::Round(_)
                | SectionKind::Outcome(..)
                | SectionKind::Invalid(_)
                | SectionKind::PrepareAlice(None)
        )
    })
}

fn load(source: &Source) -> Result<Loaded, CliError> {
    if is_coin(&source.doc) {
        Ok(Loaded::Coin(
            CoinProtocol::from_document(&source.doc).map_err(usage)?,
        ))
    } else {
        Ok(Loaded::Commitment(
            Protocol::from_document(&source.doc).map_err(usage)?,
        ))
    }
}

fn require(source: Option<Source>) -> Result<Source, CliError> {
    source.ok_or_else(|| CliError::Usage("this command needs --protocol".into()))
}

fn require_commitment(source: &Source) -> Result<Protocol, CliError> {
    match load(source)? {
        Loaded::Commitment(p) => Ok(p),
        Loaded::Coin(c) => Err(CliError::Usage(format!(
            "'{}' is a coin-tossing protocol; this command needs a bit commitment",
            c.name
        ))),
    }
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    let source = load_source(cli)?;
    let custody = cli.channel_custody.map(Actor::from);
    match &cli.command {
        Command::Simulate => simulate(&require(source)?, custody, cli.output),
        Command::Attack => {
            let p = require_commitment(&require(source)?)?;
            let report = epr_attack(&p, custody).map_err(usage)?;
            let text = render_attack(&report, cli.output)?;
            match report.check_invariants() {
                Ok(()) => Ok(text),
                Err(e) => Err(CliError::Invariant {
                    output: text,
                    message: e.to_string(),
                }),
            }
        }
        Command::Sweep { param, grid } => sweep(
            &require(source)?,
            param.as_deref(),
            grid,
            custody,
            cli.output,
        ),
        Command::Fidelity {
            samples,
            povms,
            dim,
        } => match source {
            Some(s) => fidelity_of_protocol(&require_commitment(&s)?, custody, cli.output),
            None => fidelity_check(*samples, *povms, *dim, cli.seed, cli.output),
        },
        Command::Cointoss { epsilon } => cointoss(source, epsilon.as_deref(), cli.output),
        Command::Purify => purify(&require(source)?, cli.output),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    to_json(value).map_err(usage)
}

fn csv(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    to_csv(header, rows).map_err(usage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitmentSimulation {
    pub protocol_name: String,
    pub num_qubits: usize,
    pub channel_custody: Actor,
    /// `accept[b][c]`: Bob accepts claim `c` after an honest commit to `b`.
    pub accept: [[f64; 2]; 2],
    pub fidelity: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoinSimulation {
    pub protocol_name: String,
    pub num_qubits: usize,
    pub rounds: usize,
    /// `distribution[i][j]`: Alice reports `i`, Bob reports `j` (0, 1, invalid).
    pub distribution: [[f64; 3]; 3],
}

fn accept_matrix(p: &Protocol) -> Result<[[f64; 2]; 2], CliError> {
    let mut accept = [[0.0; 2]; 2];
    for b in 0..2u8 {
        let committed = run_commit(p, b).map_err(usage)?;
        for c in 0..2u8 {
            accept[b as usize][c as usize] = run_open(p, &committed, c).map_err(usage)?;
        }
    }
    Ok(accept)
}

const OUTCOME_LABELS: [&str; 3] = ["0", "1", "invalid"];

fn distribution_csv(dist: &[[f64; 3]; 3]) -> Result<String, CliError> {
    let mut rows = Vec::new();
    for (i, row) in dist.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            rows.push(vec![
                OUTCOME_LABELS[i].to_string(),
                OUTCOME_LABELS[j].to_string(),
                csv_float(*p),
            ]);
        }
    }
    csv(&["alice_outcome", "bob_outcome", "probability"], &rows)
}

fn accept_rows(accept: &[[f64; 2]; 2]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (b, row) in accept.iter().enumerate() {
        for (c, p) in row.iter().enumerate() {
            rows.push(vec![b.to_string(), c.to_string(), csv_float(*p)]);
        }
    }
    rows
}

fn simulate(
    source: &Source,
    custody: Option<Actor>,
    format: OutputFormat,
) -> Result<String, CliError> {
    match load(source)? {
        Loaded::Commitment(p) => {
            let p = purify_protocol(&p).map_err(usage)?;
            let custody = custody.unwrap_or_else(|| default_custody(&p));
            let delta = crate::protocol::commit_delta(&p, custody).map_err(usage)?;
            let report = CommitmentSimulation {
                protocol_name: p.name.clone(),
                num_qubits: p.num_qubits(),
                channel_custody: custody,
                accept: accept_matrix(&p)?,
                fidelity: delta.fidelity,
                delta: delta.delta,
            };
            match format {
                OutputFormat::Json => json(&report),
                OutputFormat::Csv => csv(
                    &["committed", "claimed", "accept_probability"],
                    &accept_rows(&report.accept),
                ),
            }
        }
        Loaded::Coin(c) => {
            let c = c.purified().map_err(usage)?;
            let report = CoinSimulation {
                protocol_name: c.name.clone(),
                num_qubits: c.num_qubits(),
                rounds: c.rounds.len(),
                distribution: c.outcome_distribution().map_err(usage)?,
            };
            match format {
                OutputFormat::Json => json(&report),
                OutputFormat::Csv => distribution_csv(&report.distribution),
            }
        }
    }
}

const ATTACK_HEADER: [&str; 9] = [
    "protocol_name",
    "delta",
    "fidelity",
    "achieved_overlap",
    "honest_accept_0",
    "honest_accept_1",
    "cheat_accept",
    "bob_state_shift",
    "channel_custody",
];

fn attack_cells(r: &AttackReport) -> Vec<String> {
    vec![
        r.protocol_name.clone(),
        csv_float(r.delta),
        csv_float(r.fidelity),
        csv_float(r.achieved_overlap),
        csv_float(r.honest_accept[0]),
        csv_float(r.honest_accept[1]),
        csv_float(r.cheat_accept),
        csv_float(r.bob_state_shift),
        r.channel_custody.to_string(),
    ]
}

fn render_attack(r: &AttackReport, format: OutputFormat) -> Result<String, CliError> {
    match format {
        OutputFormat::Json => json(r),
        OutputFormat::Csv => csv(&ATTACK_HEADER, &[attack_cells(r)]),
    }
}

/// `start:stop:count` (inclusive endpoints) or `v1,v2,...`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| -> Result<f64, String> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| format!("cannot read '{s}' as a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("'{s}' is not finite"))
        }
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, count] => {
            let (a, b) = (num(start)?, num(stop)?);
            let n: usize = count
                .trim()
                .parse()
                .map_err(|_| format!("cannot read '{count}' as a point count"))?;
            match n {
                0 => Err("a grid needs at least one point".into()),
                1 => Ok(vec![a]),
                _ => Ok((0..n)
                    .map(|i| {
                        if i == n - 1 {
                            b
                        } else {
                            a + (b - a) * i as f64 / (n - 1) as f64
                        }
                    })
                    .collect()),
            }
        }
        [list] if list.trim().is_empty() => Ok(Vec::new()),
        [list] => {
            let values = list.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            Ok(values)
        }
        _ => Err(format!(
            "grid '{text}' is neither start:stop:count nor a comma-separated list"
        )),
    }
}

fn sweep(
    source: &Source,
    param: Option<&str>,
    grid: &str,
    custody: Option<Actor>,
    format: OutputFormat,
) -> Result<String, CliError> {
    require_commitment(source)?;
    let param = match param.or(source.param) {
        Some(p) => p,
        None => {
            return Err(CliError::Usage(
                "sweep needs --param for this protocol".into(),
            ))
        }
    };
    if !source.doc.params.contains_key(param) {
        return Err(CliError::Usage(format!(
            "protocol declares no parameter '{param}'"
        )));
    }
    let grid = parse_grid(grid).map_err(CliError::Usage)?;
    let mut base = source.overrides.clone();
    base.remove(param);
    let rows: Vec<SweepRow> = attack_sweep(&source.text, param, &grid, &base, custody);
    let text = match format {
        OutputFormat::Json => json(&rows)?,
        OutputFormat::Csv => {
            let mut header = vec!["parameter"];
            header.extend(ATTACK_HEADER);
            header.push("error");
            let body: Vec<Vec<String>> =
                rows.iter()
                    .map(|row| {
                        let mut cells = vec![csv_float(row.parameter)];
                        match &row.report {
                            Some(r) => cells.extend(attack_cells(r)),
                            None => cells
                                .extend(std::iter::repeat_n(String::new(), ATTACK_HEADER.len())),
                        }
                        cells.push(row.error.clone().unwrap_or_default());
                        cells
                    })
                    .collect();
            csv(&header, &body)?
        }
    };
    for row in &rows {
        if let Some(r) = &row.report {
            if let Err(e) = r.check_invariants() {
                return Err(CliError::Invariant {
                    output: text,
                    message: format!("parameter {}: {e}", row.parameter),
                });
            }
        }
    }
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityRoutes {
    pub trace: f64,
    pub purification: f64,
    pub measurement: f64,
    pub measurement_outcomes: usize,
    pub max_route_gap: f64,
}

fn routes(
    r0: &crate::qcore::DensityMatrix,
    r1: &crate::qcore::DensityMatrix,
) -> Result<FidelityRoutes, FidelityError> {
    let trace = fidelity_trace(r0, r1)?;
    let (purification, _) = fidelity_purification(r0, r1)?;
    let (measurement, povm) = fidelity_povm(r0, r1)?;
    let max_route_gap = (trace - purification)
        .abs()
        .max((trace - measurement).abs())
        .max((purification - measurement).abs());
    Ok(FidelityRoutes {
        trace,
        purification,
        measurement,
        measurement_outcomes: povm.len(),
        max_route_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolFidelity {
    pub protocol_name: String,
    pub channel_custody: Actor,
    pub bob_qubits: Vec<usize>,
    pub routes: FidelityRoutes,
}

fn fidelity_of_protocol(
    p: &Protocol,
    custody: Option<Actor>,
    format: OutputFormat,
) -> Result<String, CliError> {
    let p = purify_protocol(p).map_err(usage)?;
    let custody = custody.unwrap_or_else(|| default_custody(&p));
    let bob = holdings(&p, Actor::Bob, custody);
    let r0 = partial_trace(&run_commit(&p, 0).map_err(usage)?, &bob).map_err(usage)?;
    let r1 = partial_trace(&run_commit(&p, 1).map_err(usage)?, &bob).map_err(usage)?;
    let report = ProtocolFidelity {
        protocol_name: p.name.clone(),
        channel_custody: custody,
        bob_qubits: bob,
        routes: routes(&r0, &r1).map_err(usage)?,
    };
    let text = match format {
        OutputFormat::Json => json(&report)?,
        OutputFormat::Csv => csv(
            &[
                "protocol_name",
                "trace",
                "purification",
                "measurement",
                "max_route_gap",
            ],
            &[vec![
                report.protocol_name.clone(),
                csv_float(report.routes.trace),
                csv_float(report.routes.purification),
                csv_float(report.routes.measurement),
                csv_float(report.routes.max_route_gap),
            ]],
        )?,
    };
    if report.routes.max_route_gap > ROUTE_TOL {
        return Err(CliError::Invariant {
            output: text,
            message: format!(
                "fidelity routes differ by {:.3e}",
                report.routes.max_route_gap
            ),
        });
    }
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelitySample {
    pub index: usize,
    pub dim: usize,
    pub ranks: [usize; 2],
    pub routes: FidelityRoutes,
    /// Smallest Bhattacharyya sum over the random measurements.
    pub min_random_measurement: f64,
    /// Largest overlap over the random purification pairs.
    pub max_random_purification: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityCheck {
    pub seed: u64,
    pub samples: Vec<FidelitySample>,
    pub max_route_gap: f64,
    /// `min(random measurement − F)`; never below `−1e-8` when consistent.
    pub min_measurement_margin: f64,
    /// `max(random purification overlap − F)`; never above `1e-8` when consistent.
    pub max_purification_excess: f64,
    pub consistent: bool,
}

/// Canonical purification `Σ_i √ρ|i⟩ ⊗ |i⟩` with an ancilla unitary applied.
fn rotated_purification(
    rho: &crate::qcore::DensityMatrix,
    ancilla_unitary: &crate::qcore::CMatrix,
) -> Result<PureState, CliError> {
    let s = crate::qcore::matrix_sqrt_psd(rho.matrix()).map_err(usage)?;
    let d = rho.dim();
    let k = rho.num_qubits();
    let amps = (0..d * d).map(|idx| s[(idx / d, idx % d)]).collect();
    let psi = PureState::normalized(amps).map_err(usage)?;
    let ancilla: Vec<usize> = (k..2 * k).collect();
    apply_unitary(&psi, &ancilla, ancilla_unitary).map_err(usage)
}

fn fidelity_check(
    samples: usize,
    povms: usize,
    dim: Option<usize>,
    seed: u64,
    format: OutputFormat,
) -> Result<String, CliError> {
    if let Some(d) = dim {
        if d < 2 || !d.is_power_of_two() || d > 64 {
            return Err(CliError::Usage(format!(
                "--dim must be a power of two between 2 and 64, got {d}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    for index in 0..samples {
        let d = dim.unwrap_or([2, 4, 8][index % 3]);
        let ranks = [rng.random_range(1..=d), rng.random_range(1..=d)];
        let r0 = random_density_matrix(d, ranks[0], &mut rng).map_err(usage)?;
        let r1 = random_density_matrix(d, ranks[1], &mut rng).map_err(usage)?;
        let routes = routes(&r0, &r1).map_err(usage)?;
        let mut min_random_measurement = f64::INFINITY;
        let mut max_random_purification = f64::NEG_INFINITY;
        for _ in 0..povms {
            let outcomes = rng.random_range(1..=2 * d);
            let povm = random_povm_with(d, outcomes, &mut rng).map_err(usage)?;
            min_random_measurement =
                min_random_measurement.min(povm.bhattacharyya(&r0, &r1).map_err(usage)?);
            let u0 = random_unitary(d, &mut rng);
            let u1 = random_unitary(d, &mut rng);
            let overlap = rotated_purification(&r0, &u0)?
                .overlap(&rotated_purification(&r1, &u1)?)
                .map_err(usage)?;
            max_random_purification = max_random_purification.max(overlap);
        }
        out.push(FidelitySample {
            index,
            dim: d,
            ranks,
            routes,
            min_random_measurement,
            max_random_purification,
        });
    }
    let max_route_gap = out
        .iter()
        .map(|s| s.routes.max_route_gap)
        .fold(0.0, f64::max);
    let min_measurement_margin = out
        .iter()
        .map(|s| s.min_random_measurement - s.routes.trace)
        .fold(f64::INFINITY, f64::min);
    let max_purification_excess = out
        .iter()
        .map(|s| s.max_random_purification - s.routes.trace)
        .fold(f64::NEG_INFINITY, f64::max);
    let consistent = max_route_gap <= ROUTE_TOL
        && !(min_measurement_margin < -BOUND_SLACK)
        && !(max_purification_excess > BOUND_SLACK);
    let report = FidelityCheck {
        seed,
        samples: out,
        max_route_gap,
        min_measurement_margin,
        max_purification_excess,
        consistent,
    };
    let text = match format {
        OutputFormat::Json => json(&report)?,
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = report
                .samples
                .iter()
                .map(|s| {
                    vec![
                        s.index.to_string(),
                        s.dim.to_string(),
                        s.ranks[0].to_string(),
                        s.ranks[1].to_string(),
                        csv_float(s.routes.trace),
                        csv_float(s.routes.purification),
                        csv_float(s.routes.measurement),
                        csv_float(s.routes.max_route_gap),
                        csv_float(s.min_random_measurement),
                        csv_float(s.max_random_purification),
                    ]
                })
                .collect();
            csv(
                &[
                    "index",
                    "dim",
                    "rank_0",
                    "rank_1",
                    "trace",
                    "purification",
                    "measurement",
                    "max_route_gap",
                    "min_random_measurement",
                    "max_random_purification",
                ],
                &rows,
            )?
        }
    };
    if !report.consistent {
        return Err(CliError::Invariant {
            output: text,
            message: format!(
                "route gap {:.3e}, measurement margin {:.3e}, purification excess {:.3e}",
                report.max_route_gap, report.min_measurement_margin, report.max_purification_excess
            ),
        });
    }
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CointossOutput {
    pub induction: Option<InductionReport>,
    pub epsilon: Option<String>,
    pub min_rounds: Option<u64>,
}

fn cointoss(
    source: Option<Source>,
    epsilon: Option<&str>,
    format: OutputFormat,
) -> Result<String, CliError> {
    if source.is_none() && epsilon.is_none() {
        return Err(CliError::Usage(
            "cointoss needs --protocol, --epsilon, or both".into(),
        ));
    }
    let (eps_text, rounds) = match epsilon {
        Some(e) => {
            let ratio = parse_epsilon(e).map_err(usage)?;
            (
                Some(ratio.to_string()),
                Some(min_rounds(ratio).map_err(usage)?),
            )
        }
        None => (None, None),
    };
    let induction = match source {
        Some(s) => match load(&s)? {
            Loaded::Coin(c) => Some(induction_report(&c).map_err(usage)?),
            Loaded::Commitment(p) => {
                return Err(CliError::Usage(format!(
                    "'{}' is a bit commitment; cointoss needs a coin-tossing protocol",
                    p.name
                )))
            }
        },
        None => None,
    };
    let report = CointossOutput {
        induction,
        epsilon: eps_text,
        min_rounds: rounds,
    };
    match format {
        OutputFormat::Json => json(&report),
        OutputFormat::Csv => {
            let header = [
                "round",
                "sender",
                "f01",
                "f0inv",
                "f1inv",
                "p0",
                "p1",
                "pinv",
                "distribution_shift",
                "verdict",
                "min_rounds",
            ];
            let min = report.min_rounds.map(|m| m.to_string()).unwrap_or_default();
            let mut rows = Vec::new();
            if let Some(ind) = &report.induction {
                for step in &ind.steps {
                    let t = &step.triple;
                    rows.push(vec![
                        t.round.to_string(),
                        t.sender.to_string(),
                        csv_opt(t.f01),
                        csv_opt(t.f0inv),
                        csv_opt(t.f1inv),
                        csv_float(t.probabilities[0]),
                        csv_float(t.probabilities[1]),
                        csv_float(t.probabilities[2]),
                        csv_opt(step.distribution_shift),
                        ind.summary.clone(),
                        min.clone(),
                    ]);
                }
                if ind.steps.is_empty() {
                    let mut row = vec![String::new(); 9];
                    row.push(ind.summary.clone());
                    row.push(min.clone());
                    rows.push(row);
                }
            } else {
                let mut row = vec![String::new(); 10];
                row.push(min);
                rows.push(row);
            }
            csv(&header, &rows)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AncillaInfo {
    pub qubit: usize,
    pub owner: Actor,
    pub source: String,
}

impl From<&Ancilla> for AncillaInfo {
    fn from(a: &Ancilla) -> Self {
        Self {
            qubit: a.qubit,
            owner: a.owner,
            source: a.source.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurifyOutput {
    pub protocol_name: String,
    pub declared_qubits: usize,
    pub num_qubits: usize,
    pub ancillas: Vec<AncillaInfo>,
    /// Bit commitments: `accept[b][c]` on the purified protocol.
    pub accept: Option<[[f64; 2]; 2]>,
    /// Coin tosses: outcome distribution on the purified protocol.
    pub distribution: Option<[[f64; 3]; 3]>,
}

fn purify(source: &Source, format: OutputFormat) -> Result<String, CliError> {
    let report = match load(source)? {
        Loaded::Commitment(p) => {
            let q = purify_protocol(&p).map_err(usage)?;
            PurifyOutput {
                protocol_name: q.name.clone(),
                declared_qubits: q.sizes.total(),
                num_qubits: q.num_qubits(),
                ancillas: q.ancillas.iter().map(AncillaInfo::from).collect(),
                accept: Some(accept_matrix(&q)?),
                distribution: None,
            }
        }
        Loaded::Coin(c) => {
            let q = c.purified().map_err(usage)?;
            PurifyOutput {
                protocol_name: q.name.clone(),
                declared_qubits: q.sizes.total(),
                num_qubits: q.num_qubits(),
                ancillas: q.ancillas.iter().map(AncillaInfo::from).collect(),
                accept: None,
                distribution: Some(q.outcome_distribution().map_err(usage)?),
            }
        }
    };
    match format {
        OutputFormat::Json => json(&report),
        OutputFormat::Csv => {
            let mut rows: Vec<Vec<String>> = report
                .ancillas
                .iter()
                .map(|a| {
                    vec![
                        "ancilla".into(),
                        a.qubit.to_string(),
                        a.owner.to_string(),
                        a.source.clone(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]
                })
                .collect();
            if let Some(acc) = &report.accept {
                for r in accept_rows(acc) {
                    let mut row = vec![
                        "accept".to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ];
                    row.extend(r);
                    rows.push(row);
                }
            }
            if let Some(dist) = &report.distribution {
                for (i, row) in dist.iter().enumerate() {
                    for (j, p) in row.iter().enumerate() {
                        rows.push(vec![
                            "outcome".into(),
                            String::new(),
                            String::new(),
                            String::new(),
                            OUTCOME_LABELS[i].into(),
                            OUTCOME_LABELS[j].into(),
                            csv_float(*p),
                        ]);
                    }
                }
            }
            csv(
                &[
                    "row",
                    "qubit",
                    "owner",
                    "source",
                    "first",
                    "second",
                    "probability",
                ],
                &rows,
            )
        }
    }
}
