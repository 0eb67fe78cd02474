//! Two-party bit-commitment protocols: types, validation and construction
//! from the text format in [`document`].
//!
//! Registers are laid out contiguously: Alice's qubits, then Bob's, then the
//! channel. Ancillas introduced by [`purify_protocol`] are appended after the
//! declared qubits and belong to the party whose measurement created them.

pub mod document;
mod exec;
mod purify;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{
    apply_gate, CMatrix, GateOp, Partition, Projector, PureState, StateError, C64, MAX_SIDE_QUBITS,
};

pub use document::{
    parse_document, Document, OutcomeLabel, Section, SectionKind, Sizes, Statement,
};
pub use exec::{
    commit_delta, default_custody, holdings, honest_accept, initial_state, outcome_distribution,
    run_commit, run_open, run_rounds, BranchWeight, CommitDelta,
};
pub use purify::purify_protocol;
pub(crate) use purify::purify_rounds;

/// Idempotence and Hermiticity tolerance for projectors built from documents.
pub const PROJECTOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    Alice,
    Bob,
}

impl Actor {
    pub fn other(self) -> Actor {
        match self {
            Actor::Alice => Actor::Bob,
            Actor::Bob => Actor::Alice,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Actor::Alice => "alice",
            Actor::Bob => "bob",
        }
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Actor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alice" => Ok(Actor::Alice),
            "bob" => Ok(Actor::Bob),
            other => Err(format!("expected 'alice' or 'bob', found '{other}'")),
        }
    }
}

/// One bit of a named measurement record.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResultBit {
    pub id: String,
    pub bit: usize,
}

impl fmt::Display for ResultBit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.id, self.bit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("invalid protocol: {0}")]
    Validation(String),
    #[error("protocol contains measurements or classical controls; purify it first")]
    NotPurified,
    #[error(transparent)]
    State(#[from] StateError),
}

fn invalid<T>(message: impl Into<String>) -> Result<T, ProtocolError> {
    Err(ProtocolError::Validation(message.into()))
}

/// Computational-basis measurement recorded under `id`, one bit per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOp {
    pub qubits: Vec<usize>,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Gate(GateOp),
    Measure(MeasureOp),
    /// A gate applied only when an earlier result bit of the same party is 1.
    Conditional {
        gate: GateOp,
        control: ResultBit,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub actor: Actor,
    pub instructions: Vec<Instruction>,
}

impl Round {
    pub fn is_unitary(&self) -> bool {
        self.instructions
            .iter()
            .all(|i| matches!(i, Instruction::Gate(_)))
    }
}

/// Qubit holding a coherent copy of a measurement result bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ancilla {
    pub qubit: usize,
    pub owner: Actor,
    pub source: ResultBit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub name: String,
    pub sizes: Sizes,
    /// Covers declared qubits and ancillas.
    pub partition: Partition,
    pub initial_alice: [Vec<GateOp>; 2],
    pub initial_bob: Vec<GateOp>,
    pub commit_rounds: Vec<Round>,
    pub open_rounds: Vec<Round>,
    /// Bob's acceptance projector for each claimed bit.
    pub verification: [Projector; 2],
    pub ancillas: Vec<Ancilla>,
}

impl Protocol {
    pub fn num_qubits(&self) -> usize {
        self.partition.num_qubits()
    }

    /// `true` when every round is a plain gate sequence.
    pub fn is_purified(&self) -> bool {
        self.commit_rounds
            .iter()
            .chain(&self.open_rounds)
            .all(Round::is_unitary)
    }

    pub fn from_document(doc: &Document) -> Result<Self, ProtocolError> {
        let sizes = doc.sizes;
        let partition = Partition::contiguous(sizes.alice, sizes.bob, sizes.channel);
        let alice = partition.alice.clone();
        let bob_side: Vec<usize> = partition
            .bob
            .iter()
            .chain(&partition.channel)
            .copied()
            .collect();
        let alice_side: Vec<usize> = partition
            .alice
            .iter()
            .chain(&partition.channel)
            .copied()
            .collect();

        let mut prep_alice: [Option<Vec<GateOp>>; 2] = [None, None];
        let mut prep_bob: Option<Vec<GateOp>> = None;
        let mut verify: [Option<Projector>; 2] = [None, None];
        let mut commit_rounds = Vec::new();
        let mut open_rounds = Vec::new();
        let mut measured = BTreeMap::new();
        let mut phase = 0;

        for section in &doc.sections {
            let (order, label) = match &section.kind {
                SectionKind::PrepareAlice(Some(b)) => (0, format!("[prepare alice {b}]")),
                SectionKind::PrepareBob => (0, "[prepare bob]".to_string()),
                SectionKind::Commit(_) => (1, format!("commit round {}", commit_rounds.len() + 1)),
                SectionKind::Open(_) => (2, format!("open round {}", open_rounds.len() + 1)),
                SectionKind::Verify(b) => (3, format!("[verify {b}]")),
                other => {
                    return invalid(format!(
                        "line {}: section {} does not belong in a bit-commitment protocol",
                        section.line,
                        describe_kind(other)
                    ))
                }
            };
            if order < phase {
                return invalid(format!(
                    "line {}: {label} appears after a later phase",
                    section.line
                ));
            }
            phase = order;
            let context = format!("{label} (line {})", section.line);
            match &section.kind {
                SectionKind::PrepareAlice(Some(b)) => {
                    let slot = &mut prep_alice[*b as usize];
                    if slot.is_some() {
                        return invalid(format!("{context}: duplicate section"));
                    }
                    *slot = Some(gates_only(section, &alice, sizes, &context)?);
                }
                SectionKind::PrepareBob => {
                    if prep_bob.is_some() {
                        return invalid(format!("{context}: duplicate section"));
                    }
                    prep_bob = Some(gates_only(section, &bob_side, sizes, &context)?);
                }
                SectionKind::Commit(actor) | SectionKind::Open(actor) => {
                    let rounds = if matches!(section.kind, SectionKind::Commit(_)) {
                        &mut commit_rounds
                    } else {
                        &mut open_rounds
                    };
                    if let Some(prev) = rounds.last() {
                        let prev: &Round = prev;
                        if prev.actor == *actor && !section.repeat {
                            return invalid(format!(
                                "{context} ({actor}): follows another {actor} round; mark it 'repeat' to allow this"
                            ));
                        }
                    }
                    let allowed = if *actor == Actor::Alice {
                        &alice_side
                    } else {
                        &bob_side
                    };
                    let context = format!("{context} ({actor})");
                    rounds.push(build_round(
                        section,
                        *actor,
                        allowed,
                        sizes,
                        &mut measured,
                        &context,
                    )?);
                }
                SectionKind::Verify(b) => {
                    let slot = &mut verify[*b as usize];
                    if slot.is_some() {
                        return invalid(format!("{context}: duplicate section"));
                    }
                    *slot = Some(build_projector(
                        &section.statements,
                        &bob_side,
                        sizes,
                        &context,
                    )?);
                }
                _ => unreachable!("filtered above"),
            }
        }

        let [Some(p0), Some(p1)] = prep_alice else {
            return invalid("both [prepare alice 0] and [prepare alice 1] are required");
        };
        let [Some(v0), Some(v1)] = verify else {
            return invalid("both [verify 0] and [verify 1] are required");
        };
        if commit_rounds.is_empty() {
            return invalid("at least one commit round is required");
        }
        Ok(Protocol {
            name: doc.name.clone(),
            sizes,
            partition,
            initial_alice: [p0, p1],
            initial_bob: prep_bob.unwrap_or_default(),
            commit_rounds,
            open_rounds,
            verification: [v0, v1],
            ancillas: Vec::new(),
        })
    }
}

/// Parses and validates a bit-commitment document.
pub fn parse_protocol(
    source: &str,
    overrides: &BTreeMap<String, f64>,
) -> Result<Protocol, ProtocolError> {
    Protocol::from_document(&parse_document(source, overrides)?)
}

pub(crate) fn describe_kind(kind: &SectionKind) -> String {
    match kind {
        SectionKind::PrepareAlice(Some(b)) => format!("[prepare alice {b}]"),
        SectionKind::PrepareAlice(None) => "[prepare alice]".into(),
        SectionKind::PrepareBob => "[prepare bob]".into(),
        SectionKind::Commit(a) => format!("[commit {a}]"),
        SectionKind::Open(a) => format!("[open {a}]"),
        SectionKind::Verify(b) => format!("[verify {b}]"),
        SectionKind::Round(a) => format!("[round {a}]"),
        SectionKind::Outcome(a, l) => {
            let l = match l {
                OutcomeLabel::Zero => "0",
                OutcomeLabel::One => "1",
                OutcomeLabel::Invalid => "invalid",
            };
            format!("[outcome {a} {l}]")
        }
        SectionKind::Invalid(a) => format!("[invalid {a}]"),
    }
}

fn check_allowed(
    qubits: impl IntoIterator<Item = usize>,
    allowed: &[usize],
    sizes: Sizes,
    context: &str,
    line: usize,
) -> Result<(), ProtocolError> {
    for q in qubits {
        if !allowed.contains(&q) {
            return invalid(format!(
                "{context}: line {line} touches {}, which this party cannot reach",
                sizes.label(q)
            ));
        }
    }
    Ok(())
}

/// A section that may only contain unconditioned gates.
pub(crate) fn gates_only(
    section: &Section,
    allowed: &[usize],
    sizes: Sizes,
    context: &str,
) -> Result<Vec<GateOp>, ProtocolError> {
    section
        .statements
        .iter()
        .map(|s| match s {
            Statement::Gate {
                op,
                condition: None,
                line,
            } => {
                check_allowed(op.qubits(), allowed, sizes, context, *line)?;
                Ok(op.clone())
            }
            other => invalid(format!(
                "{context}: line {} is not a plain gate",
                other.line()
            )),
        })
        .collect()
}

/// Converts a round section, tracking which party produced each result name.
pub(crate) fn build_round(
    section: &Section,
    actor: Actor,
    allowed: &[usize],
    sizes: Sizes,
    measured: &mut BTreeMap<String, (Actor, usize)>,
    context: &str,
) -> Result<Round, ProtocolError> {
    let mut instructions = Vec::with_capacity(section.statements.len());
    for stmt in &section.statements {
        match stmt {
            Statement::Gate {
                op,
                condition,
                line,
            } => {
                check_allowed(op.qubits(), allowed, sizes, context, *line)?;
                match condition {
                    None => instructions.push(Instruction::Gate(op.clone())),
                    Some(control) => {
                        match measured.get(&control.id) {
                            None => return invalid(format!("{context}: line {line} uses result '{}' before it is measured", control.id)),
                            Some((owner, _)) if *owner != actor => {
                                return invalid(format!(
                                    "{context}: line {line} uses result '{}', which belongs to {owner}",
                                    control.id
                                ))
                            }
                            Some((_, width)) if control.bit >= *width => {
                                return invalid(format!("{context}: line {line} reads bit {} of the {width}-bit result '{}'", control.bit, control.id))
                            }
                            _ => {}
                        }
                        instructions.push(Instruction::Conditional {
                            gate: op.clone(),
                            control: control.clone(),
                        });
                    }
                }
            }
            Statement::Measure { qubits, id, line } => {
                check_allowed(qubits.iter().copied(), allowed, sizes, context, *line)?;
                if measured.contains_key(id) {
                    return invalid(format!("{context}: line {line} reuses result name '{id}'"));
                }
                measured.insert(id.clone(), (actor, qubits.len()));
                instructions.push(Instruction::Measure(MeasureOp {
                    qubits: qubits.clone(),
                    id: id.clone(),
                }));
            }
            other => {
                return invalid(format!(
                    "{context}: line {} is a measurement rule, not an instruction",
                    other.line()
                ))
            }
        }
    }
    Ok(Round {
        actor,
        instructions,
    })
}

/// Matrix of a gate sequence restricted to `qubits` (ascending).
pub(crate) fn gate_unitary(gates: &[GateOp], qubits: &[usize]) -> Result<CMatrix, ProtocolError> {
    if qubits.len() > MAX_SIDE_QUBITS {
        return Err(StateError::SideTooLarge(qubits.len()).into());
    }
    let k = qubits.len();
    let dim = 1usize << k;
    let local: Vec<GateOp> = gates
        .iter()
        .map(|g| {
            g.remapped(|q| {
                qubits
                    .iter()
                    .position(|&x| x == q)
                    .expect("gate qubits are in the set")
            })
        })
        .collect();
    let mut u = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut s = PureState::basis(k, col)?;
        for g in &local {
            s = apply_gate(&s, g)?;
        }
        for (r, a) in s.amplitudes().iter().enumerate() {
            u[(r, col)] = *a;
        }
    }
    Ok(u)
}

/// Gate list followed by a final `expect` or `projector` line: the projector
/// `U† Π U` on the union of the qubits involved.
pub(crate) fn build_projector(
    statements: &[Statement],
    allowed: &[usize],
    sizes: Sizes,
    context: &str,
) -> Result<Projector, ProtocolError> {
    let Some((last, body)) = statements.split_last() else {
        return invalid(format!(
            "{context}: missing an 'expect' or 'projector' line"
        ));
    };
    let gates = gates_only(
        &Section {
            kind: SectionKind::PrepareBob,
            repeat: false,
            line: 0,
            statements: body.to_vec(),
        },
        allowed,
        sizes,
        context,
    )?;
    let (rule_qubits, rule) = match last {
        Statement::Expect {
            qubits, patterns, ..
        } => {
            let dim = 1usize << qubits.len();
            let mut m = CMatrix::zeros(dim, dim);
            for &p in patterns {
                m[(p, p)] = C64::new(1.0, 0.0);
            }
            (qubits.clone(), m)
        }
        Statement::Projector { qubits, matrix, .. } => (qubits.clone(), matrix.clone()),
        other => {
            return invalid(format!(
                "{context}: line {} must be an 'expect' or 'projector' line",
                other.line()
            ))
        }
    };
    check_allowed(
        rule_qubits.iter().copied(),
        allowed,
        sizes,
        context,
        last.line(),
    )?;
    let rule = Projector::new(rule_qubits.clone(), rule, PROJECTOR_TOL)
        .map_err(|e| ProtocolError::Validation(format!("{context}: line {}: {e}", last.line())))?;

    let mut support: Vec<usize> = rule_qubits;
    for g in &gates {
        support.extend(g.qubits());
    }
    support.sort_unstable();
    support.dedup();
    let u = gate_unitary(&gates, &support)?;
    let pi = rule.embed(&support)?;
    let m = u.adjoint() * pi.matrix() * &u;
    let m = (&m + m.adjoint()).scale(0.5);
    Ok(Projector::new(support, m, PROJECTOR_TOL)?)
}
