//! Strong coin tossing: last-round analysis, truncation and the induction
//! down to a protocol without communication.
//!
//! After the last round the sender's outcome is already fixed. If the
//! protocol is ideal, the receiver's states conditioned on the sender's
//! outcomes (on the qubits the receiver holds, before the final message
//! arrives) are mutually orthogonal, so the receiver can read the outcome
//! without that message. Truncating the round replaces the receiver's rule
//! by support projectors and pulls the sender's rule back through the
//! sender's last unitary. Repeating this reaches zero rounds.

pub mod walk;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fidelity::fidelity_trace;
use crate::protocol::{
    build_projector, build_round, describe_kind, gate_unitary, gates_only, parse_document,
    purify_rounds, run_rounds, Actor, Ancilla, Document, Instruction, OutcomeLabel, ProtocolError,
    Round, SectionKind, Sizes, Statement, PROJECTOR_TOL,
};
use crate::qcore::{
    apply_gate, mutual_information, partial_trace, support_projector, CMatrix, DensityMatrix,
    GateOp, Partition, Projector, PureState, StateError, C64,
};

pub use walk::{
    min_rounds, parse_epsilon, validate_walk, EpsilonError, ViolationKind, WalkViolation,
};

/// Outcomes with probability at or below this are treated as absent.
pub const OUTCOME_CUTOFF: f64 = 1e-12;
/// Fidelities at or below this count as orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;
/// Allowed change in the honest outcome distribution per truncation.
pub const DISTRIBUTION_TOL: f64 = 1e-8;
/// Initial mutual information at or below this counts as a product state.
pub const PRODUCT_TOL: f64 = 1e-9;
/// Eigenvalues above this span the support of a conditioned state.
pub const SUPPORT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoinError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("protocol has no rounds left to truncate")]
    NoRounds,
    #[error("round {round} is not ideal: {triple}")]
    NotIdeal {
        round: usize,
        triple: FidelityTriple,
    },
}

impl From<StateError> for CoinError {
    fn from(e: StateError) -> Self {
        CoinError::Protocol(ProtocolError::State(e))
    }
}

fn invalid<T>(message: impl Into<String>) -> Result<T, CoinError> {
    Err(CoinError::Protocol(ProtocolError::Validation(
        message.into(),
    )))
}

/// State a party's register is declared to be in when its outcome is invalid.
#[derive(Debug, Clone, PartialEq)]
pub enum InvalidReference {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl InvalidReference {
    fn density(&self) -> DensityMatrix {
        match self {
            InvalidReference::Pure(s) => DensityMatrix::from_pure(s),
            InvalidReference::Mixed(m) => m.clone(),
        }
    }
}

/// Projectors for outcomes 0, 1 and invalid on a common set of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRules {
    projectors: [Projector; 3],
}

impl OutcomeRules {
    pub fn qubits(&self) -> &[usize] {
        self.projectors[0].qubits()
    }

    pub fn get(&self, label: OutcomeLabel) -> &Projector {
        &self.projectors[label_index(label)]
    }

    pub fn projectors(&self) -> &[Projector; 3] {
        &self.projectors
    }

    /// Builds rules from projectors on possibly different qubit sets; the
    /// invalid projector defaults to `I − P₀ − P₁`.
    fn from_parts(
        zero: Projector,
        one: Projector,
        inv: Option<Projector>,
        context: &str,
    ) -> Result<Self, CoinError> {
        let mut q: Vec<usize> = zero.qubits().iter().chain(one.qubits()).copied().collect();
        if let Some(p) = &inv {
            q.extend(p.qubits());
        }
        q.sort_unstable();
        q.dedup();
        let (zero, one) = (zero.embed(&q)?, one.embed(&q)?);
        let dim = 1usize << q.len();
        let rest = CMatrix::identity(dim, dim) - zero.matrix() - one.matrix();
        let inv = match inv {
            None => Projector::new(q.clone(), rest, PROJECTOR_TOL).map_err(|_| {
                ProtocolError::Validation(format!("{context}: outcome 0 and 1 projectors overlap"))
            })?,
            Some(p) => {
                let p = p.embed(&q)?;
                let dev = (rest - p.matrix())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                if dev > PROJECTOR_TOL {
                    return invalid(format!(
                        "{context}: outcome projectors do not sum to the identity ({dev:.3e})"
                    ));
                }
                p
            }
        };
        Ok(Self {
            projectors: [zero, one, inv],
        })
    }
}

fn label_index(label: OutcomeLabel) -> usize {
    match label {
        OutcomeLabel::Zero => 0,
        OutcomeLabel::One => 1,
        OutcomeLabel::Invalid => 2,
    }
}

fn actor_index(a: Actor) -> usize {
    match a {
        Actor::Alice => 0,
        Actor::Bob => 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoinProtocol {
    pub name: String,
    pub sizes: Sizes,
    pub partition: Partition,
    pub initial_alice: Vec<GateOp>,
    pub initial_bob: Vec<GateOp>,
    pub rounds: Vec<Round>,
    /// Outcome rules for Alice and Bob.
    pub rules: [OutcomeRules; 2],
    /// Declared invalid-outcome states for Alice and Bob.
    pub references: [Option<InvalidReference>; 2],
    pub ancillas: Vec<Ancilla>,
}

/// Parses and validates a coin-tossing document.
pub fn parse_coin_protocol(
    source: &str,
    overrides: &BTreeMap<String, f64>,
) -> Result<CoinProtocol, CoinError> {
    CoinProtocol::from_document(&parse_document(source, overrides)?)
}

impl CoinProtocol {
    pub fn num_qubits(&self) -> usize {
        self.partition.num_qubits()
    }

    pub fn rules_for(&self, a: Actor) -> &OutcomeRules {
        &self.rules[actor_index(a)]
    }

    pub fn is_purified(&self) -> bool {
        self.rounds.iter().all(Round::is_unitary)
    }

    pub fn from_document(doc: &Document) -> Result<Self, CoinError> {
        let sizes = doc.sizes;
        let partition = Partition::contiguous(sizes.alice, sizes.bob, sizes.channel);
        let own = |a: Actor| match a {
            Actor::Alice => partition.alice.clone(),
            Actor::Bob => partition.bob.clone(),
        };
        let reach = |a: Actor| -> Vec<usize> {
            own(a)
                .into_iter()
                .chain(partition.channel.iter().copied())
                .collect()
        };

        let mut prep: [Option<Vec<GateOp>>; 2] = [None, None];
        let mut rounds: Vec<Round> = Vec::new();
        let mut outcomes: [[Option<Projector>; 3]; 2] = Default::default();
        let mut references: [Option<InvalidReference>; 2] = [None, None];
        let mut measured = BTreeMap::new();
        let mut phase = 0;

        for section in &doc.sections {
            let label = describe_kind(&section.kind);
            let order = match section.kind {
                SectionKind::PrepareAlice(None) | SectionKind::PrepareBob => 0,
                SectionKind::Round(_) => 1,
                SectionKind::Outcome(..) | SectionKind::Invalid(_) => 2,
                _ => {
                    return invalid(format!(
                        "line {}: section {label} does not belong in a coin-tossing protocol",
                        section.line
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
                SectionKind::PrepareAlice(_) | SectionKind::PrepareBob => {
                    let (slot, allowed) = if matches!(section.kind, SectionKind::PrepareBob) {
                        (1, reach(Actor::Bob))
                    } else {
                        (0, own(Actor::Alice))
                    };
                    if prep[slot].is_some() {
                        return invalid(format!("{context}: duplicate section"));
                    }
                    prep[slot] = Some(gates_only(section, &allowed, sizes, &context)?);
                }
                SectionKind::Round(actor) => {
                    let context = format!(
                        "round {} (line {}) ({actor})",
                        rounds.len() + 1,
                        section.line
                    );
                    if rounds.last().is_some_and(|r| r.actor == *actor) {
                        return invalid(format!(
                            "{context}: rounds must alternate between the parties"
                        ));
                    }
                    rounds.push(build_round(
                        section,
                        *actor,
                        &reach(*actor),
                        sizes,
                        &mut measured,
                        &context,
                    )?);
                }
                SectionKind::Outcome(actor, l) => {
                    let slot = &mut outcomes[actor_index(*actor)][label_index(*l)];
                    if slot.is_some() {
                        return invalid(format!("{context}: duplicate section"));
                    }
                    *slot = Some(build_projector(
                        &section.statements,
                        &own(*actor),
                        sizes,
                        &context,
                    )?);
                }
                SectionKind::Invalid(actor) => {
                    let slot = &mut references[actor_index(*actor)];
                    if slot.is_some() {
                        return invalid(format!("{context}: duplicate section"));
                    }
                    *slot = Some(build_reference(
                        &section.statements,
                        &own(*actor),
                        sizes,
                        &context,
                    )?);
                }
                _ => unreachable!("filtered above"),
            }
        }

        let mut rules = Vec::with_capacity(2);
        for (actor, [zero, one, inv]) in [Actor::Alice, Actor::Bob].into_iter().zip(outcomes) {
            let (Some(zero), Some(one)) = (zero, one) else {
                return invalid(format!(
                    "both [outcome {actor} 0] and [outcome {actor} 1] are required"
                ));
            };
            rules.push(OutcomeRules::from_parts(
                zero,
                one,
                inv,
                &format!("outcomes of {actor}"),
            )?);
        }
        let [alice_rules, bob_rules]: [OutcomeRules; 2] = rules.try_into().expect("two parties");
        let [prep_alice, prep_bob] = prep;
        Ok(CoinProtocol {
            name: doc.name.clone(),
            sizes,
            partition: partition.clone(),
            initial_alice: prep_alice.unwrap_or_default(),
            initial_bob: prep_bob.unwrap_or_default(),
            rounds,
            rules: [alice_rules, bob_rules],
            references,
            ancillas: Vec::new(),
        })
    }

    /// Coherent version with measurements moved onto ancillas.
    pub fn purified(&self) -> Result<CoinProtocol, CoinError> {
        let mut out = self.clone();
        purify_rounds(out.rounds.iter_mut(), &mut out.partition, &mut out.ancillas)?;
        Ok(out)
    }

    /// Qubits `actor` holds apart from the channel: own qubits and ancillas, ascending.
    pub fn holding(&self, actor: Actor) -> Vec<usize> {
        let mut q = match actor {
            Actor::Alice => self.partition.alice.clone(),
            Actor::Bob => self.partition.bob.clone(),
        };
        q.sort_unstable();
        q
    }

    /// `|0…0⟩` followed by both preparations.
    pub fn initial_state(&self) -> Result<PureState, CoinError> {
        let mut s = PureState::zero(self.num_qubits())?;
        for g in self.initial_alice.iter().chain(&self.initial_bob) {
            s = apply_gate(&s, g)?;
        }
        Ok(s)
    }

    /// State after every round of an honest run.
    pub fn final_state(&self) -> Result<PureState, CoinError> {
        Ok(run_rounds(self.initial_state()?, &self.rounds)?)
    }

    /// `P[i][j]`: probability that Alice reports `i` and Bob reports `j`,
    /// with labels ordered 0, 1, invalid.
    pub fn outcome_distribution(&self) -> Result<[[f64; 3]; 3], CoinError> {
        let psi = self.final_state()?;
        let mut out = [[0.0; 3]; 3];
        for (i, pa) in self.rules[0].projectors.iter().enumerate() {
            let alice = PureState::from_raw_unchecked(psi.num_qubits(), pa.apply(&psi)?);
            for (j, pb) in self.rules[1].projectors.iter().enumerate() {
                out[i][j] = pb.expectation(&alice)?;
            }
        }
        Ok(out)
    }

    /// The receiver's reference state for the invalid outcome, widened by
    /// `|0⟩` on the receiver's ancillas.
    fn reference_on_holding(&self, actor: Actor) -> Result<Option<DensityMatrix>, CoinError> {
        let Some(r) = &self.references[actor_index(actor)] else {
            return Ok(None);
        };
        let declared = r.density();
        let extra = self.holding(actor).len() - declared.num_qubits();
        if extra == 0 {
            return Ok(Some(declared));
        }
        let zeros = DensityMatrix::from_pure(&PureState::zero(extra)?);
        Ok(Some(DensityMatrix::new(
            declared.matrix().kronecker(zeros.matrix()),
        )?))
    }
}

/// Receiver-side fidelities between states conditioned on the sender's outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityTriple {
    pub round: usize,
    pub sender: Actor,
    pub f01: Option<f64>,
    pub f0inv: Option<f64>,
    pub f1inv: Option<f64>,
    /// Sender's outcome probabilities (0, 1, invalid).
    pub probabilities: [f64; 3],
    /// Where the invalid-side state came from.
    pub invalid_source: InvalidSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidSource {
    Conditioned,
    Reference,
    Absent,
}

impl FidelityTriple {
    /// The largest present fidelity with its pair label.
    pub fn worst(&self) -> Option<(&'static str, f64)> {
        [
            ("0/1", self.f01),
            ("0/invalid", self.f0inv),
            ("1/invalid", self.f1inv),
        ]
        .into_iter()
        .filter_map(|(n, f)| f.map(|f| (n, f)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn is_ideal(&self) -> bool {
        self.worst().is_none_or(|(_, f)| f <= ORTHOGONALITY_TOL)
    }
}

impl std::fmt::Display for FidelityTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3e}"));
        write!(
            f,
            "receiver fidelities F(0,1) = {}, F(0,inv) = {}, F(1,inv) = {}",
            show(self.f01),
            show(self.f0inv),
            show(self.f1inv)
        )
    }
}

struct LastRound {
    triple: FidelityTriple,
    conditioned: [Option<DensityMatrix>; 3],
}

fn analyse_last_round(cp: &CoinProtocol) -> Result<LastRound, CoinError> {
    let Some(last) = cp.rounds.last() else {
        return Err(CoinError::NoRounds);
    };
    let sender = last.actor;
    let receiver = sender.other();
    let psi = cp.final_state()?;
    let holding = cp.holding(receiver);
    if holding.is_empty() {
        return invalid(format!("{receiver} holds no qubits"));
    }
    let mut probabilities = [0.0; 3];
    let mut conditioned: [Option<DensityMatrix>; 3] = [None, None, None];
    for (o, proj) in cp.rules_for(sender).projectors.iter().enumerate() {
        let (p, post) = proj.condition(&psi, OUTCOME_CUTOFF)?;
        probabilities[o] = p;
        if let Some(post) = post {
            conditioned[o] = Some(partial_trace(&post, &holding)?);
        }
    }
    let (inv_state, invalid_source) = match &conditioned[2] {
        Some(s) => (Some(s.clone()), InvalidSource::Conditioned),
        None => match cp.reference_on_holding(receiver)? {
            Some(r) => (Some(r), InvalidSource::Reference),
            None => (None, InvalidSource::Absent),
        },
    };
    let fid =
        |a: &Option<DensityMatrix>, b: &Option<DensityMatrix>| -> Result<Option<f64>, CoinError> {
            match (a, b) {
                (Some(a), Some(b)) => Ok(Some(
                    fidelity_trace(a, b).map_err(|e| ProtocolError::Validation(e.to_string()))?,
                )),
                _ => Ok(None),
            }
        };
    let triple = FidelityTriple {
        round: cp.rounds.len(),
        sender,
        f01: fid(&conditioned[0], &conditioned[1])?,
        f0inv: fid(&conditioned[0], &inv_state)?,
        f1inv: fid(&conditioned[1], &inv_state)?,
        probabilities,
        invalid_source,
    };
    Ok(LastRound {
        triple,
        conditioned,
    })
}

/// Fidelities of the receiver's conditioned states at the last round.
pub fn last_round_fidelities(cp: &CoinProtocol) -> Result<FidelityTriple, CoinError> {
    Ok(analyse_last_round(&cp.purified()?)?.triple)
}

/// Removes the last round of an ideal protocol, preserving every party's
/// outcome. Fails with [`CoinError::NotIdeal`] when the receiver cannot yet
/// tell the sender's outcomes apart.
pub fn truncate_last_round(cp: &CoinProtocol) -> Result<CoinProtocol, CoinError> {
    let cp = cp.purified()?;
    let LastRound {
        triple,
        conditioned,
    } = analyse_last_round(&cp)?;
    if !triple.is_ideal() {
        return Err(CoinError::NotIdeal {
            round: triple.round,
            triple,
        });
    }
    let sender = triple.sender;
    let receiver = sender.other();

    let holding = cp.holding(receiver);
    let dim = 1usize << holding.len();
    let support = |s: &Option<DensityMatrix>| match s {
        Some(s) => support_projector(s.matrix(), SUPPORT_TOL),
        None => CMatrix::zeros(dim, dim),
    };
    let p0 = Projector::new(holding.clone(), support(&conditioned[0]), PROJECTOR_TOL)?;
    let p1 = Projector::new(holding.clone(), support(&conditioned[1]), PROJECTOR_TOL)?;
    let receiver_rules =
        OutcomeRules::from_parts(p0, p1, None, &format!("truncated rules of {receiver}"))?;

    let mut out = cp.clone();
    let last = out.rounds.pop().expect("analysed a round");
    let gates: Vec<GateOp> = last
        .instructions
        .iter()
        .map(|i| match i {
            Instruction::Gate(g) => g.clone(),
            _ => unreachable!("purified"),
        })
        .collect();
    let old = cp.rules_for(sender);
    let mut support_qubits: Vec<usize> = old.qubits().to_vec();
    for g in &gates {
        support_qubits.extend(g.qubits());
    }
    support_qubits.sort_unstable();
    support_qubits.dedup();
    let u = gate_unitary(&gates, &support_qubits)?;
    let pulled: Vec<Projector> = old
        .projectors
        .iter()
        .map(|p| {
            let m = u.adjoint() * p.embed(&support_qubits)?.matrix() * &u;
            Projector::new(
                support_qubits.clone(),
                (&m + m.adjoint()).scale(0.5),
                PROJECTOR_TOL,
            )
        })
        .collect::<Result<_, _>>()?;
    let [z, o, i]: [Projector; 3] = pulled.try_into().expect("three outcomes");
    out.rules[actor_index(sender)] = OutcomeRules {
        projectors: [z, o, i],
    };
    out.rules[actor_index(receiver)] = receiver_rules;
    Ok(out)
}

/// Why the induction stopped before reaching zero rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NotIdealReason {
    /// Two of the receiver's conditioned states overlap.
    DistinguishableLastRound { pair: String, fidelity: f64 },
    /// Truncation changed the honest outcome distribution.
    OutcomeDrift { shift: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// Every round truncated, the initial state is a product across the
    /// parties, and yet the preserved outcome distribution is correlated.
    Contradiction {
        mutual_information: f64,
        correlation: f64,
        distribution: [[f64; 3]; 3],
    },
    /// Every round truncated and the outcomes are independent: the coin is
    /// not a shared coin to begin with.
    Uncorrelated {
        mutual_information: f64,
        correlation: f64,
    },
    /// Every round truncated but the parties start entangled.
    EntangledStart { mutual_information: f64 },
    NotIdeal {
        round: usize,
        reason: NotIdealReason,
    },
}

impl Verdict {
    pub fn summary(&self) -> String {
        match self {
            Verdict::Contradiction { mutual_information, .. } => format!(
                "contradiction: mutual information 0 at N=0 (computed {mutual_information:.1e}) yet outcomes are correlated"
            ),
            Verdict::Uncorrelated { .. } => "no contradiction: outcomes are uncorrelated".to_string(),
            Verdict::EntangledStart { mutual_information } => {
                format!("no contradiction: parties start with mutual information {mutual_information:.6}")
            }
            Verdict::NotIdeal { round, reason: NotIdealReason::DistinguishableLastRound { pair, fidelity } } => {
                format!("not ideal at round {round}: outcome pair {pair} has receiver fidelity {fidelity:.6}")
            }
            Verdict::NotIdeal { round, reason: NotIdealReason::OutcomeDrift { shift } } => {
                format!("not ideal at round {round}: truncation shifts the outcome distribution by {shift:.3e}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InductionStep {
    pub triple: FidelityTriple,
    /// Largest change in the 3×3 outcome distribution after truncating;
    /// absent when the round could not be truncated.
    pub distribution_shift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InductionReport {
    pub protocol_name: String,
    pub rounds: usize,
    pub honest_distribution: [[f64; 3]; 3],
    pub steps: Vec<InductionStep>,
    pub verdict: Verdict,
    pub summary: String,
}

fn max_shift(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `max |P(i, j) − P_A(i) P_B(j)|`.
pub fn correlation(dist: &[[f64; 3]; 3]) -> f64 {
    let pa: Vec<f64> = dist.iter().map(|row| row.iter().sum()).collect();
    let pb: Vec<f64> = (0..3)
        .map(|j| dist.iter().map(|row| row[j]).sum())
        .collect();
    (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (dist[i][j] - pa[i] * pb[j]).abs())
        .fold(0.0, f64::max)
}

/// Truncates round after round, checking each step, down to zero rounds.
pub fn induction_report(cp: &CoinProtocol) -> Result<InductionReport, CoinError> {
    let mut current = cp.purified()?;
    let honest = current.outcome_distribution()?;
    let mut steps = Vec::new();
    let finish = |steps, verdict: Verdict| {
        let summary = verdict.summary();
        Ok(InductionReport {
            protocol_name: cp.name.clone(),
            rounds: cp.rounds.len(),
            honest_distribution: honest,
            steps,
            verdict,
            summary,
        })
    };
    while !current.rounds.is_empty() {
        let round = current.rounds.len();
        let truncated = match truncate_last_round(&current) {
            Ok(t) => t,
            Err(CoinError::NotIdeal { round, triple }) => {
                let (pair, fidelity) = triple.worst().expect("a failing triple has a fidelity");
                steps.push(InductionStep {
                    triple,
                    distribution_shift: None,
                });
                let reason = NotIdealReason::DistinguishableLastRound {
                    pair: pair.to_string(),
                    fidelity,
                };
                return finish(steps, Verdict::NotIdeal { round, reason });
            }
            Err(e) => return Err(e),
        };
        let triple = analyse_last_round(&current)?.triple;
        let shift = max_shift(&honest, &truncated.outcome_distribution()?);
        steps.push(InductionStep {
            triple,
            distribution_shift: Some(shift),
        });
        if shift > DISTRIBUTION_TOL {
            return finish(
                steps,
                Verdict::NotIdeal {
                    round,
                    reason: NotIdealReason::OutcomeDrift { shift },
                },
            );
        }
        current = truncated;
    }
    let psi = current.initial_state()?;
    let alice = current.holding(Actor::Alice);
    let mutual_information = if alice.is_empty() || alice.len() == psi.num_qubits() {
        0.0
    } else {
        mutual_information(&psi, &alice)?
    };
    let correlation = correlation(&honest);
    let verdict = if mutual_information > PRODUCT_TOL {
        Verdict::EntangledStart { mutual_information }
    } else if correlation > DISTRIBUTION_TOL {
        Verdict::Contradiction {
            mutual_information,
            correlation,
            distribution: honest,
        }
    } else {
        Verdict::Uncorrelated {
            mutual_information,
            correlation,
        }
    };
    finish(steps, verdict)
}

/// Gate list → pure reference from `|0…0⟩`; `expect`/`projector` rule →
/// normalized projector as a mixed reference. Both live on `qubits`.
fn build_reference(
    statements: &[Statement],
    qubits: &[usize],
    sizes: Sizes,
    context: &str,
) -> Result<InvalidReference, CoinError> {
    let is_rule = matches!(
        statements.last(),
        Some(Statement::Expect { .. } | Statement::Projector { .. })
    );
    if is_rule {
        let p = build_projector(statements, qubits, sizes, context)?.embed(qubits)?;
        let rank = p.rank();
        if rank < 0.5 {
            return invalid(format!("{context}: the reference projector is zero"));
        }
        return Ok(InvalidReference::Mixed(DensityMatrix::new(
            p.matrix().unscale(rank),
        )?));
    }
    let section = crate::protocol::Section {
        kind: SectionKind::PrepareBob,
        repeat: false,
        line: 0,
        statements: statements.to_vec(),
    };
    let gates = gates_only(&section, qubits, sizes, context)?;
    let u = gate_unitary(&gates, qubits)?;
    let amps: Vec<C64> = u.column(0).iter().copied().collect();
    Ok(InvalidReference::Pure(PureState::from_amplitudes(amps)?))
}
