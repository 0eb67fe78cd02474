use serde::{Deserialize, Serialize};

use crate::fidelity::fidelity_trace;
use crate::qcore::{apply_gate, partial_trace, PureState, StateError};

use super::{Actor, Instruction, Protocol, ProtocolError, Round};

/// Applies unitary rounds in order.
pub fn run_rounds<'a>(
    mut state: PureState,
    rounds: impl IntoIterator<Item = &'a Round>,
) -> Result<PureState, ProtocolError> {
    for round in rounds {
        for instr in &round.instructions {
            let Instruction::Gate(g) = instr else {
                return Err(ProtocolError::NotPurified);
            };
            state = apply_gate(&state, g)?;
        }
    }
    Ok(state)
}

/// `|0…0⟩` on the whole register followed by both parties' preparations.
pub fn initial_state(p: &Protocol, bit: u8) -> Result<PureState, ProtocolError> {
    let mut s = PureState::zero(p.num_qubits())?;
    for g in p.initial_alice[bit as usize & 1]
        .iter()
        .chain(&p.initial_bob)
    {
        s = apply_gate(&s, g)?;
    }
    Ok(s)
}

/// Joint state after the honest commit phase for bit `bit`.
pub fn run_commit(p: &Protocol, bit: u8) -> Result<PureState, ProtocolError> {
    if !p.is_purified() {
        return Err(ProtocolError::NotPurified);
    }
    run_rounds(initial_state(p, bit)?, &p.commit_rounds)
}

/// Runs the open phase on `committed` and returns the probability that Bob
/// accepts the claim `claimed`.
pub fn run_open(p: &Protocol, committed: &PureState, claimed: u8) -> Result<f64, ProtocolError> {
    if !p.is_purified() {
        return Err(ProtocolError::NotPurified);
    }
    let opened = run_rounds(committed.clone(), &p.open_rounds)?;
    Ok(p.verification[claimed as usize & 1].expectation(&opened)?)
}

/// Acceptance probability of an honest run committing and opening `bit`.
pub fn honest_accept(p: &Protocol, bit: u8) -> Result<f64, ProtocolError> {
    run_open(p, &run_commit(p, bit)?, bit)
}

/// Holder of the channel between the phases: the receiver of the last
/// commit round.
pub fn default_custody(p: &Protocol) -> Actor {
    p.commit_rounds
        .last()
        .map_or(Actor::Bob, |r| r.actor.other())
}

/// Qubits `actor` holds between the phases (own qubits, own ancillas, and
/// the channel if in custody), ascending.
pub fn holdings(p: &Protocol, actor: Actor, custody: Actor) -> Vec<usize> {
    let own = match actor {
        Actor::Alice => &p.partition.alice,
        Actor::Bob => &p.partition.bob,
    };
    let mut out = own.clone();
    if custody == actor {
        out.extend(&p.partition.channel);
    }
    out.sort_unstable();
    out
}

/// How well Bob can tell the two commitments apart before opening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommitDelta {
    /// `F(ρ₀^B, ρ₁^B)` of Bob's reduced states after the commit phase.
    pub fidelity: f64,
    /// `1 − F`.
    pub delta: f64,
}

pub fn commit_delta(p: &Protocol, custody: Actor) -> Result<CommitDelta, ProtocolError> {
    let bob = holdings(p, Actor::Bob, custody);
    if bob.is_empty() {
        return Err(ProtocolError::Validation(
            "Bob holds no qubits after the commit phase".into(),
        ));
    }
    let r0 = partial_trace(&run_commit(p, 0)?, &bob)?;
    let r1 = partial_trace(&run_commit(p, 1)?, &bob)?;
    let fidelity = fidelity_trace(&r0, &r1).map_err(|e| match e {
        crate::fidelity::FidelityError::State(s) => ProtocolError::State(s),
        other => ProtocolError::Validation(other.to_string()),
    })?;
    Ok(CommitDelta {
        fidelity,
        delta: 1.0 - fidelity,
    })
}

/// Probability of a measurement record together with Bob's verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchWeight {
    /// Result bits in ancilla order.
    pub record: Vec<u8>,
    pub accept: bool,
    pub probability: f64,
}

/// Joint distribution of the measurement record and acceptance for an
/// honest run committing `bit` and claiming `claimed`, read off the
/// purified final state as `‖(P ⊗ |r⟩⟨r|)ψ‖²`.
pub fn outcome_distribution(
    p: &Protocol,
    bit: u8,
    claimed: u8,
) -> Result<Vec<BranchWeight>, ProtocolError> {
    if !p.is_purified() {
        return Err(ProtocolError::NotPurified);
    }
    let finished = run_rounds(run_commit(p, bit)?, &p.open_rounds)?;
    let projector = &p.verification[claimed as usize & 1];
    if p.ancillas
        .iter()
        .any(|a| projector.qubits().contains(&a.qubit))
    {
        return Err(
            StateError::Partition("verification acts on a measurement record".into()).into(),
        );
    }
    let accepted = projector.apply(&finished)?;
    let n = p.num_qubits();
    let k = p.ancillas.len();
    let mut total = vec![0.0; 1 << k];
    let mut pass = vec![0.0; 1 << k];
    for (idx, (amp, acc)) in finished.amplitudes().iter().zip(&accepted).enumerate() {
        let r = p
            .ancillas
            .iter()
            .fold(0, |r, a| (r << 1) | ((idx >> (n - 1 - a.qubit)) & 1));
        total[r] += amp.norm_sqr();
        pass[r] += acc.norm_sqr();
    }
    let mut out = Vec::with_capacity(2 << k);
    for r in 0..1usize << k {
        let record: Vec<u8> = (0..k).map(|i| ((r >> (k - 1 - i)) & 1) as u8).collect();
        out.push(BranchWeight {
            record: record.clone(),
            accept: true,
            probability: pass[r],
        });
        out.push(BranchWeight {
            record,
            accept: false,
            probability: (total[r] - pass[r]).max(0.0),
        });
    }
    Ok(out)
}
