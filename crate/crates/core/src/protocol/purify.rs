use std::collections::BTreeMap;

use crate::qcore::{GateKind, GateOp, Partition, MAX_QUBITS};

use super::{Ancilla, Instruction, Protocol, ProtocolError, ResultBit, Round};

/// Replaces measurements by CNOTs onto fresh ancillas and classical controls
/// by quantum controls on those ancillas. Rounds are processed in order.
pub(crate) fn purify_rounds<'a>(
    rounds: impl IntoIterator<Item = &'a mut Round>,
    partition: &mut Partition,
    ancillas: &mut Vec<Ancilla>,
) -> Result<(), ProtocolError> {
    let mut records: BTreeMap<ResultBit, usize> = ancillas
        .iter()
        .map(|a| (a.source.clone(), a.qubit))
        .collect();
    for round in rounds {
        let mut out = Vec::with_capacity(round.instructions.len());
        for instr in round.instructions.drain(..) {
            match instr {
                Instruction::Gate(g) => out.push(Instruction::Gate(g)),
                Instruction::Measure(m) => {
                    for (bit, &target) in m.qubits.iter().enumerate() {
                        let qubit = partition.num_qubits();
                        if qubit >= MAX_QUBITS {
                            return Err(ProtocolError::Validation(format!(
                                "purification needs more than {MAX_QUBITS} qubits"
                            )));
                        }
                        match round.actor {
                            super::Actor::Alice => partition.alice.push(qubit),
                            super::Actor::Bob => partition.bob.push(qubit),
                        }
                        let source = ResultBit {
                            id: m.id.clone(),
                            bit,
                        };
                        records.insert(source.clone(), qubit);
                        ancillas.push(Ancilla {
                            qubit,
                            owner: round.actor,
                            source,
                        });
                        out.push(Instruction::Gate(GateOp::new(
                            GateKind::Cx,
                            vec![target, qubit],
                        )?));
                    }
                }
                Instruction::Conditional { gate, control } => {
                    let Some(&qubit) = records.get(&control) else {
                        return Err(ProtocolError::Validation(format!(
                            "result {control} is never measured"
                        )));
                    };
                    out.push(Instruction::Gate(gate.controlled_by(qubit)?));
                }
            }
        }
        round.instructions = out;
    }
    Ok(())
}

/// Coherent version of `p`: every round becomes unitary on the enlarged
/// register. Already-purified protocols come back unchanged.
pub fn purify_protocol(p: &Protocol) -> Result<Protocol, ProtocolError> {
    let mut out = p.clone();
    let Protocol {
        commit_rounds,
        open_rounds,
        partition,
        ancillas,
        ..
    } = &mut out;
    purify_rounds(
        commit_rounds.iter_mut().chain(open_rounds.iter_mut()),
        partition,
        ancillas,
    )?;
    Ok(out)
}
