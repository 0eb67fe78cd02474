use std::f64::consts::FRAC_1_SQRT_2;

use super::{
    apply_matrix_raw, check_qubits, is_unitary, CMatrix, PureState, StateError, C64, UNITARY_TOL,
};

/// Largest target count accepted for an explicit matrix gate.
pub const MAX_RAW_TARGETS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Ry(f64),
    Rz(f64),
    Cx,
    Cz,
    Swap,
    Raw(CMatrix),
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::T => "t",
            GateKind::Ry(_) => "ry",
            GateKind::Rz(_) => "rz",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Raw(_) => "raw",
        }
    }

    /// Number of targets, or `None` for `Raw` (read from the matrix).
    pub fn arity(&self) -> Option<usize> {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Swap => Some(2),
            GateKind::Raw(_) => None,
            _ => Some(1),
        }
    }

    pub fn matrix(&self) -> CMatrix {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            GateKind::H => {
                let h = C64::new(FRAC_1_SQRT_2, 0.0);
                CMatrix::from_row_slice(2, 2, &[h, h, h, -h])
            }
            GateKind::X => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            GateKind::Y => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            GateKind::Z => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
            GateKind::S => CMatrix::from_row_slice(2, 2, &[o, z, z, i]),
            GateKind::T => CMatrix::from_row_slice(
                2,
                2,
                &[o, z, z, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)],
            ),
            GateKind::Ry(theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                CMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        C64::new(c, 0.0),
                        C64::new(-s, 0.0),
                        C64::new(s, 0.0),
                        C64::new(c, 0.0),
                    ],
                )
            }
            GateKind::Rz(theta) => CMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::from_polar(1.0, -theta / 2.0),
                    z,
                    z,
                    C64::from_polar(1.0, theta / 2.0),
                ],
            ),
            GateKind::Cx => {
                CMatrix::from_row_slice(4, 4, &[o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z])
            }
            GateKind::Cz => CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![o, o, o, -o])),
            GateKind::Swap => {
                CMatrix::from_row_slice(4, 4, &[o, z, z, z, z, z, o, z, z, o, z, z, z, z, z, o])
            }
            GateKind::Raw(m) => m.clone(),
        }
    }
}

/// A gate on ordered `targets`, optionally conditioned on quantum `controls`
/// all being 1. Controls are introduced by the purification pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    kind: GateKind,
    targets: Vec<usize>,
    controls: Vec<usize>,
}

impl GateOp {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Result<Self, StateError> {
        match kind.arity() {
            Some(expected) if expected != targets.len() => {
                return Err(StateError::Arity {
                    name: kind.name(),
                    expected,
                    got: targets.len(),
                })
            }
            None => {
                let GateKind::Raw(ref m) = kind else {
                    unreachable!()
                };
                if targets.is_empty() || targets.len() > MAX_RAW_TARGETS {
                    return Err(StateError::Arity {
                        name: "raw",
                        expected: MAX_RAW_TARGETS,
                        got: targets.len(),
                    });
                }
                let dim = 1usize << targets.len();
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(StateError::MatrixShape {
                        qubits: targets.len(),
                        got: m.nrows(),
                    });
                }
                if let Err(dev) = is_unitary(m, UNITARY_TOL) {
                    return Err(StateError::NotUnitary(dev));
                }
            }
            _ => {}
        }
        for (i, q) in targets.iter().enumerate() {
            if targets[..i].contains(q) {
                return Err(StateError::DuplicateQubit(*q));
            }
        }
        Ok(Self {
            kind,
            targets,
            controls: Vec::new(),
        })
    }

    /// Adds a quantum control qubit.
    pub fn controlled_by(mut self, control: usize) -> Result<Self, StateError> {
        if self.targets.contains(&control) || self.controls.contains(&control) {
            return Err(StateError::DuplicateQubit(control));
        }
        self.controls.push(control);
        Ok(self)
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn controls(&self) -> &[usize] {
        &self.controls
    }

    /// Every qubit the gate reads or writes.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().chain(&self.controls).copied()
    }

    /// Same gate with every qubit index passed through `f`.
    pub fn remapped(&self, f: impl Fn(usize) -> usize) -> GateOp {
        GateOp {
            kind: self.kind.clone(),
            targets: self.targets.iter().map(|&q| f(q)).collect(),
            controls: self.controls.iter().map(|&q| f(q)).collect(),
        }
    }
}

/// `(U_gate ⊗ I_rest)|state⟩`.
pub fn apply_gate(state: &PureState, gate: &GateOp) -> Result<PureState, StateError> {
    let n = state.num_qubits();
    let all: Vec<usize> = gate.qubits().collect();
    check_qubits(&all, n)?;
    let amps = apply_matrix_raw(
        state.amplitudes(),
        n,
        gate.targets(),
        gate.controls(),
        &gate.kind().matrix(),
    );
    Ok(PureState::from_raw_unchecked(n, amps))
}
