//! Dense state-vector engine.
//!
//! Qubit ordering: qubit 0 is the most significant bit of the amplitude
//! index. A 3-qubit basis state `|q0 q1 q2⟩` lives at index
//! `q0 * 4 + q1 * 2 + q2`. Every module in the crate uses this convention,
//! including the row ordering of reduced density matrices (kept qubits are
//! always taken in ascending index order).

mod entropy;
mod gate;
mod linalg;
pub mod random;
mod state;

pub use entropy::{mutual_information, von_neumann_entropy, StateRef};
pub use gate::{apply_gate, GateKind, GateOp};
pub(crate) use linalg::floor_for;
pub use linalg::{
    adjoint, hermitian_eigen, is_unitary, matrix_sqrt_psd, support_projector, svd, Projector,
};
pub use state::{
    apply_unitary, coefficient_matrix, partial_trace, DensityMatrix, Partition, PureState,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Hard cap on register size (16M amplitudes).
pub const MAX_QUBITS: usize = 24;
/// Cap on each side of a bipartition when a coefficient matrix is materialized.
pub const MAX_SIDE_QUBITS: usize = 12;
/// Entrywise slack for density-matrix invariant checks.
pub const STATE_TOL: f64 = 1e-10;
/// Negative eigenvalues down to this are clamped in PSD square roots.
pub const PSD_SLACK: f64 = 1e-8;
/// Unitarity slack for explicit gate matrices.
pub const UNITARY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("register of {0} qubits is outside 1..={MAX_QUBITS}")]
    RegisterSize(usize),
    #[error("amplitude vector of length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("qubit {qubit} is out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),
    #[error("empty qubit set")]
    EmptySelection,
    #[error("bipartition side of {0} qubits exceeds the {MAX_SIDE_QUBITS}-qubit cap")]
    SideTooLarge(usize),
    #[error("gate {name} expects {expected} target(s), got {got}")]
    Arity {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix of dimension {got} does not act on {qubits} qubit(s)")]
    MatrixShape { qubits: usize, got: usize },
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("operator is not idempotent (deviation {0:.3e})")]
    NotIdempotent(f64),
    #[error("trace {0} differs from 1")]
    BadTrace(f64),
    #[error("eigenvalue {0:.3e} is below the PSD slack")]
    NotPsd(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("partition is invalid: {0}")]
    Partition(String),
}

/// Mask for qubit `q` in an `n`-qubit index.
#[inline]
pub(crate) fn qubit_mask(q: usize, n: usize) -> usize {
    1usize << (n - 1 - q)
}

pub(crate) fn check_qubits(qubits: &[usize], n: usize) -> Result<(), StateError> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n {
            return Err(StateError::QubitOutOfRange {
                qubit: q,
                num_qubits: n,
            });
        }
        if qubits[..i].contains(&q) {
            return Err(StateError::DuplicateQubit(q));
        }
    }
    Ok(())
}

/// Apply `matrix` to `targets` (first target = most significant local bit),
/// conditioned on every qubit in `controls` being 1. No unitarity check.
pub(crate) fn apply_matrix_raw(
    amps: &[C64],
    n: usize,
    targets: &[usize],
    controls: &[usize],
    matrix: &CMatrix,
) -> Vec<C64> {
    let k = targets.len();
    let dim = 1usize << k;
    debug_assert_eq!(matrix.nrows(), dim);
    let offsets: Vec<usize> = (0..dim)
        .map(|j| {
            targets
                .iter()
                .enumerate()
                .filter(|(t, _)| (j >> (k - 1 - t)) & 1 == 1)
                .fold(0, |acc, (_, &q)| acc | qubit_mask(q, n))
        })
        .collect();
    let tmask = offsets[dim - 1];
    let cmask = controls.iter().fold(0, |acc, &q| acc | qubit_mask(q, n));

    let mut out = amps.to_vec();
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    for base in 0..amps.len() {
        if base & tmask != 0 || base & cmask != cmask {
            continue;
        }
        for (j, off) in offsets.iter().enumerate() {
            buf[j] = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (c, b) in buf.iter().enumerate() {
                acc += matrix[(r, c)] * b;
            }
            out[base | off] = acc;
        }
    }
    out
}
