//! Schmidt decomposition and the Uhlmann unitary across a bipartition.

use thiserror::Error;

use crate::qcore::{
    apply_unitary, coefficient_matrix, is_unitary, partial_trace, svd, CMatrix, PureState,
    StateError, C64,
};

/// Singular values at or below this are dropped from a decomposition.
pub const SCHMIDT_CUTOFF: f64 = 1e-10;
/// Entrywise tolerance for "the complement reductions are equal".
pub const EQUAL_REDUCTION_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchmidtError {
    #[error("states live on {0} and {1} qubits")]
    RegisterMismatch(usize, usize),
    #[error(
        "reduced states on the far side differ by {0:.3e}; no perfect cheating unitary exists"
    )]
    ReductionsDiffer(f64),
    #[error("constructed unitary deviates from unitarity by {0:.3e}")]
    NotUnitary(f64),
    #[error(transparent)]
    State(#[from] StateError),
}

/// `|ψ⟩ = Σ_k λ_k |u_k⟩_A |φ_k⟩_B` with `λ` nonincreasing and positive.
///
/// Vectors are expressed over the sorted qubits of each side.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    pub a_side: Vec<usize>,
    pub num_qubits: usize,
    pub coefficients: Vec<f64>,
    pub a_vectors: Vec<Vec<C64>>,
    pub b_vectors: Vec<Vec<C64>>,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Rebuilds the state from its terms.
    pub fn reconstruct(&self) -> Result<PureState, StateError> {
        let n = self.num_qubits;
        let mut rows = self.a_side.clone();
        rows.sort_unstable();
        let cols: Vec<usize> = (0..n).filter(|q| !rows.contains(q)).collect();
        let nr = 1usize << rows.len();
        let nc = 1usize << cols.len();
        let mut m = CMatrix::zeros(nr, nc);
        for ((l, u), v) in self
            .coefficients
            .iter()
            .zip(&self.a_vectors)
            .zip(&self.b_vectors)
        {
            for r in 0..nr {
                for c in 0..nc {
                    m[(r, c)] += u[r] * v[c] * *l;
                }
            }
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        for (idx, slot) in amps.iter_mut().enumerate() {
            let bit = |q: usize| (idx >> (n - 1 - q)) & 1;
            let r = rows.iter().fold(0, |acc, &q| (acc << 1) | bit(q));
            let c = cols.iter().fold(0, |acc, &q| (acc << 1) | bit(q));
            *slot = m[(r, c)];
        }
        PureState::normalized(amps)
    }
}

/// Schmidt decomposition of `state` across `a_side` and its complement.
pub fn schmidt_decompose(
    state: &PureState,
    a_side: &[usize],
) -> Result<SchmidtDecomposition, SchmidtError> {
    let m = coefficient_matrix(state, a_side)?;
    let (u, values, v) = svd(&m, SCHMIDT_CUTOFF);
    let rank = values.iter().take_while(|&&s| s > SCHMIDT_CUTOFF).count();
    let mut a_side = a_side.to_vec();
    a_side.sort_unstable();
    Ok(SchmidtDecomposition {
        a_side,
        num_qubits: state.num_qubits(),
        coefficients: values[..rank].to_vec(),
        a_vectors: (0..rank)
            .map(|k| u.column(k).iter().copied().collect())
            .collect(),
        b_vectors: (0..rank)
            .map(|k| v.column(k).iter().map(|z| z.conj()).collect())
            .collect(),
    })
}

/// Unitary `U` on `a_side` maximizing `|⟨ψ₁|(U ⊗ I)|ψ₀⟩|`, and the overlap it attains.
///
/// With coefficient matrices `M₀, M₁`, the overlap is `|Tr(U M₀ M₁†)|`.
/// Writing `M₀ M₁† = W Σ Z†`, the maximum `Σσ` is reached at `U = Z W†`.
/// When the product is rank deficient, the singular vectors with nonzero
/// singular value are completed deterministically on both sides.
pub fn uhlmann_unitary(
    psi0: &PureState,
    psi1: &PureState,
    a_side: &[usize],
) -> Result<(CMatrix, f64), SchmidtError> {
    if psi0.num_qubits() != psi1.num_qubits() {
        return Err(SchmidtError::RegisterMismatch(
            psi0.num_qubits(),
            psi1.num_qubits(),
        ));
    }
    let m0 = coefficient_matrix(psi0, a_side)?;
    let m1 = coefficient_matrix(psi1, a_side)?;
    let (w, _, z) = svd(&(&m0 * m1.adjoint()), SCHMIDT_CUTOFF);
    let u = z * w.adjoint();
    if let Err(dev) = is_unitary(&u, 1e-8) {
        return Err(SchmidtError::NotUnitary(dev));
    }
    let mut side = a_side.to_vec();
    side.sort_unstable();
    let moved = apply_unitary(psi0, &side, &u)?;
    let overlap = psi1.overlap(&moved)?;
    Ok((u, overlap))
}

/// The unitary on `a_side` that maps `ψ₀` onto `ψ₁` when both have the same
/// reduced state on the complement.
pub fn cheating_unitary_ideal(
    psi0: &PureState,
    psi1: &PureState,
    a_side: &[usize],
) -> Result<CMatrix, SchmidtError> {
    if psi0.num_qubits() != psi1.num_qubits() {
        return Err(SchmidtError::RegisterMismatch(
            psi0.num_qubits(),
            psi1.num_qubits(),
        ));
    }
    let n = psi0.num_qubits();
    let rest: Vec<usize> = (0..n).filter(|q| !a_side.contains(q)).collect();
    if !rest.is_empty() {
        let r0 = partial_trace(psi0, &rest)?;
        let r1 = partial_trace(psi1, &rest)?;
        let dev = r0.max_abs_diff(&r1)?;
        if dev > EQUAL_REDUCTION_TOL {
            return Err(SchmidtError::ReductionsDiffer(dev));
        }
    }
    Ok(uhlmann_unitary(psi0, psi1, a_side)?.0)
}
