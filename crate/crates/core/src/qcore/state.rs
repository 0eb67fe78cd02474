use super::{
    apply_matrix_raw, check_qubits, hermitian_eigen, is_unitary, qubit_mask, CMatrix, StateError,
    C64, MAX_QUBITS, MAX_SIDE_QUBITS, STATE_TOL, UNITARY_TOL,
};

/// Normalized amplitude vector over an n-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self, StateError> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self, StateError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(StateError::RegisterSize(num_qubits));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << num_qubits];
        if index >= amplitudes.len() {
            return Err(StateError::QubitOutOfRange {
                qubit: index,
                num_qubits,
            });
        }
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps an amplitude vector, checking length and unit norm.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self, StateError> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(StateError::NotPowerOfTwo(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(StateError::RegisterSize(num_qubits));
        }
        let norm = norm_of(&amplitudes);
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Scales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self, StateError> {
        let norm = norm_of(&amplitudes);
        if norm == 0.0 {
            return Err(StateError::NotNormalized(0.0));
        }
        Self::from_amplitudes(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub(crate) fn from_raw_unchecked(num_qubits: usize, amplitudes: Vec<C64>) -> Self {
        Self {
            num_qubits,
            amplitudes,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64, StateError> {
        if self.dim() != other.dim() {
            return Err(StateError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|`, the phase-insensitive overlap.
    pub fn overlap(&self, other: &PureState) -> Result<f64, StateError> {
        self.inner(other).map(|z| z.norm())
    }

    /// `self ⊗ other`; `self` takes the low qubit indices.
    pub fn tensor(&self, other: &PureState) -> Result<PureState, StateError> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(StateError::RegisterSize(n));
        }
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ok(Self {
            num_qubits: n,
            amplitudes,
        })
    }

    /// Appends `extra` qubits in `|0⟩`.
    pub fn extend_zero(&self, extra: usize) -> Result<PureState, StateError> {
        if extra == 0 {
            return Ok(self.clone());
        }
        self.tensor(&PureState::zero(extra)?)
    }

    /// Probability that the qubits in `qubits` read `bits` (first qubit = MSB of `bits`).
    pub fn probability_of(&self, qubits: &[usize], bits: usize) -> Result<f64, StateError> {
        check_qubits(qubits, self.num_qubits)?;
        let k = qubits.len();
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                qubits.iter().enumerate().all(|(t, &q)| {
                    ((idx & qubit_mask(q, self.num_qubits)) != 0)
                        == ((bits >> (k - 1 - t)) & 1 == 1)
                })
            })
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }
}

fn norm_of(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian, PSD, unit-trace matrix on a power-of-two dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity within [`STATE_TOL`].
    pub fn new(matrix: CMatrix) -> Result<Self, StateError> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(StateError::DimensionMismatch(dim, matrix.ncols()));
        }
        if !dim.is_power_of_two() || dim < 2 {
            return Err(StateError::NotPowerOfTwo(dim));
        }
        let herm = hermitian_deviation(&matrix);
        if herm > STATE_TOL {
            return Err(StateError::NotHermitian(herm));
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(StateError::BadTrace(trace));
        }
        let (vals, _) = hermitian_eigen(&matrix);
        if let Some(&min) = vals.last() {
            if min < -STATE_TOL {
                return Err(StateError::NotPsd(min));
            }
        }
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        let num_qubits = matrix.nrows().trailing_zeros() as usize;
        Self { num_qubits, matrix }
    }

    pub fn from_pure(state: &PureState) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self::from_matrix_unchecked(&v * v.adjoint())
    }

    /// `diag(probs)`; the probabilities must sum to one.
    pub fn diagonal(probs: &[f64]) -> Result<Self, StateError> {
        let d = probs.len();
        Self::new(CMatrix::from_fn(d, d, |r, c| {
            if r == c {
                C64::new(probs[r], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn maximally_mixed(num_qubits: usize) -> Result<Self, StateError> {
        let d = 1usize << num_qubits;
        Self::diagonal(&vec![1.0 / d as f64; d])
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Eigenvalues in nonincreasing order.
    pub fn spectrum(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// Reduction onto `keep` (ascending order defines the output basis).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix, StateError> {
        let n = self.num_qubits;
        let (keep, rest) = split_sides(keep, n)?;
        let kd = 1usize << keep.len();
        let rd = 1usize << rest.len();
        let index = |r: usize, c: usize| compose_index(r, &keep, c, &rest, n);
        let mut out = CMatrix::zeros(kd, kd);
        for r in 0..kd {
            for rp in 0..kd {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..rd {
                    acc += self.matrix[(index(r, c), index(rp, c))];
                }
                out[(r, rp)] = acc;
            }
        }
        Ok(DensityMatrix::from_matrix_unchecked(out))
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64, StateError> {
        if self.dim() != other.dim() {
            return Err(StateError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok((&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Sorted side plus its complement, validated against an `n`-qubit register.
pub(crate) fn split_sides(
    side: &[usize],
    n: usize,
) -> Result<(Vec<usize>, Vec<usize>), StateError> {
    if side.is_empty() {
        return Err(StateError::EmptySelection);
    }
    check_qubits(side, n)?;
    let mut keep = side.to_vec();
    keep.sort_unstable();
    let rest = (0..n).filter(|q| !keep.contains(q)).collect();
    Ok((keep, rest))
}

/// Global amplitude index for row `r` over `rows` and column `c` over `cols`.
#[inline]
fn compose_index(r: usize, rows: &[usize], c: usize, cols: &[usize], n: usize) -> usize {
    let mut idx = 0;
    let kr = rows.len();
    for (t, &q) in rows.iter().enumerate() {
        if (r >> (kr - 1 - t)) & 1 == 1 {
            idx |= qubit_mask(q, n);
        }
    }
    let kc = cols.len();
    for (t, &q) in cols.iter().enumerate() {
        if (c >> (kc - 1 - t)) & 1 == 1 {
            idx |= qubit_mask(q, n);
        }
    }
    idx
}

/// Reshapes `state` into the `2^|a| × 2^(n−|a|)` matrix `M[a, rest]`.
/// Either side may be empty (giving a single row or column).
pub fn coefficient_matrix(state: &PureState, a_side: &[usize]) -> Result<CMatrix, StateError> {
    let n = state.num_qubits();
    check_qubits(a_side, n)?;
    let mut rows = a_side.to_vec();
    rows.sort_unstable();
    let cols: Vec<usize> = (0..n).filter(|q| !rows.contains(q)).collect();
    if rows.len() > MAX_SIDE_QUBITS {
        return Err(StateError::SideTooLarge(rows.len()));
    }
    if cols.len() > MAX_SIDE_QUBITS {
        return Err(StateError::SideTooLarge(cols.len()));
    }
    let nr = 1usize << rows.len();
    let nc = 1usize << cols.len();
    let amps = state.amplitudes();
    Ok(CMatrix::from_fn(nr, nc, |r, c| {
        amps[compose_index(r, &rows, c, &cols, n)]
    }))
}

/// Reduced density matrix of `state` on `keep`, computed as `M M†`.
pub fn partial_trace(state: &PureState, keep: &[usize]) -> Result<DensityMatrix, StateError> {
    let n = state.num_qubits();
    let (keep, rest) = split_sides(keep, n)?;
    if keep.len() > MAX_SIDE_QUBITS {
        return Err(StateError::SideTooLarge(keep.len()));
    }
    let kd = 1usize << keep.len();
    let rd = 1usize << rest.len();
    let amps = state.amplitudes();
    // Rows of M are gathered without materializing the full complement side,
    // so the traced-out side may exceed the bipartition cap.
    let mut out = CMatrix::zeros(kd, kd);
    let mut row_i = vec![C64::new(0.0, 0.0); rd];
    let mut row_j = vec![C64::new(0.0, 0.0); rd];
    for i in 0..kd {
        for (c, slot) in row_i.iter_mut().enumerate() {
            *slot = amps[compose_index(i, &keep, c, &rest, n)];
        }
        for j in i..kd {
            for (c, slot) in row_j.iter_mut().enumerate() {
                *slot = amps[compose_index(j, &keep, c, &rest, n)];
            }
            let v: C64 = row_i.iter().zip(&row_j).map(|(a, b)| a * b.conj()).sum();
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// `(U ⊗ I)|state⟩` for a unitary on an arbitrary number of `targets`.
pub fn apply_unitary(
    state: &PureState,
    targets: &[usize],
    u: &CMatrix,
) -> Result<PureState, StateError> {
    check_qubits(targets, state.num_qubits())?;
    if targets.is_empty() {
        return Err(StateError::EmptySelection);
    }
    let dim = 1usize << targets.len();
    if u.nrows() != dim || u.ncols() != dim {
        return Err(StateError::MatrixShape {
            qubits: targets.len(),
            got: u.nrows(),
        });
    }
    if let Err(dev) = is_unitary(u, UNITARY_TOL) {
        return Err(StateError::NotUnitary(dev));
    }
    let amps = apply_matrix_raw(state.amplitudes(), state.num_qubits(), targets, &[], u);
    Ok(PureState::from_raw_unchecked(state.num_qubits(), amps))
}

/// Disjoint qubit sets for the two parties and the channel.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
    pub channel: Vec<usize>,
}

impl Partition {
    /// Contiguous layout: Alice's qubits, then Bob's, then the channel.
    pub fn contiguous(alice: usize, bob: usize, channel: usize) -> Self {
        Self {
            alice: (0..alice).collect(),
            bob: (alice..alice + bob).collect(),
            channel: (alice + bob..alice + bob + channel).collect(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.alice.len() + self.bob.len() + self.channel.len()
    }

    /// Checks that the sets are disjoint and cover `0..num_qubits` exactly.
    pub fn validate(&self, num_qubits: usize) -> Result<(), StateError> {
        let mut seen = vec![false; num_qubits];
        for &q in self.alice.iter().chain(&self.bob).chain(&self.channel) {
            if q >= num_qubits {
                return Err(StateError::Partition(format!(
                    "qubit {q} outside register of {num_qubits}"
                )));
            }
            if seen[q] {
                return Err(StateError::Partition(format!("qubit {q} assigned twice")));
            }
            seen[q] = true;
        }
        if let Some(q) = seen.iter().position(|s| !s) {
            return Err(StateError::Partition(format!("qubit {q} is unassigned")));
        }
        Ok(())
    }
}
