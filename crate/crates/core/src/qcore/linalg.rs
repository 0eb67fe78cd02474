use nalgebra::{DVector, SymmetricEigen};

use super::state::hermitian_deviation;
use super::{apply_matrix_raw, check_qubits, CMatrix, PureState, StateError, C64, PSD_SLACK};

/// Eigenvalues below this fraction of the largest one are treated as zero
/// when taking square roots; they are rounding residue of exact zeros.
pub(crate) const SPECTRAL_FLOOR: f64 = 1e-13;

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues in
/// nonincreasing order with matching eigenvector columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Singular value decomposition `m = U diag(s) V†` with `U`, `V` square
/// unitaries and `s` nonincreasing (`min(rows, cols)` entries).
///
/// Built from the eigenvectors of `m†m`; each singular value is recomputed
/// as `‖m v_k‖`, which stays accurate for small values. Left vectors whose
/// singular value is at or below `cutoff` are replaced by a Gram–Schmidt
/// completion, so `U` is exactly unitary even for rank-deficient `m`.
pub fn svd(m: &CMatrix, cutoff: f64) -> (CMatrix, Vec<f64>, CMatrix) {
    let (rows, cols) = (m.nrows(), m.ncols());
    let (_, v) = hermitian_eigen(&(m.adjoint() * m));
    let images: Vec<Vec<C64>> = (0..cols)
        .map(|k| (m * v.column(k)).iter().copied().collect())
        .collect();
    let norms: Vec<f64> = images
        .iter()
        .map(|x| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let values: Vec<f64> = order
        .iter()
        .take(rows.min(cols))
        .map(|&k| norms[k])
        .collect();
    let kept: Vec<Vec<C64>> = order
        .iter()
        .take(rows.min(cols))
        .filter(|&&k| norms[k] > cutoff)
        .map(|&k| images[k].iter().map(|z| z / norms[k]).collect())
        .collect();
    let left = complete_basis(orthonormalize(kept), rows);
    let u = CMatrix::from_fn(rows, rows, |r, c| left[c][r]);
    let v_sorted = CMatrix::from_fn(cols, cols, |r, c| v[(r, order[c])]);
    (u, values, v_sorted)
}

/// Two-pass modified Gram–Schmidt over vectors that are already nearly
/// orthonormal.
fn orthonormalize(mut columns: Vec<Vec<C64>>) -> Vec<Vec<C64>> {
    for i in 0..columns.len() {
        for _ in 0..2 {
            for j in 0..i {
                let proj: C64 = columns[j]
                    .iter()
                    .zip(&columns[i])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let prev = columns[j].clone();
                for (x, c) in columns[i].iter_mut().zip(&prev) {
                    *x -= proj * c;
                }
            }
        }
        let norm = columns[i].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in columns[i].iter_mut() {
            *x /= norm;
        }
    }
    columns
}

/// Extends orthonormal `columns` to a basis of `C^dim` by Gram–Schmidt over
/// the standard basis in index order.
pub(crate) fn complete_basis(mut columns: Vec<Vec<C64>>, dim: usize) -> Vec<Vec<C64>> {
    let mut e = 0;
    while columns.len() < dim && e < dim {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for col in &columns {
                let proj: C64 = col.iter().zip(&v).map(|(c, x)| c.conj() * x).sum();
                for (x, c) in v.iter_mut().zip(col) {
                    *x -= proj * c;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            columns.push(v.into_iter().map(|x| x / norm).collect());
        }
        e += 1;
    }
    columns
}

/// `Ok(())` when `‖U†U − I‖_max ≤ tol`, otherwise the deviation.
pub fn is_unitary(u: &CMatrix, tol: f64) -> Result<(), f64> {
    if u.nrows() != u.ncols() {
        return Err(f64::INFINITY);
    }
    let dev = (u.adjoint() * u - CMatrix::identity(u.nrows(), u.ncols()))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if dev <= tol {
        Ok(())
    } else {
        Err(dev)
    }
}

/// `V diag(f(λ)) V†` over a precomputed eigenpair.
pub(crate) fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let d = DVector::from_iterator(values.len(), values.iter().map(|&l| C64::new(f(l), 0.0)));
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, c)] * d[c]
    });
    scaled * vectors.adjoint()
}

pub(crate) fn floor_for(values: &[f64]) -> f64 {
    SPECTRAL_FLOOR * values.first().copied().unwrap_or(0.0).max(0.0)
}

/// Principal square root of a Hermitian PSD matrix.
///
/// Eigenvalues in `[-1e-8, 0)` are clamped to zero; anything more negative
/// is reported as [`StateError::NotPsd`].
pub fn matrix_sqrt_psd(m: &CMatrix) -> Result<CMatrix, StateError> {
    if m.nrows() != m.ncols() {
        return Err(StateError::DimensionMismatch(m.nrows(), m.ncols()));
    }
    let herm = hermitian_deviation(m);
    if herm > PSD_SLACK {
        return Err(StateError::NotHermitian(herm));
    }
    let (values, vectors) = hermitian_eigen(m);
    if let Some(&min) = values.last() {
        if min < -PSD_SLACK {
            return Err(StateError::NotPsd(min));
        }
    }
    let floor = floor_for(&values);
    Ok(spectral_map(&values, &vectors, |l| {
        if l > floor {
            l.sqrt()
        } else {
            0.0
        }
    }))
}

/// Projector onto the span of eigenvectors of `m` with eigenvalue above `threshold`.
pub fn support_projector(m: &CMatrix, threshold: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    spectral_map(&values, &vectors, |l| if l > threshold { 1.0 } else { 0.0 })
}

/// Hermitian idempotent operator on an ordered list of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    qubits: Vec<usize>,
    matrix: CMatrix,
}

impl Projector {
    /// Idempotence and Hermiticity are checked at `tol`.
    pub fn new(qubits: Vec<usize>, matrix: CMatrix, tol: f64) -> Result<Self, StateError> {
        let dim = 1usize << qubits.len();
        if qubits.is_empty() {
            return Err(StateError::EmptySelection);
        }
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(StateError::MatrixShape {
                qubits: qubits.len(),
                got: matrix.nrows(),
            });
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(StateError::DuplicateQubit(*q));
            }
        }
        let herm = hermitian_deviation(&matrix);
        if herm > tol {
            return Err(StateError::NotHermitian(herm));
        }
        let idem = (&matrix * &matrix - &matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if idem > tol {
            return Err(StateError::NotIdempotent(idem));
        }
        Ok(Self { qubits, matrix })
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `(P ⊗ I)|state⟩`, unnormalized.
    pub fn apply(&self, state: &PureState) -> Result<Vec<C64>, StateError> {
        check_qubits(&self.qubits, state.num_qubits())?;
        Ok(apply_matrix_raw(
            state.amplitudes(),
            state.num_qubits(),
            &self.qubits,
            &[],
            &self.matrix,
        ))
    }

    /// `⟨state|P ⊗ I|state⟩`.
    pub fn expectation(&self, state: &PureState) -> Result<f64, StateError> {
        Ok(self.apply(state)?.iter().map(|a| a.norm_sqr()).sum())
    }

    /// Probability of the outcome and the normalized post-measurement state,
    /// or `None` when the probability is at most `cutoff`.
    pub fn condition(
        &self,
        state: &PureState,
        cutoff: f64,
    ) -> Result<(f64, Option<PureState>), StateError> {
        let amps = self.apply(state)?;
        let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if p <= cutoff {
            return Ok((p, None));
        }
        let s = p.sqrt();
        let normed = amps.into_iter().map(|a| a / s).collect();
        Ok((
            p,
            Some(PureState::from_raw_unchecked(state.num_qubits(), normed)),
        ))
    }

    /// The same operator expressed on a superset of its qubits (`I` elsewhere).
    pub fn embed(&self, qubits: &[usize]) -> Result<Projector, StateError> {
        let positions: Vec<usize> = self
            .qubits
            .iter()
            .map(|q| {
                qubits
                    .iter()
                    .position(|x| x == q)
                    .ok_or(StateError::QubitOutOfRange {
                        qubit: *q,
                        num_qubits: qubits.len(),
                    })
            })
            .collect::<Result<_, _>>()?;
        let k = qubits.len();
        let dim = 1usize << k;
        let mut out = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[col] = C64::new(1.0, 0.0);
            let v = apply_matrix_raw(&e, k, &positions, &[], &self.matrix);
            out.set_column(col, &DVector::from_vec(v));
        }
        Ok(Projector {
            qubits: qubits.to_vec(),
            matrix: out,
        })
    }
}
