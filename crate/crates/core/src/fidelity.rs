//! Fidelity between density matrices, computed three independent ways:
//!
//! * [`fidelity_trace`]: `Tr √(ρ₁^{1/2} ρ₀ ρ₁^{1/2})` from an eigen-decomposition.
//! * [`fidelity_purification`]: the overlap of an explicitly constructed,
//!   maximally parallel pair of purifications (SVD route).
//! * [`fidelity_povm`]: the Bhattacharyya sum of the outcome distributions of
//!   an explicitly constructed optimal measurement.
//!
//! The routes share no code beyond the Hermitian eigen-solver, so their
//! agreement is a meaningful check on each of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::qcore::{
    floor_for, hermitian_eigen, random::gaussian_matrix, svd, CMatrix, DensityMatrix, PureState,
    StateError, C64,
};

/// Eigenvalues of `ρ₁` above this define its support.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;
/// Positivity slack for POVM elements.
pub const POVM_PSD_TOL: f64 = 1e-10;
/// Entrywise slack on `Σ E_b = I`.
pub const POVM_COMPLETENESS_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FidelityError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("a POVM needs at least one outcome")]
    NoOutcomes,
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error(transparent)]
    State(#[from] StateError),
}

fn check_dims(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<(), FidelityError> {
    if rho0.dim() != rho1.dim() {
        return Err(FidelityError::DimensionMismatch(rho0.dim(), rho1.dim()));
    }
    Ok(())
}

/// Square root that zeroes rounding-level eigenvalues, plus the eigenpair.
fn psd_sqrt(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let (values, vectors) = hermitian_eigen(m);
    let floor = floor_for(&values);
    let roots: Vec<f64> = values
        .iter()
        .map(|&l| if l > floor { l.sqrt() } else { 0.0 })
        .collect();
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, c)] * roots[c]
    });
    (scaled * vectors.adjoint(), roots, vectors)
}

/// `F(ρ₀, ρ₁) = Tr √(ρ₁^{1/2} ρ₀ ρ₁^{1/2})`.
pub fn fidelity_trace(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64, FidelityError> {
    check_dims(rho0, rho1)?;
    let (s1, _, _) = psd_sqrt(rho1.matrix());
    let inner = &s1 * rho0.matrix() * &s1;
    let (values, _) = hermitian_eigen(&inner);
    let floor = floor_for(&values);
    Ok(values
        .iter()
        .filter(|&&l| l > floor)
        .map(|l| l.sqrt())
        .sum())
}

/// Purifications of `ρ₀` and `ρ₁` on system ⊗ ancilla, system qubits first,
/// ancilla of the same dimension as the system.
#[derive(Debug, Clone, PartialEq)]
pub struct PurificationPair {
    pub psi0: PureState,
    pub psi1: PureState,
    pub system_qubits: usize,
}

impl PurificationPair {
    pub fn overlap(&self) -> f64 {
        self.psi0
            .overlap(&self.psi1)
            .expect("purifications share a register")
    }
}

/// Row-major coefficient matrix → amplitude vector with the row index as the
/// high (system) bits.
fn purification_state(coeffs: &CMatrix) -> Result<PureState, StateError> {
    let d = coeffs.nrows();
    let amps = (0..d * d).map(|idx| coeffs[(idx / d, idx % d)]).collect();
    PureState::normalized(amps)
}

/// `max |⟨ψ₀|ψ₁⟩|` over purifications, attained by construction.
///
/// `ψ₁` is the canonical purification `Σ_i √ρ₁|i⟩ ⊗ |i⟩`; `ψ₀` is the
/// canonical purification of `ρ₀` rotated on the ancilla by the polar factor
/// of `√ρ₀ √ρ₁`, which makes the pair maximally parallel.
pub fn fidelity_purification(
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
) -> Result<(f64, PurificationPair), FidelityError> {
    check_dims(rho0, rho1)?;
    let (s0, _, _) = psd_sqrt(rho0.matrix());
    let (s1, _, _) = psd_sqrt(rho1.matrix());
    let (p, _, q) = svd(&(&s0 * &s1), 1e-12);
    let rotated = &s0 * (p * q.adjoint());
    let pair = PurificationPair {
        psi0: purification_state(&rotated)?,
        psi1: purification_state(&s1)?,
        system_qubits: rho0.num_qubits(),
    };
    Ok((pair.overlap(), pair))
}

/// A finite set of PSD operators summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self, FidelityError> {
        let Some(first) = elements.first() else {
            return Err(FidelityError::NoOutcomes);
        };
        let d = first.nrows();
        let mut sum = CMatrix::zeros(d, d);
        for (i, e) in elements.iter().enumerate() {
            if e.nrows() != d || e.ncols() != d {
                return Err(FidelityError::DimensionMismatch(d, e.nrows()));
            }
            let herm = (e - e.adjoint())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if herm > POVM_PSD_TOL {
                return Err(FidelityError::InvalidPovm(format!(
                    "element {i} is not Hermitian ({herm:.3e})"
                )));
            }
            let (vals, _) = hermitian_eigen(e);
            if let Some(&min) = vals.last() {
                if min < -POVM_PSD_TOL {
                    return Err(FidelityError::InvalidPovm(format!(
                        "element {i} has eigenvalue {min:.3e}"
                    )));
                }
            }
            sum += e;
        }
        let residual = completeness_residual_of(&sum);
        if residual > POVM_COMPLETENESS_TOL {
            return Err(FidelityError::InvalidPovm(format!(
                "completeness residual {residual:.3e}"
            )));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    /// `max |Σ E_b − I|` entrywise.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let sum = self
            .elements
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, e| acc + e);
        completeness_residual_of(&sum)
    }

    /// Born-rule outcome probabilities `Tr(ρ E_b)`.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>, FidelityError> {
        if rho.dim() != self.dim() {
            return Err(FidelityError::DimensionMismatch(rho.dim(), self.dim()));
        }
        Ok(self
            .elements
            .iter()
            .map(|e| (rho.matrix() * e).trace().re)
            .collect())
    }

    /// `Σ_b √(Tr ρ₀E_b) √(Tr ρ₁E_b)`.
    pub fn bhattacharyya(
        &self,
        rho0: &DensityMatrix,
        rho1: &DensityMatrix,
    ) -> Result<f64, FidelityError> {
        let p0 = self.probabilities(rho0)?;
        let p1 = self.probabilities(rho1)?;
        Ok(p0
            .iter()
            .zip(&p1)
            .map(|(a, b)| a.max(0.0).sqrt() * b.max(0.0).sqrt())
            .sum())
    }
}

fn completeness_residual_of(sum: &CMatrix) -> f64 {
    let d = sum.nrows();
    (sum - CMatrix::identity(d, d))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Minimum Bhattacharyya sum over measurements, with the measurement attaining it.
///
/// Both states are compressed onto the support of `ρ₁`. There the operator
/// `M = ρ₁^{−1/2} √(ρ₁^{1/2} ρ₀ ρ₁^{1/2}) ρ₁^{−1/2}` satisfies `M ρ₁ M = Pρ₀P`,
/// so measuring in its eigenbasis gives `Σ_b m_b ⟨b|ρ₁|b⟩ = Tr(Mρ₁) = F`.
/// The kernel of `ρ₁` is appended as one extra outcome, which contributes zero.
pub fn fidelity_povm(
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
) -> Result<(f64, Povm), FidelityError> {
    check_dims(rho0, rho1)?;
    let d = rho1.dim();
    let (vals1, vecs1) = hermitian_eigen(rho1.matrix());
    let rank = vals1.iter().filter(|&&l| l > SUPPORT_THRESHOLD).count();
    let support = vecs1.columns(0, rank).into_owned();

    let mut elements = Vec::with_capacity(rank + 1);
    if rank > 0 {
        let sqrt1: Vec<f64> = vals1[..rank].iter().map(|l| l.sqrt()).collect();
        let compressed = support.adjoint() * rho0.matrix() * &support;
        let sandwich =
            CMatrix::from_fn(rank, rank, |r, c| compressed[(r, c)] * sqrt1[r] * sqrt1[c]);
        let (g, _, _) = psd_sqrt(&sandwich);
        let m = CMatrix::from_fn(rank, rank, |r, c| g[(r, c)] / (sqrt1[r] * sqrt1[c]));
        let (_, basis) = hermitian_eigen(&m);
        let lifted = &support * basis;
        for b in 0..rank {
            let v = lifted.column(b);
            elements.push(&v * v.adjoint());
        }
    }
    if rank < d {
        let kernel = CMatrix::identity(d, d) - &support * support.adjoint();
        elements.push((&kernel + kernel.adjoint()).scale(0.5));
    }
    let povm = Povm::new(elements)?;
    let value = povm.bhattacharyya(rho0, rho1)?;
    Ok((value, povm))
}

/// Seeded random POVM: `E_b = S^{−1/2} A_b S^{−1/2}` with `A_b = G_b G_b†`
/// for complex Gaussian `G_b` and `S = Σ A_b`.
pub fn random_povm(dim: usize, num_outcomes: usize, seed: u64) -> Result<Povm, FidelityError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_povm_with(dim, num_outcomes, &mut rng)
}

/// [`random_povm`] drawing from a caller-owned generator.
pub fn random_povm_with<R: Rng + ?Sized>(
    dim: usize,
    num_outcomes: usize,
    rng: &mut R,
) -> Result<Povm, FidelityError> {
    match num_outcomes {
        0 => Err(FidelityError::NoOutcomes),
        1 => Povm::new(vec![CMatrix::identity(dim, dim)]),
        _ => {
            let parts: Vec<CMatrix> = (0..num_outcomes)
                .map(|_| {
                    let g = gaussian_matrix(dim, dim, rng);
                    &g * g.adjoint()
                })
                .collect();
            let total = parts
                .iter()
                .fold(CMatrix::zeros(dim, dim), |acc, a| acc + a);
            let (vals, vecs) = hermitian_eigen(&total);
            let inv_sqrt = CMatrix::from_fn(dim, dim, |r, c| {
                vecs[(r, c)] / C64::new(vals[c].sqrt(), 0.0)
            }) * vecs.adjoint();
            let elements = parts
                .iter()
                .map(|a| {
                    let e = &inv_sqrt * a * &inv_sqrt;
                    (&e + e.adjoint()).scale(0.5)
                })
                .collect();
            Povm::new(elements)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pure(amps: &[(f64, f64)]) -> DensityMatrix {
        let s = PureState::normalized(amps.iter().map(|&(r, i)| C64::new(r, i)).collect()).unwrap();
        DensityMatrix::from_pure(&s)
    }

    #[test]
    fn identical_states_have_unit_fidelity() {
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        assert!((fidelity_trace(&rho, &rho).unwrap() - 1.0).abs() < 1e-12);
        let psi = pure(&[(0.6, 0.0), (0.0, 0.8)]);
        assert!((fidelity_trace(&psi, &psi).unwrap() - 1.0).abs() < 1e-12);
        let (f, povm) = fidelity_povm(&psi, &psi).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        assert!(povm.completeness_residual() < 1e-12);
    }

    #[test]
    fn orthogonal_states_have_zero_fidelity() {
        let zero = pure(&[(1.0, 0.0), (0.0, 0.0)]);
        let one = pure(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!(fidelity_trace(&zero, &one).unwrap().abs() < 1e-12);
        let (f, povm) = fidelity_povm(&zero, &one).unwrap();
        assert!(f.abs() < 1e-12);
        assert_eq!(povm.len(), 2);
        let (fp, _) = fidelity_purification(&zero, &one).unwrap();
        assert!(fp.abs() < 1e-12);
    }

    #[test]
    fn mixed_against_pure() {
        // Tr √(|0⟩⟨0| (I/2) |0⟩⟨0|) = √(1/2)
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        let zero = pure(&[(1.0, 0.0), (0.0, 0.0)]);
        let want = std::f64::consts::FRAC_1_SQRT_2;
        assert!((fidelity_trace(&mixed, &zero).unwrap() - want).abs() < 1e-12);
        assert!((fidelity_povm(&mixed, &zero).unwrap().0 - want).abs() < 1e-12);
        assert!((fidelity_purification(&mixed, &zero).unwrap().0 - want).abs() < 1e-12);
    }

    #[test]
    fn commuting_pair_matches_classical_formula() {
        let a = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
        let b = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let want = 0.375f64.sqrt() + 0.125f64.sqrt();
        let (f, pair) = fidelity_purification(&a, &b).unwrap();
        assert!((f - want).abs() < 1e-12);
        assert!((fidelity_trace(&a, &b).unwrap() - want).abs() < 1e-12);
        let r0 = crate::qcore::partial_trace(&pair.psi0, &[0]).unwrap();
        assert!(r0.max_abs_diff(&a).unwrap() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(1).unwrap();
        let b = DensityMatrix::maximally_mixed(2).unwrap();
        assert_eq!(
            fidelity_trace(&a, &b),
            Err(FidelityError::DimensionMismatch(2, 4))
        );
        assert!(fidelity_povm(&a, &b).is_err());
        assert!(fidelity_purification(&a, &b).is_err());
    }

    #[test]
    fn single_outcome_povm_is_identity() {
        let p = random_povm(4, 1, 9).unwrap();
        assert_eq!(p.elements(), &[CMatrix::identity(4, 4)]);
        assert!(matches!(
            random_povm(2, 0, 0),
            Err(FidelityError::NoOutcomes)
        ));
    }

    #[test]
    fn random_povm_is_complete_and_seeded() {
        let p = random_povm(2, 2, 42).unwrap();
        assert!(p.completeness_residual() <= 1e-10);
        assert_eq!(p, random_povm(2, 2, 42).unwrap());
        let rho = DensityMatrix::diagonal(&[0.2, 0.8]).unwrap();
        let total: f64 = p.probabilities(&rho).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn povm_rejects_incomplete_sets() {
        let half = CMatrix::identity(2, 2).scale(0.5);
        assert!(matches!(
            Povm::new(vec![half]),
            Err(FidelityError::InvalidPovm(_))
        ));
        let neg = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(2.0, 0.0),
            C64::new(-1.0, 0.0),
        ]));
        assert!(Povm::new(vec![
            neg,
            CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                C64::new(-1.0, 0.0),
                C64::new(2.0, 0.0)
            ]))
        ])
        .is_err());
    }
}
