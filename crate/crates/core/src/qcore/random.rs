//! Seeded samplers for states, unitaries and density matrices.
//!
//! Everything takes an explicit generator; nothing reads ambient entropy.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{CMatrix, DensityMatrix, PureState, StateError, C64};

/// Complex standard Gaussian (real and imaginary parts each N(0, 1/2)).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-random unitary via QR with the phase of `R`'s diagonal fixed.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let qr = gaussian_matrix(dim, dim, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    CMatrix::from_fn(dim, dim, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        q[(i, j)] * phase
    })
}

/// Haar-random pure state on `num_qubits` qubits.
pub fn random_state<R: Rng + ?Sized>(
    num_qubits: usize,
    rng: &mut R,
) -> Result<PureState, StateError> {
    let amps = (0..1usize << num_qubits)
        .map(|_| complex_gaussian(rng))
        .collect();
    PureState::normalized(amps)
}

/// Random density matrix `G G† / Tr(G G†)` with `G` of shape `dim × rank`.
pub fn random_density_matrix<R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix, StateError> {
    let g = gaussian_matrix(dim, rank.max(1), rng);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    let mut m = m.unscale(t);
    // Exact Hermiticity before validation.
    m = (&m + m.adjoint()).scale(0.5);
    DensityMatrix::new(m)
}
