use super::state::split_sides;
use super::{partial_trace, DensityMatrix, PureState, StateError};

/// Eigenvalues at or below this contribute nothing to an entropy sum.
const ENTROPY_CUTOFF: f64 = 1e-12;

/// Either kind of state accepted by [`mutual_information`].
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a PureState),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a PureState> for StateRef<'a> {
    fn from(s: &'a PureState) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(s: &'a DensityMatrix) -> Self {
        StateRef::Mixed(s)
    }
}

/// `S(ρ) = −Σ p log₂ p` in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let s: f64 = rho
        .spectrum()
        .into_iter()
        .filter(|&p| p > ENTROPY_CUTOFF)
        .map(|p| -p * p.log2())
        .sum();
    s.max(0.0)
}

/// `I(A:B) = S(ρ_A) + S(ρ_B) − S(ρ_AB)` in bits, where `A` is `a_side` and
/// `B` its complement.
pub fn mutual_information<'a>(
    state: impl Into<StateRef<'a>>,
    a_side: &[usize],
) -> Result<f64, StateError> {
    match state.into() {
        StateRef::Pure(s) => {
            let (a, b) = split_sides(a_side, s.num_qubits())?;
            if b.is_empty() {
                return Err(StateError::EmptySelection);
            }
            let sa = von_neumann_entropy(&partial_trace(s, &a)?);
            let sb = von_neumann_entropy(&partial_trace(s, &b)?);
            // S(ρ_AB) = 0 for a pure joint state.
            Ok(sa + sb)
        }
        StateRef::Mixed(rho) => {
            let (a, b) = split_sides(a_side, rho.num_qubits())?;
            if b.is_empty() {
                return Err(StateError::EmptySelection);
            }
            let sa = von_neumann_entropy(&rho.partial_trace(&a)?);
            let sb = von_neumann_entropy(&rho.partial_trace(&b)?);
            Ok(sa + sb - von_neumann_entropy(rho))
        }
    }
}
