mod common;

use common::{bloch, classical_fidelity, max_abs_diff, qubit_fidelity, reduced_oracle};
use proptest::prelude::*;
use qnogo::fidelity::{
    fidelity_povm, fidelity_purification, fidelity_trace, random_povm_with, Povm,
};
use qnogo::qcore::random::{random_density_matrix, random_state, random_unitary};
use qnogo::qcore::{CMatrix, DensityMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn all_routes(r0: &DensityMatrix, r1: &DensityMatrix) -> [f64; 3] {
    [
        fidelity_trace(r0, r1).unwrap(),
        fidelity_purification(r0, r1).unwrap().0,
        fidelity_povm(r0, r1).unwrap().0,
    ]
}

fn ball() -> impl Strategy<Value = (f64, f64, f64)> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..=1.0).prop_map(|(x, y, z, r)| {
        let n = (x * x + y * y + z * z).sqrt().max(1e-9);
        (x / n * r, y / n * r, z / n * r)
    })
}

proptest! {
    #[test]
    fn qubit_routes_match_closed_form(a in ball(), b in ball()) {
        let m0 = bloch(a.0, a.1, a.2);
        let m1 = bloch(b.0, b.1, b.2);
        let want = qubit_fidelity(&m0, &m1);
        let r0 = DensityMatrix::new(m0).unwrap();
        let r1 = DensityMatrix::new(m1).unwrap();
        for f in all_routes(&r0, &r1) {
            prop_assert!((f - want).abs() < 1e-7, "{f} vs {want}");
        }
    }

    #[test]
    fn commuting_states_reduce_to_classical_fidelity(p in prop::collection::vec(0.0f64..1.0, 8), q in prop::collection::vec(0.0f64..1.0, 8)) {
        let norm = |v: &[f64]| { let s: f64 = v.iter().sum(); v.iter().map(|x| x / s.max(1e-12)).collect::<Vec<_>>() };
        prop_assume!(p.iter().sum::<f64>() > 1e-3 && q.iter().sum::<f64>() > 1e-3);
        let (p, q) = (norm(&p), norm(&q));
        let want = classical_fidelity(&p, &q);
        let r0 = DensityMatrix::diagonal(&p).unwrap();
        let r1 = DensityMatrix::diagonal(&q).unwrap();
        for f in all_routes(&r0, &r1) {
            prop_assert!((f - want).abs() < 1e-7);
        }
    }

    #[test]
    fn pure_states_give_overlap_modulus(n in 1usize..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(n, &mut rng).unwrap();
        let b = random_state(n, &mut rng).unwrap();
        let want = a.overlap(&b).unwrap();
        let routes = all_routes(&DensityMatrix::from_pure(&a), &DensityMatrix::from_pure(&b));
        for f in routes {
            prop_assert!((f - want).abs() < 1e-7);
        }
    }

    #[test]
    fn fidelity_is_symmetric_and_unitarily_invariant(k in 1usize..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 1 << k;
        let r0 = random_density_matrix(d, rng.random_range(1..=d), &mut rng).unwrap();
        let r1 = random_density_matrix(d, rng.random_range(1..=d), &mut rng).unwrap();
        let f = fidelity_trace(&r0, &r1).unwrap();
        prop_assert!((f - fidelity_trace(&r1, &r0).unwrap()).abs() < 1e-7);
        let u = random_unitary(d, &mut rng);
        let rot = |r: &DensityMatrix| DensityMatrix::new(&u * r.matrix() * u.adjoint()).unwrap();
        prop_assert!((f - fidelity_trace(&rot(&r0), &rot(&r1)).unwrap()).abs() < 1e-7);
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&f));
    }

    #[test]
    fn purification_pair_reduces_to_inputs(k in 1usize..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 1 << k;
        let r0 = random_density_matrix(d, rng.random_range(1..=d), &mut rng).unwrap();
        let r1 = random_density_matrix(d, rng.random_range(1..=d), &mut rng).unwrap();
        let (_, pair) = fidelity_purification(&r0, &r1).unwrap();
        let system: Vec<usize> = (0..k).collect();
        prop_assert!(max_abs_diff(&reduced_oracle(pair.psi0.amplitudes(), 2 * k, &system), r0.matrix()) < 1e-9);
        prop_assert!(max_abs_diff(&reduced_oracle(pair.psi1.amplitudes(), 2 * k, &system), r1.matrix()) < 1e-9);
    }

    #[test]
    fn optimal_measurement_is_a_valid_povm_and_random_ones_do_no_better(k in 1usize..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 1 << k;
        let r0 = random_density_matrix(d, rng.random_range(1..=d), &mut rng).unwrap();
        let r1 = random_density_matrix(d, rng.random_range(1..=d), &mut rng).unwrap();
        let (f, povm) = fidelity_povm(&r0, &r1).unwrap();
        prop_assert!(povm.completeness_residual() < 1e-8);
        prop_assert!((povm.bhattacharyya(&r0, &r1).unwrap() - f).abs() < 1e-9);
        for _ in 0..20 {
            let outcomes = rng.random_range(1..=2 * d);
            let e = random_povm_with(d, outcomes, &mut rng).unwrap();
            prop_assert!(e.bhattacharyya(&r0, &r1).unwrap() >= f - 1e-8);
        }
    }
}

#[test]
fn orthogonal_supports_have_zero_fidelity() {
    let r0 = DensityMatrix::diagonal(&[0.5, 0.5, 0.0, 0.0]).unwrap();
    let r1 = DensityMatrix::diagonal(&[0.0, 0.0, 0.3, 0.7]).unwrap();
    for f in all_routes(&r0, &r1) {
        assert!(f.abs() < 1e-9);
    }
}

#[test]
fn incomplete_povm_is_rejected() {
    let half = CMatrix::identity(2, 2) * common::c(0.5, 0.0);
    assert!(Povm::new(vec![half]).is_err());
    assert!(Povm::new(vec![]).is_err());
}

#[test]
fn dimension_mismatch_is_an_error() {
    let a = DensityMatrix::maximally_mixed(1).unwrap();
    let b = DensityMatrix::maximally_mixed(2).unwrap();
    assert!(fidelity_trace(&a, &b).is_err());
}
