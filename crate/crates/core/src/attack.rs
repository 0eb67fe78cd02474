//! Alice's entanglement attack on a bit commitment.
//!
//! Alice runs the honest commit phase for bit 0. Just before opening she
//! applies the Uhlmann unitary on everything she holds, steering the joint
//! state as close as possible to the honest commitment of bit 1, and then
//! opens 1.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{
    commit_delta, default_custody, holdings, honest_accept, parse_protocol, purify_protocol,
    run_commit, run_open, Actor, Protocol, ProtocolError,
};
use crate::qcore::{apply_unitary, partial_trace};
use crate::schmidt::{uhlmann_unitary, SchmidtError};

/// Slack on probabilities reported by an attack.
pub const PROBABILITY_SLACK: f64 = 1e-9;
/// Allowed gap between the achieved overlap and `1 − δ`.
pub const OVERLAP_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Schmidt(#[from] SchmidtError),
    #[error("Alice holds no qubits before opening")]
    NothingToAttack,
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub protocol_name: String,
    /// `1 − F(ρ₀^B, ρ₁^B)` after the commit phase.
    pub delta: f64,
    pub fidelity: f64,
    /// `|⟨ψ₁|(U ⊗ I)|ψ₀⟩|` for the unitary Alice applies.
    pub achieved_overlap: f64,
    /// Honest acceptance for bits 0 and 1.
    pub honest_accept: [f64; 2],
    /// Bob's acceptance when Alice commits 0, attacks, and opens 1.
    pub cheat_accept: f64,
    /// Largest entry change in Bob's reduced state caused by the attack.
    pub bob_state_shift: f64,
    pub channel_custody: Actor,
}

impl AttackReport {
    /// Sanity checks every report must satisfy.
    pub fn check_invariants(&self) -> Result<(), AttackError> {
        let probs = [
            ("honest_accept[0]", self.honest_accept[0]),
            ("honest_accept[1]", self.honest_accept[1]),
            ("cheat_accept", self.cheat_accept),
        ];
        for (name, p) in probs {
            if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
                return Err(AttackError::Invariant(format!(
                    "{name} = {p} is not a probability"
                )));
            }
        }
        let gap = (self.achieved_overlap - (1.0 - self.delta)).abs();
        if gap > OVERLAP_TOL {
            return Err(AttackError::Invariant(format!(
                "achieved overlap {} differs from 1 - delta = {} by {gap:.3e}",
                self.achieved_overlap,
                1.0 - self.delta
            )));
        }
        Ok(())
    }
}

/// Runs the attack with the channel held by `custody`, or by the receiver of
/// the last commit round when `None`.
pub fn epr_attack(p: &Protocol, custody: Option<Actor>) -> Result<AttackReport, AttackError> {
    let q = purify_protocol(p)?;
    let custody = custody.unwrap_or_else(|| default_custody(&q));
    let alice = holdings(&q, Actor::Alice, custody);
    let bob = holdings(&q, Actor::Bob, custody);
    if alice.is_empty() {
        return Err(AttackError::NothingToAttack);
    }
    let psi0 = run_commit(&q, 0)?;
    let psi1 = run_commit(&q, 1)?;
    let delta = commit_delta(&q, custody)?;
    let (u, achieved_overlap) = uhlmann_unitary(&psi0, &psi1, &alice)?;
    let cheated = apply_unitary(&psi0, &alice, &u).map_err(ProtocolError::from)?;
    let cheat_accept = run_open(&q, &cheated, 1)?;
    let before = partial_trace(&psi0, &bob).map_err(ProtocolError::from)?;
    let after = partial_trace(&cheated, &bob).map_err(ProtocolError::from)?;
    let bob_state_shift = before.max_abs_diff(&after).map_err(ProtocolError::from)?;
    Ok(AttackReport {
        protocol_name: q.name.clone(),
        delta: delta.delta,
        fidelity: delta.fidelity,
        achieved_overlap,
        honest_accept: [honest_accept(&q, 0)?, honest_accept(&q, 1)?],
        cheat_accept,
        bob_state_shift,
        channel_custody: custody,
    })
}

/// One grid point of a parameter sweep; exactly one of `report` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub report: Option<AttackReport>,
    pub error: Option<String>,
}

/// Attacks the document `source` at every value of `param` in `grid`.
/// Grid points run in parallel; rows come back in grid order.
pub fn attack_sweep(
    source: &str,
    param: &str,
    grid: &[f64],
    base: &BTreeMap<String, f64>,
    custody: Option<Actor>,
) -> Vec<SweepRow> {
    grid.par_iter()
        .map(|&value| {
            let mut overrides = base.clone();
            overrides.insert(param.to_string(), value);
            let result = parse_protocol(source, &overrides)
                .map_err(AttackError::from)
                .and_then(|p| epr_attack(&p, custody));
            match result {
                Ok(report) => SweepRow {
                    parameter: value,
                    report: Some(report),
                    error: None,
                },
                Err(e) => SweepRow {
                    parameter: value,
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEAKY: &str = "name leaky\nqubits alice 1 channel 1\nparam theta pi/4\n[prepare alice 0]\n[prepare alice 1]\n\
                         ry(2*theta) a0\n[commit alice]\nswap a0 c0\n[verify 0]\nexpect c0 = 0\n[verify 1]\nry(-2*theta) c0\nexpect c0 = 0\n";

    #[test]
    fn leaky_commitment_gives_cos_squared() {
        let p = parse_protocol(LEAKY, &BTreeMap::new()).unwrap();
        let r = epr_attack(&p, None).unwrap();
        let c = std::f64::consts::FRAC_PI_4.cos();
        assert!((r.fidelity - c).abs() < 1e-12);
        assert!((r.achieved_overlap - c).abs() < 1e-12);
        assert!((r.cheat_accept - c * c).abs() < 1e-12);
        assert_eq!(r.channel_custody, Actor::Bob);
        r.check_invariants().unwrap();
    }

    #[test]
    fn sweep_keeps_grid_order_and_reports_errors() {
        let rows = attack_sweep(LEAKY, "theta", &[0.0, 0.5, 1.0], &BTreeMap::new(), None);
        assert_eq!(
            rows.iter().map(|r| r.parameter).collect::<Vec<_>>(),
            vec![0.0, 0.5, 1.0]
        );
        for row in &rows {
            let r = row.report.as_ref().unwrap();
            assert!((r.fidelity - row.parameter.cos()).abs() < 1e-12);
        }
        let bad = attack_sweep(LEAKY, "phi", &[0.0], &BTreeMap::new(), None);
        assert!(bad[0].report.is_none());
        assert!(bad[0].error.as_ref().unwrap().contains("phi"));
    }

    #[test]
    fn invariant_violation_is_reported() {
        let p = parse_protocol(LEAKY, &BTreeMap::new()).unwrap();
        let mut r = epr_attack(&p, None).unwrap();
        r.achieved_overlap += 1e-3;
        assert!(matches!(
            r.check_invariants(),
            Err(AttackError::Invariant(_))
        ));
        r.achieved_overlap -= 1e-3;
        r.cheat_accept = 1.5;
        assert!(r.check_invariants().is_err());
    }
}
