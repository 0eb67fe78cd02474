//! Round-count bound for coin tossing with bounded imbalance per round.
//!
//! A trajectory `(a_k, b_k)` in `[0, 1]²` starts at the origin and must end
//! at `(1, 1)`. In each step only one coordinate may increase, and the two
//! coordinates may never be more than `ε` apart. Since `max(a, b)` then grows
//! by at most `ε` per step, every valid trajectory has at least `⌈1/ε⌉`
//! steps.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Float slack for gap and endpoint comparisons.
pub const WALK_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EpsilonError {
    #[error("epsilon must lie in (0, 1], got {0}")]
    OutOfRange(String),
    #[error("cannot read '{0}' as a decimal or a fraction p/q")]
    Malformed(String),
}

/// Reads `"0.1"`, `"1/3"` or `"1"` as an exact fraction.
pub fn parse_epsilon(text: &str) -> Result<Ratio<u64>, EpsilonError> {
    let t = text.trim();
    let bad = || EpsilonError::Malformed(text.to_string());
    let value = if let Some((p, q)) = t.split_once('/') {
        let p: u64 = p.trim().parse().map_err(|_| bad())?;
        let q: u64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        Ratio::new(p, q)
    } else if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac.len() as u32);
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac.parse::<u64>().ok()?))
            .ok_or_else(bad)?;
        Ratio::new(num, den)
    } else {
        Ratio::from_integer(t.parse::<u64>().map_err(|_| bad())?)
    };
    Ok(value)
}

/// Fewest rounds any protocol with per-round imbalance `eps` can have: `⌈1/ε⌉`.
pub fn min_rounds(eps: Ratio<u64>) -> Result<u64, EpsilonError> {
    if *eps.numer() == 0 || eps > Ratio::from_integer(1) {
        return Err(EpsilonError::OutOfRange(eps.to_string()));
    }
    Ok(eps.recip().ceil().to_integer())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// A coordinate lies outside `[0, 1]`.
    OutOfRange,
    /// The trajectory does not begin at `(0, 0)`.
    BadStart,
    /// `|a − b| > ε`.
    Gap,
    /// Both coordinates increased in one step.
    SimultaneousAdvance,
    /// The last point is not `(1, 1)`.
    EndpointNotReached,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::OutOfRange => "coordinate outside [0, 1]",
            ViolationKind::BadStart => "trajectory does not start at (0, 0)",
            ViolationKind::Gap => "coordinates differ by more than epsilon",
            ViolationKind::SimultaneousAdvance => "both coordinates advance in one step",
            ViolationKind::EndpointNotReached => "trajectory does not end at (1, 1)",
        };
        f.write_str(s)
    }
}

/// First rule a trajectory breaks, at point `index`.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[error("point {index}: {kind}")]
pub struct WalkViolation {
    pub index: usize,
    pub kind: ViolationKind,
}

/// Checks a trajectory (origin included) and returns its step count.
pub fn validate_walk(points: &[(f64, f64)], eps: Ratio<u64>) -> Result<usize, WalkViolation> {
    let e = *eps.numer() as f64 / *eps.denom() as f64;
    let fail = |index, kind| Err(WalkViolation { index, kind });
    let Some(&first) = points.first() else {
        return fail(0, ViolationKind::BadStart);
    };
    for (i, &(a, b)) in points.iter().enumerate() {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return fail(i, ViolationKind::OutOfRange);
        }
    }
    if first != (0.0, 0.0) {
        return fail(0, ViolationKind::BadStart);
    }
    for (i, w) in points.windows(2).enumerate() {
        let ((a0, b0), (a1, b1)) = (w[0], w[1]);
        if a1 > a0 && b1 > b0 {
            return fail(i + 1, ViolationKind::SimultaneousAdvance);
        }
        if (a1 - b1).abs() > e + WALK_SLACK {
            return fail(i + 1, ViolationKind::Gap);
        }
    }
    let &(a, b) = points.last().expect("nonempty");
    if (1.0 - a) > WALK_SLACK || (1.0 - b) > WALK_SLACK {
        return fail(points.len() - 1, ViolationKind::EndpointNotReached);
    }
    Ok(points.len() - 1)
}
