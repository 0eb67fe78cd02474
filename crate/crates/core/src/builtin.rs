//! Protocols shipped with the crate, stored as ordinary documents.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKind {
    Commitment,
    CoinToss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Builtin {
    pub name: &'static str,
    pub kind: BuiltinKind,
    /// Parameter filled by the `name(value)` shorthand.
    pub param: Option<&'static str>,
    pub source: &'static str,
}

pub const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "bell-bc",
        kind: BuiltinKind::Commitment,
        param: None,
        source: include_str!("../protocols/bell-bc.qp"),
    },
    Builtin {
        name: "bb84-bc",
        kind: BuiltinKind::Commitment,
        param: None,
        source: include_str!("../protocols/bb84-bc.qp"),
    },
    Builtin {
        name: "leaky-bc",
        kind: BuiltinKind::Commitment,
        param: Some("theta"),
        source: include_str!("../protocols/leaky-bc.qp"),
    },
    Builtin {
        name: "ideal-ct",
        kind: BuiltinKind::CoinToss,
        param: None,
        source: include_str!("../protocols/ideal-ct.qp"),
    },
    Builtin {
        name: "guess-ct",
        kind: BuiltinKind::CoinToss,
        param: None,
        source: include_str!("../protocols/guess-ct.qp"),
    },
];

pub fn builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

/// Resolves `name` or `name(value)` to a built-in and the parameter override
/// implied by the argument. Returns `None` when `spec` names no built-in.
pub fn resolve(spec: &str) -> Option<Result<(&'static Builtin, BTreeMap<String, f64>), String>> {
    let spec = spec.trim();
    let (name, arg) = match spec.split_once('(') {
        Some((name, rest)) => (name.trim(), Some(rest)),
        None => (spec, None),
    };
    let b = builtin(name)?;
    let mut overrides = BTreeMap::new();
    if let Some(rest) = arg {
        let Some(inner) = rest.strip_suffix(')') else {
            return Some(Err(format!("missing ')' in '{spec}'")));
        };
        let Some(param) = b.param else {
            return Some(Err(format!("built-in '{name}' takes no parameter")));
        };
        match inner.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => {
                overrides.insert(param.to_string(), v);
            }
            _ => return Some(Err(format!("cannot read '{inner}' as a number"))),
        }
    }
    Some(Ok((b, overrides)))
}
