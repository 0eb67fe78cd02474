//! Reference implementations used as test oracles. Each one is written from
//! the textbook definition and avoids the library's own kernels.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use qnogo::protocol::{Instruction, Protocol, ResultBit};
use qnogo::qcore::random::random_unitary;
use qnogo::qcore::{GateKind, GateOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type M = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn bit(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

fn sub_index(index: usize, qubits: &[usize], n: usize) -> usize {
    qubits
        .iter()
        .fold(0, |acc, &q| (acc << 1) | bit(index, q, n))
}

/// Full `2^n × 2^n` operator of `u` on `targets` (qubit 0 most significant),
/// active only when every control is 1. Built entry by entry from
/// `⟨i|U|j⟩ = u[i_T, j_T]` when `i` and `j` agree off the targets.
pub fn full_operator(u: &M, targets: &[usize], controls: &[usize], n: usize) -> M {
    let dim = 1usize << n;
    let mut mask = 0usize;
    for &t in targets {
        mask |= 1 << (n - 1 - t);
    }
    M::from_fn(dim, dim, |i, j| {
        if i & !mask != j & !mask {
            return c(0.0, 0.0);
        }
        let active = controls.iter().all(|&q| bit(j, q, n) == 1);
        if active {
            u[(sub_index(i, targets, n), sub_index(j, targets, n))]
        } else if i == j {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Named gate matrices written out independently of the library.
pub fn gate_matrix(kind: &GateKind) -> M {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let m = |d: usize, v: &[(f64, f64)]| {
        M::from_row_slice(d, d, &v.iter().map(|&(a, b)| c(a, b)).collect::<Vec<_>>())
    };
    match kind {
        GateKind::H => m(2, &[(r, 0.), (r, 0.), (r, 0.), (-r, 0.)]),
        GateKind::X => m(2, &[(0., 0.), (1., 0.), (1., 0.), (0., 0.)]),
        GateKind::Y => m(2, &[(0., 0.), (0., -1.), (0., 1.), (0., 0.)]),
        GateKind::Z => m(2, &[(1., 0.), (0., 0.), (0., 0.), (-1., 0.)]),
        GateKind::S => m(2, &[(1., 0.), (0., 0.), (0., 0.), (0., 1.)]),
        GateKind::T => m(2, &[(1., 0.), (0., 0.), (0., 0.), (r, r)]),
        GateKind::Ry(t) => {
            let (s, co) = (t / 2.0).sin_cos();
            m(2, &[(co, 0.), (-s, 0.), (s, 0.), (co, 0.)])
        }
        GateKind::Rz(t) => {
            let (s, co) = (t / 2.0).sin_cos();
            m(2, &[(co, -s), (0., 0.), (0., 0.), (co, s)])
        }
        GateKind::Cx => M::from_fn(4, 4, |i, j| {
            let image = if j >= 2 { j ^ 1 } else { j };
            if i == image {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        }),
        GateKind::Cz => M::from_fn(4, 4, |i, j| match (i == j, i) {
            (true, 3) => c(-1.0, 0.0),
            (true, _) => c(1.0, 0.0),
            _ => c(0.0, 0.0),
        }),
        GateKind::Swap => M::from_fn(4, 4, |i, j| {
            let image = ((j & 1) << 1) | (j >> 1);
            if i == image {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        }),
        GateKind::Raw(u) => u.clone(),
    }
}

pub fn mat_vec(m: &M, v: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn apply_gate_oracle(amps: &[C64], gate: &GateOp, n: usize) -> Vec<C64> {
    mat_vec(
        &full_operator(
            &gate_matrix(gate.kind()),
            gate.targets(),
            gate.controls(),
            n,
        ),
        amps,
    )
}

/// `ρ_keep[i, j] = Σ_r ψ[i ⊕ r] ψ[j ⊕ r]*`, summing over the traced bits `r`.
pub fn reduced_oracle(amps: &[C64], n: usize, keep: &[usize]) -> M {
    let k = keep.len();
    let mut rho = M::zeros(1 << k, 1 << k);
    for x in 0..amps.len() {
        for y in 0..amps.len() {
            let same_rest = (0..n)
                .filter(|q| !keep.contains(q))
                .all(|q| bit(x, q, n) == bit(y, q, n));
            if same_rest {
                rho[(sub_index(x, keep, n), sub_index(y, keep, n))] += amps[x] * amps[y].conj();
            }
        }
    }
    rho
}

pub fn max_abs_diff(a: &M, b: &M) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `Σ √(p_i q_i)` for commuting (diagonal) states.
pub fn classical_fidelity(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum()
}

/// Single-qubit closed form `F² = Tr(ρσ) + 2√(det ρ · det σ)`.
pub fn qubit_fidelity(rho: &M, sigma: &M) -> f64 {
    let tr = (rho * sigma).trace().re;
    let det = |m: &M| (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re.max(0.0);
    (tr + 2.0 * (det(rho) * det(sigma)).sqrt()).max(0.0).sqrt()
}

/// Bloch-vector density matrix `(I + r·σ)/2`.
pub fn bloch(x: f64, y: f64, z: f64) -> M {
    M::from_row_slice(
        2,
        2,
        &[
            c((1.0 + z) / 2.0, 0.0),
            c(x / 2.0, -y / 2.0),
            c(x / 2.0, y / 2.0),
            c((1.0 - z) / 2.0, 0.0),
        ],
    )
}

/// One branch of an unpurified run: its measurement record and weight.
#[derive(Debug, Clone)]
pub struct Branch {
    pub record: BTreeMap<ResultBit, u8>,
    pub accept: bool,
    pub probability: f64,
}

/// Runs the original protocol with real measurements, splitting into one
/// branch per outcome, and returns the joint law of record and verdict.
pub fn enumerate_branches(p: &Protocol, bit_value: u8, claimed: u8) -> Vec<Branch> {
    let n = p.num_qubits();
    let mut init = vec![c(0.0, 0.0); 1 << n];
    init[0] = c(1.0, 0.0);
    for g in p.initial_alice[bit_value as usize]
        .iter()
        .chain(&p.initial_bob)
    {
        init = apply_gate_oracle(&init, g, n);
    }
    // unnormalized branch vectors; their squared norms are the weights
    let mut branches: Vec<(BTreeMap<ResultBit, u8>, Vec<C64>)> = vec![(BTreeMap::new(), init)];
    for round in p.commit_rounds.iter().chain(&p.open_rounds) {
        for instr in &round.instructions {
            let mut next = Vec::new();
            for (record, amps) in branches {
                match instr {
                    Instruction::Gate(g) => next.push((record, apply_gate_oracle(&amps, g, n))),
                    Instruction::Conditional { gate, control } => {
                        let amps = if record[control] == 1 {
                            apply_gate_oracle(&amps, gate, n)
                        } else {
                            amps
                        };
                        next.push((record, amps));
                    }
                    Instruction::Measure(m) => {
                        for outcome in 0..1usize << m.qubits.len() {
                            let projected: Vec<C64> = amps
                                .iter()
                                .enumerate()
                                .map(|(i, a)| {
                                    if sub_index(i, &m.qubits, n) == outcome {
                                        *a
                                    } else {
                                        c(0.0, 0.0)
                                    }
                                })
                                .collect();
                            let mut rec = record.clone();
                            for k in 0..m.qubits.len() {
                                let b = (outcome >> (m.qubits.len() - 1 - k)) & 1;
                                rec.insert(
                                    ResultBit {
                                        id: m.id.clone(),
                                        bit: k,
                                    },
                                    b as u8,
                                );
                            }
                            next.push((rec, projected));
                        }
                    }
                }
            }
            branches = next;
        }
    }
    let proj = &p.verification[claimed as usize];
    let full = full_operator(proj.matrix(), proj.qubits(), &[], n);
    let mut out = Vec::new();
    for (record, amps) in branches {
        let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let pass: f64 = mat_vec(&full, &amps).iter().map(|a| a.norm_sqr()).sum();
        out.push(Branch {
            record: record.clone(),
            accept: true,
            probability: pass,
        });
        out.push(Branch {
            record,
            accept: false,
            probability: (total - pass).max(0.0),
        });
    }
    out
}

fn write_matrix(out: &mut String, u: &M) {
    out.push('[');
    for i in 0..u.nrows() {
        out.push_str("\n  ");
        for j in 0..u.ncols() {
            let z = u[(i, j)];
            let _ = write!(out, "[{:.17}, {:.17}]", z.re, z.im);
            if i + 1 < u.nrows() || j + 1 < u.ncols() {
                out.push_str(", ");
            }
        }
    }
    out.push_str("\n]\n");
}

fn raw(out: &mut String, qubits: &str, rng: &mut ChaCha8Rng) {
    let dim = 1 << qubits.split_whitespace().count();
    let _ = write!(out, "raw {qubits} ");
    write_matrix(out, &random_unitary(dim, rng));
}

/// Random bit commitment on 2 Alice, 2 Bob and 1 channel qubit whose gates
/// are all random explicit unitaries. With `measured`, rounds also contain
/// measurements and gates classically controlled on them.
pub fn random_commitment(seed: u64, measured: bool) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = format!("name random-{seed}\nqubits alice 2 bob 2 channel 1\n");
    for b in 0..2 {
        let _ = writeln!(s, "\n[prepare alice {b}]");
        raw(&mut s, "a0 a1", &mut rng);
    }
    s.push_str("\n[prepare bob]\n");
    raw(&mut s, "b0 b1 c0", &mut rng);
    let rounds = rng.random_range(2..=3);
    for r in 0..rounds {
        let actor = if r % 2 == 0 { "alice" } else { "bob" };
        let _ = writeln!(s, "\n[commit {actor}]");
        if actor == "alice" {
            raw(&mut s, "a0 a1 c0", &mut rng);
            if measured && r == 0 {
                s.push_str("measure a1 -> ma\n");
                raw(&mut s, "a0 c0", &mut rng);
            }
        } else {
            raw(&mut s, "b0 b1 c0", &mut rng);
            if measured {
                s.push_str("measure b0 b1 -> mb\nry(0.9) c0 if mb[1]\n");
                raw(&mut s, "b1 c0", &mut rng);
            }
        }
    }
    s.push_str("\n[open alice]\n");
    if measured {
        s.push_str("x c0 if ma\nh a0 if ma\n");
    }
    raw(&mut s, "a0 a1 c0", &mut rng);
    if measured {
        s.push_str("measure a0 -> mo\n");
        raw(&mut s, "a1 c0", &mut rng);
    }
    s.push_str("\n[verify 0]\nexpect b0 c0 in 00 11\n\n[verify 1]\n");
    raw(&mut s, "b1 c0", &mut rng);
    s.push_str("expect c0 = 1\n");
    s
}

/// Every lattice trajectory with `steps` steps for `ε = p/q`, on the grid of
/// spacing `ε/m`. Each step moves one coordinate by at most `ε` in either
/// direction (or stands still).
pub fn lattice_walks(p: u64, q: u64, m: u64, steps: usize) -> Vec<Vec<(f64, f64)>> {
    let unit = (q * m) as f64;
    let reach = (p * m) as i64;
    let top = (q * m) as i64;
    let mut moves = vec![(0i64, 0i64)];
    for d in (-reach..=reach).filter(|&d| d != 0) {
        moves.push((d, 0));
        moves.push((0, d));
    }
    let mut walks: Vec<Vec<(i64, i64)>> = vec![vec![(0, 0)]];
    for _ in 0..steps {
        let mut next = Vec::with_capacity(walks.len() * moves.len());
        for w in &walks {
            let (a, b) = *w.last().expect("nonempty");
            for &(da, db) in &moves {
                // leaving [0, 1] can never be undone into a valid walk
                let (na, nb) = (a + da, b + db);
                if (0..=top).contains(&na) && (0..=top).contains(&nb) {
                    let mut v = w.clone();
                    v.push((na, nb));
                    next.push(v);
                }
            }
        }
        walks = next;
    }
    walks
        .into_iter()
        .map(|w| {
            w.into_iter()
                .map(|(a, b)| (a as f64 / unit, b as f64 / unit))
                .collect()
        })
        .collect()
}

/// Largest total-variation distance, over committed and claimed bits, between
/// the purified protocol's record/verdict law and the branch enumeration of
/// the original.
pub fn purification_tv(p: &Protocol) -> f64 {
    let q = qnogo::protocol::purify_protocol(p).expect("purifies");
    let mut worst = 0.0f64;
    for b in 0..2u8 {
        for claimed in 0..2u8 {
            let mut law: BTreeMap<(Vec<(ResultBit, u8)>, bool), [f64; 2]> = BTreeMap::new();
            for w in qnogo::protocol::outcome_distribution(&q, b, claimed).expect("runs") {
                let mut rec: Vec<(ResultBit, u8)> = q
                    .ancillas
                    .iter()
                    .map(|a| a.source.clone())
                    .zip(w.record)
                    .collect();
                rec.sort();
                law.entry((rec, w.accept)).or_default()[0] += w.probability;
            }
            for br in enumerate_branches(p, b, claimed) {
                let rec: Vec<(ResultBit, u8)> = br.record.into_iter().collect();
                law.entry((rec, br.accept)).or_default()[1] += br.probability;
            }
            let tv: f64 = law.values().map(|[x, y]| (x - y).abs()).sum::<f64>() / 2.0;
            worst = worst.max(tv);
        }
    }
    worst
}
