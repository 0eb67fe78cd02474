//! Acceptance run: one line per criterion, nonzero exit if any fails.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use common::{
    lattice_walks, max_abs_diff, purification_tv, qubit_fidelity, random_commitment, reduced_oracle,
};
use num_rational::Ratio;
use qnogo::attack::epr_attack;
use qnogo::builtin::builtin;
use qnogo::cli::run;
use qnogo::cointoss::{
    induction_report, min_rounds, parse_coin_protocol, truncate_last_round, validate_walk,
    CoinError, Verdict,
};
use qnogo::fidelity::{fidelity_povm, fidelity_purification, fidelity_trace, random_povm_with};
use qnogo::protocol::{
    default_custody, holdings, parse_protocol, purify_protocol, run_commit, Actor, Protocol,
};
use qnogo::qcore::random::{random_density_matrix, random_state, random_unitary};
use qnogo::qcore::{apply_unitary, matrix_sqrt_psd, mutual_information, DensityMatrix, PureState};
use qnogo::schmidt::{schmidt_decompose, uhlmann_unitary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn builtin_protocol(name: &str, overrides: &BTreeMap<String, f64>) -> Protocol {
    parse_protocol(builtin(name).expect("shipped").source, overrides).expect("parses")
}

fn ideal_attack() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["bell-bc", "bb84-bc"] {
        let p = builtin_protocol(name, &BTreeMap::new());
        let start = Instant::now();
        let r = epr_attack(&p, None).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed().as_secs_f64();
        // Bob's pre-open state, before and after Alice's local unitary
        let q = purify_protocol(&p).map_err(|e| e.to_string())?;
        let custody = default_custody(&q);
        let alice = holdings(&q, Actor::Alice, custody);
        let bob = holdings(&q, Actor::Bob, custody);
        let psi0 = run_commit(&q, 0).map_err(|e| e.to_string())?;
        let psi1 = run_commit(&q, 1).map_err(|e| e.to_string())?;
        let (u, _) = uhlmann_unitary(&psi0, &psi1, &alice).map_err(|e| e.to_string())?;
        let moved = apply_unitary(&psi0, &alice, &u).map_err(|e| e.to_string())?;
        let n = q.num_qubits();
        let shift = max_abs_diff(
            &reduced_oracle(psi0.amplitudes(), n, &bob),
            &reduced_oracle(moved.amplitudes(), n, &bob),
        );
        ok &= r.delta <= 1e-9
            && (r.cheat_accept - 1.0).abs() <= 1e-6
            && shift <= 1e-10
            && r.bob_state_shift <= 1e-10
            && elapsed < 1.0
            && n <= 10;
        details.push(format!(
            "{name}: delta {:.1e}, accept {:.9}, Bob shift {:.1e}, {} qubits, {:.1} ms",
            r.delta,
            r.cheat_accept,
            shift,
            n,
            elapsed * 1e3
        ));
    }
    check(ok, details.join("; "))
}

fn overlap_identity() -> Outcome {
    let mut worst_overlap = 0.0f64;
    let mut worst_cos = 0.0f64;
    for k in 0..=8 {
        let theta = PI / 16.0 * k as f64;
        let p = builtin_protocol("leaky-bc", &BTreeMap::from([("theta".to_string(), theta)]));
        let r = epr_attack(&p, None).map_err(|e| e.to_string())?;
        let bob = holdings(&p, Actor::Bob, r.channel_custody);
        let rho = |b| {
            reduced_oracle(
                run_commit(&p, b).expect("runs").amplitudes(),
                p.num_qubits(),
                &bob,
            )
        };
        let f = qubit_fidelity(&rho(0), &rho(1));
        worst_overlap = worst_overlap.max((r.achieved_overlap - f).abs());
        worst_cos = worst_cos
            .max((f - theta.cos()).abs())
            .max((r.fidelity - theta.cos()).abs());
    }
    let mut worst_random = 0.0f64;
    for seed in 0..50 {
        let p = parse_protocol(&random_commitment(seed, false), &BTreeMap::new())
            .map_err(|e| e.to_string())?;
        let r = epr_attack(&p, None).map_err(|e| e.to_string())?;
        let bob = holdings(&p, Actor::Bob, r.channel_custody);
        let rho = |b| {
            DensityMatrix::new(reduced_oracle(
                run_commit(&p, b).expect("runs").amplitudes(),
                p.num_qubits(),
                &bob,
            ))
            .expect("valid state")
        };
        let f = fidelity_trace(&rho(0), &rho(1)).map_err(|e| e.to_string())?;
        worst_random = worst_random.max((r.achieved_overlap - f).abs());
    }
    check(
        worst_overlap <= 1e-6 && worst_random <= 1e-6 && worst_cos <= 1e-8,
        format!(
            "leaky |overlap - F| max {worst_overlap:.1e}, |F - cos| max {worst_cos:.1e}; 50 random protocols |overlap - F| max {worst_random:.1e}"
        ),
    )
}

fn canonical_purification(rho: &DensityMatrix) -> PureState {
    let s = matrix_sqrt_psd(rho.matrix()).expect("psd");
    let d = rho.dim();
    PureState::normalized((0..d * d).map(|i| s[(i / d, i % d)]).collect()).expect("nonzero")
}

fn fidelity_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1DE);
    let (mut route_gap, mut povm_margin, mut pur_excess) =
        (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..200 {
        let d: usize = [2, 4, 8][i % 3];
        let k = d.trailing_zeros() as usize;
        let r0 = random_density_matrix(d, rng.random_range(1..=d), &mut rng)
            .map_err(|e| e.to_string())?;
        let r1 = random_density_matrix(d, rng.random_range(1..=d), &mut rng)
            .map_err(|e| e.to_string())?;
        let f = [
            fidelity_trace(&r0, &r1).map_err(|e| e.to_string())?,
            fidelity_purification(&r0, &r1)
                .map_err(|e| e.to_string())?
                .0,
            fidelity_povm(&r0, &r1).map_err(|e| e.to_string())?.0,
        ];
        for a in 0..3 {
            for b in a + 1..3 {
                route_gap = route_gap.max((f[a] - f[b]).abs());
            }
        }
        let (p0, p1) = (canonical_purification(&r0), canonical_purification(&r1));
        let ancilla: Vec<usize> = (k..2 * k).collect();
        for _ in 0..200 {
            let povm = random_povm_with(d, rng.random_range(1..=2 * d), &mut rng)
                .map_err(|e| e.to_string())?;
            povm_margin =
                povm_margin.min(povm.bhattacharyya(&r0, &r1).map_err(|e| e.to_string())? - f[0]);
            let a = apply_unitary(&p0, &ancilla, &random_unitary(d, &mut rng))
                .map_err(|e| e.to_string())?;
            let b = apply_unitary(&p1, &ancilla, &random_unitary(d, &mut rng))
                .map_err(|e| e.to_string())?;
            pur_excess = pur_excess.max(a.overlap(&b).map_err(|e| e.to_string())? - f[0]);
        }
    }
    check(
        route_gap <= 1e-7 && povm_margin >= -1e-8 && pur_excess <= 1e-8,
        format!(
            "200 pairs: route gap {route_gap:.1e}, min(POVM - F) {povm_margin:.1e}, max(purification - F) {pur_excess:.1e}"
        ),
    )
}

fn schmidt_machinery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5C41);
    let mut min_roundtrip = f64::INFINITY;
    let mut spectrum_gap = 0.0f64;
    let mut deficit = f64::NEG_INFINITY;
    for i in 0..100 {
        let n = 2 + i % 5;
        let na = 1 + rng.random_range(0..n - 1);
        let a_side: Vec<usize> = (0..na).collect();
        let psi = random_state(n, &mut rng).map_err(|e| e.to_string())?;
        let sd = schmidt_decompose(&psi, &a_side).map_err(|e| e.to_string())?;
        min_roundtrip = min_roundtrip.min(
            sd.reconstruct()
                .map_err(|e| e.to_string())?
                .overlap(&psi)
                .map_err(|e| e.to_string())?,
        );

        let twin = apply_unitary(&psi, &a_side, &random_unitary(1 << na, &mut rng))
            .map_err(|e| e.to_string())?;
        let st = schmidt_decompose(&twin, &a_side).map_err(|e| e.to_string())?;
        if st.rank() != sd.rank() {
            spectrum_gap = f64::INFINITY;
        }
        for (x, y) in sd.coefficients.iter().zip(&st.coefficients) {
            spectrum_gap = spectrum_gap.max((x - y).abs());
        }
    }
    for _ in 0..10 {
        let psi0 = random_state(4, &mut rng).map_err(|e| e.to_string())?;
        let psi1 = random_state(4, &mut rng).map_err(|e| e.to_string())?;
        let a_side = [2, 3];
        let (_, best) = uhlmann_unitary(&psi0, &psi1, &a_side).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let v = random_unitary(4, &mut rng);
            let o = apply_unitary(&psi0, &a_side, &v)
                .map_err(|e| e.to_string())?
                .overlap(&psi1)
                .map_err(|e| e.to_string())?;
            deficit = deficit.max(o - best);
        }
    }
    check(
        min_roundtrip >= 1.0 - 1e-9 && spectrum_gap <= 1e-8 && deficit <= 1e-7,
        format!(
            "100 states: min round-trip overlap {min_roundtrip:.12}, spectrum gap {spectrum_gap:.1e}; best random unitary exceeds synthesized by {deficit:.1e}"
        ),
    )
}

fn purification_compiler() -> Outcome {
    let mut worst = 0.0f64;
    let mut ancillas = 0;
    for seed in 0..20 {
        let p = parse_protocol(&random_commitment(1000 + seed, true), &BTreeMap::new())
            .map_err(|e| e.to_string())?;
        ancillas += purify_protocol(&p)
            .map_err(|e| e.to_string())?
            .ancillas
            .len();
        worst = worst.max(purification_tv(&p));
    }
    check(
        worst <= 1e-10,
        format!("20 protocols, {ancillas} ancillas in total, max total variation {worst:.1e}"),
    )
}

fn coin_induction() -> Outcome {
    let cp = parse_coin_protocol(
        builtin("ideal-ct").expect("shipped").source,
        &BTreeMap::new(),
    )
    .map_err(|e| e.to_string())?;
    let honest = cp.outcome_distribution().map_err(|e| e.to_string())?;
    let mut current = cp.purified().map_err(|e| e.to_string())?;
    let (mut worst_f, mut worst_shift, mut steps) = (0.0f64, 0.0f64, 0);
    while !current.rounds.is_empty() {
        let report_step =
            qnogo::cointoss::last_round_fidelities(&current).map_err(|e| e.to_string())?;
        for f in [report_step.f01, report_step.f0inv, report_step.f1inv]
            .into_iter()
            .flatten()
        {
            worst_f = worst_f.max(f);
        }
        current = truncate_last_round(&current).map_err(|e| e.to_string())?;
        let dist = current.outcome_distribution().map_err(|e| e.to_string())?;
        for (row, hrow) in dist.iter().zip(&honest) {
            for (x, y) in row.iter().zip(hrow) {
                worst_shift = worst_shift.max((x - y).abs());
            }
        }
        steps += 1;
    }
    let start = current.initial_state().map_err(|e| e.to_string())?;
    let alice = current.holding(Actor::Alice);
    let mi = mutual_information(&start, &alice).map_err(|e| e.to_string())?;
    let rho_a = reduced_oracle(start.amplitudes(), start.num_qubits(), &alice);
    let impurity = 1.0 - (&rho_a * &rho_a).trace().re;
    let report = induction_report(&cp).map_err(|e| e.to_string())?;
    let contradiction = matches!(report.verdict, Verdict::Contradiction { .. });

    let guess = parse_coin_protocol(
        builtin("guess-ct").expect("shipped").source,
        &BTreeMap::new(),
    )
    .map_err(|e| e.to_string())?;
    let guess_report = induction_report(&guess).map_err(|e| e.to_string())?;
    let mut g = guess.purified().map_err(|e| e.to_string())?;
    let witness = loop {
        match truncate_last_round(&g) {
            Ok(next) => g = next,
            Err(CoinError::NotIdeal { triple, .. }) => break triple.worst().map_or(0.0, |w| w.1),
            Err(e) => return Err(e.to_string()),
        }
    };
    let guess_not_ideal = matches!(guess_report.verdict, Verdict::NotIdeal { .. });
    check(
        steps == 4
            && worst_f <= 1e-8
            && worst_shift <= 1e-8
            && mi <= 1e-9
            && impurity.abs() <= 1e-9
            && contradiction
            && guess_not_ideal
            && witness > 0.1,
        format!(
            "ideal-ct: {steps} truncations, max triple fidelity {:.1e}, max distribution drift {worst_shift:.1e}, MI at N=0 {mi:.1e}, verdict '{}'; guess-ct: '{}', witness {witness:.3}",
            worst_f + 0.0,
            report.summary,
            guess_report.summary
        ),
    )
}

fn round_bound() -> Outcome {
    let mut eps_list: Vec<Ratio<u64>> = (1..=100).map(|q| Ratio::new(1, q)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xE95);
    for _ in 0..50 {
        let q = rng.random_range(1..=10_000u64);
        let p = rng.random_range(1..=q);
        eps_list.push(Ratio::new(p, q));
    }
    let mut exact = true;
    for &eps in &eps_list {
        let n = min_rounds(eps).map_err(|e| e.to_string())?;
        exact &= Ratio::from_integer(n) * eps >= Ratio::from_integer(1);
        exact &= Ratio::from_integer(n - 1) * eps < Ratio::from_integer(1);
    }
    let mut walks = 0usize;
    let mut accepted_short = 0usize;
    for (p, q) in [
        (1, 1),
        (1, 2),
        (1, 3),
        (2, 5),
        (1, 4),
        (2, 7),
        (1, 5),
        (1, 6),
        (1, 7),
    ] {
        let eps = Ratio::new(p, q);
        let bound = min_rounds(eps).map_err(|e| e.to_string())? as usize;
        for steps in 0..bound.min(7) {
            for w in lattice_walks(p, q, 2, steps) {
                walks += 1;
                if validate_walk(&w, eps).is_ok() {
                    accepted_short += 1;
                }
            }
        }
    }
    check(
        exact && accepted_short == 0,
        format!(
            "{} epsilons exact; {walks} walks shorter than the bound (N <= 6), {accepted_short} accepted",
            eps_list.len()
        ),
    )
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir();
    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "--protocol", "bb84-bc"],
        vec!["simulate", "--protocol", "guess-ct", "--output", "csv"],
        vec!["attack", "--protocol", "bell-bc"],
        vec!["attack", "--protocol", "leaky-bc(0.4)", "--output", "csv"],
        vec![
            "sweep",
            "--protocol",
            "leaky-bc",
            "--grid",
            "0:1.5708:9",
            "--output",
            "csv",
        ],
        vec!["sweep", "--protocol", "leaky-bc", "--grid", "0.1,0.2,0.3"],
        vec![
            "fidelity",
            "--samples",
            "30",
            "--povms",
            "30",
            "--seed",
            "7",
        ],
        vec![
            "fidelity",
            "--samples",
            "30",
            "--povms",
            "30",
            "--seed",
            "7",
            "--output",
            "csv",
        ],
        vec!["fidelity", "--protocol", "leaky-bc"],
        vec!["cointoss", "--protocol", "ideal-ct", "--epsilon", "0.1"],
        vec!["cointoss", "--protocol", "guess-ct", "--output", "csv"],
        vec!["purify", "--protocol", "guess-ct"],
        vec!["purify", "--protocol", "bell-bc", "--output", "csv"],
    ];
    let mut differing = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let path = dir.join(format!(
                "qnogo-acceptance-{}-{i}-{attempt}",
                std::process::id()
            ));
            let mut argv = vec!["qnogo"];
            argv.extend(args.iter().copied());
            let path_str = path.to_string_lossy().to_string();
            argv.extend(["--out", path_str.as_str()]);
            let (mut out, mut err) = (Vec::new(), Vec::new());
            let code = run(argv, &mut out, &mut err);
            if code != 0 {
                return Err(format!(
                    "{args:?} exited with {code}: {}",
                    String::from_utf8_lossy(&err)
                ));
            }
            outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
            let _ = std::fs::remove_file(&path);
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(args.join(" "));
        }
    }
    check(
        differing.is_empty(),
        format!(
            "{} command lines run twice, {} differ {:?}",
            commands.len(),
            differing.len(),
            differing
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("ideal commitment attack completeness", ideal_attack),
        ("non-ideal overlap identity", overlap_identity),
        ("fidelity definition equivalence", fidelity_equivalence),
        ("Schmidt machinery", schmidt_machinery),
        ("purification compiler", purification_compiler),
        ("coin-toss induction", coin_induction),
        ("round bound", round_bound),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {} [{tag}] {name} ({:.2} s): {detail}",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
