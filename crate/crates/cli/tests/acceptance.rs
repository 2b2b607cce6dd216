//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wyner_tim::bounds::upper_bound;
use wyner_tim::coding::{
    as_linear_scheme, decode_block, naive_scheme, plan_quadruple, plan_separate, transmit,
    verify_decodable, BlockKind, ChannelDraw, SchemeBlock,
};
use wyner_tim::galois::{Field, FieldElement};
use wyner_tim::simulate::{accounting, run, Horizon, Mode, SimulationConfig};
use wyner_tim::topology::{self, derived, StateDistribution, StateId, User};
use wyner_tim::Rational;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let elapsed = start.elapsed();
    ensure(
        elapsed < limit,
        format!("took {elapsed:?}, limit {limit:?}"),
    )?;
    Ok(format!("{detail} in {elapsed:.2?}"))
}

fn random_msgs(field: Field, n: usize, rng: &mut ChaCha8Rng) -> Vec<FieldElement> {
    (0..n).map(|_| field.rand_element(rng)).collect()
}

fn headline() -> Outcome {
    timed(Duration::from_secs(1), || {
        let exact = accounting(&StateDistribution::uniform(), Mode::Joint);
        ensure(exact == rat(19, 9), format!("accounting {exact}"))?;
        let cfg = SimulationConfig::new(
            StateDistribution::uniform(),
            Horizon::Rounds(1),
            Mode::Joint,
            7,
        );
        let rep = run(&cfg).map_err(|e| e.to_string())?;
        ensure(
            rep.symbols_delivered == 57 && rep.uses == 27 && rep.failures == 0,
            format!(
                "{} symbols, {} uses, {} failures",
                rep.symbols_delivered, rep.uses, rep.failures
            ),
        )?;
        ensure(rep.empirical_dof == rat(19, 9), "empirical dof")?;
        Ok("19/9, 57 symbols in 27 uses".into())
    })
}

fn separate_baseline() -> Outcome {
    let v = accounting(&StateDistribution::uniform(), Mode::Separate);
    ensure(v == rat(2, 1), format!("got {v}"))?;
    Ok("2".into())
}

fn converse() -> Outcome {
    let d = StateDistribution::uniform();
    let u = upper_bound(&d);
    ensure(u == rat(19, 9), format!("upper {u}"))?;
    ensure(
        u == accounting(&d, Mode::Joint),
        "bound differs from achievable",
    )?;
    Ok("19/9 = achievable".into())
}

fn set_verification() -> Outcome {
    use StateId::*;
    let listed_delta: [&[StateId]; 3] = [
        &[D1, F1, G1, H1, I1, K1, K2, D3],
        &[B1, E1, G1, H1, I1, J1, I2, B3],
        &[C1, E1, F1, H1, J1, K1, J2, C3],
    ];
    let listed_gamma: [&[StateId]; 3] = [
        &[B2, E2, G2, H2, I2, B3],
        &[C2, E2, F2, H2, J2, C3],
        &[D2, F2, G2, H2, K2, D3],
    ];
    let listed_both = [E3, F3, G3];
    for i in User::ALL {
        let k = i.idx();
        let delta: BTreeSet<StateId> = listed_delta[k].iter().copied().collect();
        let gamma: BTreeSet<StateId> = listed_gamma[k].iter().copied().collect();
        let theta: BTreeSet<StateId> = StateId::ALL
            .into_iter()
            .filter(|s| !delta.contains(s) && !gamma.contains(s) && *s != listed_both[k])
            .collect();
        ensure(
            derived::both_state(i) == listed_both[k],
            format!("both state {i}"),
        )?;
        ensure(derived::delta(i) == delta, format!("delta {i}"))?;
        ensure(derived::gamma(i) == gamma, format!("gamma {i}"))?;
        ensure(derived::theta(i) == theta, format!("theta {i}"))?;
        ensure(
            topology::delta(i) == delta && topology::gamma(i) == gamma,
            format!("tables {i}"),
        )?;
        ensure(
            topology::theta(i) == theta && topology::both_state(i) == listed_both[k],
            format!("tables {i}"),
        )?;
        ensure(theta.len() == 12, format!("|theta{i}| = {}", theta.len()))?;
        let parts = [BTreeSet::from([listed_both[k]]), delta, gamma, theta];
        let total: usize = parts.iter().map(BTreeSet::len).sum();
        let union: BTreeSet<StateId> = parts.iter().flatten().copied().collect();
        ensure(total == 27 && union.len() == 27, format!("partition {i}"))?;
    }
    Ok("sets match, |theta| = 12, partitions hold".into())
}

fn oracle_equivalence() -> Outcome {
    let f = Field::new(257).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws = 1000;
    let mut compared = 0usize;
    let mut kinds = BTreeSet::new();
    for _ in 0..draws {
        let mut blocks: Vec<SchemeBlock> = vec![
            plan_quadruple(1, &random_msgs(f, 9, &mut rng)).unwrap(),
            plan_quadruple(2, &random_msgs(f, 9, &mut rng)).unwrap(),
        ];
        for s in StateId::ALL {
            let n = wyner_tim::coding::separate_symbols(s);
            blocks.push(plan_separate(s, &random_msgs(f, n, &mut rng)).unwrap());
        }
        for block in blocks {
            kinds.insert(block.kind().label());
            let ch = ChannelDraw::random(f, &block.states(), &mut rng);
            let out = decode_block(&block, &transmit(&block, &ch).unwrap(), &ch).unwrap();
            let oracle = verify_decodable(&as_linear_scheme(&block, f), &ch).unwrap();
            for rx in User::ALL {
                ensure(
                    out.rx_success(rx) == oracle[rx.idx()],
                    format!("{} Rx{rx} disagrees", block.kind().label()),
                )?;
                if out.rx_success(rx) {
                    let got: Vec<FieldElement> =
                        out.decoded[rx.idx()].iter().map(|r| r.unwrap()).collect();
                    ensure(got == block.messages(rx), "decoded wrong values")?;
                }
                compared += 1;
            }
        }
    }
    for k in [
        BlockKind::Quadruple(1).label(),
        BlockKind::Quadruple(2).label(),
        BlockKind::FullRate.label(),
        BlockKind::Repetition.label(),
    ] {
        ensure(kinds.contains(k), format!("missing {k}"))?;
    }
    ensure(
        kinds.iter().any(|k| k.starts_with("silencing")),
        "missing silencing",
    )?;
    Ok(format!(
        "{compared} receiver checks over {draws} draws per block type, 100% agreement"
    ))
}

fn quadruple_infallibility() -> Outcome {
    let mut checked = 0u64;
    for q in [2u64, 3] {
        let f = Field::new(q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(q);
        for variant in [1u8, 2] {
            let block = plan_quadruple(variant, &random_msgs(f, 9, &mut rng)).unwrap();
            let states = block.states();
            let n = ChannelDraw::link_count(&states);
            let nonzero = q - 1;
            for code in 0..nonzero.pow(n as u32) {
                let mut c = code;
                let values: Vec<FieldElement> = (0..n)
                    .map(|_| {
                        let v = c % nonzero + 1;
                        c /= nonzero;
                        f.element(v).unwrap()
                    })
                    .collect();
                let ch = ChannelDraw::from_link_values(f, &states, &values).unwrap();
                let out = decode_block(&block, &transmit(&block, &ch).unwrap(), &ch).unwrap();
                ensure(
                    out.all_success(),
                    format!("q={q} variant {variant} draw {code} failed"),
                )?;
                for rx in User::ALL {
                    let got: Vec<FieldElement> =
                        out.decoded[rx.idx()].iter().map(|r| r.unwrap()).collect();
                    ensure(got == block.messages(rx), "wrong value")?;
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} assignments, 0 failures"))
}

fn h_repetition_stats() -> Outcome {
    let q = 101u64;
    let f = Field::new(q).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let trials = 100_000u32;
    let mut failed = 0u32;
    for i in 0..trials {
        let s = if i % 2 == 0 { StateId::H1 } else { StateId::H2 };
        let block = plan_separate(s, &random_msgs(f, 3, &mut rng)).unwrap();
        let ch = ChannelDraw::random(f, &block.states(), &mut rng);
        let out = decode_block(&block, &transmit(&block, &ch).unwrap(), &ch).unwrap();
        failed += u32::from(!out.all_success());
    }
    let rate = f64::from(failed) / f64::from(trials);
    let upper = 6.0 / 100.0;
    let lower = 1.0 / (2.0 * (q - 1) as f64);
    ensure(rate <= upper, format!("rate {rate:.5} > {upper}"))?;
    ensure(rate >= lower, format!("rate {rate:.5} < {lower}"))?;
    Ok(format!("rate {rate:.5} in [{lower:.5}, {upper}]"))
}

fn random_distribution(rng: &mut ChaCha8Rng) -> StateDistribution {
    let density = rng.gen_range(0.05..1.0);
    let weights: Vec<u64> = StateId::ALL
        .iter()
        .map(|_| {
            if rng.gen_bool(density) {
                rng.gen_range(0..500)
            } else {
                0
            }
        })
        .collect();
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return StateDistribution::point(StateId::ALL[rng.gen_range(0..27)]);
    }
    StateDistribution::new(
        StateId::ALL
            .into_iter()
            .zip(weights)
            .map(|(s, w)| (s, Rational::new(w.into(), total.into()))),
    )
    .unwrap()
}

fn sandwich() -> Outcome {
    timed(Duration::from_secs(30), || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let three = rat(3, 1);
        let n = 10_000;
        for k in 0..n {
            let d = random_distribution(&mut rng);
            let sep = accounting(&d, Mode::Separate);
            let joint = accounting(&d, Mode::Joint);
            let ub = upper_bound(&d);
            ensure(
                sep <= joint && joint <= ub && ub <= three,
                format!("violation at sample {k}: {sep} {joint} {ub}"),
            )?;
        }
        Ok(format!("{n} distributions, 0 violations"))
    })
}

fn negative_control() -> Outcome {
    let f = Field::new(257).unwrap();
    let scheme = naive_scheme(StateId::H1, f);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..1000 {
        let ch = ChannelDraw::random(f, scheme.states(), &mut rng);
        let ok = verify_decodable(&scheme, &ch).unwrap();
        ensure(ok.iter().any(|b| !b), format!("draw {k} fully decodable"))?;
    }
    Ok("undecodable on 1000/1000 draws".into())
}

fn simulate_json(threads: &str, mode: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_wyner-tim"))
        .args([
            "simulate",
            "--uniform",
            "--rounds",
            "3",
            "--mode",
            mode,
            "--seed",
            "31",
            "--q",
            "13",
        ])
        .args(["--format", "json", "--float", "--threads", threads])
        .env_remove("WYNER_TIM_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        matches!(out.status.code(), Some(0 | 2)),
        format!("exit {:?}", out.status.code()),
    )?;
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    for mode in ["joint", "separate"] {
        let base = simulate_json("1", mode)?;
        ensure(!base.is_empty(), "empty output")?;
        for threads in ["1", "2", "4", "0"] {
            ensure(
                simulate_json(threads, mode)? == base,
                format!("{mode} differs with --threads {threads}"),
            )?;
        }
    }
    Ok("byte-identical JSON across runs and thread counts".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("headline dof", headline),
        ("separate baseline", separate_baseline),
        ("converse", converse),
        ("set verification", set_verification),
        ("oracle equivalence", oracle_equivalence),
        ("quadruple infallibility", quadruple_infallibility),
        ("h-repetition failure statistics", h_repetition_stats),
        ("sandwich", sandwich),
        ("negative control", negative_control),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
