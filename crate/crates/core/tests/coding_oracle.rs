//! Structured decoders checked against the rank oracle and the sent messages.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wyner_tim::coding::{
    as_linear_scheme, decode_block, plan_quadruple, plan_separate, plan_single, separate_symbols,
    transmit, verify_decodable, ChannelDraw, SchemeBlock, TxRule,
};
use wyner_tim::galois::{Field, FieldElement};
use wyner_tim::topology::{StateId, User};

fn random_msgs(field: Field, n: usize, rng: &mut ChaCha8Rng) -> Vec<FieldElement> {
    (0..n).map(|_| field.rand_element(rng)).collect()
}

fn all_block_builders(field: Field, rng: &mut ChaCha8Rng) -> Vec<SchemeBlock> {
    let mut blocks = vec![
        plan_quadruple(1, &random_msgs(field, 9, rng)).unwrap(),
        plan_quadruple(2, &random_msgs(field, 9, rng)).unwrap(),
        plan_single(StateId::H1, field.rand_element(rng)),
    ];
    for s in StateId::ALL {
        blocks.push(plan_separate(s, &random_msgs(field, separate_symbols(s), rng)).unwrap());
    }
    blocks
}

/// Oracle agreement and round trip in one pass; returns the number of
/// per-receiver decode failures seen.
fn check_block(block: &SchemeBlock, ch: &ChannelDraw, field: Field) -> usize {
    let obs = transmit(block, ch).unwrap();
    let out = decode_block(block, &obs, ch).unwrap();
    let oracle = verify_decodable(&as_linear_scheme(block, field), ch).unwrap();
    let mut fails = 0;
    for rx in User::ALL {
        assert_eq!(
            out.rx_success(rx),
            oracle[rx.idx()],
            "{:?} Rx{rx}",
            block.kind()
        );
        if out.rx_success(rx) {
            let got: Vec<_> = out.decoded[rx.idx()].iter().map(|r| r.unwrap()).collect();
            assert_eq!(got, block.messages(rx));
        } else {
            fails += 1;
        }
    }
    fails
}

#[test]
fn oracle_agreement_all_block_types() {
    let f = Field::new(257).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        for block in all_block_builders(f, &mut rng) {
            let ch = ChannelDraw::random(f, &block.states(), &mut rng);
            check_block(&block, &ch, f);
        }
    }
}

#[test]
fn oracle_agreement_small_field_hits_failures() {
    // At q=3 repetition blocks are singular a third of the time per receiver.
    let f = Field::new(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut fails = 0;
    for _ in 0..2000 {
        for block in all_block_builders(f, &mut rng) {
            let ch = ChannelDraw::random(f, &block.states(), &mut rng);
            fails += check_block(&block, &ch, f);
        }
    }
    assert!(fails > 0);
}

fn exhaustive_quadruple(q: u64, variant: u8) {
    let f = Field::new(q).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(q * 10 + u64::from(variant));
    let block = plan_quadruple(variant, &random_msgs(f, 9, &mut rng)).unwrap();
    let states = block.states();
    let n = ChannelDraw::link_count(&states);
    let nonzero = (q - 1) as usize;
    let total = nonzero.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let values: Vec<FieldElement> = (0..n)
            .map(|_| {
                let v = c % nonzero + 1;
                c /= nonzero;
                f.element(v as u64).unwrap()
            })
            .collect();
        let ch = ChannelDraw::from_link_values(f, &states, &values).unwrap();
        assert_eq!(check_block(&block, &ch, f), 0, "draw {code}");
    }
}

#[test]
fn quadruple_infallible_exhaustive_gf2_gf3() {
    for variant in [1, 2] {
        exhaustive_quadruple(2, variant);
        exhaustive_quadruple(3, variant);
    }
}

#[test]
fn h_repetition_failure_rate() {
    let q = 101u64;
    let f = Field::new(q).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let trials = 100_000;
    let mut failed_blocks = 0u32;
    for _ in 0..trials {
        let block = plan_separate(StateId::H1, &random_msgs(f, 3, &mut rng)).unwrap();
        let ch = ChannelDraw::random(f, &block.states(), &mut rng);
        let out = decode_block(&block, &transmit(&block, &ch).unwrap(), &ch).unwrap();
        failed_blocks += u32::from(!out.all_success());
    }
    let rate = f64::from(failed_blocks) / f64::from(trials);
    assert!(rate <= 6.0 / (q - 1) as f64, "rate {rate}");
    assert!(rate >= 1.0 / (2.0 * (q - 1) as f64), "rate {rate}");
}

#[test]
fn no_cooperation_structure() {
    let f = Field::new(257).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for block in all_block_builders(f, &mut rng) {
        let ls = as_linear_scheme(&block, f);
        for tx in User::ALL {
            let v = ls.precoding(tx);
            assert_eq!(v.cols(), block.messages(tx).len());
            for (k, u) in block.uses().iter().enumerate() {
                for c in 0..v.cols() {
                    let expected = u.rules[tx.idx()] == TxRule::Send(c);
                    assert_eq!(!v.get(k, c).is_zero(), expected);
                }
            }
            // every message symbol goes on the air at least once
            for c in 0..v.cols() {
                assert!((0..v.rows()).any(|k| !v.get(k, c).is_zero()));
            }
        }
    }
}

#[test]
fn quadruple_precoding_reproduces_transmissions() {
    let f = Field::new(257).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for variant in [1, 2] {
        let block = plan_quadruple(variant, &random_msgs(f, 9, &mut rng)).unwrap();
        let ls = as_linear_scheme(&block, f);
        for tx in User::ALL {
            let x = ls.precoding(tx).mul_vec(block.messages(tx)).unwrap();
            for (k, u) in block.uses().iter().enumerate() {
                let sent = u.sent(tx).map(|s| block.messages(tx)[s.index]).unwrap();
                assert_eq!(x[k], sent);
            }
        }
    }
}
