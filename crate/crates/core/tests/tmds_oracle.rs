//! Exhaustive checks of the TMDS codec against a literal, bit-array
//! transcription of the DVI 1.0 encoder equations.

use std::collections::{BTreeSet, HashSet, VecDeque};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmds_leak::tmds::{
    control_symbol, decode_symbol, encode_byte, encode_line, stage_one, DisparityState, TmdsSymbol,
};

mod common;
use common::dvi as oracle;

/// Disparity values reachable from a line start.
fn reachable_states() -> BTreeSet<i32> {
    let mut seen = BTreeSet::from([0]);
    let mut queue = VecDeque::from([0]);
    while let Some(c) = queue.pop_front() {
        for d in 0..=255u8 {
            let (_, n) = oracle::encode(d, c);
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen
}

#[test]
fn oracle_is_self_consistent() {
    // The oracle itself must balance and be invertible before it is used.
    let states = reachable_states();
    assert!(states.iter().all(|c| c.abs() <= 10), "{states:?}");
    for &c in &states {
        let mut words = HashSet::new();
        for d in 0..=255u8 {
            let (q, n) = oracle::encode(d, c);
            let ones = q.iter().filter(|&&b| b).count() as i32;
            assert_eq!(n - c, 2 * ones - 10, "cnt tracks ones minus zeros");
            words.insert(oracle::pack(&q));
        }
        assert_eq!(words.len(), 256, "injective at cnt={c}");
    }
}

#[test]
fn encoder_matches_oracle_exhaustively() {
    let states = reachable_states();
    println!("reachable disparity states: {states:?}");
    for &c in &states {
        for d in 0..=255u8 {
            let (q, n) = oracle::encode(d, c);
            let (sym, next) = encode_byte(d, DisparityState::new(c));
            assert_eq!(sym.bits(), oracle::pack(&q), "d={d:#04x} cnt={c}");
            assert_eq!(next.count(), n, "d={d:#04x} cnt={c}");
            assert_eq!(stage_one(d), oracle::pack(&oracle::stage_one(d)));
        }
    }
}

#[test]
fn round_trip_over_reachable_states() {
    for c in reachable_states() {
        for d in 0..=255u8 {
            let (sym, _) = encode_byte(d, DisparityState::new(c));
            assert_eq!(decode_symbol(sym).unwrap(), d, "d={d} cnt={c}");
        }
    }
}

#[test]
fn stage_one_minimizes_transitions() {
    for d in 0..=255u8 {
        let chosen = oracle::stage_one(d);
        // The rejected alternative toggles odd bits and the flag.
        let mut other = chosen;
        for i in (1..8).step_by(2) {
            other[i] = !other[i];
        }
        other[8] = !other[8];
        assert!(
            oracle::transitions(&chosen[..8]) <= oracle::transitions(&other[..8]),
            "d={d:#04x}"
        );
        let lib = stage_one(d);
        let bits: Vec<bool> = (0..9).map(|i| (lib >> i) & 1 == 1).collect();
        assert_eq!(bits, chosen.to_vec());
    }
}

#[test]
fn disparity_stays_bounded_on_random_bytes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut state = DisparityState::RESET;
    let mut worst = 0;
    for _ in 0..1_000_000 {
        let (_, next) = encode_byte(rng.random(), state);
        state = next;
        worst = worst.max(state.count().abs());
    }
    assert!(worst <= 10, "max |cnt| = {worst}");
}

#[test]
fn control_codes_are_disjoint_from_video() {
    let mut video = HashSet::new();
    for c in reachable_states() {
        for d in 0..=255u8 {
            video.insert(encode_byte(d, DisparityState::new(c)).0.bits());
        }
    }
    let codes: Vec<u16> = (0..4).map(|c| control_symbol(c).unwrap().bits()).collect();
    let distinct: HashSet<_> = codes.iter().collect();
    assert_eq!(distinct.len(), 4);
    for code in codes {
        assert!(!video.contains(&code), "{code:010b} collides with a video word");
    }
    assert_eq!(control_symbol(0).unwrap().bits(), 0b1101010100);
    assert_eq!(control_symbol(1).unwrap().bits(), 0b0010101011);
    assert_eq!(control_symbol(2).unwrap().bits(), 0b0101010100);
    assert_eq!(control_symbol(3).unwrap().bits(), 0b1010101011);
}

/// Runs of identical words in a constant line never exceed two, and when
/// two words are used each takes at least a third of the stream.
fn check_constant_line(v: u8, len: usize) -> Result<(), String> {
    let bits = encode_line(&vec![v; len]);
    let words: Vec<u16> = bits
        .chunks(10)
        .map(|c| c.iter().enumerate().fold(0, |a, (i, &b)| a | ((b as u16) << i)))
        .collect();
    let tail = &words[1..];
    let distinct: HashSet<_> = tail.iter().collect();
    if distinct.len() > 2 {
        return Err(format!("v={v}: {} distinct words", distinct.len()));
    }
    let longest_run = tail
        .chunk_by(|a, b| a == b)
        .map(|run| run.len())
        .max()
        .unwrap_or(0);
    if distinct.len() == 2 {
        if longest_run > 2 {
            return Err(format!("v={v}: run of {longest_run} identical words"));
        }
        for w in &distinct {
            let share = tail.iter().filter(|x| x == w).count() as f64 / tail.len() as f64;
            if share < 1.0 / 3.0 - 0.01 {
                return Err(format!("v={v}: word share {share}"));
            }
        }
        // Bits ten apart are mostly opposite.
        let lvl: Vec<u8> = bits[10..].to_vec();
        let opposite = (0..lvl.len() - 10).filter(|&k| lvl[k] != lvl[k + 10]).count();
        let frac = opposite as f64 / (lvl.len() - 10) as f64;
        if frac <= 0.5 {
            return Err(format!("v={v}: only {frac} of bits invert ten apart"));
        }
    }
    Ok(())
}

#[test]
fn constant_lines_use_at_most_two_interleaved_words() {
    for v in 0..=255u8 {
        check_constant_line(v, 1600).unwrap();
    }
}

proptest! {
    #[test]
    fn lines_are_independent(a in prop::collection::vec(any::<u8>(), 0..40),
                             b in prop::collection::vec(any::<u8>(), 0..40)) {
        let mut joined = encode_line(&a);
        joined.extend(encode_line(&b));
        let again: Vec<u8> = encode_line(&a).into_iter().chain(encode_line(&b)).collect();
        prop_assert_eq!(&joined, &again);
        prop_assert_eq!(joined.len(), 10 * (a.len() + b.len()));
    }

    #[test]
    fn any_word_decodes_or_reports_control(bits in 0u16..1024) {
        let sym = TmdsSymbol::from_bits(bits).unwrap();
        match decode_symbol(sym) {
            Ok(_) => prop_assert!(!sym.is_control()),
            Err(_) => prop_assert!(sym.is_control()),
        }
    }
}
