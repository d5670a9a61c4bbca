use rayon::prelude::*;

use crate::graph::{evaluate, ComputationGraph, EvalError, WeightStore};

/// Per-node value keys over `inits` random weight draws, each component kept
/// to `digits` significant decimal digits.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintTable {
    pub inits: usize,
    pub digits: u32,
    pub seed: u64,
    pub keys: Vec<String>,
}

impl FingerprintTable {
    pub fn key(&self, node: crate::graph::NodeId) -> &str {
        &self.keys[node.0]
    }
}

/// Draws `inits` weight lists from one generator seeded with `seed`.
/// Only trainable entries are resampled (uniform on [-1, 1]).
pub fn sample_weights(store: &WeightStore, seed: u64, inits: usize) -> Vec<WeightStore> {
    let mut rng = crate::rng::seeded(seed);
    (0..inits).map(|_| store.resampled(&mut rng)).collect()
}

pub fn fingerprint(
    g: &ComputationGraph,
    store: &WeightStore,
    inits: usize,
    digits: u32,
    seed: u64,
) -> Result<FingerprintTable, EvalError> {
    assert!(inits >= 1, "at least one initialisation is required");
    assert!((1..=17).contains(&digits), "significant digits must be in 1..=17");
    let draws = sample_weights(store, seed, inits);
    let runs: Vec<_> = draws
        .par_iter()
        .map(|w| evaluate(g, w))
        .collect::<Result<_, _>>()?;
    let keys = (0..g.len())
        .map(|n| {
            let mut key = String::new();
            for (i, values) in runs.iter().enumerate() {
                if i > 0 {
                    key.push(';');
                }
                for (j, &v) in values[n].iter().enumerate() {
                    if j > 0 {
                        key.push(',');
                    }
                    key.push_str(&quantize(v, digits));
                }
            }
            key
        })
        .collect();
    Ok(FingerprintTable { inits, digits, seed, keys })
}

/// Decimal representation of `v` rounded to `digits` significant digits,
/// ties rounded away from zero, e.g. `quantize(2.5, 1) == "3e0"`.
///
/// Zero, negative zero and magnitudes below 1e-300 all map to `"0"`.
pub fn quantize(v: f64, digits: u32) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 || v.abs() < 1e-300 {
        return "0".into();
    }
    let s = digits as usize;
    let sign = if v < 0.0 { "-" } else { "" };
    let a = v.abs();

    let (mut mant, mut exp, round_up) = {
        let (m, e) = sci_digits(a, s + 25);
        let rest = &m[s..];
        if rest[0] == b'5' && rest[1..].iter().all(|&c| c == b'0') {
            // Possibly an exact tie; the 800-digit expansion of an f64 is exact.
            let (m, e) = sci_digits(a, 800);
            let up = m[s] >= b'5';
            (m[..s].to_vec(), e, up)
        } else {
            (m[..s].to_vec(), e, rest[0] >= b'5')
        }
    };
    if round_up {
        let mut i = s;
        loop {
            if i == 0 {
                mant.insert(0, b'1');
                mant.truncate(s);
                exp += 1;
                break;
            }
            i -= 1;
            if mant[i] == b'9' {
                mant[i] = b'0';
            } else {
                mant[i] += 1;
                break;
            }
        }
    }
    format!("{sign}{}e{exp}", std::str::from_utf8(&mant).expect("ascii digits"))
}

/// Mantissa digits (without the point) and exponent of `a` in scientific
/// notation with `precision` digits after the point.
fn sci_digits(a: f64, precision: usize) -> (Vec<u8>, i32) {
    let text = format!("{a:.precision$e}");
    let (m, e) = text.split_once('e').expect("scientific notation");
    let digits = m.bytes().filter(u8::is_ascii_digit).collect();
    (digits, e.parse().expect("integer exponent"))
}
