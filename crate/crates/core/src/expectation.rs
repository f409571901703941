//! Configuration counts and expected numbers of odd holes and odd
//! antiholes in Erdős–Rényi graphs.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::graph::{generate_er, ErParams};
use crate::holes::{find_odd_antiholes, find_odd_holes};

#[derive(Debug, Error, PartialEq)]
pub enum ExpectationError {
    #[error("hole length {i} must be odd and within 5..={n}")]
    BadLength { n: usize, i: usize },
    #[error("edge probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("termination percentage {0} outside (0, 1]")]
    BadPercentage(f64),
}

fn binomial(n: usize, k: usize) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for t in 0..k {
        acc *= n - t;
        acc /= t + 1;
    }
    acc
}

fn factorial(n: usize) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, t| acc * t)
}

/// Number of labeled odd-hole configurations of length `i` on `n` vertices:
/// `C(n, i) * (i - 1)! / 2`.
pub fn count_hole_configs(n: usize, i: usize) -> Result<BigUint, ExpectationError> {
    if i < 5 || i % 2 == 0 || i > n {
        return Err(ExpectationError::BadLength { n, i });
    }
    Ok(binomial(n, i) * factorial(i - 1) / 2u32)
}

fn sum_configs(n: usize, min_len: usize) -> BigUint {
    (min_len..=n)
        .step_by(2)
        .map(|i| count_hole_configs(n, i).expect("odd length in range"))
        .fold(BigUint::zero(), |a, b| a + b)
}

/// All odd-hole configurations on `n` vertices (lengths 5, 7, ...).
pub fn count_all_hole_configs(n: usize) -> BigUint {
    sum_configs(n, 5)
}

/// All odd-antihole configurations on `n` vertices. Length five is
/// excluded, its patterns being counted among the holes.
pub fn count_all_antihole_configs(n: usize) -> BigUint {
    sum_configs(n, 7)
}

/// `E[X]`, `E[X̄]` and `E[X + X̄]` for `G(n, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedCounts {
    pub n: usize,
    pub p: f64,
    pub e_holes: f64,
    pub e_antiholes: f64,
    pub e_total: f64,
}

impl ExpectedCounts {
    /// `n,p,e_holes,e_antiholes,e_total` with shortest round-trip formatting.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.n, self.p, self.e_holes, self.e_antiholes, self.e_total
        )
    }
}

pub const EXPECTED_CSV_HEADER: &str = "n,p,e_holes,e_antiholes,e_total";

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    table.push(0.0);
    for t in 1..=n {
        acc += (t as f64).ln();
        table.push(acc);
    }
    table
}

/// Expected counts for `G(n, p)`.
///
/// A length-`i` hole term is `C(n,i) (i-1)!/2 * p^i (1-p)^(C(i,2)-i)`; the
/// antihole term swaps the two exponents. The configuration count is taken
/// exactly and converted to `f64`; when it overflows, or the power product
/// leaves the normal range, the term is evaluated in log space instead. Each
/// term is exponentiated on its own before summation. `e_total` accumulates
/// `hole + antihole` per length, so it is bit-for-bit symmetric under
/// exchanging `p` and `1 - p`.
pub fn expected_counts(n: usize, p: f64) -> Result<ExpectedCounts, ExpectationError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ExpectationError::BadProbability(p));
    }
    let mut out = ExpectedCounts {
        n,
        p,
        e_holes: 0.0,
        e_antiholes: 0.0,
        e_total: 0.0,
    };
    if p == 0.0 || p == 1.0 || n < 5 {
        return Ok(out);
    }
    let q = 1.0 - p;
    let (lp, lq) = (p.ln(), q.ln());
    let lf = ln_factorials(n);
    for i in (5..=n).step_by(2) {
        let configs = count_hole_configs(n, i)
            .expect("odd length in range")
            .to_f64()
            .unwrap_or(f64::INFINITY);
        let ln_configs = lf[n] - lf[i] - lf[n - i] + lf[i - 1] - std::f64::consts::LN_2;
        let edges = i as i32;
        let chords = (i * (i - 1) / 2 - i) as i32;
        let term = |a: i32, b: i32| {
            let power = p.powi(a) * q.powi(b);
            if configs.is_finite() && power.is_normal() {
                configs * power
            } else {
                (ln_configs + (a as f64 * lp + b as f64 * lq)).exp()
            }
        };
        let hole = term(edges, chords);
        if i == 5 {
            out.e_holes += hole;
            out.e_total += hole;
        } else {
            let anti = term(chords, edges);
            out.e_holes += hole;
            out.e_antiholes += anti;
            out.e_total += hole + anti;
        }
    }
    Ok(out)
}

/// Sample means and standard errors of the hole and antihole counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloCounts {
    pub samples: usize,
    pub mean_holes: f64,
    pub mean_antiholes: f64,
    pub se_holes: f64,
    pub se_antiholes: f64,
}

/// Empirical counterpart of [`expected_counts`]: draws `samples` graphs
/// (sample `s` uses seed `seed + s`) and counts every odd hole and antihole.
pub fn monte_carlo_counts(n: usize, p: f64, samples: usize, seed: u64) -> MonteCarloCounts {
    assert!(samples >= 1, "need at least one sample");
    let (mut sh, mut sh2, mut sa, mut sa2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for s in 0..samples {
        let g = generate_er(ErParams::new(n, p, seed.wrapping_add(s as u64)));
        let h = find_odd_holes(&g, None).len() as f64;
        let a = find_odd_antiholes(&g, None).len() as f64;
        sh += h;
        sh2 += h * h;
        sa += a;
        sa2 += a * a;
    }
    let m = samples as f64;
    let se = |sum: f64, sum2: f64| {
        if samples < 2 {
            return 0.0;
        }
        let mean = sum / m;
        let var = ((sum2 - m * mean * mean) / (m - 1.0)).max(0.0);
        (var / m).sqrt()
    };
    MonteCarloCounts {
        samples,
        mean_holes: sh / m,
        mean_antiholes: sa / m,
        se_holes: se(sh, sh2),
        se_antiholes: se(sa, sa2),
    }
}

/// Per-call enumeration limits for holes and antiholes:
/// `max(1, ceil(percentage * expectation))` each.
pub fn termination_threshold(
    n: usize,
    p: f64,
    percentage: f64,
) -> Result<(usize, usize), ExpectationError> {
    if !(percentage > 0.0 && percentage <= 1.0) {
        return Err(ExpectationError::BadPercentage(percentage));
    }
    let e = expected_counts(n, p)?;
    Ok((
        threshold_from(percentage, e.e_holes),
        threshold_from(percentage, e.e_antiholes),
    ))
}

fn threshold_from(percentage: f64, expectation: f64) -> usize {
    ((percentage * expectation).ceil() as usize).max(1)
}
