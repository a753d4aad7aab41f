//! Direct-summation checks of the geometric-type series bounds used in the
//! convergence analysis.
//!
//! For `0 < β < 1` and every `K`:
//!
//! * `Σ_{k=0}^{K−1} βᵏ ≤ 1/(1−β)`
//! * `Σ_{k=0}^{K−1} βᵏ k ≤ β/(1−β)²`
//! * `Σ_{k=0}^{K−1} βᵏ k² ≤ β(1+β)/(1−β)³`
//! * `Σ_{j=0}^{K−1} βʲ √(j+1) ≤ 2/(1−β)^{3/2}`
//! * `Σ_{j=0}^{K−1} βʲ √j (j+1) ≤ 4β/(1−β)^{5/2}`
//!
//! The first three bounds are the limits of their series, so at large `K`
//! the slack (of order `βᴷ Kᵈᵉᵍ`) is far below the rounding error of a
//! floating-point sum. They are summed term by term in binary fixed point
//! with enough fractional bits to resolve the slack: every term is rounded
//! up and the bound is rounded down, so `bound_down > sum_up` proves the
//! inequality exactly. The last two bounds are loose by a constant factor
//! and are checked with compensated floating-point sums.

use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("beta = {0} is outside (0, 1)")]
    BetaOutOfRange(f64),
    #[error("K must be at least 1")]
    EmptySum,
}

/// Outcome of one bound check.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub beta: f64,
    pub terms: u64,
    pub sum: f64,
    pub bound: f64,
    /// `bound − sum`. For the fixed-point checks this is a lower bound on
    /// the true slack and may underflow to zero.
    pub slack: f64,
    /// `log₁₀(slack)` when the bound holds, resolved beyond the `f64` range.
    pub slack_log10: f64,
    /// Whether `bound − sum > 0` holds (exactly for the rational checks).
    pub holds: bool,
}

/// Exact rational `p / 2^e` equal to the given `f64` in `(0, 1)`.
fn exact_ratio(x: f64) -> (BigUint, usize) {
    debug_assert!(x > 0.0 && x < 1.0);
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, 1074)
    } else {
        (frac | (1u64 << 52), 1075 - exp)
    };
    (BigUint::from(mant), e as usize)
}

fn check_beta(beta: f64) -> Result<(), SeriesError> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(SeriesError::BetaOutOfRange(beta))
    }
}

/// `n / 2^frac_bits` rounded to the nearest `f64` (flushes to zero below
/// the subnormal range).
fn fixed_to_f64(n: &BigUint, frac_bits: usize) -> f64 {
    let nb = n.bits() as usize;
    if nb == 0 {
        return 0.0;
    }
    let keep = nb.min(64);
    let top: u64 = (n >> (nb - keep)).iter_u64_digits().next().unwrap_or(0);
    let exp = nb as i64 - keep as i64 - frac_bits as i64;
    let mut v = top as f64;
    // Scale in steps so intermediate powers of two stay representable.
    let mut e = exp;
    while e != 0 {
        let step = e.clamp(-1000, 1000);
        v *= 2f64.powi(step as i32);
        e -= step;
    }
    v
}

/// `log₁₀(n / 2^frac_bits)` for `n > 0`.
fn fixed_log10(n: &BigUint, frac_bits: usize) -> f64 {
    let nb = n.bits() as usize;
    let keep = nb.min(64);
    let top: u64 = (n >> (nb - keep)).iter_u64_digits().next().unwrap_or(0);
    (top as f64).log10() + (nb as f64 - keep as f64 - frac_bits as f64) * 2f64.log10()
}

/// Adds `carry` into `acc` starting at limb `i`.
fn propagate(acc: &mut [u64], mut i: usize, mut carry: u128) {
    while carry != 0 {
        let t = acc[i] as u128 + carry;
        acc[i] = t as u64;
        carry = t >> 64;
        i += 1;
    }
}

/// One fused pass over the live limbs of `pk`:
/// `sums[d] += pk · kᵈ` for `d = 0, 1, 2`, then `pk ← ⌈pk · p / 2^e⌉`.
///
/// `pk` holds `len` live limbs plus at least one zero limb above them.
fn fused_step(pk: &mut [u64], len: usize, sums: &mut [Vec<u64>; 3], k: u64, p: u64, e: usize) {
    let (k1, k2) = (k as u128, (k * k) as u128);
    let (words, bits) = (e / 64, e % 64);
    let (mut c0, mut c1, mut c2, mut cp) = (0u128, 0u128, 0u128, 0u128);
    let mut inexact = false;
    let mut prev = 0u64;
    let [s0, s1, s2] = sums;
    for i in 0..=len {
        let x = pk[i] as u128;
        if i < len {
            let t = s0[i] as u128 + x + c0;
            s0[i] = t as u64;
            c0 = t >> 64;
            let t = s1[i] as u128 + x * k1 + c1;
            s1[i] = t as u64;
            c1 = t >> 64;
            let t = s2[i] as u128 + x * k2 + c2;
            s2[i] = t as u64;
            c2 = t >> 64;
        }
        // Product limb i of pk · p; output limb j = i − words − 1 of the
        // shifted result takes the previous product limb and this one.
        let t = x * p as u128 + cp;
        let prod = t as u64;
        cp = t >> 64;
        if i < words {
            inexact |= prod != 0;
        } else if i == words {
            if bits > 0 {
                inexact |= prod & ((1u64 << bits) - 1) != 0;
            }
        } else {
            let j = i - words - 1;
            pk[j] = if bits == 0 {
                prev
            } else {
                (prev >> bits) | (prod << (64 - bits))
            };
        }
        prev = prod;
    }
    debug_assert_eq!(cp, 0, "spare limb overflowed");
    // Output limbs from len − words upward only receive the top product
    // limb's remaining high bits.
    let mut j = (len + 1).saturating_sub(words + 1);
    if len >= words {
        pk[j] = if bits == 0 { prev } else { prev >> bits };
        j += 1;
    }
    for w in pk.iter_mut().take(len + 1).skip(j) {
        *w = 0;
    }
    propagate(s0, len, c0);
    propagate(s1, len, c1);
    propagate(s2, len, c2);
    if inexact {
        for w in pk.iter_mut() {
            let (v, overflow) = w.overflowing_add(1);
            *w = v;
            if !overflow {
                break;
            }
        }
    }
}

/// Directed-rounding fixed-point checks of the three power-weighted
/// geometric bounds `Σβᵏ`, `Σβᵏk` and `Σβᵏk²`, sharing one pass over `k`.
fn exact_geometric(beta: f64, terms: u64) -> Result<[BoundCheck; 3], SeriesError> {
    check_beta(beta)?;
    if terms == 0 {
        return Err(SeriesError::EmptySum);
    }
    let (p, e) = exact_ratio(beta);
    let p_word = p.iter_u64_digits().next().unwrap_or(0);
    let q = BigUint::from(1u8) << e;
    // The slack is about β^K K² and the accumulated round-up error is at
    // most K³/(1−β) units; resolve both with a wide margin.
    let k = terms as f64;
    let frac_bits =
        (-k * beta.log2() + 4.0 * k.log2() + 2.0 * (1.0 / (1.0 - beta)).log2() + 128.0).ceil()
            as usize;

    // pk ≥ βᵏ·2^F, rounded up at every step. Fixed-width little-endian
    // limbs keep the hot loop free of allocations.
    let limbs = frac_bits / 64 + 3;
    let mut pk = vec![0u64; limbs];
    pk[frac_bits / 64] = 1u64 << (frac_bits % 64);
    let mut sums = [vec![0u64; limbs], vec![0u64; limbs], vec![0u64; limbs]];
    let mut top = limbs - 1;
    for k in 0..terms {
        while top > 0 && pk[top - 1] == 0 {
            top -= 1;
        }
        if top == 0 {
            break;
        }
        fused_step(&mut pk, top, &mut sums, k, p_word, e);
    }
    let to_big = |v: &[u64]| {
        BigUint::from_slice(
            &v.iter()
                .flat_map(|&w| [w as u32, (w >> 32) as u32])
                .collect::<Vec<_>>(),
        )
    };
    let sums = [to_big(&sums[0]), to_big(&sums[1]), to_big(&sums[2])];

    let one_minus = &q - &p;
    let bounds = [
        (q.clone(), one_minus.clone(), "sum beta^k <= 1/(1-beta)"),
        (&p * &q, one_minus.pow(2), "sum beta^k k <= beta/(1-beta)^2"),
        (
            &p * (&q + &p) * &q,
            one_minus.pow(3),
            "sum beta^k k^2 <= beta(1+beta)/(1-beta)^3",
        ),
    ];
    let mut out = bounds.into_iter().zip(sums).map(|((b_num, b_den, name), sum)| {
        let bound_down = (b_num << frac_bits) / b_den;
        let holds = bound_down > sum;
        let (slack, slack_log10) = if holds {
            let d = &bound_down - &sum;
            (fixed_to_f64(&d, frac_bits), fixed_log10(&d, frac_bits))
        } else {
            let d = &sum - &bound_down;
            (-fixed_to_f64(&d, frac_bits), f64::NAN)
        };
        BoundCheck {
            name,
            beta,
            terms,
            sum: fixed_to_f64(&sum, frac_bits),
            bound: fixed_to_f64(&bound_down, frac_bits),
            slack,
            slack_log10,
            holds,
        }
    });
    Ok([
        out.next().unwrap(),
        out.next().unwrap(),
        out.next().unwrap(),
    ])
}

/// `Σ_{k<K} βᵏ ≤ 1/(1−β)`, exact.
pub fn geometric_bound(beta: f64, terms: u64) -> Result<BoundCheck, SeriesError> {
    let [c, _, _] = exact_geometric(beta, terms)?;
    Ok(c)
}

/// `Σ_{k<K} βᵏ k ≤ β/(1−β)²`, exact.
pub fn linear_weight_bound(beta: f64, terms: u64) -> Result<BoundCheck, SeriesError> {
    let [_, c, _] = exact_geometric(beta, terms)?;
    Ok(c)
}

/// `Σ_{k<K} βᵏ k² ≤ β(1+β)/(1−β)³`, exact.
pub fn quadratic_weight_bound(beta: f64, terms: u64) -> Result<BoundCheck, SeriesError> {
    let [_, _, c] = exact_geometric(beta, terms)?;
    Ok(c)
}

/// Neumaier-compensated sum of `f(j) βʲ` for `j < K`.
fn compensated(beta: f64, terms: u64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut pow = 1.0f64;
    for j in 0..terms {
        let term = pow * f(j as f64);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        pow *= beta;
        if pow == 0.0 {
            break;
        }
    }
    sum + comp
}

fn float_check(
    name: &'static str,
    beta: f64,
    terms: u64,
    sum: f64,
    bound: f64,
) -> BoundCheck {
    BoundCheck {
        name,
        beta,
        terms,
        sum,
        bound,
        slack: bound - sum,
        slack_log10: (bound - sum).log10(),
        holds: bound - sum > 0.0,
    }
}

/// `Σ_{j<K} βʲ √(j+1) ≤ 2/(1−β)^{3/2}`.
pub fn sqrt_weight_bound(beta: f64, terms: u64) -> Result<BoundCheck, SeriesError> {
    check_beta(beta)?;
    if terms == 0 {
        return Err(SeriesError::EmptySum);
    }
    let sum = compensated(beta, terms, |j| (j + 1.0).sqrt());
    let bound = 2.0 / (1.0 - beta).powf(1.5);
    Ok(float_check(
        "sum beta^j sqrt(j+1) <= 2/(1-beta)^(3/2)",
        beta,
        terms,
        sum,
        bound,
    ))
}

/// `Σ_{j<K} βʲ √j (j+1) ≤ 4β/(1−β)^{5/2}`.
pub fn sqrt_linear_weight_bound(beta: f64, terms: u64) -> Result<BoundCheck, SeriesError> {
    check_beta(beta)?;
    if terms == 0 {
        return Err(SeriesError::EmptySum);
    }
    let sum = compensated(beta, terms, |j| j.sqrt() * (j + 1.0));
    let bound = 4.0 * beta / (1.0 - beta).powf(2.5);
    Ok(float_check(
        "sum beta^j sqrt(j)(j+1) <= 4 beta/(1-beta)^(5/2)",
        beta,
        terms,
        sum,
        bound,
    ))
}

/// All five checks for one `β`.
pub fn all_bounds(beta: f64, terms: u64) -> Result<Vec<BoundCheck>, SeriesError> {
    let [a, b, c] = exact_geometric(beta, terms)?;
    Ok(vec![
        a,
        b,
        c,
        sqrt_weight_bound(beta, terms)?,
        sqrt_linear_weight_bound(beta, terms)?,
    ])
}
