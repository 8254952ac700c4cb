//! Sets with a small shifted product set.
//!
//! Take `X = {g^n - 1 : 1 <= n <= M}` with `M = floor(2 sqrt(Np))`, and slide
//! an exponent window `{g^(L+1), ..., g^(L+M)}` around the unit group until it
//! catches the most elements of `X`. The catch `A` has `A + 1` inside the
//! first `M` powers of `g` and `A` inside the window, so `A(A+1)` lives in a
//! window of `2M - 1` consecutive powers.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{isqrt, DlogTable, PrimeField};
use crate::sets::{shifted_product, FpSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalResult {
    pub p: u64,
    pub n: u64,
    pub g: u64,
    /// Window length, `floor(2 sqrt(N p))`.
    pub m: u64,
    /// Window offset in `[0, p - 2]`.
    pub l: u64,
    #[serde(with = "set_as_list")]
    pub a: FpSet,
    pub window_count: u64,
    /// Number of `g^n - 1` that vanished. Always zero while `M <= p - 2`.
    pub zeros_removed: u64,
}

mod set_as_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::sets::FpSet;

    #[derive(Serialize, Deserialize)]
    struct Wire {
        p: u64,
        elements: Vec<u64>,
    }

    pub fn serialize<S: Serializer>(set: &FpSet, s: S) -> Result<S::Ok, S::Error> {
        Wire {
            p: set.modulus(),
            elements: set.to_vec(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<FpSet, D::Error> {
        let w = Wire::deserialize(d)?;
        FpSet::from_residues(w.p, w.elements).map_err(serde::de::Error::custom)
    }
}

/// `floor(2 sqrt(N p))`, computed exactly as `isqrt(4 N p)`.
pub fn window_length(p: u64, n: u64) -> u64 {
    isqrt(4 * n * p)
}

/// Circular sliding-window maximisation on `Z/m`.
///
/// Returns the offset `L` maximising `#{k in logs : k = L + j (mod m), 1 <= j <= M}`
/// and that count; ties go to the smallest `L`. Runs in `O(|logs| + m)`.
pub fn best_window_offset(logs: &[u64], window: u64, m: u64) -> (u64, u64) {
    if logs.is_empty() || m == 0 {
        return (0, 0);
    }
    if window >= m {
        return (0, logs.len() as u64);
    }
    // k is caught by exactly the offsets L in [k - M, k - 1] (mod m).
    let m_us = m as usize;
    let mut delta = vec![0i64; m_us + 1];
    for &k in logs {
        let lo = (k + m - window) % m;
        let hi = (k + m - 1) % m;
        if lo <= hi {
            delta[lo as usize] += 1;
            delta[hi as usize + 1] -= 1;
        } else {
            delta[lo as usize] += 1;
            delta[m_us] -= 1;
            delta[0] += 1;
            delta[hi as usize + 1] -= 1;
        }
    }
    let (mut best_l, mut best) = (0u64, i64::MIN);
    let mut running = 0i64;
    for (l, d) in delta[..m_us].iter().enumerate() {
        running += d;
        if running > best {
            best = running;
            best_l = l as u64;
        }
    }
    (best_l, best as u64)
}

/// Builds `A` with `|A| >= N` and `|A(A+1)| <= 2M - 1`.
pub fn build_extremal_set(p: u64, n: u64) -> Result<ExtremalResult> {
    let table = DlogTable::build(PrimeField::new(p)?)?;
    build_extremal_set_with(&table, n)
}

/// As [`build_extremal_set`], reusing a discrete-log table.
pub fn build_extremal_set_with(table: &DlogTable, n: u64) -> Result<ExtremalResult> {
    let p = table.modulus();
    if n == 0 || 10 * n >= p {
        return Err(LabError::Precondition(format!(
            "need 1 <= N < 0.1 p, got N = {n}, p = {p}"
        )));
    }
    let m = window_length(p, n);
    if m < 1 || m > p - 2 {
        return Err(LabError::Precondition(format!(
            "window length M = {m} must lie in [1, p - 2] for p = {p}"
        )));
    }
    let order = p - 1;
    let mut zeros_removed = 0;
    let mut members = Vec::with_capacity(m as usize);
    for k in 1..=m {
        let x = (table.exp(k) + p - 1) % p;
        if x == 0 {
            zeros_removed += 1;
        } else {
            members.push(x);
        }
    }
    let mut logs: Vec<u64> = members
        .iter()
        .map(|&x| table.log(x).expect("nonzero"))
        .collect();
    logs.sort_unstable();
    logs.dedup();

    let (l, count) = best_window_offset(&logs, m, order);
    let a = FpSet::from_residues(
        p,
        members.iter().copied().filter(|&x| {
            let k = table.log(x).expect("nonzero");
            (k + 2 * order - l - 1) % order < m
        }),
    )?;
    if a.len() as u64 != count {
        return Err(LabError::Internal(format!(
            "window offset {l} reports {count} members but {} were collected",
            a.len()
        )));
    }
    if count < n {
        return Err(LabError::Falsified(format!(
            "best window catches only {count} < N = {n} elements (p = {p}, M = {m})"
        )));
    }
    Ok(ExtremalResult {
        p,
        n,
        g: table.field().generator(),
        m,
        l,
        a,
        window_count: count,
        zeros_removed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalVerification {
    pub card_a: u64,
    /// `|A(A+1)|`, recomputed by brute force.
    pub shifted_card: u64,
    pub two_m: u64,
    /// `4 sqrt(p |A|)`.
    pub sqrt_bound: f64,
    /// `|A(A+1)| / sqrt(p |A|)`.
    pub ratio_sqrt_pa: f64,
    /// `|A(A+1)| / (2M)`.
    pub ratio_two_m: f64,
    /// `A(A+1)` sits inside `{g^(L+2), ..., g^(L+2M)}`.
    pub containment: bool,
}

fn fail(result: &ExtremalResult, what: String) -> LabError {
    LabError::Falsified(format!(
        "extremal verification (p = {}, N = {}, g = {}, M = {}, L = {}, |A| = {}): {what}",
        result.p,
        result.n,
        result.g,
        result.m,
        result.l,
        result.a.len()
    ))
}

/// Re-checks every structural invariant of `result` and the size bounds
/// `|A(A+1)| <= 2M` and `|A(A+1)| <= 4 sqrt(p |A|)` as exact integer
/// comparisons.
pub fn verify_extremal(result: &ExtremalResult) -> Result<ExtremalVerification> {
    let p = result.p;
    let table = DlogTable::build(PrimeField::with_generator(p, result.g)?)?;
    let order = p - 1;
    let m = result.m;
    if result.a.modulus() != p {
        return Err(fail(result, format!("A lives in F_{}", result.a.modulus())));
    }
    if m != window_length(p, result.n) {
        return Err(fail(result, "M != floor(2 sqrt(N p))".into()));
    }
    for x in result.a.iter() {
        let Some(k) = table.log(x) else {
            return Err(fail(result, "0 is in A".into()));
        };
        if (k + 2 * order - result.l - 1) % order >= m {
            return Err(fail(result, format!("{x} = g^{k} is outside the exponent window")));
        }
        let shifted = table.log(x + 1).map(|k| if k == 0 { order } else { k });
        if !matches!(shifted, Some(k) if (1..=m).contains(&k)) {
            return Err(fail(result, format!("{x} + 1 is not among g^1..g^M")));
        }
    }
    let card_a = result.a.len() as u64;
    if card_a != result.window_count || card_a < result.n {
        return Err(fail(
            result,
            format!("|A| = {card_a}, window_count = {}", result.window_count),
        ));
    }

    // Brute force, independent of product_set.
    let mut shifted_members = vec![false; p as usize];
    for a in result.a.iter() {
        for b in result.a.iter() {
            shifted_members[(a * (b + 1) % p) as usize] = true;
        }
    }
    let shifted_card = shifted_members.iter().filter(|&&b| b).count() as u64;
    if shifted_card != shifted_product(&result.a).len() as u64 {
        return Err(LabError::Internal("brute-force A(A+1) disagrees with shifted_product".into()));
    }
    let containment = shifted_members.iter().enumerate().all(|(y, &hit)| {
        !hit || table
            .log(y as u64)
            .is_some_and(|k| (k + 2 * order - result.l - 2) % order < 2 * m - 1)
    });
    if !containment {
        return Err(fail(result, "A(A+1) escapes {g^(L+2), ..., g^(L+2M)}".into()));
    }
    if shifted_card > 2 * m {
        return Err(fail(result, format!("|A(A+1)| = {shifted_card} > 2M = {}", 2 * m)));
    }
    // |A(A+1)| <= 4 sqrt(p|A|)  <=>  |A(A+1)|^2 <= 16 p |A|
    if (shifted_card as u128).pow(2) > 16 * p as u128 * card_a as u128 {
        return Err(fail(result, format!("|A(A+1)| = {shifted_card} > 4 sqrt(p|A|)")));
    }
    let root = ((p * card_a) as f64).sqrt();
    Ok(ExtremalVerification {
        card_a,
        shifted_card,
        two_m: 2 * m,
        sqrt_bound: 4.0 * root,
        ratio_sqrt_pa: shifted_card as f64 / root,
        ratio_two_m: shifted_card as f64 / (2 * m) as f64,
        containment,
    })
}
