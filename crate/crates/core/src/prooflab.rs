//! Machine checks for the combinatorial steps behind the `A(A+1)` growth
//! exponent: the popular anchor `b0`, dyadic level sets, the injection that
//! bounds `|(b1-b2)A + (b3-b4)A|`, an exhaustive BSG-type witness search,
//! the multiplicative Ruzsa triangle, and the empirical exponents.
//!
//! Exact steps fail with [`LabError::Falsified`]; asymptotic claims carry
//! an `o(1)` and are only ever reported as flags.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::mod_inverse;
use crate::sets::{
    affine_image, difference_set, gk_dichotomy, product_set, restricted_difference,
    shifted_product, sumset, two_a_minus_two_a, FpSet, GkOutcome, PairRelation,
};

/// Largest `|A|` accepted by [`bsg_witness_search`].
pub const BSG_SEARCH_CAP: usize = 16;
/// Largest domain `|S| |S1| |S2| |S3| |S4|` scanned by [`bg_injection_audit`].
pub const INJECTION_DOMAIN_CAP: u128 = 1 << 26;

fn require_anchorable(a: &FpSet) -> Result<()> {
    let p = a.modulus();
    if a.is_empty() {
        return Err(LabError::Precondition("A is empty".into()));
    }
    if a.contains(0) || a.contains(p - 1) {
        return Err(LabError::Precondition("A must avoid 0 and -1".into()));
    }
    Ok(())
}

/// `|(a+1)A ∩ (b0+1)A|` for every `a` in `A`, in element order.
fn anchor_counts(a: &FpSet, b0: u64) -> Vec<u64> {
    let p = a.modulus();
    let anchor = affine_image(a, (b0 as i64 + 1) % p as i64, 0);
    a.iter()
        .map(|x| {
            let c = (x + 1) % p;
            a.iter().filter(|&y| anchor.contains(c * y % p)).count() as u64
        })
        .collect()
}

/// The `b0 in A` maximising `sum_a |(a+1)A ∩ (b0+1)A|` (smallest on ties),
/// with that sum. Checks `total |A(A+1)| >= |A|^3` exactly.
pub fn popular_anchor(a: &FpSet) -> Result<(u64, u64)> {
    require_anchorable(a)?;
    let mut best = (0, 0);
    for b0 in a.iter() {
        let total: u64 = anchor_counts(a, b0).iter().sum();
        if total > best.1 {
            best = (b0, total);
        }
    }
    let n = a.len() as u128;
    let shifted = shifted_product(a).len() as u128;
    if (best.1 as u128) * shifted < n * n * n {
        return Err(LabError::Falsified(format!(
            "anchor total {} times |A(A+1)| = {shifted} is below |A|^3 = {}",
            best.1,
            n * n * n
        )));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorDecomposition {
    pub a: Vec<u64>,
    pub p: u64,
    pub b0: u64,
    /// `sum_a |(a+1)A ∩ (b0+1)A|`.
    pub total: u64,
    /// Dyadic level: every `a` in `A1` has `N <= count(a) < 2N`.
    pub n: u64,
    pub a1: Vec<u64>,
    /// Number of nonempty dyadic classes.
    pub class_count: u64,
    /// `|A(A+1)|`.
    pub shifted_card: u64,
    /// `N |A1| class_count >= total`.
    pub tight_pigeonhole: bool,
    /// `N |A1| >= |A|^3 / (2 |A(A+1)| log2 |A|)`.
    pub log_form_holds: bool,
}

impl AnchorDecomposition {
    pub fn a1_set(&self) -> FpSet {
        FpSet::from_residues(self.p, self.a1.iter().copied()).expect("validated modulus")
    }

    /// `total |A(A+1)| >= |A|^3`, which holds whenever `b0` is popular.
    pub fn anchor_bound_holds(&self) -> bool {
        let n = self.a.len() as u128;
        self.total as u128 * self.shifted_card as u128 >= n * n * n
    }
}

/// Splits `{a : count(a) >= 1}` into classes `[2^k, 2^(k+1))` and keeps the
/// class maximising `N |class|` (larger `N` on ties).
///
/// Checked exactly: `N <= count(a) < 2N` on `A1`, and
/// `2 N |A1| class_count >= total` (each class sums to less than
/// `2 N_k |class_k|`).
pub fn dyadic_levels(a: &FpSet, b0: u64) -> Result<AnchorDecomposition> {
    require_anchorable(a)?;
    if !a.contains(b0) {
        return Err(LabError::Precondition(format!("b0 = {b0} is not in A")));
    }
    let elems = a.to_vec();
    let counts = anchor_counts(a, b0);
    let total: u64 = counts.iter().sum();
    let mut classes: std::collections::BTreeMap<u32, Vec<u64>> = Default::default();
    for (&x, &c) in elems.iter().zip(&counts) {
        if c > 0 {
            classes.entry(c.ilog2()).or_default().push(x);
        }
    }
    let Some((&level, members)) = classes
        .iter()
        .max_by_key(|(&k, v)| ((1u64 << k) * v.len() as u64, k))
    else {
        return Err(LabError::Internal(format!("every anchor count vanished, b0 = {b0}")));
    };
    let n = 1u64 << level;
    let a1 = members.clone();
    let class_count = classes.len() as u64;

    for (&x, &c) in elems.iter().zip(&counts) {
        if a1.contains(&x) && !(n <= c && c < 2 * n) {
            return Err(LabError::Internal(format!("count({x}) = {c} outside [{n}, {})", 2 * n)));
        }
    }
    let weight = n as u128 * a1.len() as u128 * class_count as u128;
    if 2 * weight < total as u128 {
        return Err(LabError::Falsified(format!(
            "2 N |A1| class_count = {} < total = {total}",
            2 * weight
        )));
    }
    let card = a.len() as f64;
    let shifted_card = shifted_product(a).len() as u64;
    let log_rhs = card.powi(3) / (2.0 * shifted_card as f64 * card.log2());
    Ok(AnchorDecomposition {
        a: elems,
        p: a.modulus(),
        b0,
        total,
        n,
        a1,
        class_count,
        shifted_card,
        tight_pigeonhole: weight >= total as u128,
        log_form_holds: (n as f64) * (members.len() as f64) >= log_rhs,
    })
}

/// Picks `(b1, b2, b3, b4)` from `A1`: the ratio-set dichotomy quadruple when
/// there is one; otherwise the lexicographically first quadruple with
/// `b3 != b4` maximising `|(b1-b2)A + (b3-b4)A|`. A singleton `A1 = {b}`
/// gives the degenerate `(b, b, b, b)`.
pub fn choose_quadruple(a: &FpSet, a1: &FpSet) -> Result<[u64; 4]> {
    if a1.len() < 2 {
        let b = a1
            .iter()
            .next()
            .ok_or_else(|| LabError::Precondition("A1 is empty".into()))?;
        return Ok([b; 4]);
    }
    match gk_dichotomy(a1)? {
        GkOutcome::Quadruple(q) => Ok(q),
        GkOutcome::AllOfFp => {
            let elems = a1.to_vec();
            let mut best = ([0; 4], 0);
            for &b1 in &elems {
                for &b2 in &elems {
                    for &b3 in &elems {
                        for &b4 in &elems {
                            if b3 == b4 {
                                continue;
                            }
                            let size = dilated_sum(a, b1, b2, b3, b4).len();
                            if size > best.1 {
                                best = ([b1, b2, b3, b4], size);
                            }
                        }
                    }
                }
            }
            Ok(best.0)
        }
    }
}

/// `(b1 - b2)A + (b3 - b4)A`.
fn dilated_sum(a: &FpSet, b1: u64, b2: u64, b3: u64, b4: u64) -> FpSet {
    let p = a.modulus() as i64;
    let left = affine_image(a, (b1 as i64 - b2 as i64).rem_euclid(p), 0);
    let right = affine_image(a, (b3 as i64 - b4 as i64).rem_euclid(p), 0);
    sumset(&left, &right).expect("same field")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub b0: u64,
    pub quadruple: [u64; 4],
    pub n: u64,
    /// `S = (b1-b2)A + (b3-b4)A`.
    pub s: Vec<u64>,
    /// `S_i = (b_i+1)A ∩ (b0+1)A`.
    pub s_i: [Vec<u64>; 4],
    /// Fixed `(a(x), a'(x))` for each `x` in `S`, aligned with `s`.
    pub representations: Vec<(u64, u64)>,
    /// Number of domain tuples, all mapped injectively.
    pub domain_size: u64,
    pub card_diff: u64,
    pub card_two_a_minus_two_a: u64,
    /// `|S| N^4`.
    pub counting_lhs: u128,
    /// `|A-A|^4 |2A-2A|`.
    pub counting_rhs: u128,
    /// `|S| / (|A1|^3 / |A-A|)`.
    pub length4_ratio: f64,
}

/// Builds the map `(x, x1..x4) -> (u, u1..u4)` on `S x S1 x .. x S4` and
/// checks, over every tuple: the recovery identity
/// `x = (b1+1)u1 - (b2+1)u2 + (b3+1)u3 - (b4+1)u4 + (b0+1)u`, membership
/// `u in 2A-2A`, `u_i in A-A`, injectivity, and finally
/// `|S| N^4 <= |A-A|^4 |2A-2A|`.
pub fn bg_injection_audit(
    a: &FpSet,
    decomposition: &AnchorDecomposition,
    quadruple: [u64; 4],
) -> Result<InjectionRecord> {
    require_anchorable(a)?;
    let p = a.modulus();
    let b0 = decomposition.b0;
    let a1 = decomposition.a1_set();
    if a1.modulus() != p || decomposition.a != a.to_vec() {
        return Err(LabError::Precondition("decomposition belongs to a different set".into()));
    }
    if let Some(b) = quadruple.iter().find(|&&b| !a1.contains(b)) {
        return Err(LabError::Precondition(format!("{b} is not in A1")));
    }
    let [b1, b2, b3, b4] = quadruple;
    let elems = a.to_vec();

    // x -> first (a, a') in ascending order with x = (b1-b2)a + (b3-b4)a'.
    let (c12, c34) = ((b1 + p - b2) % p, (b3 + p - b4) % p);
    let mut rep: Vec<Option<(u64, u64)>> = vec![None; p as usize];
    for &x in &elems {
        for &y in &elems {
            let s = (c12 * x + c34 * y) % p;
            rep[s as usize].get_or_insert((x, y));
        }
    }
    let s: Vec<u64> = (0..p).filter(|&x| rep[x as usize].is_some()).collect();
    if s != dilated_sum(a, b1, b2, b3, b4).to_vec() {
        return Err(LabError::Internal("S disagrees with the set-arithmetic sumset".into()));
    }
    let representations: Vec<(u64, u64)> = s.iter().map(|&x| rep[x as usize].unwrap()).collect();

    let anchor = affine_image(a, ((b0 + 1) % p) as i64, 0);
    let inv0 = mod_inverse(p, b0 + 1)?;
    // S_i with (x_i, a_i(x_i), a_i'(x_i)); b_i + 1 and b0 + 1 are units.
    let mut s_i: [Vec<(u64, u64, u64)>; 4] = Default::default();
    for (slot, &b) in s_i.iter_mut().zip(&quadruple) {
        let inv = mod_inverse(p, b + 1)?;
        let dilated = affine_image(a, ((b + 1) % p) as i64, 0);
        *slot = dilated
            .intersection(&anchor)?
            .iter()
            .map(|x| (x, x * inv % p, x * inv0 % p))
            .collect();
        if slot.len() < decomposition.n as usize {
            return Err(LabError::Falsified(format!(
                "|S_i| = {} < N = {} for b = {b}",
                slot.len(),
                decomposition.n
            )));
        }
    }

    let domain: u128 = s.len() as u128 * s_i.iter().map(|v| v.len() as u128).product::<u128>();
    if domain > INJECTION_DOMAIN_CAP {
        return Err(LabError::Resource(format!(
            "injection domain has {domain} tuples, cap is {INJECTION_DOMAIN_CAP}"
        )));
    }

    let diff = difference_set(a, a)?;
    let big = two_a_minus_two_a(a);
    let sub = |x: u64, y: u64| (x + p - y) % p;
    let mut images = rustc_hash::FxHashSet::default();
    images.reserve(domain as usize);
    for (&x, &(ax, apx)) in s.iter().zip(&representations) {
        for &(x1, a1v, a1p) in &s_i[0] {
            for &(x2, a2v, a2p) in &s_i[1] {
                for &(x3, a3v, a3p) in &s_i[2] {
                    for &(x4, a4v, a4p) in &s_i[3] {
                        let u = (a1p + p - a2p + a3p + p - a4p) % p;
                        let us = [sub(ax, a1v), sub(ax, a2v), sub(apx, a3v), sub(apx, a4v)];
                        let recovered = ((b1 + 1) * us[0] % p + p - (b2 + 1) * us[1] % p
                            + (b3 + 1) * us[2] % p
                            + p
                            - (b4 + 1) * us[3] % p
                            + (b0 + 1) * u % p)
                            % p;
                        let tuple = [x, x1, x2, x3, x4];
                        if recovered != x {
                            return Err(LabError::Falsified(format!(
                                "recovery identity fails at {tuple:?}: got {recovered}"
                            )));
                        }
                        if !big.contains(u) || us.iter().any(|&v| !diff.contains(v)) {
                            return Err(LabError::Falsified(format!(
                                "image of {tuple:?} leaves (2A-2A) x (A-A)^4"
                            )));
                        }
                        if !images.insert([u, us[0], us[1], us[2], us[3]]) {
                            return Err(LabError::Falsified(format!(
                                "the map is not injective: {tuple:?} collides"
                            )));
                        }
                    }
                }
            }
        }
    }

    let n = decomposition.n as u128;
    let counting_lhs = s.len() as u128 * n.pow(4);
    let counting_rhs = (diff.len() as u128).pow(4) * big.len() as u128;
    if counting_lhs > counting_rhs {
        return Err(LabError::Falsified(format!(
            "|S| N^4 = {counting_lhs} > |A-A|^4 |2A-2A| = {counting_rhs}"
        )));
    }
    let a1_card = decomposition.a1.len() as f64;
    let s_len = s.len() as f64;
    Ok(InjectionRecord {
        b0,
        quadruple,
        n: decomposition.n,
        s,
        s_i: s_i.map(|v| v.into_iter().map(|(x, _, _)| x).collect()),
        representations,
        domain_size: domain as u64,
        card_diff: diff.len() as u64,
        card_two_a_minus_two_a: big.len() as u64,
        counting_lhs,
        counting_rhs,
        length4_ratio: s_len * diff.len() as f64 / a1_card.powi(3),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BsgOutcome {
    Witness(Vec<u64>),
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsgSearch {
    pub outcome: BsgOutcome,
    /// `K = k_num / k_den = |A||B| / |E|`.
    pub k_num: u64,
    pub k_den: u64,
    /// `|A -_E B|`.
    pub restricted_card: u64,
    /// Smallest size searched, `ceil(0.1 |A| / K)`.
    pub min_size: u64,
    pub subsets_tried: u64,
}

/// Searches subsets `A'` of `A` in order of size (from `ceil(0.1|A|/K)`),
/// then lexicographically, for the first with
/// `|A -_E B|^4 >= |A'-A'| |A| |B|^2 / (10^4 K^5)`, in integers.
/// [`BsgOutcome::Exhausted`] would contradict the Balog-Szemerédi-Gowers bound.
pub fn bsg_witness_search(e: &PairRelation) -> Result<BsgSearch> {
    if e.is_empty() {
        return Err(LabError::Precondition("E is empty".into()));
    }
    let a = e.left();
    let b = e.right();
    if a.len() > BSG_SEARCH_CAP {
        return Err(LabError::Resource(format!(
            "exhaustive subset search needs |A| <= {BSG_SEARCH_CAP}, got {}",
            a.len()
        )));
    }
    let (k_num, k_den) = e.density_ratio();
    let d = restricted_difference(e).len() as u128;
    let (na, nb) = (a.len() as u128, b.len() as u128);
    // |A'| >= 0.1 |A| / K  <=>  10 |A'| k_num >= |A| k_den
    let min_size = (na * k_den as u128).div_ceil(10 * k_num as u128).max(1) as usize;
    // D^4 10^4 k_num^5 >= |A'-A'| |A| |B|^2 k_den^5
    let lhs = d.pow(4) * 10_000 * (k_num as u128).pow(5);
    let rhs_factor = na * nb * nb * (k_den as u128).pow(5);

    let elems = a.to_vec();
    let mut tried = 0u64;
    for size in min_size..=elems.len() {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            tried += 1;
            let sub = FpSet::from_residues(a.modulus(), idx.iter().map(|&i| elems[i]))?;
            let dd = difference_set(&sub, &sub)?.len() as u128;
            if lhs >= dd * rhs_factor {
                return Ok(BsgSearch {
                    outcome: BsgOutcome::Witness(sub.to_vec()),
                    k_num,
                    k_den,
                    restricted_card: d as u64,
                    min_size: min_size as u64,
                    subsets_tried: tried,
                });
            }
            if !next_combination(&mut idx, elems.len()) {
                break;
            }
        }
    }
    Ok(BsgSearch {
        outcome: BsgOutcome::Exhausted,
        k_num,
        k_den,
        restricted_card: d as u64,
        min_size: min_size as u64,
        subsets_tried: tried,
    })
}

impl BsgSearch {
    /// The witness, or [`LabError::Falsified`] if the search was exhausted.
    pub fn witness(&self) -> Result<&[u64]> {
        match &self.outcome {
            BsgOutcome::Witness(w) => Ok(w),
            BsgOutcome::Exhausted => Err(LabError::Falsified(format!(
                "no subset of A satisfies the BSG inequality (K = {}/{}, |A -_E B| = {})",
                self.k_num, self.k_den, self.restricted_card
            ))),
        }
    }
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The relation `E = {(x, x + xy) : x, y in A}` inside `A x A(A+1)`.
pub fn shifted_relation(a: &FpSet) -> Result<PairRelation> {
    let p = a.modulus();
    let pairs: Vec<(u64, u64)> = a
        .iter()
        .flat_map(|x| a.iter().map(move |y| (x, (x + x * y) % p)))
        .collect();
    PairRelation::new(a.clone(), shifted_product(a), pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuzsaReport {
    pub card_a: u64,
    pub card_aa: u64,
    pub card_shifted: u64,
    /// `|AA| |A|`.
    pub lhs: u64,
    /// `|A(A+1)|^2`.
    pub rhs: u64,
}

/// `|AA| |A| <= |A(A+1)|^2`, exactly.
pub fn ruzsa_mult_audit(a: &FpSet) -> Result<RuzsaReport> {
    require_anchorable(a)?;
    let aa = product_set(a, a)?.len() as u64;
    let shifted = shifted_product(a).len() as u64;
    let n = a.len() as u64;
    let report = RuzsaReport {
        card_a: n,
        card_aa: aa,
        card_shifted: shifted,
        lhs: aa * n,
        rhs: shifted * shifted,
    };
    if report.lhs > report.rhs {
        return Err(LabError::Falsified(format!(
            "|AA||A| = {} > |A(A+1)|^2 = {}",
            report.lhs, report.rhs
        )));
    }
    Ok(report)
}

fn require_exponent_range(a: &FpSet) -> Result<()> {
    if a.len() < 2 {
        return Err(LabError::Domain(format!("need |A| >= 2, got {}", a.len())));
    }
    let n = a.len() as u64;
    if n * n >= a.modulus() {
        return Err(LabError::Precondition(format!(
            "need |A| < sqrt(p), got |A| = {n}, p = {}",
            a.modulus()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Report {
    pub card_a: u64,
    pub card_diff: u64,
    pub card_two_a_minus_two_a: u64,
    pub card_shifted: u64,
    /// `(8 ln|A-A| + 4 ln|A(A+1)|) / ln|A|`.
    pub exponent: f64,
    pub exponent_pass: bool,
    /// `(5 ln|A-A| + ln|2A-2A| + 4 ln|A(A+1)|) / ln|A|`.
    pub sketch_exponent: f64,
    pub sketch_pass: bool,
}

/// Reports the exponent of `|A-A|^8 |A(A+1)|^4` against 13, and of
/// `|A-A|^5 |2A-2A| |A(A+1)|^4` against 11.
pub fn lemma2_audit(a: &FpSet) -> Result<Lemma2Report> {
    require_exponent_range(a)?;
    let diff = difference_set(a, a)?.len() as f64;
    let big = two_a_minus_two_a(a).len() as f64;
    let shifted = shifted_product(a).len() as f64;
    let ln_a = (a.len() as f64).ln();
    let exponent = (8.0 * diff.ln() + 4.0 * shifted.ln()) / ln_a;
    let sketch_exponent = (5.0 * diff.ln() + big.ln() + 4.0 * shifted.ln()) / ln_a;
    Ok(Lemma2Report {
        card_a: a.len() as u64,
        card_diff: diff as u64,
        card_two_a_minus_two_a: big as u64,
        card_shifted: shifted as u64,
        exponent,
        exponent_pass: exponent >= 13.0,
        sketch_exponent,
        sketch_pass: sketch_exponent >= 11.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub card_a: u64,
    pub card_shifted: u64,
    /// `ln|A(A+1)| / ln|A|`.
    pub beta: f64,
    pub pass: bool,
    /// `K = |A(A+1)| / |A|`.
    pub k: f64,
}

pub const THEOREM1_EXPONENT: f64 = 106.0 / 105.0;

pub fn theorem1_exponent(a: &FpSet) -> Result<Theorem1Report> {
    require_exponent_range(a)?;
    let n = a.len() as f64;
    let shifted = shifted_product(a).len() as f64;
    let beta = shifted.ln() / n.ln();
    Ok(Theorem1Report {
        card_a: a.len() as u64,
        card_shifted: shifted as u64,
        beta,
        pass: beta >= THEOREM1_EXPONENT,
        k: shifted / n,
    })
}
