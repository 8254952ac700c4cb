//! Multiplicative characters mod p and the solution count
//! `J = #{(x, y, z, t) in X x Y x Z x T : x^-1 y (z^-1 t - 1) = 1}`.
//!
//! `J` is computed exactly twice (a quadruple enumeration and a membership
//! count) and once more through the orthogonality of characters, which is
//! also the route to its upper bound.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{mod_inverse, DlogTable};
use crate::sets::{affine_image, product_set, same_field, FpSet};

/// Relative slack allowed on the floating side of the analytic bounds.
pub const BOUND_SLACK: f64 = 1e-9;
/// Relative tolerance for the character-sum reconstruction of `J`.
pub const DECOMPOSITION_TOL: f64 = 1e-6;

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

fn neumaier(sum: &mut f64, carry: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *carry += (*sum - t) + x;
    } else {
        *carry += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.sum.re, &mut self.carry.re, z.re);
        neumaier(&mut self.sum.im, &mut self.carry.im, z.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

/// The `p - 1` characters `chi_j(g^k) = e^(2 pi i jk / (p-1))`, `chi_j(0) = 0`.
#[derive(Debug, Clone)]
pub struct CharacterTable {
    dlog: DlogTable,
    roots: Vec<Complex64>,
}

impl CharacterTable {
    pub fn new(dlog: DlogTable) -> Self {
        let order = dlog.field().group_order();
        let roots = (0..order)
            .map(|k| {
                let (s, c) = (TAU * k as f64 / order as f64).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        CharacterTable { dlog, roots }
    }

    pub fn for_prime(p: u64) -> Result<Self> {
        Ok(Self::new(DlogTable::for_prime(p)?))
    }

    pub fn dlog(&self) -> &DlogTable {
        &self.dlog
    }

    pub fn modulus(&self) -> u64 {
        self.dlog.modulus()
    }

    /// Number of characters, `p - 1`.
    pub fn order(&self) -> u64 {
        self.roots.len() as u64
    }

    #[inline]
    pub fn eval(&self, j: u64, x: u64) -> Complex64 {
        match self.dlog.log(x) {
            None => Complex64::new(0.0, 0.0),
            Some(k) => self.roots[((j as u128 * k as u128) % self.order() as u128) as usize],
        }
    }
}

pub fn char_eval(table: &CharacterTable, j: u64, x: u64) -> Complex64 {
    table.eval(j, x)
}

fn require_units(name: &str, s: &FpSet) -> Result<()> {
    if s.contains(0) {
        Err(LabError::Domain(format!("0 is in {name}, which is inverted")))
    } else {
        Ok(())
    }
}

fn require_table_field(table: &CharacterTable, s: &FpSet) -> Result<()> {
    if table.modulus() == s.modulus() {
        Ok(())
    } else {
        Err(LabError::ModulusMismatch(table.modulus(), s.modulus()))
    }
}

/// `sum_{z in C} sum_{t in T} chi_j(z^-1 t - 1)`.
pub fn incomplete_char_sum(table: &CharacterTable, j: u64, c: &FpSet, t: &FpSet) -> Result<Complex64> {
    require_table_field(table, c)?;
    same_field(c, t)?;
    require_units("C", c)?;
    let p = c.modulus();
    let mut acc = CompensatedSum::default();
    for z in c.iter() {
        let zi = mod_inverse(p, z)?;
        for tt in t.iter() {
            acc.add(table.eval(j, (zi * tt % p + p - 1) % p));
        }
    }
    Ok(acc.value())
}

/// `h[w] = #{(z, t) in Z x T : z^-1 t - 1 = w}`.
fn shifted_ratio_histogram(z: &FpSet, t: &FpSet) -> Result<Vec<u64>> {
    let p = z.modulus();
    let mut hist = vec![0u64; p as usize];
    for zz in z.iter() {
        let zi = mod_inverse(p, zz)?;
        for tt in t.iter() {
            hist[((zi * tt % p + p - 1) % p) as usize] += 1;
        }
    }
    Ok(hist)
}

/// `max_{j != 0} |sum_{z in C, t in T} chi_j(z^-1 t - 1)|`, through the
/// histogram of `z^-1 t - 1`. Returns 0 when p = 2 (no nonprincipal
/// characters).
pub fn worst_nonprincipal_sum(table: &CharacterTable, c: &FpSet, t: &FpSet) -> Result<f64> {
    require_table_field(table, c)?;
    same_field(c, t)?;
    require_units("C", c)?;
    let hist = shifted_ratio_histogram(c, t)?;
    let support: Vec<(u64, f64)> = hist
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &h)| h > 0)
        .map(|(w, &h)| (table.dlog.log(w as u64).expect("nonzero"), h as f64))
        .collect();
    let order = table.order();
    let mut worst: f64 = 0.0;
    for j in 1..order {
        let mut acc = CompensatedSum::default();
        for &(k, h) in &support {
            acc.add(table.roots[(j * k % order) as usize] * h);
        }
        worst = worst.max(acc.value().norm());
    }
    Ok(worst)
}

fn check_count_inputs(x: &FpSet, y: &FpSet, z: &FpSet, t: &FpSet) -> Result<()> {
    same_field(x, y)?;
    same_field(x, z)?;
    same_field(x, t)?;
    require_units("X", x)?;
    require_units("Z", z)
}

/// `J` by enumerating all `|X||Y||Z||T|` quadruples.
///
/// Since `x != 0`, the congruence is tested in the equivalent form
/// `x = y (z^-1 t - 1)`.
pub fn count_solutions_brute(x: &FpSet, y: &FpSet, z: &FpSet, t: &FpSet) -> Result<u64> {
    check_count_inputs(x, y, z, t)?;
    let p = x.modulus();
    let xs = x.elements();
    let mut total = 0u64;
    for zz in z.iter() {
        let zi = mod_inverse(p, zz)?;
        for tt in t.iter() {
            let s = (zi * tt % p + p - 1) % p;
            for yy in y.iter() {
                let w = (yy * s % p) as u32;
                total += xs.iter().filter(|&&xx| xx == w).count() as u64;
            }
        }
    }
    Ok(total)
}

/// `J` as `#{(y, z, t) : y (z^-1 t - 1) in X}`, via bitmap membership.
pub fn count_solutions_fast(x: &FpSet, y: &FpSet, z: &FpSet, t: &FpSet) -> Result<u64> {
    check_count_inputs(x, y, z, t)?;
    if y.is_empty() {
        return Ok(0);
    }
    let p = x.modulus();
    let hist = shifted_ratio_histogram(z, t)?;
    let mut total = 0u64;
    for (s, &h) in hist.iter().enumerate() {
        if h == 0 {
            continue;
        }
        let hits = y.iter().filter(|&yy| x.contains(yy * s as u64 % p)).count() as u64;
        total += h * hits;
    }
    Ok(total)
}

/// `(1/(p-1)) sum_j (sum_x chi_j(x^-1)) (sum_y chi_j(y)) (sum_{z,t} chi_j(z^-1 t - 1))`.
///
/// Multiplicativity with `chi(0) = 0` makes this exactly `J`; the value
/// returned carries floating-point error only.
pub fn character_decomposition_count(
    table: &CharacterTable,
    x: &FpSet,
    y: &FpSet,
    z: &FpSet,
    t: &FpSet,
) -> Result<f64> {
    require_table_field(table, x)?;
    check_count_inputs(x, y, z, t)?;
    let p = x.modulus();
    let inv_logs: Vec<u64> = x
        .iter()
        .map(|xx| table.dlog.log(mod_inverse(p, xx)?).ok_or_else(|| LabError::Domain("0".into())))
        .collect::<Result<_>>()?;
    let y_logs: Vec<u64> = y.iter().filter_map(|yy| table.dlog.log(yy)).collect();
    let hist = shifted_ratio_histogram(z, t)?;
    let zt: Vec<(u64, f64)> = hist
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &h)| h > 0)
        .map(|(w, &h)| (table.dlog.log(w as u64).expect("nonzero"), h as f64))
        .collect();
    let order = table.order();
    let char_sum = |j: u64, logs: &mut dyn Iterator<Item = (u64, f64)>| {
        let mut acc = CompensatedSum::default();
        for (k, weight) in logs {
            acc.add(table.roots[(j * k % order) as usize] * weight);
        }
        acc.value()
    };
    let mut total = CompensatedSum::default();
    for j in 0..order {
        let sx = char_sum(j, &mut inv_logs.iter().map(|&k| (k, 1.0)));
        let sy = char_sum(j, &mut y_logs.iter().map(|&k| (k, 1.0)));
        let szt = char_sum(j, &mut zt.iter().copied());
        total.add(sx * sy * szt);
    }
    Ok(total.value().re / order as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JAudit {
    pub p: u64,
    pub card_a: u64,
    pub card_b: u64,
    pub card_c: u64,
    /// `|AB|`.
    pub card_ab: u64,
    /// `|T|` with `T = (A+1)C`.
    pub card_t: u64,
    pub j: u64,
    /// `|A||B||C|`.
    pub lower: u64,
    /// `|AB||B||C||T| / (p - 1)`.
    pub upper_main: f64,
    /// `sqrt(p |C||T||AB||B|)`.
    pub upper_error: f64,
    /// Worst nonprincipal incomplete sum over `C x T`.
    pub char_worst: f64,
    /// `sqrt(p |C||T|)`, the bound it is compared with.
    pub char_bound: f64,
    /// `min{p|A|, |A|^2 |B||C| / p}`.
    pub min_bound: f64,
    /// `|AB||T| / min_bound`.
    pub ratio: f64,
    /// `J` reconstructed from character sums.
    pub decomposition: f64,
}

/// Computes every quantity behind the product-set bound for `A, B, C` and
/// checks the exact consequences: both counts of `J` agree, `J >= |A||B||C|`,
/// `J <= main + error`, and the character reconstruction matches `J`.
pub fn theorem2_audit(table: &CharacterTable, a: &FpSet, b: &FpSet, c: &FpSet) -> Result<JAudit> {
    require_table_field(table, a)?;
    same_field(a, b)?;
    same_field(a, c)?;
    let p = a.modulus();
    for (name, s) in [("A", a), ("B", b), ("C", c)] {
        if s.is_empty() {
            return Err(LabError::Precondition(format!("{name} is empty")));
        }
        if s.contains(0) {
            return Err(LabError::Domain(format!("{name} must avoid 0")));
        }
    }
    if a.contains(p - 1) {
        return Err(LabError::Domain("A contains -1, so 0 would lie in (A+1)C".into()));
    }
    let ab = product_set(a, b)?;
    let t = product_set(&affine_image(a, 1, 1), c)?;

    let j_brute = count_solutions_brute(&ab, b, c, &t)?;
    let j_fast = count_solutions_fast(&ab, b, c, &t)?;
    if j_brute != j_fast {
        return Err(LabError::Internal(format!(
            "J by enumeration = {j_brute}, J by membership = {j_fast}"
        )));
    }
    let j = j_fast;
    let (na, nb, nc) = (a.len() as u64, b.len() as u64, c.len() as u64);
    let (nab, nt) = (ab.len() as u64, t.len() as u64);
    let lower = na * nb * nc;
    let pf = p as f64;
    let upper_main = (nab * nb * nc * nt) as f64 / (pf - 1.0);
    let upper_error = (pf * (nc * nt * nab * nb) as f64).sqrt();
    let char_worst = worst_nonprincipal_sum(table, c, &t)?;
    let char_bound = (pf * (nc * nt) as f64).sqrt();
    let min_bound = (pf * na as f64).min((na * na * nb * nc) as f64 / pf);
    let decomposition = character_decomposition_count(table, &ab, b, c, &t)?;

    let ctx = format!("p = {p}, |A| = {na}, |B| = {nb}, |C| = {nc}");
    if j < lower {
        return Err(LabError::Falsified(format!("J = {j} < |A||B||C| = {lower} ({ctx})")));
    }
    if j as f64 > (upper_main + upper_error) * (1.0 + BOUND_SLACK) {
        return Err(LabError::Falsified(format!(
            "J = {j} exceeds {upper_main} + {upper_error} ({ctx})"
        )));
    }
    if (decomposition - j as f64).abs() > DECOMPOSITION_TOL * (j as f64).max(1.0) {
        return Err(LabError::Internal(format!(
            "character decomposition gives {decomposition}, exact J = {j} ({ctx})"
        )));
    }
    Ok(JAudit {
        p,
        card_a: na,
        card_b: nb,
        card_c: nc,
        card_ab: nab,
        card_t: nt,
        j,
        lower,
        upper_main,
        upper_error,
        char_worst,
        char_bound,
        min_bound,
        ratio: (nab * nt) as f64 / min_bound,
        decomposition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;

    fn set(p: u64, xs: &[u64]) -> FpSet {
        FpSet::from_residues(p, xs.iter().copied()).unwrap()
    }

    #[test]
    fn eval_examples() {
        let t7 = CharacterTable::for_prime(7).unwrap();
        assert_eq!(char_eval(&t7, 0, 5), Complex64::new(1.0, 0.0));
        for j in 0..6 {
            assert!((char_eval(&t7, j, 1) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            assert_eq!(char_eval(&t7, j, 0), Complex64::new(0.0, 0.0));
        }
        let t5 = CharacterTable::new(DlogTable::build(PrimeField::with_generator(5, 2).unwrap()).unwrap());
        assert_eq!(t5.dlog().log(4), Some(2));
        assert!((char_eval(&t5, 2, 4) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn characters_are_multiplicative() {
        let t = CharacterTable::for_prime(31).unwrap();
        for j in 0..30 {
            for x in 1..31 {
                assert!((t.eval(j, x).norm() - 1.0).abs() < 1e-12);
                for y in 1..31 {
                    let lhs = t.eval(j, x * y % 31);
                    assert!((lhs - t.eval(j, x) * t.eval(j, y)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn incomplete_sum_examples() {
        let t = CharacterTable::for_prime(7).unwrap();
        for j in 0..6 {
            let s = incomplete_char_sum(&t, j, &set(7, &[1]), &set(7, &[2])).unwrap();
            assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            let zero = incomplete_char_sum(&t, j, &set(7, &[1]), &set(7, &[1])).unwrap();
            assert!(zero.norm() < 1e-12);
        }
        assert!(matches!(
            incomplete_char_sum(&t, 1, &set(7, &[0, 1]), &set(7, &[2])),
            Err(LabError::Domain(_))
        ));
    }

    #[test]
    fn worst_sum_matches_direct_sums() {
        let t = CharacterTable::for_prime(101).unwrap();
        let c = set(101, &[1, 5, 9, 33, 70]);
        let tt = set(101, &[0, 2, 3, 50, 51, 99]);
        let direct = (1..100)
            .map(|j| incomplete_char_sum(&t, j, &c, &tt).unwrap().norm())
            .fold(0.0, f64::max);
        let fast = worst_nonprincipal_sum(&t, &c, &tt).unwrap();
        assert!((direct - fast).abs() < 1e-9);
    }

    #[test]
    fn count_examples() {
        let one5 = set(5, &[1]);
        assert_eq!(count_solutions_brute(&one5, &one5, &one5, &set(5, &[2])).unwrap(), 1);
        assert_eq!(count_solutions_fast(&one5, &one5, &one5, &set(5, &[2])).unwrap(), 1);

        let x = set(7, &[1, 2]);
        let one7 = set(7, &[1]);
        let t = set(7, &[2, 3]);
        assert_eq!(count_solutions_brute(&x, &one7, &one7, &t).unwrap(), 2);
        assert_eq!(count_solutions_fast(&x, &one7, &one7, &t).unwrap(), 2);

        let empty = FpSet::empty(7).unwrap();
        assert_eq!(count_solutions_fast(&x, &empty, &one7, &t).unwrap(), 0);
        assert!(matches!(
            count_solutions_brute(&set(7, &[0, 1]), &one7, &one7, &t),
            Err(LabError::Domain(_))
        ));
    }

    #[test]
    fn count_with_all_units() {
        // X = F_p^*: every triple with nonzero y(z^-1 t - 1) is a solution.
        let p = 13;
        let x = FpSet::from_residues(p, 1..p).unwrap();
        let y = set(p, &[1, 4, 6]);
        let z = set(p, &[2, 3, 7, 12]);
        let t = set(p, &[0, 2, 3, 5, 8]);
        // z^-1 t - 1 vanishes exactly when t = z.
        let zero_args = z.iter().filter(|&zz| t.contains(zz)).count();
        let expected = (y.len() * (z.len() * t.len() - zero_args)) as u64;
        assert_eq!(count_solutions_fast(&x, &y, &z, &t).unwrap(), expected);
        assert_eq!(count_solutions_brute(&x, &y, &z, &t).unwrap(), expected);
    }

    #[test]
    fn decomposition_reproduces_count() {
        let table = CharacterTable::for_prime(31).unwrap();
        let x = set(31, &[1, 2, 5, 7, 11]);
        let y = set(31, &[3, 4, 6]);
        let z = set(31, &[2, 9]);
        let t = set(31, &[1, 2, 9, 10, 30]);
        let j = count_solutions_brute(&x, &y, &z, &t).unwrap();
        let d = character_decomposition_count(&table, &x, &y, &z, &t).unwrap();
        assert!((d - j as f64).abs() < 1e-9, "{d} vs {j}");
    }

    #[test]
    fn audit_trivial_case() {
        let table = CharacterTable::for_prime(5).unwrap();
        let one = set(5, &[1]);
        let r = theorem2_audit(&table, &one, &one, &one).unwrap();
        assert_eq!(r.j, 1);
        assert_eq!(r.lower, 1);
        assert!(r.j as f64 <= r.upper_main + r.upper_error);
    }

    #[test]
    fn audit_rejects_minus_one() {
        let table = CharacterTable::for_prime(7).unwrap();
        let a = set(7, &[1, 6]);
        let one = set(7, &[1]);
        assert!(matches!(theorem2_audit(&table, &a, &one, &one), Err(LabError::Domain(_))));
    }
}
