//! Prime-field plumbing: primality, primitive roots, discrete-log tables and
//! modular inverses.
//!
//! Everything here works on plain `u64` residues. The set-level code in
//! [`crate::sets`] narrows to `u32` once the modulus is known to be small.

use crate::error::{LabError, Result};

/// Largest modulus (exclusive) for which full discrete-log tables and dense
/// set bitmaps are built.
pub const TABLE_CAP: u64 = 1 << 27;

// Deterministic for every n < 3.3 * 10^24, which covers u64.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Exact primality test for any `n < 2^64` (Miller-Rabin with a witness set
/// that is deterministic on the whole range).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &MR_WITNESSES {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors of `n` by trial division, ascending.
pub fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2u64;
    while q.saturating_mul(q) <= n {
        if n.is_multiple_of(q) {
            out.push(q);
            while n.is_multiple_of(q) {
                n /= q;
            }
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn require_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(LabError::Domain(format!("{p} is not prime")))
    }
}

/// `true` iff `g` generates the multiplicative group mod the prime `p`.
pub fn is_primitive_root(g: u64, p: u64, factors_of_order: &[u64]) -> bool {
    let g = g % p;
    if g == 0 {
        return false;
    }
    factors_of_order
        .iter()
        .all(|&q| pow_mod(g, (p - 1) / q, p) != 1)
}

/// Smallest primitive root of the prime `p`.
pub fn find_primitive_root(p: u64) -> Result<u64> {
    require_prime(p)?;
    let factors = distinct_prime_factors(p - 1);
    (1..p)
        .find(|&g| is_primitive_root(g, p, &factors))
        .ok_or_else(|| LabError::Internal(format!("no primitive root found mod {p}")))
}

/// Inverse of `x` modulo the prime `p`, via the extended Euclidean algorithm.
pub fn mod_inverse(p: u64, x: u64) -> Result<u64> {
    let x = x % p;
    if x == 0 {
        return Err(LabError::Domain(format!("0 has no inverse mod {p}")));
    }
    let (mut r0, mut r1) = (p as i128, x as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return Err(LabError::Domain(format!("{x} is not invertible mod {p}")));
    }
    Ok(s0.rem_euclid(p as i128) as u64)
}

/// A prime modulus together with a fixed generator of its unit group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
    g: u64,
}

impl PrimeField {
    /// The field F_p with its smallest primitive root.
    pub fn new(p: u64) -> Result<Self> {
        let g = find_primitive_root(p)?;
        Ok(PrimeField { p, g })
    }

    /// The field F_p with an explicitly chosen generator, which is checked.
    pub fn with_generator(p: u64, g: u64) -> Result<Self> {
        require_prime(p)?;
        if g == 0 || g >= p || !is_primitive_root(g, p, &distinct_prime_factors(p - 1)) {
            return Err(LabError::Domain(format!("{g} is not a primitive root mod {p}")));
        }
        Ok(PrimeField { p, g })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn generator(&self) -> u64 {
        self.g
    }

    /// Order of the unit group, `p - 1`.
    pub fn group_order(&self) -> u64 {
        self.p - 1
    }

    pub fn pow(&self, base: u64, exp: u64) -> u64 {
        pow_mod(base, exp, self.p)
    }

    pub fn inverse(&self, x: u64) -> Result<u64> {
        mod_inverse(self.p, x)
    }
}

/// Full discrete-log table of F_p^* for a fixed generator.
#[derive(Debug, Clone)]
pub struct DlogTable {
    field: PrimeField,
    // log_of[x] for x in 1..p; slot 0 is unused.
    log_of: Vec<u32>,
    // pow_of[k] = g^k for k in 0..p-1.
    pow_of: Vec<u32>,
}

impl DlogTable {
    /// Builds the table in one pass over the powers of the generator.
    /// Moduli at or above [`TABLE_CAP`] are refused.
    pub fn build(field: PrimeField) -> Result<Self> {
        let p = field.modulus();
        if p >= TABLE_CAP {
            return Err(LabError::Resource(format!(
                "discrete-log table for p = {p} exceeds the cap p < 2^27"
            )));
        }
        let order = (p - 1) as usize;
        let mut log_of = vec![u32::MAX; p as usize];
        let mut pow_of = Vec::with_capacity(order);
        let mut x = 1u64;
        for k in 0..order {
            if log_of[x as usize] != u32::MAX {
                return Err(LabError::Internal(format!(
                    "{} repeats a power before order {order} mod {p}",
                    field.generator()
                )));
            }
            log_of[x as usize] = k as u32;
            pow_of.push(x as u32);
            x = x * field.generator() % p;
        }
        Ok(DlogTable { field, log_of, pow_of })
    }

    pub fn for_prime(p: u64) -> Result<Self> {
        Self::build(PrimeField::new(p)?)
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn modulus(&self) -> u64 {
        self.field.modulus()
    }

    /// `k` in `[0, p-2]` with `g^k = x`; `None` for `x = 0`.
    #[inline]
    pub fn log(&self, x: u64) -> Option<u64> {
        let x = x % self.modulus();
        if x == 0 {
            None
        } else {
            Some(self.log_of[x as usize] as u64)
        }
    }

    /// `g^k`, with `k` reduced mod `p - 1`.
    #[inline]
    pub fn exp(&self, k: u64) -> u64 {
        self.pow_of[(k % self.field.group_order()) as usize] as u64
    }

    /// Re-derives every entry with modular exponentiation. Used by
    /// `prime-tools --table-check` and the tests.
    pub fn verify(&self) -> Result<()> {
        let p = self.modulus();
        let g = self.field.generator();
        let mut seen = vec![false; (p - 1) as usize];
        for x in 1..p {
            let k = self.log_of[x as usize] as u64;
            if k >= p - 1 || pow_mod(g, k, p) != x {
                return Err(LabError::Internal(format!("log_of[{x}] = {k} is wrong mod {p}")));
            }
            if std::mem::replace(&mut seen[k as usize], true) {
                return Err(LabError::Internal(format!("exponent {k} used twice mod {p}")));
            }
        }
        Ok(())
    }
}

/// `floor(sqrt(n))` exactly.
pub fn isqrt(n: u64) -> u64 {
    n.isqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    fn order(g: u64, p: u64) -> u64 {
        let mut x = g % p;
        let mut k = 1;
        while x != 1 {
            x = x * g % p;
            k += 1;
        }
        k
    }

    #[test]
    fn primality_examples() {
        assert!(is_prime(7));
        assert!(!is_prime(1));
        assert!(trial_division(10007));
        assert!(is_prime(10007));
    }

    #[test]
    fn primality_matches_trial_division() {
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n), trial_division(n), "n = {n}");
        }
        // Strong pseudoprimes to several small bases.
        assert!(!is_prime(3_215_031_751));
        assert!(!is_prime(3_825_123_056_546_413_051));
        assert!(is_prime(18_446_744_073_709_551_557));
    }

    #[test]
    fn primitive_root_examples() {
        assert_eq!(find_primitive_root(2).unwrap(), 1);
        assert_eq!(find_primitive_root(7).unwrap(), 3);
        assert_eq!(find_primitive_root(17).unwrap(), 3);
        assert!(matches!(find_primitive_root(15), Err(LabError::Domain(_))));
    }

    #[test]
    fn primitive_roots_have_full_order_and_are_smallest() {
        for p in (2..=1000).filter(|&n| trial_division(n)) {
            let g = find_primitive_root(p).unwrap();
            assert_eq!(order(g, p), p - 1, "p = {p}");
            for h in 1..g {
                assert!(order(h, p) < p - 1, "p = {p}: {h} is smaller");
            }
        }
    }

    #[test]
    fn dlog_examples() {
        let t = DlogTable::build(PrimeField::with_generator(7, 3).unwrap()).unwrap();
        assert_eq!(t.log(6), Some(3));
        assert_eq!(t.log(1), Some(0));
        assert_eq!(t.log(3), Some(1));
        assert_eq!(t.log(0), None);
    }

    #[test]
    fn dlog_round_trips() {
        for p in [2u64, 3, 5, 101, 499, 1009, 10007] {
            let t = DlogTable::for_prime(p).unwrap();
            t.verify().unwrap();
            for k in 0..p - 1 {
                assert_eq!(t.log(t.exp(k)), Some(k));
            }
        }
    }

    #[test]
    fn dlog_cap_is_enforced() {
        let p = ((1u64 << 27)..).find(|&n| is_prime(n)).unwrap();
        let field = PrimeField::with_generator(p, find_primitive_root(p).unwrap()).unwrap();
        assert!(matches!(DlogTable::build(field), Err(LabError::Resource(_))));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(mod_inverse(7, 3).unwrap(), 5);
        assert_eq!(mod_inverse(7, 1).unwrap(), 1);
        assert_eq!(mod_inverse(7, 6).unwrap(), 6);
        assert!(matches!(mod_inverse(7, 0), Err(LabError::Domain(_))));
        assert!(matches!(mod_inverse(7, 14), Err(LabError::Domain(_))));
    }

    #[test]
    fn inverses_for_small_primes() {
        for p in (2..=1000).filter(|&n| trial_division(n)) {
            for x in 1..p {
                assert_eq!(mod_inverse(p, x).unwrap() * x % p, 1);
            }
        }
    }

    #[test]
    fn isqrt_is_floor() {
        for n in 0..10_000u64 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n);
        }
        assert_eq!(isqrt(u64::MAX), u32::MAX as u64);
    }
}
