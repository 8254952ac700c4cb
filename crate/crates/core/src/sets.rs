//! Exact arithmetic on subsets of F_p.
//!
//! [`FpSet`] keeps a dense membership bitmap next to the sorted element
//! list, so every binary operation is an `O(|A||B|)` marking pass followed by
//! one `O(p / 64)` scan of the bitmap.

use std::fmt;

use crate::error::{LabError, Result};
use crate::field::{is_prime, mod_inverse, TABLE_CAP};

/// A subset of F_p.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FpSet {
    p: u32,
    bits: Vec<u64>,
    elems: Vec<u32>,
}

/// Scratch bitmap used to accumulate the result of a set operation.
pub(crate) struct Marks {
    p: u32,
    bits: Vec<u64>,
    count: usize,
}

impl Marks {
    pub(crate) fn new(p: u32) -> Self {
        Marks {
            p,
            bits: vec![0; (p as usize).div_ceil(64)],
            count: 0,
        }
    }

    #[inline]
    pub(crate) fn mark(&mut self, x: u32) {
        let (w, b) = ((x >> 6) as usize, x & 63);
        let word = &mut self.bits[w];
        if *word & (1 << b) == 0 {
            *word |= 1 << b;
            self.count += 1;
        }
    }

    #[inline]
    pub(crate) fn is_full(&self) -> bool {
        self.count == self.p as usize
    }

    pub(crate) fn finish(self) -> FpSet {
        let mut elems = Vec::with_capacity(self.count);
        for (w, &word) in self.bits.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let b = word.trailing_zeros();
                elems.push((w as u32) << 6 | b);
                word &= word - 1;
            }
        }
        FpSet {
            p: self.p,
            bits: self.bits,
            elems,
        }
    }
}

fn checked_modulus(p: u64) -> Result<u32> {
    if p >= TABLE_CAP {
        return Err(LabError::Resource(format!(
            "dense sets over F_{p} exceed the cap p < 2^27"
        )));
    }
    if !is_prime(p) {
        return Err(LabError::Domain(format!("{p} is not prime")));
    }
    Ok(p as u32)
}

impl FpSet {
    /// Builds a set from arbitrary integers, reducing each to its canonical
    /// residue in `[0, p-1]` (negative inputs included).
    pub fn new<I>(p: u64, elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = i64>,
    {
        let q = checked_modulus(p)?;
        let mut marks = Marks::new(q);
        for x in elements {
            marks.mark(x.rem_euclid(p as i64) as u32);
        }
        Ok(marks.finish())
    }

    pub fn from_residues<I>(p: u64, elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = u64>,
    {
        let q = checked_modulus(p)?;
        let mut marks = Marks::new(q);
        for x in elements {
            marks.mark((x % p) as u32);
        }
        Ok(marks.finish())
    }

    pub fn empty(p: u64) -> Result<Self> {
        Self::from_residues(p, std::iter::empty())
    }

    /// All of F_p.
    pub fn full(p: u64) -> Result<Self> {
        Self::from_residues(p, 0..p)
    }

    /// `p` must already be validated.
    pub(crate) fn from_valid_residues<I: IntoIterator<Item = u32>>(p: u32, elements: I) -> Self {
        let mut marks = Marks::new(p);
        for x in elements {
            marks.mark(x % p);
        }
        marks.finish()
    }

    pub fn modulus(&self) -> u64 {
        self.p as u64
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// `true` iff the set is all of F_p.
    pub fn is_full(&self) -> bool {
        self.elems.len() == self.p as usize
    }

    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        if x >= self.p as u64 {
            return false;
        }
        self.bits[(x >> 6) as usize] & (1 << (x & 63)) != 0
    }

    /// Sorted members.
    pub fn elements(&self) -> &[u32] {
        &self.elems
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.elems.iter().map(|&x| x as u64)
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn is_subset_of(&self, other: &FpSet) -> bool {
        self.p == other.p && self.iter().all(|x| other.contains(x))
    }

    pub fn intersection(&self, other: &FpSet) -> Result<FpSet> {
        same_field(self, other)?;
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        Ok(FpSet::from_valid_residues(
            self.p,
            small.elems.iter().copied().filter(|&x| large.contains(x as u64)),
        ))
    }

    /// The set with the listed residues removed.
    pub fn without(&self, excluded: &[u64]) -> FpSet {
        FpSet::from_valid_residues(
            self.p,
            self.elems
                .iter()
                .copied()
                .filter(|&x| !excluded.contains(&(x as u64))),
        )
    }

    /// Checks the bitmap, element list and cardinality against each other.
    pub fn check_consistency(&self) -> Result<()> {
        let by_bits: usize = self.bits.iter().map(|w| w.count_ones() as usize).sum();
        let sorted = self.elems.windows(2).all(|w| w[0] < w[1]);
        let members = self.elems.iter().all(|&x| x < self.p && self.contains(x as u64));
        if by_bits == self.elems.len() && sorted && members {
            Ok(())
        } else {
            Err(LabError::Internal(format!("inconsistent FpSet over F_{}", self.p)))
        }
    }
}

impl fmt::Debug for FpSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FpSet(p={}){:?}", self.p, self.elems)
    }
}

impl fmt::Display for FpSet {
    /// Sorted comma-separated residues.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.elems.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

pub(crate) fn same_field(a: &FpSet, b: &FpSet) -> Result<()> {
    if a.p == b.p {
        Ok(())
    } else {
        Err(LabError::ModulusMismatch(a.p as u64, b.p as u64))
    }
}

/// `A + B`.
pub fn sumset(a: &FpSet, b: &FpSet) -> Result<FpSet> {
    same_field(a, b)?;
    let p = a.p;
    let mut marks = Marks::new(p);
    for &x in &a.elems {
        for &y in &b.elems {
            let s = x + y;
            marks.mark(if s >= p { s - p } else { s });
        }
        if marks.is_full() {
            break;
        }
    }
    Ok(marks.finish())
}

/// `A - B`.
pub fn difference_set(a: &FpSet, b: &FpSet) -> Result<FpSet> {
    sumset(a, &affine_image(b, -1, 0))
}

/// `AB`.
pub fn product_set(a: &FpSet, b: &FpSet) -> Result<FpSet> {
    same_field(a, b)?;
    let p = a.p as u64;
    let mut marks = Marks::new(a.p);
    for &x in &a.elems {
        for &y in &b.elems {
            marks.mark((x as u64 * y as u64 % p) as u32);
        }
        if marks.is_full() {
            break;
        }
    }
    Ok(marks.finish())
}

/// `{c*a + d : a in A}`; `c` and `d` may be negative.
pub fn affine_image(a: &FpSet, c: i64, d: i64) -> FpSet {
    let p = a.p as i64;
    let (c, d) = (c.rem_euclid(p) as u64, d.rem_euclid(p) as u64);
    FpSet::from_valid_residues(
        a.p,
        a.elems
            .iter()
            .map(|&x| ((x as u64 * c + d) % a.p as u64) as u32),
    )
}

/// `A(A+1) = {a(a'+1) : a, a' in A}`, the image of `A x A` under `xy + x`.
pub fn shifted_product(a: &FpSet) -> FpSet {
    product_set(a, &affine_image(a, 1, 1)).expect("same field")
}

/// `(A+A) - (A+A)`.
pub fn two_a_minus_two_a(a: &FpSet) -> FpSet {
    let two_a = sumset(a, a).expect("same field");
    difference_set(&two_a, &two_a).expect("same field")
}

/// A relation `E` contained in `A x B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRelation {
    left: FpSet,
    right: FpSet,
    pairs: Vec<(u32, u32)>,
}

impl PairRelation {
    /// Validates that every pair lies in `left x right`; duplicates collapse.
    pub fn new<I>(left: FpSet, right: FpSet, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        same_field(&left, &right)?;
        let mut out = Vec::new();
        for (a, b) in pairs {
            if !left.contains(a) || !right.contains(b) {
                return Err(LabError::Precondition(format!(
                    "pair ({a}, {b}) is not in A x B"
                )));
            }
            out.push((a as u32, b as u32));
        }
        out.sort_unstable();
        out.dedup();
        Ok(PairRelation {
            left,
            right,
            pairs: out,
        })
    }

    /// All of `A x B`.
    pub fn full(left: FpSet, right: FpSet) -> Result<Self> {
        let pairs: Vec<(u64, u64)> = left
            .iter()
            .flat_map(|a| right.iter().map(move |b| (a, b)))
            .collect();
        Self::new(left, right, pairs)
    }

    pub fn left(&self) -> &FpSet {
        &self.left
    }

    pub fn right(&self) -> &FpSet {
        &self.right
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `K = |A||B| / |E|` as an unreduced fraction `(numerator, denominator)`.
    pub fn density_ratio(&self) -> (u64, u64) {
        (
            (self.left.len() * self.right.len()) as u64,
            self.pairs.len() as u64,
        )
    }
}

/// `A -_E B = {a - b : (a, b) in E}`.
pub fn restricted_difference(e: &PairRelation) -> FpSet {
    let p = e.left.p;
    FpSet::from_valid_residues(p, e.pairs.iter().map(|&(a, b)| (a + p - b) % p))
}

/// `(A1 - A1) / (A1 - A1)`, quotients with nonzero denominator.
pub fn ratio_set(a1: &FpSet) -> Result<FpSet> {
    if a1.len() < 2 {
        return Err(LabError::Domain(format!(
            "ratio set needs |A1| >= 2, got {}",
            a1.len()
        )));
    }
    let p = a1.p as u64;
    let diffs = difference_set(a1, a1)?;
    let inverses: Vec<u64> = diffs
        .iter()
        .filter(|&d| d != 0)
        .map(|d| mod_inverse(p, d))
        .collect::<Result<_>>()?;
    let mut marks = Marks::new(a1.p);
    'outer: for num in diffs.iter() {
        for &inv in &inverses {
            marks.mark((num * inv % p) as u32);
        }
        if marks.is_full() {
            break 'outer;
        }
    }
    Ok(marks.finish())
}

/// Outcome of the ratio-set dichotomy for a set `A1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkOutcome {
    /// `(A1 - A1)/(A1 - A1)` is all of F_p.
    AllOfFp,
    /// `(b1 - b2)/(b3 - b4) - 1` lies outside the ratio set.
    Quadruple([u64; 4]),
}

/// Either the ratio set of `A1` is F_p, or returns the lexicographically
/// first `(b1, b2, b3, b4)` in `A1^4` with `b3 != b4` whose shifted ratio
/// `(b1 - b2)/(b3 - b4) - 1` escapes the ratio set.
pub fn gk_dichotomy(a1: &FpSet) -> Result<GkOutcome> {
    let ratios = ratio_set(a1)?;
    if ratios.is_full() {
        return Ok(GkOutcome::AllOfFp);
    }
    let p = a1.p as u64;
    let elems = a1.to_vec();
    for &b1 in &elems {
        for &b2 in &elems {
            let num = (b1 + p - b2) % p;
            for &b3 in &elems {
                for &b4 in &elems {
                    if b3 == b4 {
                        continue;
                    }
                    let inv = mod_inverse(p, (b3 + p - b4) % p)?;
                    let check = (num * inv % p + p - 1) % p;
                    if !ratios.contains(check) {
                        return Ok(GkOutcome::Quadruple([b1, b2, b3, b4]));
                    }
                }
            }
        }
    }
    Err(LabError::Falsified(format!(
        "ratio set of {a1:?} is a proper subset of F_{p} yet every shifted ratio stays inside it"
    )))
}

/// Re-evaluates the escape condition of a quadruple returned by
/// [`gk_dichotomy`].
pub fn quadruple_escapes(a1: &FpSet, quad: [u64; 4]) -> Result<bool> {
    let p = a1.p as u64;
    if quad.iter().any(|&b| !a1.contains(b)) || quad[2] == quad[3] {
        return Ok(false);
    }
    let ratios = ratio_set(a1)?;
    let inv = mod_inverse(p, (quad[2] + p - quad[3]) % p)?;
    let check = ((quad[0] + p - quad[1]) % p * inv % p + p - 1) % p;
    Ok(!ratios.contains(check))
}
