//! Exact point/line incidences for the Elekes-type configuration
//!
//! ```text
//! P = AB x (A+1)C,    L = { y = (z/t) x + z : z in C, t in B }.
//! ```
//!
//! Each line `l(z, t)` passes through the `|A|` grid points `(at, (a+1)z)`,
//! so `I(P, L) >= |A||B||C|`; Szemerédi–Trotter on the other side gives the
//! product-set bound. Everything here is exact: real inputs are rationals and
//! incidence is an equality test.
//!
//! Counting runs on a compact `i64/i64` rational kernel whenever every value
//! fits, and falls back to arbitrary precision otherwise.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{BuildHasher, Hash};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rustc_hash::{FxBuildHasher, FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Default constant in the Szemerédi–Trotter comparison.
pub const DEFAULT_C_ST: f64 = 2.5;

const BRUTE_BUDGET: u128 = 1 << 24;
const PER_LINE_BUDGET: u128 = 1 << 26;
const RATIO_BUDGET: u128 = 1 << 26;
// Target number of build-side keys per partition of the hash join.
const HASH_PARTITION_KEYS: u128 = 1 << 13;

/// An exact rational in lowest terms with positive denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(BigRational);

/// `num / den` in canonical form.
pub fn rational_canonical(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Rational> {
    let den = den.into();
    if den.is_zero() {
        return Err(LabError::Domain("zero denominator".into()));
    }
    Ok(Rational(BigRational::new(num.into(), den)))
}

impl Rational {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        rational_canonical(num, den)
    }

    pub fn integer(n: i64) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn checked_div(&self, other: &Rational) -> Option<Rational> {
        if other.is_zero() {
            None
        } else {
            Some(Rational(&self.0 / &other.0))
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    fn to_small(&self) -> Option<SmallRat> {
        Some(SmallRat {
            n: self.numer().to_i64()?,
            d: self.denom().to_i64()?,
        })
    }
}

impl std::ops::Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        Rational(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        Rational(&self.0 - &rhs.0)
    }
}

impl std::ops::Mul for &Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        Rational(&self.0 * &rhs.0)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::integer(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for Rational {
    type Err = LabError;

    /// Accepts `n` or `n/d`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || LabError::Usage(format!("not a rational: {s:?}"));
        let (n, d) = match s.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        rational_canonical(n, d)
    }
}

// ---------------------------------------------------------------------------
// Counting kernels

/// Exact field operations; `None` signals overflow (or division by zero).
trait Scalar: Clone + Eq + Hash + Ord {
    fn mul(&self, o: &Self) -> Option<Self>;
    fn add(&self, o: &Self) -> Option<Self>;
    fn div(&self, o: &Self) -> Option<Self>;
    fn one() -> Self;

    /// `slope * x + intercept`, or `Some(None)` when the value is provably
    /// not an integer and the caller only looks for integers.
    fn line_at(slope: &Self, intercept: &Self, x: &Self, _integral_target: bool) -> Option<Option<Self>> {
        Some(Some(slope.mul(x)?.add(intercept)?))
    }

    /// `x / t + 1`.
    fn ratio_plus_one(x: &Self, t: &Self) -> Option<Self> {
        x.div(t)?.add(&Self::one())
    }

    fn is_integral(&self) -> bool;
}

impl Scalar for Rational {
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn div(&self, o: &Self) -> Option<Self> {
        self.checked_div(o)
    }
    fn one() -> Self {
        Rational::one()
    }
    fn is_integral(&self) -> bool {
        self.denom().is_one()
    }
}

/// Reduced `n / d` with `d > 0`, both fitting in `i64`. Ordering is
/// lexicographic on `(n, d)`, which is all the sort-merge join needs.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
struct SmallRat {
    n: i64,
    d: i64,
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    // Grid coordinates are often far larger than slopes; one Euclid step
    // leaves the binary loop with the bit length of the smaller operand.
    if a > b {
        a %= b;
        if a == 0 {
            return b;
        }
    } else {
        b %= a;
        if b == 0 {
            return a;
        }
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a <= u64::MAX as u128 && b <= u64::MAX as u128 {
        return gcd_u64(a as u64, b as u64) as u128;
    }
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

impl SmallRat {
    /// `make` for operands already known to fit `i64`.
    #[inline]
    fn make64(n: i64, d: i64) -> Option<Self> {
        if d == 0 || d == i64::MIN || n == i64::MIN {
            return Self::make(n as i128, d as i128);
        }
        let (n, d) = if d < 0 { (-n, -d) } else { (n, d) };
        if d == 1 {
            return Some(SmallRat { n, d: 1 });
        }
        let g = gcd_u64(n.unsigned_abs(), d as u64) as i64;
        Some(if g == 1 { SmallRat { n, d } } else { SmallRat { n: n / g, d: d / g } })
    }

    fn make(n: i128, d: i128) -> Option<Self> {
        if d == 0 {
            return None;
        }
        let (n, d) = if d < 0 { (-n, -d) } else { (n, d) };
        if d == 1 {
            return Some(SmallRat {
                n: i64::try_from(n).ok()?,
                d: 1,
            });
        }
        let g = gcd_u128(n.unsigned_abs(), d as u128);
        let (n, d) = if g == 1 {
            (n, d)
        } else if let (Ok(n64), Ok(d64), Ok(g64)) = (i64::try_from(n), i64::try_from(d), i64::try_from(g)) {
            ((n64 / g64) as i128, (d64 / g64) as i128)
        } else {
            (n / g as i128, d / g as i128)
        };
        Some(SmallRat {
            n: i64::try_from(n).ok()?,
            d: i64::try_from(d).ok()?,
        })
    }
}

impl Scalar for SmallRat {
    #[inline]
    fn mul(&self, o: &Self) -> Option<Self> {
        if let (Some(n), Some(d)) = (self.n.checked_mul(o.n), self.d.checked_mul(o.d)) {
            return SmallRat::make64(n, d);
        }
        SmallRat::make(self.n as i128 * o.n as i128, self.d as i128 * o.d as i128)
    }
    #[inline]
    fn add(&self, o: &Self) -> Option<Self> {
        if self.d == 1 && o.d == 1 {
            return Some(SmallRat {
                n: self.n.checked_add(o.n)?,
                d: 1,
            });
        }
        SmallRat::make(
            self.n as i128 * o.d as i128 + o.n as i128 * self.d as i128,
            self.d as i128 * o.d as i128,
        )
    }
    #[inline]
    fn div(&self, o: &Self) -> Option<Self> {
        if o.n == 0 {
            return None;
        }
        if let (Some(n), Some(d)) = (self.n.checked_mul(o.d), self.d.checked_mul(o.n)) {
            return SmallRat::make64(n, d);
        }
        SmallRat::make(self.n as i128 * o.d as i128, self.d as i128 * o.n as i128)
    }
    fn one() -> Self {
        SmallRat { n: 1, d: 1 }
    }

    #[inline]
    fn line_at(slope: &Self, intercept: &Self, x: &Self, integral_target: bool) -> Option<Option<Self>> {
        if integral_target && x.d == 1 && intercept.d == 1 {
            // slope.n and slope.d are coprime, so slope * x is an integer
            // exactly when slope.d divides x.
            if x.n % slope.d != 0 {
                return Some(None);
            }
            let y = (x.n / slope.d).checked_mul(slope.n)?.checked_add(intercept.n)?;
            return Some(Some(SmallRat { n: y, d: 1 }));
        }
        Some(Some(slope.mul(x)?.add(intercept)?))
    }

    #[inline]
    fn ratio_plus_one(x: &Self, t: &Self) -> Option<Self> {
        if t.n == 0 {
            return None;
        }
        // (xn/xd) / (tn/td) + 1 = (xn td + tn xd) / (xd tn)
        if x.d == 1 && t.d == 1 {
            if let Some(n) = x.n.checked_add(t.n) {
                return SmallRat::make64(n, t.n);
            }
        }
        let (xn, xd, tn, td) = (x.n as i128, x.d as i128, t.n as i128, t.d as i128);
        SmallRat::make(xn * td + tn * xd, xd * tn)
    }

    fn is_integral(&self) -> bool {
        self.d == 1
    }
}

/// Stable counting-sort scatter of `items` into `parts` buckets. Returns
/// the reordered items and the `parts + 1` bucket offsets.
fn partition_by<S: Clone>(items: Vec<S>, parts: usize, part_of: impl Fn(&S) -> usize) -> (Vec<S>, Vec<usize>) {
    let n = items.len();
    if parts == 1 || n == 0 {
        return (items, vec![0, n]);
    }
    let tags: Vec<u32> = items.iter().map(|r| part_of(r) as u32).collect();
    let mut offsets = vec![0usize; parts + 1];
    for &t in &tags {
        offsets[t as usize + 1] += 1;
    }
    for i in 0..parts {
        offsets[i + 1] += offsets[i];
    }
    let mut next = offsets.clone();
    let mut out = vec![items[0].clone(); n];
    for (item, &t) in items.into_iter().zip(&tags) {
        out[next[t as usize]] = item;
        next[t as usize] += 1;
    }
    (out, offsets)
}

struct KLine<S> {
    slope: S,
    intercept: S,
    source: Option<(S, S)>,
}

struct Kernel<S> {
    xs: Vec<S>,
    ys: Vec<S>,
    yset: FxHashSet<S>,
    ys_integral: bool,
    lines: Vec<KLine<S>>,
}

impl<S: Scalar> Kernel<S> {
    fn from_config(config: &IncidenceConfig, conv: impl Fn(&Rational) -> Option<S>) -> Option<Self> {
        let xs: Vec<S> = config.points.xs.iter().map(&conv).collect::<Option<_>>()?;
        let ys: Vec<S> = config.points.ys.iter().map(&conv).collect::<Option<_>>()?;
        let lines = config
            .lines
            .iter()
            .map(|l| {
                Some(KLine {
                    slope: conv(&l.slope)?,
                    intercept: conv(&l.intercept)?,
                    source: match &l.source {
                        Some((z, t)) => Some((conv(z)?, conv(t)?)),
                        None => None,
                    },
                })
            })
            .collect::<Option<_>>()?;
        let yset = ys.iter().cloned().collect();
        let ys_integral = ys.iter().all(S::is_integral);
        Some(Kernel {
            xs,
            ys,
            yset,
            ys_integral,
            lines,
        })
    }

    /// Every (point, line) pair is substituted into the line equation.
    fn brute(&self) -> Option<u64> {
        let mut total = 0u64;
        for line in &self.lines {
            for x in &self.xs {
                let value = line.slope.mul(x)?.add(&line.intercept)?;
                total += self.ys.iter().filter(|&y| *y == value).count() as u64;
            }
        }
        Some(total)
    }

    /// Per line: evaluate at each grid abscissa and look the ordinate up.
    fn per_line(&self) -> Option<Vec<u64>> {
        self.lines
            .iter()
            .map(|line| {
                let mut hits = 0u64;
                for x in &self.xs {
                    if let Some(y) = S::line_at(&line.slope, &line.intercept, x, self.ys_integral)? {
                        hits += self.yset.contains(&y) as u64;
                    }
                }
                Some(hits)
            })
            .collect()
    }

    /// Line sources `(z, t)` when the lines are exactly `{l(z, t)} = Z x T`
    /// with nonzero entries.
    fn ratio_sources(&self) -> Option<(Vec<S>, Vec<S>)> {
        let mut zs = Vec::new();
        let mut ts = Vec::new();
        for line in &self.lines {
            let (z, t) = line.source.as_ref()?;
            zs.push(z.clone());
            ts.push(t.clone());
        }
        zs.sort();
        zs.dedup();
        ts.sort();
        ts.dedup();
        let zero_free = |v: &[S]| v.iter().all(|s| s.div(s).is_some());
        if zs.len() * ts.len() != self.lines.len() || !zero_free(&zs) || !zero_free(&ts) {
            return None;
        }
        Some((zs, ts))
    }

    // On l(z, t), a grid point (x, y) is incident iff y / z = x / t + 1. So
    // I = sum_r #{(y, z) : y/z = r} * #{(x, t) : x/t + 1 = r}.

    fn for_each_left(&self, zs: &[S], mut f: impl FnMut(S)) -> Option<()> {
        for y in &self.ys {
            for z in zs {
                f(y.div(z)?);
            }
        }
        Some(())
    }

    fn for_each_right(&self, ts: &[S], mut f: impl FnMut(S)) -> Option<()> {
        for x in &self.xs {
            for t in ts {
                f(S::ratio_plus_one(x, t)?);
            }
        }
        Some(())
    }

    /// Radix-partitions both key lists by hash so that each partition's
    /// table stays small, then builds and probes partition by partition.
    fn ratio_hash_join(&self, zs: &[S], ts: &[S]) -> Option<u64> {
        let mut left = Vec::with_capacity(self.ys.len() * zs.len());
        self.for_each_left(zs, |r| left.push(r))?;
        let mut right = Vec::with_capacity(self.xs.len() * ts.len());
        self.for_each_right(ts, |r| right.push(r))?;

        let bits = (left.len() as u128).div_ceil(HASH_PARTITION_KEYS).next_power_of_two().trailing_zeros();
        let part_of = |r: &S| -> usize {
            if bits == 0 {
                0
            } else {
                (FxBuildHasher.hash_one(r) >> (64 - bits)) as usize
            }
        };
        let (left, left_offsets) = partition_by(left, 1 << bits, part_of);
        let (right, right_offsets) = partition_by(right, 1 << bits, part_of);

        let mut total = 0u64;
        let mut table: FxHashMap<S, u32> = FxHashMap::default();
        for part in 0..1usize << bits {
            table.clear();
            for r in &left[left_offsets[part]..left_offsets[part + 1]] {
                *table.entry(r.clone()).or_insert(0) += 1;
            }
            for r in &right[right_offsets[part]..right_offsets[part + 1]] {
                total += table.get(r).copied().unwrap_or(0) as u64;
            }
        }
        Some(total)
    }

    fn ratio_sort_merge(&self, zs: &[S], ts: &[S]) -> Option<u64> {
        let mut left = Vec::with_capacity(self.ys.len() * zs.len());
        self.for_each_left(zs, |r| left.push(r))?;
        left.sort_unstable();
        let mut right = Vec::with_capacity(self.xs.len() * ts.len());
        self.for_each_right(ts, |r| right.push(r))?;
        right.sort_unstable();

        let (mut i, mut j, mut total) = (0, 0, 0u64);
        while i < left.len() && j < right.len() {
            match left[i].cmp(&right[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    let key = &left[i];
                    let i0 = i;
                    while i < left.len() && left[i] == *key {
                        i += 1;
                    }
                    let j0 = j;
                    while j < right.len() && right[j] == *key {
                        j += 1;
                    }
                    total += ((i - i0) * (j - j0)) as u64;
                }
            }
        }
        Some(total)
    }

    /// For each line with source `(z, t)`, the number of `a in A` whose point
    /// `(at, (a+1)z)` is a grid point lying on the line. Returns the minimum.
    fn min_witnessed(&self, a: &[S], xset: &FxHashSet<S>) -> Option<u64> {
        let one = S::one();
        let shifted: Vec<S> = a.iter().map(|v| v.add(&one)).collect::<Option<_>>()?;
        let mut min = u64::MAX;
        for line in &self.lines {
            let (z, t) = line.source.as_ref()?;
            let mut hits = 0u64;
            for (av, a1) in a.iter().zip(&shifted) {
                let x = av.mul(t)?;
                let y = a1.mul(z)?;
                if xset.contains(&x)
                    && self.yset.contains(&y)
                    && S::line_at(&line.slope, &line.intercept, &x, self.ys_integral)?.as_ref() == Some(&y)
                {
                    hits += 1;
                }
            }
            min = min.min(hits);
        }
        Some(if self.lines.is_empty() { 0 } else { min })
    }
}

// ---------------------------------------------------------------------------
// Configuration

/// The Cartesian grid `xs x ys`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointGrid {
    pub xs: Vec<Rational>,
    pub ys: Vec<Rational>,
}

impl PointGrid {
    pub fn new(mut xs: Vec<Rational>, mut ys: Vec<Rational>) -> Self {
        xs.sort();
        xs.dedup();
        ys.sort();
        ys.dedup();
        PointGrid { xs, ys }
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: &Rational, y: &Rational) -> bool {
        self.xs.binary_search(x).is_ok() && self.ys.binary_search(y).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Rational, &Rational)> {
        self.xs.iter().flat_map(move |x| self.ys.iter().map(move |y| (x, y)))
    }
}

/// A non-vertical line `y = slope * x + intercept`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Line {
    pub slope: Rational,
    pub intercept: Rational,
    /// `(z, t)` when this is `l(z, t): y = (z/t) x + z`.
    pub source: Option<(Rational, Rational)>,
}

impl Line {
    pub fn new(slope: Rational, intercept: Rational) -> Self {
        Line {
            slope,
            intercept,
            source: None,
        }
    }

    /// `l(z, t): y - (z/t) x - z = 0`.
    pub fn elekes(z: &Rational, t: &Rational) -> Result<Self> {
        let slope = z
            .checked_div(t)
            .ok_or_else(|| LabError::Precondition("t = 0 gives no line".into()))?;
        Ok(Line {
            slope,
            intercept: z.clone(),
            source: Some((z.clone(), t.clone())),
        })
    }

    pub fn contains(&self, x: &Rational, y: &Rational) -> bool {
        &(&(&self.slope * x) + &self.intercept) == y
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceConfig {
    pub points: PointGrid,
    pub lines: Vec<Line>,
    pub source_a: Vec<Rational>,
    pub source_b: Vec<Rational>,
    pub source_c: Vec<Rational>,
}

impl IncidenceConfig {
    /// An arbitrary grid with arbitrary lines; duplicate lines collapse.
    pub fn new(points: PointGrid, lines: Vec<Line>) -> Self {
        IncidenceConfig {
            points,
            lines: dedup_lines(lines),
            source_a: Vec::new(),
            source_b: Vec::new(),
            source_c: Vec::new(),
        }
    }
}

fn dedup_lines(lines: Vec<Line>) -> Vec<Line> {
    let mut seen = std::collections::HashSet::new();
    lines
        .into_iter()
        .filter(|l| seen.insert((l.slope.clone(), l.intercept.clone())))
        .collect()
}

fn canonical_set(v: &[Rational]) -> Vec<Rational> {
    let mut v = v.to_vec();
    v.sort();
    v.dedup();
    v
}

fn product(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out: Vec<Rational> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
    out.sort();
    out.dedup();
    out
}

/// Points `AB x (A+1)C` and lines `l(z, t)` for `z in C`, `t in B`.
pub fn build_elekes_config(a: &[Rational], b: &[Rational], c: &[Rational]) -> Result<IncidenceConfig> {
    let (a, b, c) = (canonical_set(a), canonical_set(b), canonical_set(c));
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Err(LabError::Precondition("A, B and C must be nonempty".into()));
    }
    let minus_one = Rational::integer(-1);
    if a.iter().any(|v| v.is_zero() || *v == minus_one) {
        return Err(LabError::Precondition("A must avoid 0 and -1".into()));
    }
    if b.iter().chain(&c).any(Rational::is_zero) {
        return Err(LabError::Precondition("B and C must avoid 0".into()));
    }
    let one = Rational::one();
    let shifted: Vec<Rational> = a.iter().map(|v| v + &one).collect();
    let points = PointGrid::new(product(&a, &b), product(&shifted, &c));
    let mut lines = Vec::with_capacity(b.len() * c.len());
    for z in &c {
        for t in &b {
            lines.push(Line::elekes(z, t)?);
        }
    }
    let n_lines = lines.len();
    let lines = dedup_lines(lines);
    if lines.len() != n_lines {
        return Err(LabError::Internal(format!(
            "{n_lines} source pairs produced only {} distinct lines",
            lines.len()
        )));
    }
    Ok(IncidenceConfig {
        points,
        lines,
        source_a: a,
        source_b: b,
        source_c: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMethod {
    /// `O(|P||L|)` substitution.
    Brute,
    /// `O(|L| |AB|)` evaluation with ordinate lookup.
    PerLine,
    /// Ratio decomposition with a partitioned hash join.
    RatioHash,
    /// Ratio decomposition with a sort-merge join.
    RatioSorted,
}

impl fmt::Display for CountMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMethod::Brute => "brute",
            CountMethod::PerLine => "per-line",
            CountMethod::RatioHash => "ratio-hash",
            CountMethod::RatioSorted => "ratio-sorted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceCount {
    pub total: u64,
    /// Every method that ran, each with its own total.
    pub methods: Vec<(CountMethod, u64)>,
    /// Exact incidences per line, when the per-line method ran.
    pub per_line: Option<Vec<u64>>,
}

fn big_kernel(config: &IncidenceConfig) -> Kernel<Rational> {
    Kernel::from_config(config, |r| Some(r.clone())).expect("identity conversion")
}

/// The compact kernel, or `None` when some coordinate does not fit `i64`.
fn kernel(config: &IncidenceConfig) -> Option<Kernel<SmallRat>> {
    Kernel::from_config(config, Rational::to_small)
}

/// Runs one method on the compact kernel, retrying on arbitrary precision
/// if any intermediate value overflows.
macro_rules! run_kernel {
    ($k:expr, $config:expr, $big:ident, |$kk:ident| $body:expr) => {{
        let small = match $k {
            Some($kk) => $body,
            None => None,
        };
        match small {
            Some(v) => v,
            None => {
                let $kk = $big.get_or_insert_with(|| big_kernel($config));
                $body.ok_or_else(|| LabError::Internal("arbitrary-precision kernel failed".into()))?
            }
        }
    }};
}

/// `(|Z|, |T|)` when the lines are exactly `{l(z, t) : z in Z, t in T}` with
/// `z, t` nonzero, which is what the ratio joins require.
fn ratio_shape(config: &IncidenceConfig) -> Option<(usize, usize)> {
    let mut zs = std::collections::BTreeSet::new();
    let mut ts = std::collections::BTreeSet::new();
    for line in &config.lines {
        let (z, t) = line.source.as_ref()?;
        if z.is_zero() || t.is_zero() {
            return None;
        }
        zs.insert(z);
        ts.insert(t);
    }
    (zs.len() * ts.len() == config.lines.len()).then_some((zs.len(), ts.len()))
}

fn method_cost(config: &IncidenceConfig, method: CountMethod) -> Option<u128> {
    let nx = config.points.xs.len() as u128;
    let ny = config.points.ys.len() as u128;
    let nl = config.lines.len() as u128;
    match method {
        CountMethod::Brute => Some(nx * ny * nl),
        CountMethod::PerLine => Some(nx * nl),
        CountMethod::RatioHash | CountMethod::RatioSorted => {
            let (nz, nt) = ratio_shape(config)?;
            Some((ny * nz as u128).max(nx * nt as u128))
        }
    }
}

fn method_budget(method: CountMethod) -> u128 {
    match method {
        CountMethod::Brute => BRUTE_BUDGET,
        CountMethod::PerLine => PER_LINE_BUDGET,
        CountMethod::RatioHash | CountMethod::RatioSorted => RATIO_BUDGET,
    }
}

/// Counts with one chosen method. Ratio methods need Elekes-sourced lines
/// forming a full `C x B` family; other configurations are rejected.
pub fn count_incidences_with(config: &IncidenceConfig, method: CountMethod) -> Result<u64> {
    let k = kernel(config);
    let mut big = None;
    run_method(&k, config, &mut big, method).map(|(total, _)| total)
}

fn run_method(
    k: &Option<Kernel<SmallRat>>,
    config: &IncidenceConfig,
    big: &mut Option<Kernel<Rational>>,
    method: CountMethod,
) -> Result<(u64, Option<Vec<u64>>)> {
    let not_ratio = || LabError::Precondition("ratio counting needs a full Elekes line family".into());
    Ok(match method {
        CountMethod::Brute => (run_kernel!(k, config, big, |kk| kk.brute()), None),
        CountMethod::PerLine => {
            let counts = run_kernel!(k, config, big, |kk| kk.per_line());
            (counts.iter().sum(), Some(counts))
        }
        CountMethod::RatioHash | CountMethod::RatioSorted => {
            if ratio_shape(config).is_none() {
                return Err(not_ratio());
            }
            let total = run_kernel!(k, config, big, |kk| {
                kk.ratio_sources().and_then(|(zs, ts)| match method {
                    CountMethod::RatioHash => kk.ratio_hash_join(&zs, &ts),
                    _ => kk.ratio_sort_merge(&zs, &ts),
                })
            });
            (total, None)
        }
    })
}

/// Exact incidence count, computed by every method that fits its budget
/// (at least two), all of which must agree.
pub fn count_incidences(config: &IncidenceConfig) -> Result<IncidenceCount> {
    let methods: Vec<CountMethod> = [
        CountMethod::Brute,
        CountMethod::PerLine,
        CountMethod::RatioHash,
        CountMethod::RatioSorted,
    ]
    .into_iter()
    .filter(|&m| method_cost(config, m).is_some_and(|c| c <= method_budget(m)))
    .collect();
    if methods.len() < 2 {
        return Err(LabError::Resource(format!(
            "only {} counting method(s) fit the budget for |P| = {}, |L| = {}",
            methods.len(),
            config.points.len(),
            config.lines.len()
        )));
    }
    let k = kernel(config);
    let mut big = None;
    let mut results = Vec::new();
    let mut per_line = None;
    for m in methods {
        let (total, counts) = run_method(&k, config, &mut big, m)?;
        if counts.is_some() {
            per_line = counts;
        }
        results.push((m, total));
    }
    let total = results[0].1;
    if results.iter().any(|&(_, t)| t != total) {
        return Err(LabError::Internal(format!("incidence counts disagree: {results:?}")));
    }
    Ok(IncidenceCount {
        total,
        methods: results,
        per_line,
    })
}

/// Minimum over lines of the number of verified points `(at, (a+1)z)`.
fn min_witnessed_points(config: &IncidenceConfig) -> Result<u64> {
    let small = Kernel::from_config(config, Rational::to_small).and_then(|k| {
        let a: Vec<SmallRat> = config.source_a.iter().map(Rational::to_small).collect::<Option<_>>()?;
        let xset: FxHashSet<SmallRat> = k.xs.iter().copied().collect();
        k.min_witnessed(&a, &xset)
    });
    match small {
        Some(v) => Ok(v),
        None => {
            let k = big_kernel(config);
            let xset: FxHashSet<Rational> = k.xs.iter().cloned().collect();
            k.min_witnessed(&config.source_a, &xset)
                .ok_or_else(|| LabError::Precondition("lines without (z, t) sources".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub card_a: u64,
    pub card_b: u64,
    pub card_c: u64,
    pub card_ab: u64,
    /// `|(A+1)C|`.
    pub card_t: u64,
    pub points: u64,
    pub lines: u64,
    pub incidences: u64,
    pub methods: Vec<CountMethod>,
    /// Least number of witnessed points `(at, (a+1)z)` on any line.
    pub min_witnessed_per_line: u64,
    /// Least exact incidence count on a line, when the per-line method ran.
    pub min_line_incidences: Option<u64>,
    /// `|A||B||C|`.
    pub lower: u64,
    pub c_st: f64,
    /// `|P| + |L| + c_ST (|P||L|)^(2/3)`.
    pub st_rhs: f64,
    pub st_ratio: f64,
    pub st_holds: bool,
    /// `|AB||(A+1)C|`.
    pub product: u64,
    /// `sqrt(|A|^3 |B||C|)`.
    pub sqrt_bound: f64,
    pub ratio: f64,
    /// `|AB||(A+1)C| >= sqrt(|A|^3 |B||C|)`, decided exactly.
    pub constant_one_holds: bool,
}

/// Builds the configuration for `A, B, C` and checks the exact consequences:
/// each line carries `|A|` grid points, `I >= |A||B||C|`, `|L| = |B||C|`.
/// The Szemerédi–Trotter side and the product-set ratio are reported.
pub fn theorem3_audit(a: &[Rational], b: &[Rational], c: &[Rational], c_st: f64) -> Result<Theorem3Report> {
    let config = build_elekes_config(a, b, c)?;
    let na = config.source_a.len() as u64;
    let nb = config.source_b.len() as u64;
    let nc = config.source_c.len() as u64;
    let nab = config.points.xs.len() as u64;
    let nt = config.points.ys.len() as u64;
    let np = config.points.len() as u64;
    let nl = config.lines.len() as u64;
    let ctx = format!("|A| = {na}, |B| = {nb}, |C| = {nc}");
    if nl != nb * nc {
        return Err(LabError::Falsified(format!("|L| = {nl} != |B||C| ({ctx})")));
    }
    if np != nab * nt {
        return Err(LabError::Internal(format!("|P| = {np} != |AB||(A+1)C|")));
    }

    let min_witnessed = min_witnessed_points(&config)?;
    if min_witnessed < na {
        return Err(LabError::Falsified(format!(
            "a line carries only {min_witnessed} < |A| witnessed points ({ctx})"
        )));
    }
    let count = count_incidences(&config)?;
    let min_line = count.per_line.as_ref().map(|v| v.iter().copied().min().unwrap_or(0));
    if let Some(m) = min_line {
        if m < na {
            return Err(LabError::Falsified(format!(
                "a line has only {m} < |A| incidences ({ctx})"
            )));
        }
    }
    let lower = na * nb * nc;
    if count.total < lower {
        return Err(LabError::Falsified(format!(
            "I = {} < |A||B||C| = {lower} ({ctx})",
            count.total
        )));
    }

    let st_rhs = np as f64 + nl as f64 + c_st * ((np as f64) * (nl as f64)).powf(2.0 / 3.0);
    let product = nab * nt;
    let sqrt_bound = ((na * na * na) as f64 * (nb * nc) as f64).sqrt();
    let constant_one_holds = (product as u128).pow(2) >= (na as u128).pow(3) * nb as u128 * nc as u128;
    Ok(Theorem3Report {
        card_a: na,
        card_b: nb,
        card_c: nc,
        card_ab: nab,
        card_t: nt,
        points: np,
        lines: nl,
        incidences: count.total,
        methods: count.methods.iter().map(|&(m, _)| m).collect(),
        min_witnessed_per_line: min_witnessed,
        min_line_incidences: min_line,
        lower,
        c_st,
        st_rhs,
        st_ratio: count.total as f64 / st_rhs,
        st_holds: count.total as f64 <= st_rhs,
        product,
        sqrt_bound,
        ratio: product as f64 / sqrt_bound,
        constant_one_holds,
    })
}
