//! Seeded input families for the audits.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), whose output stream is
//! fixed by the seed on every platform. A spec's seed drives stream `k` for
//! its `k`-th generated set, so `A`, `B`, `C` of one trial are independent
//! but reproducible. Grid cells get their seeds from [`cell_seed`].

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::extremal::build_extremal_set;
use crate::field::{find_primitive_root, mul_mod};
use crate::incidence::Rational;
use crate::sets::FpSet;

/// Integer families for the plane audits are drawn from `[1, RATIONAL_RANGE]`.
pub const RATIONAL_RANGE: i64 = 1_000_000;

/// Rejected draws tolerated per requested element before giving up.
const RETRIES_PER_ELEMENT: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Random,
    Interval,
    Ap,
    Gp,
    Extremal,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Random => "random",
            FamilyKind::Interval => "interval",
            FamilyKind::Ap => "ap",
            FamilyKind::Gp => "gp",
            FamilyKind::Extremal => "extremal",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => FamilyKind::Random,
            "interval" => FamilyKind::Interval,
            "ap" => FamilyKind::Ap,
            "gp" => FamilyKind::Gp,
            "extremal" => FamilyKind::Extremal,
            _ => return Err(LabError::Usage(format!("unknown family kind `{s}`"))),
        })
    }
}

/// What to generate. `start` and `step` default per kind: intervals and APs
/// start at 1 with step 1, GPs start at 1 with ratio the smallest primitive
/// root (2 over the rationals). `size` is `N` for the extremal kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub p: u64,
    pub size: u64,
    pub start: Option<i64>,
    pub step: Option<i64>,
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind, p: u64, size: u64, seed: u64) -> Self {
        FamilySpec {
            kind,
            p,
            size,
            start: None,
            step: None,
            seed,
        }
    }

    pub fn random(p: u64, size: u64, seed: u64) -> Self {
        Self::new(FamilyKind::Random, p, size, seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        FamilySpec { seed, ..self.clone() }
    }
}

/// `kind=.. p=.. size=.. [start=..] [step=..] seed=..`, the form used in
/// reports and grid plan files.
impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={} p={} size={}", self.kind, self.p, self.size)?;
        if let Some(s) = self.start {
            write!(f, " start={s}")?;
        }
        if let Some(s) = self.step {
            write!(f, " step={s}")?;
        }
        write!(f, " seed={}", self.seed)
    }
}

impl FromStr for FamilySpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = FamilySpec::new(FamilyKind::Random, 0, 0, 0);
        let mut have_kind = false;
        for token in s.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| LabError::Usage(format!("expected key=value, got `{token}`")))?;
            let bad = |_| LabError::Usage(format!("bad value for {key}: `{value}`"));
            match key {
                "kind" => {
                    spec.kind = value.parse()?;
                    have_kind = true;
                }
                "p" => spec.p = value.parse().map_err(bad)?,
                "size" => spec.size = value.parse().map_err(bad)?,
                "start" => spec.start = Some(value.parse().map_err(bad)?),
                "step" => spec.step = Some(value.parse().map_err(bad)?),
                "seed" => spec.seed = value.parse().map_err(bad)?,
                _ => return Err(LabError::Usage(format!("unknown family key `{key}`"))),
            }
        }
        if !have_kind {
            return Err(LabError::Usage(format!("family `{s}` has no kind")));
        }
        Ok(spec)
    }
}

/// ChaCha8 seeded with `seed` and positioned on `stream`.
pub fn family_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The seed of grid cell `index`: the first output of ChaCha8 seeded with
/// `master` on stream `index`. Independent of execution order.
pub fn cell_seed(master: u64, index: u64) -> u64 {
    family_rng(master, index).next_u64()
}

/// Generates the `stream`-th set of `spec` inside F_p, avoiding `exclude`.
///
/// Progressions skip excluded terms and continue until `size` terms are
/// collected. Random sets resample rejected draws, failing with
/// [`LabError::Resource`] after `64 * size` rejections. Extremal sets are
/// built for `N = size` and then stripped of excluded elements.
pub fn generate_family(spec: &FamilySpec, stream: u64, exclude: &[u64]) -> Result<FpSet> {
    let p = spec.p;
    FpSet::empty(p)?;
    let excluded: Vec<u64> = {
        let mut v: Vec<u64> = exclude.iter().map(|&x| x % p).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let available = p - excluded.len() as u64;
    if spec.kind != FamilyKind::Extremal && spec.size > available {
        return Err(LabError::Precondition(format!(
            "cannot pick {} elements from the {available} allowed residues mod {p}",
            spec.size
        )));
    }
    let allowed = |x: u64| excluded.binary_search(&x).is_err();
    let size = spec.size as usize;
    let progression = |start: u64, next: &dyn Fn(u64) -> u64| -> Result<FpSet> {
        let mut out = Vec::with_capacity(size);
        let mut seen = FxHashSet::default();
        let mut x = start;
        while out.len() < size {
            if !seen.insert(x) {
                return Err(LabError::Precondition(format!(
                    "{} progression from {start} repeats after {} distinct terms mod {p}",
                    spec.kind,
                    seen.len()
                )));
            }
            if allowed(x) {
                out.push(x);
            }
            x = next(x);
        }
        FpSet::from_residues(p, out)
    };
    let residue = |v: i64| v.rem_euclid(p as i64) as u64;

    match spec.kind {
        FamilyKind::Interval | FamilyKind::Ap => {
            let step = if spec.kind == FamilyKind::Interval {
                1
            } else {
                residue(spec.step.unwrap_or(1))
            };
            progression(residue(spec.start.unwrap_or(1)), &|x| (x + step) % p)
        }
        FamilyKind::Gp => {
            let ratio = match spec.step {
                Some(r) => residue(r),
                None => find_primitive_root(p)?,
            };
            progression(residue(spec.start.unwrap_or(1)), &|x| mul_mod(x, ratio, p))
        }
        FamilyKind::Extremal => {
            let a = build_extremal_set(p, spec.size)?.a;
            Ok(a.without(&excluded))
        }
        FamilyKind::Random => {
            let mut rng = family_rng(spec.seed, stream);
            if spec.size.saturating_mul(4) >= p {
                // Dense request: partial Fisher-Yates over the allowed residues.
                let mut pool: Vec<u64> = (0..p).filter(|&x| allowed(x)).collect();
                for i in 0..size {
                    let j = rng.random_range(i..pool.len());
                    pool.swap(i, j);
                }
                pool.truncate(size);
                return FpSet::from_residues(p, pool);
            }
            let mut chosen = FxHashSet::default();
            let mut out = Vec::with_capacity(size);
            let mut rejected = 0u64;
            while out.len() < size {
                let x = rng.random_range(0..p);
                if allowed(x) && chosen.insert(x) {
                    out.push(x);
                } else {
                    rejected += 1;
                    if rejected > RETRIES_PER_ELEMENT * spec.size {
                        return Err(LabError::Resource(format!(
                            "gave up after {rejected} rejected draws for {spec}"
                        )));
                    }
                }
            }
            FpSet::from_residues(p, out)
        }
    }
}

/// Generates the `stream`-th set of `spec` as distinct positive integers
/// (so `0` and `-1` never occur). `p` is ignored. Random sets are uniform
/// in `[1, RATIONAL_RANGE]`; GPs default to ratio 2.
pub fn generate_rational_family(spec: &FamilySpec, stream: u64) -> Result<Vec<Rational>> {
    let size = spec.size as usize;
    let mut out: Vec<i64> = Vec::with_capacity(size);
    match spec.kind {
        FamilyKind::Random => {
            if spec.size > RATIONAL_RANGE as u64 {
                return Err(LabError::Precondition(format!(
                    "cannot pick {size} distinct integers from [1, {RATIONAL_RANGE}]"
                )));
            }
            let mut rng = family_rng(spec.seed, stream);
            let mut chosen = FxHashSet::default();
            while out.len() < size {
                let x = rng.random_range(1..=RATIONAL_RANGE);
                if chosen.insert(x) {
                    out.push(x);
                }
            }
        }
        FamilyKind::Interval | FamilyKind::Ap => {
            let start = spec.start.unwrap_or(1);
            let step = if spec.kind == FamilyKind::Interval { 1 } else { spec.step.unwrap_or(1) };
            if start < 1 || step < 1 {
                return Err(LabError::Precondition(format!(
                    "integer progressions need start >= 1 and step >= 1, got {spec}"
                )));
            }
            for i in 0..spec.size as i64 {
                out.push(checked_term(start.checked_add(i.checked_mul(step).unwrap_or(-1)), spec)?);
            }
        }
        FamilyKind::Gp => {
            let start = spec.start.unwrap_or(1);
            let ratio = spec.step.unwrap_or(2);
            if start < 1 || ratio < 2 {
                return Err(LabError::Precondition(format!(
                    "integer geometric progressions need start >= 1 and ratio >= 2, got {spec}"
                )));
            }
            // Terms can outgrow i64; build them as exact rationals.
            let mut x = Rational::integer(start);
            let r = Rational::integer(ratio);
            let mut terms = Vec::with_capacity(size);
            for _ in 0..size {
                terms.push(x.clone());
                x = &x * &r;
            }
            return Ok(terms);
        }
        FamilyKind::Extremal => {
            return Err(LabError::Usage(
                "the extremal family only exists inside F_p".into(),
            ))
        }
    }
    Ok(out.into_iter().map(Rational::integer).collect())
}

fn checked_term(term: Option<i64>, spec: &FamilySpec) -> Result<i64> {
    term.filter(|&t| t >= 1)
        .ok_or_else(|| LabError::Precondition(format!("progression overflows i64: {spec}")))
}
