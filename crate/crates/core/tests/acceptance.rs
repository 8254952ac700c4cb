//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Run alone with `cargo test --release --test acceptance`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use growth_lab::characters::{
    character_decomposition_count, count_solutions_brute, count_solutions_fast, incomplete_char_sum,
    worst_nonprincipal_sum, CharacterTable,
};
use growth_lab::extremal::{build_extremal_set, verify_extremal};
use growth_lab::grid::{parse_plan, run_grid, AuditOptions};
use growth_lab::incidence::{
    build_elekes_config, count_incidences_with, theorem3_audit, CountMethod, Rational, DEFAULT_C_ST,
};
use growth_lab::prooflab::{
    bg_injection_audit, bsg_witness_search, choose_quadruple, dyadic_levels, lemma2_audit, popular_anchor,
    ruzsa_mult_audit, theorem1_exponent, BsgOutcome, THEOREM1_EXPONENT,
};
use growth_lab::report::{from_json_str, to_csv_string, to_json_string, ExperimentReport};
use growth_lab::sets::{gk_dichotomy, GkOutcome, PairRelation};
use growth_lab::FpSet;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0;

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail, notes: Vec::new() }
    }
}

fn rng(criterion: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(criterion);
    r
}

fn random_subset(rng: &mut ChaCha8Rng, p: u64, size: usize, exclude: &[u64]) -> Vec<u64> {
    let pool: Vec<u64> = (0..p).filter(|x| !exclude.contains(x)).collect();
    let mut v: Vec<u64> = pool.choose_multiple(rng, size).copied().collect();
    v.sort_unstable();
    v
}

fn fp(p: u64, xs: &[u64]) -> FpSet {
    FpSet::from_residues(p, xs.iter().copied()).unwrap()
}

// Plain-loop set arithmetic, independent of the library's bitmaps.

fn inv(p: u64, x: u64) -> u64 {
    let mut r = 1u64;
    let (mut b, mut e) = (x % p, p - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn products(p: u64, a: &[u64], b: &[u64]) -> HashSet<u64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y % p)).collect()
}

fn shifted(p: u64, a: &[u64]) -> HashSet<u64> {
    a.iter().flat_map(|&x| a.iter().map(move |&y| x * ((y + 1) % p) % p)).collect()
}

fn differences(p: u64, a: &[u64]) -> HashSet<u64> {
    a.iter().flat_map(|&x| a.iter().map(move |&y| (x + p - y) % p)).collect()
}

fn two_minus_two(p: u64, a: &[u64]) -> usize {
    let d: Vec<u64> = differences(p, a).into_iter().collect();
    d.iter().flat_map(|&x| d.iter().map(move |&y| (x + y) % p)).collect::<HashSet<_>>().len()
}

fn anchor_count(p: u64, a: &[u64], x: u64, b0: u64) -> u64 {
    let left: HashSet<u64> = a.iter().map(|&y| (x + 1) * y % p).collect();
    a.iter().filter(|&&y| left.contains(&((b0 + 1) * y % p))).count() as u64
}

fn cube(n: usize) -> u128 {
    (n as u128).pow(3)
}

fn extremal_cells() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, n) in [(10007u64, 100u64), (10007, 500), (100003, 1000)] {
        let started = Instant::now();
        let r = build_extremal_set(p, n).unwrap();
        let a = r.a.to_vec();
        let s = shifted(p, &a).len() as u64;
        let elapsed = started.elapsed();
        let m = r.m;
        let m_ok = m * m <= 4 * n * p && (m + 1) * (m + 1) > 4 * n * p;
        let card = a.len() as u64;
        let cell_ok = card >= n
            && m_ok
            && s <= 2 * m
            && (s as u128).pow(2) <= 16 * p as u128 * card as u128
            && verify_extremal(&r).unwrap().shifted_card == s
            && elapsed < Duration::from_secs(10);
        ok &= cell_ok;
        parts.push(format!(
            "(p={p}, N={n}): |A|={card} |A(A+1)|={s} 2M={} 4sqrt(p|A|)={:.1} {:.2}s",
            2 * m,
            4.0 * ((p * card) as f64).sqrt(),
            elapsed.as_secs_f64()
        ));
    }
    Outcome::new(ok, parts.join("; "))
}

fn j_sandwich() -> Outcome {
    let mut rng = rng(2);
    let started = Instant::now();
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let p = if trial % 2 == 0 { 101 } else { 1009 };
        let mut pick = |exclude: &[u64]| {
            let size = rng.random_range(16..=32);
            random_subset(&mut rng, p, size, exclude)
        };
        let (a, b, c) = (pick(&[0, p - 1]), pick(&[0]), pick(&[0]));
        let ab: Vec<u64> = products(p, &a, &b).into_iter().collect();
        let a1: Vec<u64> = a.iter().map(|x| x + 1).collect();
        let t: Vec<u64> = products(p, &a1, &c).into_iter().collect();
        let (sab, sb, sc, st) = (fp(p, &ab), fp(p, &b), fp(p, &c), fp(p, &t));
        let brute = count_solutions_brute(&sab, &sb, &sc, &st).unwrap();
        let fast = count_solutions_fast(&sab, &sb, &sc, &st).unwrap();
        let (na, nb, nc, nab, nt) = (a.len(), b.len(), c.len(), ab.len(), t.len());
        let lower = (na * nb * nc) as u64;
        let pf = p as f64;
        let upper = (nab * nb * nc * nt) as f64 / (pf - 1.0) + (pf * (nc * nt * nab * nb) as f64).sqrt();
        worst = worst.max(brute as f64 / upper);
        if brute != fast || brute < lower || brute as f64 > upper * (1.0 + 1e-9) {
            failures += 1;
        }
    }
    let elapsed = started.elapsed();
    Outcome::new(
        failures == 0 && elapsed < Duration::from_secs(60),
        format!(
            "200 triples, {failures} failures, max J/upper = {worst:.4}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn character_bounds() -> Outcome {
    let mut rng = rng(3);
    let mut sum_fail = 0;
    let mut orth_err: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for p in [101u64, 499] {
        let table = CharacterTable::for_prime(p).unwrap();
        let order = p - 1;
        for j in 0..order {
            let s: num_complex::Complex64 = (1..p).map(|x| table.eval(j, x)).sum();
            let expect = if j == 0 { order as f64 } else { 0.0 };
            orth_err = orth_err.max((s - expect).norm());
        }
        for x in 1..p {
            let s: num_complex::Complex64 = (0..order).map(|j| table.eval(j, x)).sum();
            let expect = if x == 1 { order as f64 } else { 0.0 };
            orth_err = orth_err.max((s - expect).norm());
        }
        for _ in 0..20 {
            let nc = rng.random_range(1..=40);
            let nt = rng.random_range(1..=40);
            let c = fp(p, &random_subset(&mut rng, p, nc, &[0]));
            let t = fp(p, &random_subset(&mut rng, p, nt, &[]));
            let bound = ((p * (nc * nt) as u64) as f64).sqrt();
            let mut worst: f64 = 0.0;
            for j in 1..order {
                let s = incomplete_char_sum(&table, j, &c, &t).unwrap().norm();
                worst = worst.max(s);
                if s > bound + 1e-6 {
                    sum_fail += 1;
                }
            }
            let hist = worst_nonprincipal_sum(&table, &c, &t).unwrap();
            if (hist - worst).abs() > 1e-9 * bound.max(1.0) {
                sum_fail += 1;
            }
            worst_ratio = worst_ratio.max(worst / bound);
        }
    }

    // Decomposition against the exact count, with the character sum taken
    // over each quadruple separately.
    let mut dec_fail = 0;
    let mut dec_err: f64 = 0.0;
    for p in [53u64, 101] {
        let table = CharacterTable::for_prime(p).unwrap();
        for _ in 0..10 {
            let mut pick = |exclude: &[u64]| {
                let size = rng.random_range(1..=8);
                random_subset(&mut rng, p, size, exclude)
            };
            let (x, y, z, t) = (pick(&[0]), pick(&[]), pick(&[0]), pick(&[]));
            let exact = count_solutions_brute(&fp(p, &x), &fp(p, &y), &fp(p, &z), &fp(p, &t)).unwrap() as f64;
            let mut direct = num_complex::Complex64::new(0.0, 0.0);
            for &xx in &x {
                for &yy in &y {
                    for &zz in &z {
                        for &tt in &t {
                            let w = inv(p, xx) * yy % p * ((inv(p, zz) * tt % p + p - 1) % p) % p;
                            for j in 0..p - 1 {
                                direct += table.eval(j, w);
                            }
                        }
                    }
                }
            }
            let direct = direct.re / (p - 1) as f64;
            let factored =
                character_decomposition_count(&table, &fp(p, &x), &fp(p, &y), &fp(p, &z), &fp(p, &t)).unwrap();
            for v in [direct, factored] {
                let err = (v - exact).abs() / exact.max(1.0);
                dec_err = dec_err.max(err);
                if err > 1e-6 {
                    dec_fail += 1;
                }
            }
        }
    }
    Outcome::new(
        sum_fail == 0 && orth_err <= 1e-9 && dec_fail == 0,
        format!(
            "40 (C,T) pairs, {sum_fail} bound failures, max |sum|/sqrt(p|C||T|) = {worst_ratio:.4}; \
             orthogonality error {orth_err:.1e}; decomposition rel. error {dec_err:.1e} ({dec_fail} failures)"
        ),
    )
}

/// Incidences by integer arithmetic: `l(z, t)` meets `(x, y)` iff
/// `y t = z (x + t)`.
fn integer_incidences(a: &[i64], b: &[i64], c: &[i64]) -> (u64, u64) {
    let xs: BTreeSet<i128> = a.iter().flat_map(|&x| b.iter().map(move |&y| x as i128 * y as i128)).collect();
    let ys: HashSet<i128> = a
        .iter()
        .flat_map(|&x| c.iter().map(move |&z| (x as i128 + 1) * z as i128))
        .collect();
    let (mut total, mut least) = (0u64, u64::MAX);
    for &z in c {
        for &t in b {
            let (z, t) = (z as i128, t as i128);
            let on = xs
                .iter()
                .filter(|&&x| {
                    let num = z * (x + t);
                    num % t == 0 && ys.contains(&(num / t))
                })
                .count() as u64;
            total += on;
            least = least.min(on);
        }
    }
    (total, least)
}

fn incidence_exactness() -> Outcome {
    let mut rng = rng(4);
    let mut audit_time = Duration::ZERO;
    let mut failures = Vec::new();
    let mut min_ratio = f64::INFINITY;
    let sizes = std::iter::repeat_n(64usize, 20).chain(std::iter::repeat_n(256, 5));
    for (i, n) in sizes.enumerate() {
        let mut pick = || {
            let mut s = BTreeSet::new();
            while s.len() < n {
                s.insert(rng.random_range(1..=1_000_000i64));
            }
            s.into_iter().collect::<Vec<i64>>()
        };
        let (a, b, c) = (pick(), pick(), pick());
        let rat = |v: &[i64]| v.iter().map(|&x| Rational::integer(x)).collect::<Vec<_>>();
        let (ra, rb, rc) = (rat(&a), rat(&b), rat(&c));
        let started = Instant::now();
        let audited = theorem3_audit(&ra, &rb, &rc, DEFAULT_C_ST);
        audit_time += started.elapsed();
        let report = match audited {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("triple {i}: {e}"));
                continue;
            }
        };
        let nab = a.iter().flat_map(|&x| b.iter().map(move |&y| x as i128 * y as i128)).collect::<HashSet<_>>().len();
        let nt = a
            .iter()
            .flat_map(|&x| c.iter().map(move |&z| (x as i128 + 1) * z as i128))
            .collect::<HashSet<_>>()
            .len();
        let n3 = cube(n) * (n * n) as u128;
        let mut ok = report.lines == (n * n) as u64
            && report.incidences >= cube(n) as u64
            && report.min_witnessed_per_line >= n as u64
            && report.min_line_incidences.is_none_or(|m| m >= n as u64)
            && report.card_ab == nab as u64
            && report.card_t == nt as u64
            && (nab as u128 * nt as u128).pow(2) >= n3
            && report.constant_one_holds
            && report.methods.len() >= 2;
        // The audit already required two methods to agree; at size 64 the
        // ratio joins and a plain integer count are compared as well.
        if n == 64 {
            let config = build_elekes_config(&ra, &rb, &rc).unwrap();
            let hash = count_incidences_with(&config, CountMethod::RatioHash).unwrap();
            let sorted = count_incidences_with(&config, CountMethod::RatioSorted).unwrap();
            ok &= hash == report.incidences && sorted == report.incidences;
            let (total, least) = integer_incidences(&a, &b, &c);
            ok &= total == report.incidences && least >= n as u64;
        }
        min_ratio = min_ratio.min(report.ratio);
        if !ok {
            failures.push(format!("triple {i} (size {n}): {report:?}"));
        }
    }
    let mut out = Outcome::new(
        failures.is_empty() && audit_time < Duration::from_secs(120),
        format!(
            "25 triples, {} failures, min |AB||(A+1)C|/sqrt(|A|^3|B||C|) = {min_ratio:.3}, audits took {:.1}s",
            failures.len(),
            audit_time.as_secs_f64()
        ),
    );
    out.notes = failures;
    out
}

fn anchor_machinery() -> Outcome {
    let mut rng = rng(5);
    let mut fails: HashMap<&str, u32> = HashMap::new();
    let mut gk_not_applicable = 0;
    let mut notes = Vec::new();
    for trial in 0..50 {
        let p = if trial % 2 == 0 { 101u64 } else { 499 };
        let a = random_subset(&mut rng, p, 12, &[0, p - 1]);
        let set = fp(p, &a);
        let mut fail = |what: &'static str, why: String| {
            *fails.entry(what).or_default() += 1;
            notes.push(format!("trial {trial} (p = {p}, A = {a:?}): {what}: {why}"));
        };

        let counts: Vec<u64> = a.iter().map(|&b0| a.iter().map(|&x| anchor_count(p, &a, x, b0)).sum()).collect();
        let best = *counts.iter().max().unwrap();
        let expect_b0 = a[counts.iter().position(|&c| c == best).unwrap()];
        let card_shifted = shifted(p, &a).len() as u128;
        let (b0, total) = match popular_anchor(&set) {
            Ok(v) => v,
            Err(e) => {
                fail("anchor", e.to_string());
                continue;
            }
        };
        if (b0, total) != (expect_b0, best) || (total as u128) * card_shifted < cube(12) {
            fail("anchor", format!("library ({b0}, {total}), oracle ({expect_b0}, {best})"));
        }

        let decomp = match dyadic_levels(&set, b0) {
            Ok(d) => d,
            Err(e) => {
                fail("pigeonhole", e.to_string());
                continue;
            }
        };
        let levels: BTreeSet<u32> = a
            .iter()
            .map(|&x| anchor_count(p, &a, x, b0))
            .filter(|&c| c > 0)
            .map(u64::ilog2)
            .collect();
        let weight = decomp.n as u128 * decomp.a1.len() as u128 * levels.len() as u128;
        if levels.len() as u64 != decomp.class_count || weight < total as u128 {
            fail(
                "pigeonhole",
                format!(
                    "N |A1| class_count = {} * {} * {} = {weight} < total = {total}",
                    decomp.n,
                    decomp.a1.len(),
                    levels.len()
                ),
            );
        }

        let a1 = decomp.a1_set();
        if a1.len() < 2 {
            gk_not_applicable += 1;
        } else {
            let a1v = a1.to_vec();
            let diffs: Vec<u64> = differences(p, &a1v).into_iter().collect();
            let ratios: HashSet<u64> = diffs
                .iter()
                .flat_map(|&n| diffs.iter().filter(|&&d| d != 0).map(move |&d| n * inv(p, d) % p))
                .collect();
            match gk_dichotomy(&a1) {
                Ok(GkOutcome::AllOfFp) if ratios.len() as u64 == p => {}
                Ok(GkOutcome::Quadruple([b1, b2, b3, b4]))
                    if [b1, b2, b3, b4].iter().all(|b| a1v.contains(b))
                        && b3 != b4
                        && !ratios.contains(&(((b1 + p - b2) * inv(p, (b3 + p - b4) % p) % p + p - 1) % p)) => {}
                other => fail("gk", format!("{other:?} not verified")),
            }
        }

        let quad = choose_quadruple(&set, &a1).unwrap();
        let rec = match bg_injection_audit(&set, &decomp, quad) {
            Ok(r) => r,
            Err(e) => {
                fail("injection", e.to_string());
                continue;
            }
        };
        let [b1, b2, b3, b4] = quad;
        let s: HashSet<u64> = a
            .iter()
            .flat_map(|&x| a.iter().map(move |&y| ((b1 + p - b2) * x + (b3 + p - b4) * y) % p))
            .collect();
        let d = differences(p, &a).len() as u128;
        let lhs = s.len() as u128 * (decomp.n as u128).pow(4);
        let rhs = d.pow(4) * two_minus_two(p, &a) as u128;
        if rec.s.len() != s.len() || (rec.counting_lhs, rec.counting_rhs) != (lhs, rhs) || lhs > rhs {
            fail("counting", format!("|S| N^4 = {lhs}, |A-A|^4 |2A-2A| = {rhs}"));
        }
    }
    let total_fails: u32 = fails.values().sum();
    let mut keys: Vec<_> = fails.iter().collect();
    keys.sort();
    let mut out = Outcome::new(
        total_fails == 0,
        format!(
            "50 sets of size 12, failures by step {keys:?}; gk not applicable (|A1| = 1) in {gk_not_applicable}"
        ),
    );
    out.notes = notes;
    out
}

fn bsg_witness() -> Outcome {
    let mut rng = rng(6);
    let mut found = 0;
    let mut notes = Vec::new();
    for trial in 0..100 {
        let p = if trial % 2 == 0 { 101u64 } else { 1009 };
        let (na, nb) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let a = random_subset(&mut rng, p, na, &[]);
        let b = random_subset(&mut rng, p, nb, &[]);
        let all: Vec<(u64, u64)> = a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect();
        let keep = rng.random_range((na * nb).div_ceil(2)..=na * nb);
        let e: Vec<(u64, u64)> = all.choose_multiple(&mut rng, keep).copied().collect();
        let relation = PairRelation::new(fp(p, &a), fp(p, &b), e.iter().copied()).unwrap();
        let search = bsg_witness_search(&relation).unwrap();
        let BsgOutcome::Witness(w) = &search.outcome else {
            notes.push(format!("trial {trial}: exhausted for A = {a:?}, B = {b:?}, E = {e:?}"));
            continue;
        };
        // K = |A||B| / |E|; both inequalities with denominators cleared.
        let (na, nb, ne) = (na as u128, nb as u128, keep as u128);
        let dd = differences(p, w).len() as u128;
        let restricted = e.iter().map(|&(x, y)| (x + p - y) % p).collect::<HashSet<_>>().len() as u128;
        let size_ok = 10 * w.len() as u128 * nb >= ne;
        let diff_ok = restricted.pow(4) * 10_000 * (na * nb).pow(5) >= dd * na * nb * nb * ne.pow(5);
        let subset_ok = !w.is_empty() && w.iter().all(|x| a.contains(x));
        if size_ok && diff_ok && subset_ok {
            found += 1;
        } else {
            notes.push(format!("trial {trial}: witness {w:?} fails the oracle"));
        }
    }
    let mut out = Outcome::new(found == 100, format!("valid witness in {found}/100"));
    out.notes = notes;
    out
}

fn ruzsa_triangle() -> Outcome {
    let mut rng = rng(7);
    let mut failures = 0;
    let mut max_ratio: f64 = 0.0;
    for trial in 0..200 {
        let p = if trial % 2 == 0 { 101u64 } else { 1009 };
        let n = rng.random_range(1..=30);
        let a = random_subset(&mut rng, p, n, &[0, p - 1]);
        let lhs = (products(p, &a, &a).len() * n) as u64;
        let rhs = (shifted(p, &a).len() as u64).pow(2);
        max_ratio = max_ratio.max(lhs as f64 / rhs as f64);
        match ruzsa_mult_audit(&fp(p, &a)) {
            Ok(r) if r.lhs == lhs && r.rhs == rhs && lhs <= rhs => {}
            _ => failures += 1,
        }
    }
    Outcome::new(
        failures == 0,
        format!("200 sets, {failures} failures, max |AA||A|/|A(A+1)|^2 = {max_ratio:.4}"),
    )
}

fn log_exponents(p: u64, a: &[u64]) -> (f64, f64) {
    let ln_a = (a.len() as f64).ln();
    let s = (shifted(p, a).len() as f64).ln();
    let d = (differences(p, a).len() as f64).ln();
    (s / ln_a, (8.0 * d + 4.0 * s) / ln_a)
}

fn empirical_exponents() -> Outcome {
    let p = 10007u64;
    let mut rng = rng(8);
    let mut failures = 0;
    let (mut min_beta, mut min_l2) = (f64::INFINITY, f64::INFINITY);
    for n in [20usize, 50, 99] {
        for _ in 0..10 {
            let a = random_subset(&mut rng, p, n, &[0, p - 1]);
            let (beta, l2) = log_exponents(p, &a);
            let set = fp(p, &a);
            let t1 = theorem1_exponent(&set).unwrap();
            let lem = lemma2_audit(&set).unwrap();
            min_beta = min_beta.min(beta);
            min_l2 = min_l2.min(l2);
            let agree = (t1.beta - beta).abs() < 1e-12 && (lem.exponent - l2).abs() < 1e-12;
            if !(agree && beta >= THEOREM1_EXPONENT && l2 >= 13.0 && t1.pass && lem.exponent_pass) {
                failures += 1;
            }
        }
    }
    let mut notes = Vec::new();
    let g = growth_lab::field::find_primitive_root(p).unwrap();
    for n in [20u64, 50, 99] {
        let ap: Vec<u64> = (1..=n).collect();
        let gp: Vec<u64> = (0..n).map(|k| growth_lab::field::pow_mod(g, k, p)).collect();
        for (name, a) in [("ap", ap), ("gp", gp)] {
            let (beta, l2) = log_exponents(p, &a);
            notes.push(format!("{name} |A| = {n}: beta = {beta:.4}, difference exponent = {l2:.3}"));
        }
    }
    for n in [2u64, 4, 8] {
        let r = build_extremal_set(p, n).unwrap();
        let a = r.a.to_vec();
        if a.len() < 2 || (a.len() as u64).pow(2) >= p {
            notes.push(format!("extremal N = {n}: |A| = {} outside 2 <= |A| < sqrt(p)", a.len()));
            continue;
        }
        let (beta, l2) = log_exponents(p, &a);
        notes.push(format!(
            "extremal N = {n} |A| = {}: beta = {beta:.4}, difference exponent = {l2:.3}",
            a.len()
        ));
    }
    let mut out = Outcome::new(
        failures == 0,
        format!("30 random sets, {failures} failures, min beta = {min_beta:.4}, min difference exponent = {min_l2:.3}"),
    );
    out.notes = notes;
    out
}

const PLAN: &str = "\
extremal kind=extremal p=1009 size=10
thm2 kind=random p=101 size=12
chars kind=random p=101 size=10
thm3 kind=random p=101 size=16
anchor kind=random p=101 size=10
levels kind=random p=499 size=10
injection kind=random p=101 size=8
bsg kind=random p=101 size=6
ruzsa kind=gp p=1009 size=12
lemma2 kind=ap p=10007 size=30
thm1 kind=random p=10007 size=40
";

fn timeless(reports: &[ExperimentReport]) -> String {
    let zeroed: Vec<ExperimentReport> = reports
        .iter()
        .map(|r| ExperimentReport {
            wall_time_ms: 0,
            ..r.clone()
        })
        .collect();
    to_json_string(&zeroed).unwrap()
}

/// Every bound row of a CSV report, checked as `ratio = lhs / rhs` to the
/// 12 significant digits the reports keep.
fn csv_ratio_violations(text: &str) -> usize {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (rec, lhs, rhs, ratio) = (col("record"), col("lhs"), col("rhs"), col("ratio"));
    let mut bad = 0;
    for row in reader.records() {
        let row = row.unwrap();
        if &row[rec] != "bound" {
            continue;
        }
        let l: f64 = row[lhs].parse().unwrap();
        let r: f64 = row[rhs].parse().unwrap();
        let ok = if r == 0.0 {
            row[ratio].is_empty()
        } else {
            let stored: f64 = row[ratio].parse().unwrap();
            (stored - l / r).abs() <= 1e-11 * (l / r).abs()
        };
        if !ok {
            bad += 1;
        }
    }
    bad
}

fn determinism() -> Outcome {
    let plan = parse_plan(PLAN).unwrap();
    let opts = AuditOptions::default();
    let first = run_grid(&plan, 11, &opts).unwrap().reports;
    let second = run_grid(&plan, 11, &opts).unwrap().reports;
    let library_same = timeless(&first) == timeless(&second);

    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.txt");
    std::fs::write(&plan_path, PLAN).unwrap();
    let run_cli = |tag: &str| {
        let json = dir.path().join(format!("{tag}.json"));
        let csv = dir.path().join(format!("{tag}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_growth-lab"))
            .args(["--seed", "11", "--quiet", "--json"])
            .arg(&json)
            .arg("--csv")
            .arg(&csv)
            .arg("grid")
            .arg("--plan")
            .arg(&plan_path)
            .status()
            .unwrap();
        let json = std::fs::read_to_string(json).unwrap();
        let csv = std::fs::read_to_string(csv).unwrap();
        (status.code(), from_json_str(&json).unwrap(), csv)
    };
    let (code1, cli1, csv1) = run_cli("a");
    let (code2, cli2, _) = run_cli("b");
    let cli_same = timeless(&cli1) == timeless(&cli2) && timeless(&cli1) == timeless(&first);

    let rows: usize = first.iter().map(|r| r.bounds.len()).sum();
    let inconsistent = first.iter().chain(&cli1).filter(|r| r.check_consistency().is_err()).count();
    let csv_bad = csv_ratio_violations(&csv1) + csv_ratio_violations(&to_csv_string(&first).unwrap());
    let pass = library_same && cli_same && code1 == code2 && inconsistent == 0 && csv_bad == 0;
    Outcome::new(
        pass,
        format!(
            "{} cells: library rerun identical = {library_same}, CLI rerun identical = {cli_same} \
             (exit {code1:?}/{code2:?}); {rows} bound rows, {inconsistent} inconsistent reports, \
             {csv_bad} bad CSV ratios",
            first.len()
        ),
    )
}

fn main() {
    type Check = (&'static str, fn() -> Outcome);
    let criteria: [Check; 9] = [
        ("extremal construction", extremal_cells),
        ("J sandwich", j_sandwich),
        ("character bounds", character_bounds),
        ("incidence exactness", incidence_exactness),
        ("anchor, pigeonhole, dichotomy, injection", anchor_machinery),
        ("BSG witness", bsg_witness),
        ("Ruzsa triangle", ruzsa_triangle),
        ("empirical exponents", empirical_exponents),
        ("determinism and report consistency", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Outcome::new(false, format!("panicked: {:?}", e.downcast_ref::<String>())));
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} {verdict} [{name}] {} ({:.1}s)",
            i + 1,
            outcome.detail,
            started.elapsed().as_secs_f64()
        );
        for note in outcome.notes.iter().take(12) {
            println!("    {note}");
        }
        if outcome.notes.len() > 12 {
            println!("    ... {} more", outcome.notes.len() - 12);
        }
        failed += usize::from(!outcome.pass);
    }
    println!("acceptance: {} of 9 criteria pass", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
