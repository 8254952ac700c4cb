//! Exact incidences between the grid AB x (A+1)C and the lines
//! y = (z/t) x + z, for random integer sets.
//!
//!     cargo run --release --example elekes_incidences -- 64

use growth_lab::families::{generate_rational_family, FamilySpec};
use growth_lab::incidence::{theorem3_audit, Rational, DEFAULT_C_ST};

fn main() -> growth_lab::Result<()> {
    let size = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    let spec = FamilySpec::random(0, size, 5);
    let a = generate_rational_family(&spec, 0)?;
    let b = generate_rational_family(&spec, 1)?;
    let c = generate_rational_family(&spec, 2)?;

    let r = theorem3_audit(&a, &b, &c, DEFAULT_C_ST)?;
    println!("|P| = {}, |L| = {}, I = {} (counted by {:?})", r.points, r.lines, r.incidences, r.methods);
    println!("every line carries >= {} witnessed points, |A| = {}", r.min_witnessed_per_line, r.card_a);
    println!("I / (|P| + |L| + {} (|P||L|)^(2/3)) = {:.5}", r.c_st, r.st_ratio);
    println!("|AB||(A+1)C| / sqrt(|A|^3|B||C|) = {:.3}", r.ratio);

    // Fractions work the same way.
    let half = |n: i64| Rational::new(n, 2).expect("nonzero denominator");
    let r = theorem3_audit(&[half(1), half(3)], &[half(5)], &[Rational::integer(3)], DEFAULT_C_ST)?;
    println!("A = {{1/2, 3/2}}, B = {{5/2}}, C = {{3}}: I = {}", r.incidences);
    Ok(())
}
