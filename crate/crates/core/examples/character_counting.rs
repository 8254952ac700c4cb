//! Counts the solutions J of x^-1 y (z^-1 t - 1) = 1 directly and through
//! characters, and places J between its lower and upper bounds.
//!
//!     cargo run --release --example character_counting

use growth_lab::characters::{incomplete_char_sum, theorem2_audit, CharacterTable};
use growth_lab::families::{generate_family, FamilySpec};

fn main() -> growth_lab::Result<()> {
    let p = 1009;
    let table = CharacterTable::for_prime(p)?;
    let spec = FamilySpec::random(p, 24, 11);
    let [a, b, c] = [0, 1, 2].map(|k| generate_family(&spec, k, &[0, p - 1]));
    let (a, b, c) = (a?, b?, c?);

    let j = theorem2_audit(&table, &a, &b, &c)?;
    println!("|A| = {}, |B| = {}, |C| = {}, |AB| = {}, |(A+1)C| = {}", j.card_a, j.card_b, j.card_c, j.card_ab, j.card_t);
    println!("J = {} (from characters: {:.6})", j.j, j.decomposition);
    println!("{} <= J <= {:.2} + {:.2}", j.lower, j.upper_main, j.upper_error);
    println!("worst nonprincipal sum {:.3} vs sqrt(p|C||T|) = {:.3}", j.char_worst, j.char_bound);
    println!("|AB||(A+1)C| / min(p|A|, |A|^2|B||C|/p) = {:.3}", j.ratio);

    let s = incomplete_char_sum(&table, 1, &c, &b)?;
    println!("sum over C x B of chi_1(c^-1 b - 1) = {:.4} {:+.4}i", s.re, s.im);
    Ok(())
}
