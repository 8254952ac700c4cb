//! Sumsets, product sets, A(A+1), 2A-2A and the ratio-set dichotomy for a
//! small random set.
//!
//!     cargo run --example set_arithmetic

use growth_lab::families::{generate_family, FamilySpec};
use growth_lab::sets::{
    difference_set, gk_dichotomy, product_set, ratio_set, shifted_product, sumset,
    two_a_minus_two_a, GkOutcome,
};

fn main() -> growth_lab::Result<()> {
    let p = 1009;
    let a = generate_family(&FamilySpec::random(p, 12, 7), 0, &[0, p - 1])?;
    println!("A = {{{a}}} in F_{p}, |A| = {}", a.len());
    println!("|A+A|    = {}", sumset(&a, &a)?.len());
    println!("|A-A|    = {}", difference_set(&a, &a)?.len());
    println!("|AA|     = {}", product_set(&a, &a)?.len());
    println!("|A(A+1)| = {}", shifted_product(&a).len());
    println!("|2A-2A|  = {}", two_a_minus_two_a(&a).len());

    let small = a.intersection(&growth_lab::FpSet::new(p, 0..200)?)?;
    let ratios = ratio_set(&small)?;
    println!("A1 = A ∩ [0, 200) has |A1| = {}, |(A1-A1)/(A1-A1)| = {}", small.len(), ratios.len());
    match gk_dichotomy(&small)? {
        GkOutcome::AllOfFp => println!("the ratio set is all of F_p"),
        GkOutcome::Quadruple(q) => println!("(b1-b2)/(b3-b4) - 1 escapes it for (b1, b2, b3, b4) = {q:?}"),
    }
    Ok(())
}
