//! Builds the window set inside {g^n - 1} and confirms |A(A+1)| <= 2M.
//!
//!     cargo run --release --example extremal_construction -- 100003 1000

use growth_lab::extremal::{build_extremal_set, verify_extremal};

fn main() -> growth_lab::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<u64>());
    let p = args.next().and_then(Result::ok).unwrap_or(10007);
    let n = args.next().and_then(Result::ok).unwrap_or(100);

    let result = build_extremal_set(p, n)?;
    let v = verify_extremal(&result)?;
    println!("p = {p}, N = {n}, g = {}, M = {}, L = {}", result.g, result.m, result.l);
    println!("|A| = {} (needed >= {n})", v.card_a);
    println!("|A(A+1)| = {} <= 2M = {}", v.shifted_card, v.two_m);
    println!("|A(A+1)| / sqrt(p|A|) = {:.4}", v.ratio_sqrt_pa);
    println!("A(A+1) inside the exponent window: {}", v.containment);
    Ok(())
}
