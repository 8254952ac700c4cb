//! Primality, the smallest primitive root, and a discrete-log table.
//!
//!     cargo run --example prime_field -- 10007

use growth_lab::field::{find_primitive_root, is_prime, mod_inverse, DlogTable};

fn main() -> growth_lab::Result<()> {
    let p: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10007);
    println!("p = {p}, prime = {}", is_prime(p));
    if !is_prime(p) {
        return Ok(());
    }
    let g = find_primitive_root(p)?;
    println!("smallest primitive root g = {g}");

    let table = DlogTable::for_prime(p)?;
    table.verify()?;
    for x in [2, 3, p - 1] {
        let k = table.log(x).expect("nonzero");
        println!("log_g({x}) = {k}, g^{k} = {}", table.exp(k));
    }
    println!("1/2 mod p = {}", mod_inverse(p, 2)?);
    Ok(())
}
