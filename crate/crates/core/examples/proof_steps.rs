//! Walks one random set through the popular anchor, the dyadic level set,
//! the injection count and the multiplicative triangle inequality.
//!
//!     cargo run --release --example proof_steps

use growth_lab::families::{generate_family, FamilySpec};
use growth_lab::grid::dense_relation;
use growth_lab::prooflab::{
    bg_injection_audit, bsg_witness_search, choose_quadruple, dyadic_levels, lemma2_audit,
    popular_anchor, ruzsa_mult_audit, theorem1_exponent,
};

fn main() -> growth_lab::Result<()> {
    let p = 499;
    let a = generate_family(&FamilySpec::random(p, 12, 3), 0, &[0, p - 1])?;
    println!("A = {{{a}}}");

    let (b0, total) = popular_anchor(&a)?;
    let d = dyadic_levels(&a, b0)?;
    println!("b0 = {b0}, total = {total}, |A(A+1)| = {}", d.shifted_card);
    println!("level N = {}, |A1| = {}, classes = {}", d.n, d.a1.len(), d.class_count);
    println!("N|A1|·classes >= total: {}", d.tight_pigeonhole);

    let quad = choose_quadruple(&a, &d.a1_set())?;
    let rec = bg_injection_audit(&a, &d, quad)?;
    println!("quadruple {quad:?}: |S| = {}, {} tuples mapped injectively", rec.s.len(), rec.domain_size);
    println!("|S| N^4 = {} <= |A-A|^4 |2A-2A| = {}", rec.counting_lhs, rec.counting_rhs);

    let r = ruzsa_mult_audit(&a)?;
    println!("|AA||A| = {} <= |A(A+1)|^2 = {}", r.lhs, r.rhs);

    let small = generate_family(&FamilySpec::random(p, 8, 4), 0, &[])?;
    let other = generate_family(&FamilySpec::random(p, 8, 4), 1, &[])?;
    let e = dense_relation(&small, &other, 4)?;
    let found = bsg_witness_search(&e)?;
    println!("BSG witness for |E| = {}: {:?} after {} subsets", e.len(), found.witness()?, found.subsets_tried);

    let wide = generate_family(&FamilySpec::random(10007, 50, 3), 0, &[0, 10006])?;
    let l2 = lemma2_audit(&wide)?;
    let t1 = theorem1_exponent(&wide)?;
    println!("|A| = 50 in F_10007: difference exponent {:.2}, beta = {:.3}", l2.exponent, t1.beta);
    Ok(())
}
