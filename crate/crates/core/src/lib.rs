//! Exact set arithmetic over prime fields, and audits of how fast
//! `A(A+1) = {a(b+1) : a, b in A}` must grow.
//!
//! The crate is organised bottom-up:
//!
//! - [`field`]: primality, primitive roots, discrete-log tables, inverses.
//! - [`sets`]: [`sets::FpSet`] (bitmap plus sorted elements) with sumsets,
//!   product sets, `A(A+1)`, `2A-2A`, restricted differences, ratio sets
//!   and the ratio-set dichotomy.
//! - [`extremal`]: the set `{g^n - 1}` restricted to a window of exponents,
//!   which keeps `|A(A+1)|` of order `sqrt(p|A|)`.
//! - [`characters`]: multiplicative characters and the three-way count of
//!   solutions to `x^-1 y (z^-1 t - 1) = 1`.
//! - [`incidence`]: exact rationals and the point-line configuration on
//!   `AB x (A+1)C`, with several independent incidence counters.
//! - [`prooflab`]: the combinatorial steps of the growth argument, checked
//!   by exhaustive computation.
//! - [`families`], [`report`], [`grid`]: seeded inputs, JSON/CSV reports,
//!   experiment grids and exponent fits.
//! - [`cli`]: the `growth-lab` command line.
//!
//! Runnable examples live in `examples/`, one per capability:
//! `prime_field`, `set_arithmetic`, `extremal_construction`,
//! `character_counting`, `elekes_incidences`, `proof_steps` and
//! `exponent_grid`.
//!
//! ```
//! use growth_lab::sets::{shifted_product, FpSet};
//!
//! let a = FpSet::new(7, [1, 2]).unwrap();
//! assert_eq!(shifted_product(&a).to_vec(), vec![2, 3, 4, 6]);
//! ```

pub mod characters;
pub mod cli;
pub mod error;
pub mod extremal;
pub mod families;
pub mod field;
pub mod grid;
pub mod incidence;
pub mod prooflab;
pub mod report;
pub mod sets;

pub use error::{LabError, Result};
pub use sets::FpSet;
