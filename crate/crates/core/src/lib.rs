//! Analysis of multiplication operators `M_psi f = psi . f` acting between the
//! weighted sup-norm space `L_mu` and the Lipschitz space `Lip` of a rooted tree.
//!
//! Everything is computed on finite breadth-first truncations. Closed-form
//! quantities are cross-checked by an independent extremal oracle, and verdicts
//! that depend on behaviour beyond the truncation are tri-state
//! (yes / no / inconclusive) with the observed tail evidence attached.

pub mod analysis;
pub mod expr;
pub mod harness;
pub mod oracle;
pub mod space;
pub mod tree;

pub use num_complex::Complex64;
