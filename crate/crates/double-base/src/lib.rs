//! Double-base ({2,3}-integer) representations of integers.
//!
//! A {2,3}-integer is a nonzero integer of the form `±2^a · 3^b`. This crate
//! computes *double-base representations* — expressions of an integer as a
//! sum of {2,3}-integers — and the *span* of an integer (the least number of
//! summands over all such expressions), in both directions:
//!
//! * **Search** ([`search`]): find representations and run range censuses
//!   with a meet-in-the-middle engine, establishing upper bounds on spans.
//! * **Certify** ([`certify`]): prove that no representation of a given
//!   length exists, using residue sets modulo carefully constructed moduli
//!   ([`modular`]) and a recursive case analysis, emitting certificates that
//!   an independent verifier can recheck from scratch.
//!
//! The companion guide (built with mdbook from `book/`, mirrored as doctests
//! in [`guide`]) walks through the concepts chapter by chapter.

pub mod certify;
pub mod guide;
pub mod limits;
pub mod modular;
pub mod rep;
pub mod search;

pub use limits::Limits;
pub use modular::{carmichael, modulus_from_exponents, ModContext, ModulusProfile};
pub use rep::{canonicalize, Representation, ReprClass, Sign, TwoThreeInteger};
