//! Invertible-map equivalence of finite relational structures.
//!
//! The equivalence `≡^IM_{k,Ω,m}` is decided by iterated partition refinement
//! of the `k`-tuples of two structures, where two tuples stay together when
//! their families of extension matrices are simultaneously similar over every
//! `GF(p)`, `p ∈ Ω`. Around that engine sit exact linear algebra over finite
//! fields, validators and players for the matrix-equivalence and invertible-map
//! pebble games, a counting (`C^k`) baseline and instance generators.

pub mod structure;
pub mod linalg;
pub mod similarity;
pub mod refinement;
pub mod game;
pub mod counting;
pub mod generate;
