//! Glue-semantics proof search over LFG f-structures.

pub mod glue;
pub mod lex;
pub mod lexicon;
pub mod prover;
pub mod sexp;
pub mod structures;
pub mod term;
pub mod unify;
