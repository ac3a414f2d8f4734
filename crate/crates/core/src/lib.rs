//! Stream reasoning over tick-ordered streams of ground atoms.
//!
//! Programs are normal, stratified rules whose bodies may observe the past
//! through window literals (`at least`, `always`, `count`). The crate offers
//! a brute-force reference evaluator ([`oracle`]) and an incremental engine
//! ([`engine`]) that splits the program into subprograms, evaluates window
//! operators over a bounded history ([`windows`]) and hands flat subprograms
//! to an overgrounding evaluator ([`ground`]).

pub mod analysis;
pub mod engine;
pub mod facts;
pub mod ground;
pub mod lang;
pub mod oracle;
pub mod random;
pub mod rewrite;
pub mod symbol;
pub mod windows;

pub use facts::FactSet;
pub use lang::{Atom, GroundAtom, Pred, Program, Rule, Term, Value};
pub use symbol::Symbol;
