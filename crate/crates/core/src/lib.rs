//! Proof kernel and cut elimination for a cyclic sequent calculus of modal
//! logic with the eventuality operator `F`.

pub mod analysis;
pub mod corpus;
pub mod elimination;
pub mod export;
pub mod formula;
pub mod kernel;
pub mod proof;
pub mod reductions;
pub mod rules;
pub mod semantics;
pub mod sequent;
pub mod text;
pub mod zipper;

pub use formula::{parse_formula, Formula, Rank, SyntaxError};
pub use kernel::{check_derivation, check_proof, ProofReport};
pub use proof::{Derivation, NodeId, ProofTree, Rule, Token};
pub use sequent::{parse_sequent, AnnFormula, Annotation, Sequent};
pub use text::{parse_proof_document, print_proof_document};
