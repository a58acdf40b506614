//! Static secrecy analysis of cryptographic protocols with witness functions.
//!
//! A protocol is projected onto generalized roles; every atom sent by a role
//! must keep a security level, as estimated from the message space, at least
//! as high as what the role received. A protocol whose roles all pass is
//! increasing and keeps its atoms secret.

pub mod analyze;
pub mod context;
pub mod lattice;
pub mod report;
pub mod roles;
pub mod syntax;
pub mod term;
pub mod unify;
pub mod witness;

pub use analyze::{analyze, AnalyzeError, Options};
pub use context::Context;
pub use lattice::SecurityLevel;
pub use report::{AnalysisRow, Overall, Report, Verdict};
pub use term::{Ident, Substitution, Term, TheoryTag};
pub use witness::SelectionVariant;
