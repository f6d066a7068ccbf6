//! Lipschitz-free spaces over finite pointed metric spaces: exact
//! transportation-cost norms with dual Lipschitz certificates, reduction
//! transforms, Schur witnesses on block sequences, and tree/ultrametric
//! tooling.

pub mod element;
pub mod error;
pub mod generate;
pub mod io;
pub mod metric;
pub mod scalar;
pub mod schur;
pub mod transport;
pub mod tree;

pub use element::{lip_constant, pairing, FreeElement, LipschitzFunction, RationalElement};
pub use error::{Error, Result};
pub use metric::FiniteMetricSpace;
pub use schur::{
    glue_witness, gliding_hump, schur_certificate, BlockSequence, ElementSequence, SchurReport,
    WitnessCertificate,
};
pub use transport::{free_norm, integer_potential, NormCertificate};
pub use tree::{tree_cut_norm, tree_embed, TreeEmbedding};
