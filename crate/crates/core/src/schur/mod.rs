//! Oscillation statistics of sequences in the free space and the
//! constructive witness that bounds them: gliding hump extraction, gluing of
//! integer potentials into a 3-Lipschitz functional, and the end-to-end
//! certificate.

mod certificate;
mod glue;
mod hump;
mod sequence;

pub use certificate::{schur_certificate, CharacterizationBound, SchurOutcome, SchurReport, WDE_NOTE};
pub use glue::{
    glue_witness, BlockPotential, ConflictKey, DroppedSet, WitnessCertificate, WitnessChecks,
    WitnessFailure, DEFAULT_EPSILON_FRACTION, GLUE_LIP,
};
pub use hump::{
    empirical_limit, gliding_hump, BlockSequence, HumpReport, LimitRule, AGREEMENT_TOL, MIN_RETAINED,
};
pub use sequence::{de_bounds, osc_ca, scalar_oscillation, wca_bruteforce, ElementSequence, WCA_CAP};
