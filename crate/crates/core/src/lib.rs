//! Consistent-histories and ABL probability assignments for pre- and
//! post-selected quantum systems.
//!
//! The [`histories`] module builds history families, evaluates the
//! decoherence functional and decides consistency. The [`tsvf`] module
//! assigns ABL probabilities, which exist whenever the post-selection is
//! possible. [`scenarios`] packages the spin-½ and final-state black hole
//! examples, and [`spec`] / [`report`] provide the declarative scenario file
//! format and the analysis report used by the command-line tool.

pub mod error;
pub mod hilbert;
pub mod histories;
pub mod linalg;
#[cfg(feature = "test-utils")]
pub mod random;
pub mod report;
pub mod scenarios;
pub mod spec;
pub mod tsvf;

pub use error::{Error, Result};
pub use hilbert::{
    density_from_vector, max_entangled, max_entangled_on, projector_from_vector, spin_states,
    Projector, SpinStates, StateVector,
};
pub use histories::{
    assign_probabilities, assign_probabilities_with, build_family, build_labeled_family,
    check_consistency, class_operator, decoherence_matrix, ChProbabilities, ConsistencyCondition,
    ConsistencyVerdict, DecoherenceMatrix, HistoryChain, HistoryFamily,
};
pub use linalg::{dagger, embed, tensor, trace, ComplexMatrix, SpaceDescriptor, DEFAULT_TOL};
pub use scenarios::{
    hm_closed_forms, hm_scenario, hm_scenario_with_order, spin_scenario, HmClosedForms, Scenario,
    SlotOrder,
};
pub use tsvf::{abl_general, abl_linear, abl_over_family, abl_pure, AblDistribution};

pub use num_complex::Complex64;
