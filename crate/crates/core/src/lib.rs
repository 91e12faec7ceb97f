//! Delay observation maps for dynamical systems sampled through a continuous
//! scalar observable: injectivity margins on pair sets, perturbations that
//! restore injectivity, and the dimension estimates that fix the delay count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delay;
pub mod error;
pub mod genericity;
pub mod observable;
mod spatial;
pub mod state;
pub mod systems;
pub mod topology;

pub use delay::{delay_count_for, delay_matrix, delay_vector, write_delay_csv, DelayVector, PeriodicExtension};
pub use error::{Error, Result};
pub use genericity::{
    bumped, compatibility_margin, genericity_monte_carlo, hull_distance, openness_radius, perturb_to_compatible,
    perturb_with_options, random_trig_bump, sample_pairs, CompatibilityReport, MonteCarloReport, Pair, PairClass,
    PairSet, PeriodInfo, PerturbOptions, PerturbReport, Perturbation,
};
pub use observable::{sup_distance, Anchor, ObservableSpec, SupDistance, TrigTerm};
pub use state::{StateVector, Trajectory};
pub use systems::{
    certify_sampling, find_periodic, iterate, step, yorke_threshold, PeriodicPoint, SystemKind, SystemSpec,
    VectorField, YorkeCertificate,
};
pub use topology::{
    box_counting, cover_order, covering_dimension_estimate, hypothesis_check, refine_order, Cover, CoverElement,
    DimensionEstimate, HypothesisReport,
};
