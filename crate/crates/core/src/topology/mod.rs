//! Cover order, covering- and box-counting dimension estimates, and the
//! periodic-set hypothesis check that fixes the delay count.

mod cover;
mod dimension;
mod hypothesis;
mod refine;

pub use cover::{cover_order, Cover, CoverElement};
pub use dimension::{
    box_counting, box_counting_anchored, covering_dimension_estimate, geometric_scales, DimensionEstimate,
    DimensionMethod,
};
pub use hypothesis::{hypothesis_check, HypothesisReport, PeriodicDimension};
pub use refine::{refine_order, RefineOptions};

pub(crate) use cover::CoverIndex;
pub(crate) use refine::refine_points;
