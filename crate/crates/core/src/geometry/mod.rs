//! Densities, control sets, measure of intersections with balls, thickness
//! certificates and slowly-varying ball coverings.

mod control_set;
mod covering;
mod density;
mod measure;
mod thickness;

pub use control_set::{halton_point, Bounds, ControlSet, Primitive};
pub use covering::{covering_generate, covering_generate_with, overlap_bound, Covering, CoveringReport, SLOWNESS};
pub use density::{density_validate, japanese_bracket, DensityBounds, DensityFn, DensityReport};
pub use measure::{ball_volume, intersection_measure, QuadSpec};
pub use thickness::{
    sample_centers, thickness_estimate, thickness_ratio, thickness_transfer_check, transferred_gamma, ThicknessEstimate, TransferReport,
};
