//! Gradient quantization into a Caccioppoli partition, piecewise rotation, rescaled
//! displacements, and measured rigidity bounds.

mod certify;
mod partition;

pub use certify::{
    certify_bounds, certify_sweep, coarea_budget, compare_limit_strains, divergence_mask, measure_bounds,
    rescale_displacement, BoundConstants, BoundMeasurements, RigidityCertificate, SweepCertificate,
};
pub use partition::{
    coarea_partition, fit_rotations, piecewise_rotate, CaccioppoliPartition, THRESHOLD_CANDIDATES,
};
