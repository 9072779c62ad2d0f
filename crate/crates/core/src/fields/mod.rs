//! Grids, jet fields, analytic sampling, and discrete differential operators.

mod facets;
mod grid;
mod jet;
mod ops;
mod spec;

pub use facets::{surface_measure, FacetSet};
pub use grid::{FacetId, Grid};
pub use jet::{DisplacementJet, JetField};
pub use ops::{
    second_gradient, validate_field, SecondGradient, Tolerances, ValidationReport, Violation, ViolationKind,
};
pub(crate) use ops::difference_stencil;
pub use spec::{sample_analytic, Base, FieldSpec, Piece, ResolvedMap, Segment, SmoothMap};
