//! Singularities of the d-plane transform: the canonical relation between
//! covectors in space and covectors over flats, the loci of flats tangent
//! to a metal boundary, and the flats tangent to two boundaries where
//! streak artifacts can live.

pub mod canonical;
pub mod intersect;
pub mod locus;
pub mod tangent;

pub use canonical::{canonical_adjoint, canonical_forward, Covector, FlatCovector};
pub use intersect::{intersection_report, IntersectionClass, IntersectionPoint, IntersectionReport};
pub use locus::{quadratic_min_on_flat, singular_locus, tangency_residual, LocusPoint, SingularLocus};
pub use tangent::{
    atlas_to_toml, common_tangent_codim2_flats, common_tangent_hyperplanes, refine_tangent_line, TangentFlat,
    TangentKind, TangentRecord,
};
