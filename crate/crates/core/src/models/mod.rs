//! Base manifolds, Hermitian bundles and the charts of `P(E)` carrying
//! `λ φ_g + log h(v, v̄)`.

mod base;
mod bundle;
mod catalog;
mod chart;
mod geometry;
mod grid;
mod spec;

pub use base::{flat, fubini_study, product, BaseKind, BaseModel};
pub use bundle::{line_bundle_sum, BundleKind, BundleModel, ExprMatrix};
pub use catalog::{bundle_catalog, catalog, catalog_model, hirzebruch, projective_sum, CATALOG};
pub use chart::{projectivize, ChartId, Model, ProjChart};
pub use geometry::{bundle_bound_c, bundle_curvature_at, check_frame_conditions, BundleBound, BundleCurvature};
pub use grid::GridSpec;
pub use spec::{BaseSpec, BundleSpec, CocycleSpec, ModelSpec, TransitionSpec};
