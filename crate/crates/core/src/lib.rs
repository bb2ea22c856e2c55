//! Two-fold singularities of piecewise-smooth flows in R³.
//!
//! The crate covers the hidden-term blow-up of the switching layer
//! `x1 = 0`, sliding dynamics on that layer, two-fold and folded-singularity
//! classification, the coordinate chain onto the folded normal form, and
//! time integration (Filippov, sigmoid-regularized and layer flows).

pub mod field;
pub mod integrate;
pub mod scenario;
pub mod singularity;
pub mod sliding;
pub mod transform;

pub use field::{
    normal_form_system, Expr, FieldError, PiecewiseSmoothSystem, SmoothField, TwoFoldParams, Vec3,
};
pub use integrate::{
    integrate_blowup, integrate_filippov, integrate_smooth, integrate_smoothed, EventKind,
    IntegrationError, IntegratorOptions, Mode, RepellingPolicy, Sigmoid, Termination, Trajectory,
};
pub use scenario::{builtin, load_config, save_run, Scenario, SystemConfig};
pub use singularity::{
    classify_two_fold, folded_singularities, FoldedSingularity, FoldedType, TwoFoldFlavor,
};
pub use sliding::{region_classify, sliding_lambda, RegionClass, SlidingSolution};
pub use transform::TransformContext;
