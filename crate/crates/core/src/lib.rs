//! Weighted higher-order convex-body operators on polytopes.
//!
//! The crate computes the m-th order covariogram, difference body, weighted
//! projection body and radial mean bodies of a convex polytope under a
//! measure with density, and checks the inequalities relating them
//! (Rogers-Shephard, Zhang, Berwald-type inclusion chains, chord integrals).

// `!(x > 0.0)` guards are deliberate: they reject NaN along with the bound.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::excessive_precision, clippy::type_complexity)]

pub mod covariogram;
pub mod cubature;
pub mod error;
pub mod genvol;
pub mod linalg;
pub mod lp;
pub mod measure;
pub mod oracle;
pub mod polytope;
pub mod projection;
pub mod quadrature;
pub mod radialmean;
pub mod schema;
pub mod verify;

pub use covariogram::{covariogram, covariogram_slice, diffbody_radial, roof, CovariogramSlice, MDirection};
pub use error::{Error, Result};
pub use measure::{
    boundary_measure_total, integrate_over_polytope, transform_measure, weighted_surface_measure, Concavity,
    ConcavityF, Density, FacetMeasure, Integration, WeightedMeasure,
};
pub use oracle::{mc_measure, SphereQuadrature};
pub use polytope::{star_volume, Estimate, Facet, Halfspace, LinearMap, Polytope, StarBodyFn};
pub use genvol::{chord_lower_check, chord_upper_check, dual_volume, ConcaveRayFn, KernelG, KernelSide};
pub use projection::{
    linear_covariance_check, polar_projection_radial, projection_support, variational_check, ProjectionBody,
};
pub use radialmean::{
    rmb_limit_neg1, rmb_radial_direct, rmb_radial_mellin, rmb_radial_p0, Method, Order, RadialMeanBody, RayProfile,
};
pub use verify::{
    berwald_const_f, berwald_const_q, chain_check, gen_binom, general_zhang_check, rogers_shephard_check, zhang_check,
    ChainConcavity, ChainSpec, DirectionRow, VerifyReport,
};

use rayon::prelude::*;

/// Order-preserving parallel map; reductions over the result stay sequential,
/// so sums do not depend on the thread count.
pub(crate) fn par_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(items: &[T], f: F) -> Vec<R> {
    items.par_iter().map(f).collect()
}
