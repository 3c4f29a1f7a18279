//! Certified Lipschitz extension of contracting maps between hyperbolic
//! spaces, in the hyperboloid model of curvature -1.
//!
//! A map defined on finitely many points with Lipschitz constant C < 1 can
//! be extended to any challenge point by minimizing the worst distance
//! ratio to the known images, and the optimum is certified a posteriori by
//! a convex-hull condition on the active directions. Extension is lossy in
//! negative curvature: the optimal constant can exceed C, but stays below
//! an explicit bound c_star(C) < 1. This crate implements the one-point
//! solver and its certificates, the quantitative bounds, barycentric
//! averaging of maps, epsilon-net covers with separated binning, and the
//! full pipeline that assembles them into a global extension with constant
//! strictly below 1, certified pairwise at every stage.

pub mod averaging;
pub mod bounds;
pub mod error;
pub mod geometry;
pub mod instance;
pub mod minimax;
pub mod net;
pub mod pipeline;
pub mod sampling;
pub mod solver;

pub use averaging::{average_maps, interpolate_maps, MapTable};
pub use bounds::{
    asinh_bound, c_hat, compute_c_star, delta_gap, homothety_lip_constants, BoundsReport,
    Homothety, DELTA,
};
pub use error::{Error, Result};
pub use geometry::{distance, exp_map, geodesic_point, log_map, HPoint, TangentVec};
pub use instance::{read_instance, read_sample, write_instance, write_sample, Instance};
pub use net::{build_net, volume_bound_n, Net};
pub use pipeline::{
    choose_parameters, local_patch, loss_curve, run_pipeline, verify_two_center_patch,
    ExtensionResult, LossCurveRow, PatchReport, PipelineConfig, TwoCenterReport,
};
pub use solver::{
    certify_hull, lipschitz_constant, obtuse_pair, sequential_extension, solve_one_point,
    HullCertificate, OnePointSolution, PartialMap, SolverOptions,
};
