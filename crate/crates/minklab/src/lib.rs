//! minklab — a numerical laboratory for the L_p Minkowski problem
//!
//!   det(D^2 h + h I) = h^(p-1)   on S^n,  n in {1, 2},
//!
//! and the associated Gauss curvature flows, in the supercritical range
//! p < -n - 1.  The crate provides:
//!
//! - structured sphere grids with spectral quadrature, 4th-order finite
//!   differences and cubic interpolation ([`grid`]);
//! - convex bodies via support functions, Monge-Ampere operators, volume,
//!   moment ellipsoids and closed-form ellipsoid benchmarks ([`body`]);
//! - good-position polytopes, their orthogonal symmetry groups, group
//!   averaging of fields, and the strong-symmetry integral identities
//!   ([`symmetry`]);
//! - the linearized Monge-Ampere eigenproblem, sphere spectra, rotational
//!   tangent fields and kernel diagnostics ([`spectral`]);
//! - Santalo centers, the scale-invariant Blaschke-Santalo-type functional,
//!   its first/second variations and the combined quotient diagnostics
//!   ([`functional`]);
//! - raw and volume-normalized Gauss curvature flows, blow-up
//!   classification, a flow+Newton stationary solver and a symmetry-class
//!   bifurcation search ([`flow`]);
//! - deterministic CSV/JSON artifact formats ([`io`]) and seeded body
//!   recipes ([`recipe`]).

pub mod body;
pub mod error;
pub mod flow;
pub mod functional;
pub mod grid;
pub mod io;
pub mod recipe;
pub mod spectral;
pub mod symmetry;

pub use body::{
    apriori_diagnostics, ellipsoid_identity_residual, geometry_report, lp_residual,
    moment_ellipsoid, reciprocal_support_moment, unit_ball_volume, Ellipsoid, GeometryReport,
    SupportFunction, CONVEXITY_RTOL, DET_CLAMP,
};
pub use error::{Error, Result};
pub use symmetry::{closure_defect, good_position_polytope, invariance_defect, named_group, orthonormality_check, symmetrize, symmetrize_field, symmetry_group, OrthonormalityReport, PolytopeSpec, SymmetryGroup};
pub use grid::{differentials, interpolate, make_grid, FrameHessian, Grid, ScalarField};
pub use functional::{
    bs_functional, combined_quotient, orthonormal_frame, project_components, santalo_center,
    variation_check, volume, z_perp, QuotientReport, RemainderCheck, SantaloResult,
    VariationReport, ZPerpReport,
};
pub use spectral::{
    apply_linearized, assemble_linearized, assemble_operator_matrix, cluster_ids,
    exact_sphere_spectrum, kernel_check, lambda3, rayleigh_quotient, rotational_tangent_basis,
    solve_spectrum, sphere_spectrum_error, GeneralizedEigenPair, KernelReport,
};
pub use io::{
    format_float, read_body, read_field_csv, read_group_json, read_json, read_spectrum_csv,
    read_trajectory_csv, sha256_file, write_body, write_field_csv, write_group_json, write_json,
    write_polytope_csv, write_spectrum_csv, write_trajectory_csv, BodySidecar, GroupFile,
};
pub use recipe::{
    harmonic_mode, invariant_bump, invariant_profile, octahedral_quartic, perturbed_sphere,
    random_field, random_invariant_body, random_smooth_body, sphere, trifold, Mode,
};
pub use flow::{
    bifurcation_search, classify_blowup, envelope_checks, flow_step, run_flow, solve_minkowski,
    BlowupClass, BlowupReport, BranchPoint, EnvelopeReport, FlowConfig, FlowMode, FlowSample,
    FlowTrajectory, SolveOptions, SolveOutcome, StopReason,
};
