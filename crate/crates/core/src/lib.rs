//! Sturm–Liouville problems on [-1, 1] with two interior transmission points and an
//! eigenparameter-dependent condition at x = 1.

pub mod config;
pub mod error;
pub mod expansion;
pub mod expr;
pub mod fundamental;
pub mod hilbert;
pub mod ivp;
pub mod oracle;
pub mod problem;
pub mod quadrature;
pub mod resolvent;
pub mod spectrum;
pub mod verify;

pub use config::{load_problem, parse_problem, ProblemFile};
pub use error::{Error, Result};
pub use expansion::{
    boundary_coefficient_sum, boundary_kernel_sum, boundary_parseval, expand, expand_function,
    fourier_coefficients, partial_sum, ExpansionResult,
};
pub use expr::{Expr, Func};
pub use fundamental::{
    build_chi, build_phi, characteristic, characteristic_complex, wronskian, PiecewiseSolution,
};
pub use hilbert::{
    apply_k, h_norm, inner_product, symmetry_test, HilbertElement, PiecewiseFunction,
};
pub use ivp::{integrate_ivp, Tolerances, Trajectory};
pub use oracle::{
    compare_spectra, discretize, oracle_eigenvalues, DiscreteOperator, ToleranceProfile,
};
pub use problem::{validate_problem, Piece, ProblemSpec, Side, ValidatedProblem};
pub use resolvent::{
    apply_resolvent, build_kernel, resolvent_residual, GreenKernel, ResolventResidual,
};
pub use spectrum::{
    find_eigenpairs, first_eigenpairs, normalize_eigenpair, reality_probe, refine_eigenvalue,
    scan_eigenvalues, Eigenpair, Grid, SpectrumSettings,
};
pub use verify::{run_verification, CheckResult, CheckStatus, VerifyLevel, VerifyReport};
