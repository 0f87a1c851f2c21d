//! Spectral Galerkin simulation of semilinear SPDEs driven by cylindrical
//! noise with Dirichlet fractional Laplacian drift, and Monte Carlo checks
//! of gradient, log-Harnack and Poincaré inequalities for their semigroups.

// NaN-rejecting guards are written as `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod estimators;
pub mod functionals;
pub mod noise;
pub mod parallel;
pub mod quadrature;
pub mod reaction_diffusion;
pub mod regularity;
pub mod report;
pub mod simulator;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use estimators::{
    convergence_study, CheckReport, ConvergenceRow, Estimate, Estimator, McSettings, MomentTable,
};
pub use functionals::TestFunctional;
pub use noise::NoiseStream;
pub use reaction_diffusion::{ReactionDiffusionModel, ScalarForm, ScalarFunctionSpec};
pub use regularity::{compute_t0, CriticalTime, KernelSpec, RegularityProfile};
pub use simulator::{Coefficients, Scheme, SchemeConfig, Simulator};
pub use spectral::{EigenSpectrum, GalerkinState, RectDomain};
