//! Reinforced Galton-Watson processes.
//!
//! In a reinforced Galton-Watson process every individual, with probability
//! `q`, begets as many children as a forebear picked uniformly on its
//! ancestral lineage, and otherwise draws its offspring count from a fixed
//! reproduction law `ν`. This crate computes the Malthusian rate
//! `m = q / ∫₀^{1/k*} Π(t) dt`, exact expected population sizes, the
//! factorial-moment flows of the companion multitype Yule process, and
//! cross-checks all of them against independent routes:
//!
//! - [`model`]: reproduction laws and parameters.
//! - [`analytic`]: `Π_a`, `I_a`, rates, explosion times, the flow `A`, `φ`,
//!   closed-form moment generating functions and first-order asymptotics.
//! - [`exact`]: spine and Pólya-urn dynamic programs for `E[Z(n)]`.
//! - [`sim`]: seeded Monte Carlo for the population, the spine chain and the
//!   multitype Yule process.
//! - [`ode`]: adaptive Runge-Kutta integration of the moment ODE and the
//!   transport-equation residual.
//! - [`verify`]: the verification suites behind `rgw verify`.
//! - [`cli`]: the command-line front end.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod exact;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod report;
pub mod sim;
pub mod verify;

pub use analytic::{
    explosion_time, gamma_constant, gamma_function, malthusian_rate, rate_limits,
    theorem2_constant, AnalyticContext, Criticality, RateProfile, WeightVector,
};
pub use error::{Error, Result};
pub use exact::{effective_reproduction, lemma1_series, spine_dp, urn_dp, MomentTable};
pub use model::{parse_law, Initial, ModelParams, ReproductionLaw};
pub use ode::{integrate_m, pde_residual_g, ratio_monotonicity_check, OdeSolution};
pub use sim::{Estimate, SimConfig};
