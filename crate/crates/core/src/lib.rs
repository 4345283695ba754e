//! Bandit gradient play for strongly monotone games.
//!
//! Players see only their own realized cost, one scalar per round. Each
//! round every player perturbs its action on a small sphere, plays the
//! perturbed point, and scales the observed cost into a one-query gradient
//! estimate; a projected gradient step on a shrunken feasible set keeps the
//! next perturbation feasible. With an inverse-time step size the expected
//! squared distance to the equilibrium decays like `1/t` down to a plateau
//! set by the query radius, and a geometric restart schedule removes the
//! plateau at the cost of a known factor in queries.
//!
//! The crate has four layers:
//!
//! * game definitions and benchmark instances with known equilibria
//!   ([`game`], [`builtin`], [`set`]);
//! * the estimator and the iteration itself ([`estimator`], [`engine`]),
//!   plus the restart scheduler ([`restart`]);
//! * reference oracles used only for measurement: exact or quadrature
//!   smoothed gradients ([`smoothing`]) and high-accuracy equilibrium
//!   solves ([`equilibrium`]);
//! * checks that measure the advertised guarantees on concrete games
//!   ([`verify`]) and audit a game's declared constants ([`certify`]).

pub mod builtin;
pub mod certify;
pub mod engine;
pub mod equilibrium;
pub mod error;
pub mod estimator;
pub mod game;
pub mod quadrature;
pub mod restart;
pub mod sampling;
pub mod set;
pub mod smoothing;
pub mod stats;
pub mod verify;

pub use builtin::{builtin, builtin_names};
pub use certify::{certify, CertCheck, CertViolation, CertificationReport};
pub use engine::{
    admissible_accuracy_max, choose_parameters, equilibrium_shift_constant,
    equilibrium_shift_constant_steep, error_upper_bound, error_upper_bound_with_shift,
    horizon_rule, query_radius_rule, run, run_replicated, ChosenParameters, ErrorCurve,
    EstimatorKind, GuaranteeVariant, RunConfig, StepSchedule, Trajectory,
};
pub use equilibrium::{solve_equilibrium, EquilibriumCertificate, DEFAULT_EQ_TOL};
pub use error::{Error, Result};
pub use estimator::{
    draw_single_point, mean_single_point, single_point_estimate, two_point_estimate,
    EstimateOutput,
};
pub use game::{CostFn, GameConstants, GameSpec, GradFn, PolyFamily};
pub use restart::{
    build_plan, restart_constants, run_restarted, RestartPlan, RestartStage, StageResult,
    StagedErrorCurve,
};
pub use set::{FeasibleSet, PlayerSet};
pub use smoothing::{smoothed_gradient, SmoothedGradient, SmoothedOracleMode};
pub use stats::{MeanSe, RecordGrid, Welford};
pub use verify::{
    equilibrium_radius_limit, monotonicity_radius_limit, verify_equilibrium_shift,
    verify_error_bound, verify_horizon_scaling, verify_played_error, verify_rate,
    verify_restart_decay, verify_smoothed_monotonicity, verify_smoothing_gap, verify_unbiased,
    CheckItem, CheckReport, EquilibriumPair, RateFit,
};
