//! Identification of a two-leg, constant-speed observing platform from the products it
//! leaves behind: an estimated target track and the Fisher information matrix of the
//! bearings-only estimate.
//!
//! The pipeline is
//!
//! 1. [`ObservedProducts`] wraps the intercepted FIM with the target estimate and grid,
//! 2. [`zone_guesses`] derives per-zone starting trajectories from the FIM alone,
//! 3. [`identify`] refines each start with Nelder-Mead and keeps the best match.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); types default to
//! `f64` and the `*F32` aliases below name the single-precision variants.
//!
//! ```
//! use platform_ident::*;
//!
//! let grid = TimeGrid::uniform(0.0, 4.0, 201, 101)?;
//! let target = TargetState::from_velocity(Vec2::new(15e3, 35e3), Vec2::new(-10.0, 5.0), &grid)?;
//! let truth = ConstrainedPlatformState::new(1e4, 2e4, 7.1, -std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4)?;
//! let j_obs = synthesize_observed(&target, &truth, &grid, 2658.0)?;
//!
//! let obs = ObservedProducts::new(&j_obs, target, grid)?;
//! let guesses = zone_guesses(&obs, 532.2449, 3206.5, 5)?;
//! let result = identify(&obs, &guesses, &SimplexParams::default(), None, IdentifyOptions::default())?;
//! assert!(rspe(&result.best_state, &truth, obs.grid())? < 1.0);
//! # Ok::<(), platform_ident::Error>(())
//! ```

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fim;
pub mod initguess;
pub mod linalg;
pub mod motion;
pub mod objective;
pub mod observability;
pub mod optimizer;
pub mod scalar;

pub use error::{Error, Result};
pub use fim::{
    assemble_fim, bearing_dyad, bearing_gradient, blocks, pack9, synthesize_observed,
    unit_fim_vec9, unpack9, weight_vec, Fim, FimBlocks, FimVec9, WeightVec,
};
pub use initguess::{
    admissible_pairs, alpha_grid, bearing_axes, covariance_blocks, endpoint_guesses,
    midpoint_probe, n_theta_min, range_estimates, turn_guess, zone_guesses, Candidate, GuessSet,
    MidpointProbe, Zone, ZoneGuess, ZoneSplit,
};
pub use linalg::{Mat2, Vec2};
pub use motion::{
    bearing, constrained_from_free, free_from_constrained, platform_position, range,
    state_from_waypoints, target_position, waypoints_from_state, ConstrainedPlatformState,
    PlatformStateFree, TargetState, TimeGrid, Waypoints,
};
pub use objective::{
    alpha_theta_ls, frobenius_objective, reduced_objective_g, residual_ratio, ObjectiveTerms,
    ObservedProducts,
};
pub use observability::{
    is_stealthy, speed_gap, subspace_member, SubspaceMember, DEFAULT_STEALTH_TOL,
};
pub use optimizer::{
    identify, nelder_mead_maximize, rspe, tk_sensitivity, Diagnostics, GuessConfig,
    IdentificationResult, IdentifyOptions, SensitivityRow, SimplexOutcome, SimplexParams,
    StopReason, Truth, ZoneResult, ZoneRun, ZoneTracePoint,
};
pub use scalar::Scalar;

pub type Vec2F32 = Vec2<f32>;
pub type Vec2F64 = Vec2<f64>;
pub type TimeGridF32 = TimeGrid<f32>;
pub type TimeGridF64 = TimeGrid<f64>;
pub type TargetStateF32 = TargetState<f32>;
pub type TargetStateF64 = TargetState<f64>;
pub type PlatformStateFreeF32 = PlatformStateFree<f32>;
pub type PlatformStateFreeF64 = PlatformStateFree<f64>;
pub type ConstrainedPlatformStateF32 = ConstrainedPlatformState<f32>;
pub type ConstrainedPlatformStateF64 = ConstrainedPlatformState<f64>;
pub type WaypointsF32 = Waypoints<f32>;
pub type WaypointsF64 = Waypoints<f64>;
pub type FimF32 = Fim<f32>;
pub type FimF64 = Fim<f64>;
pub type FimVec9F32 = FimVec9<f32>;
pub type FimVec9F64 = FimVec9<f64>;
pub type ObservedProductsF32 = ObservedProducts<f32>;
pub type ObservedProductsF64 = ObservedProducts<f64>;
pub type GuessSetF32 = GuessSet<f32>;
pub type GuessSetF64 = GuessSet<f64>;
pub type SimplexParamsF32 = SimplexParams<f32>;
pub type SimplexParamsF64 = SimplexParams<f64>;
pub type IdentificationResultF32 = IdentificationResult<f32>;
pub type IdentificationResultF64 = IdentificationResult<f64>;
