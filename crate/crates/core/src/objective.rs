//! Frobenius-norm matching of an observed FIM, with `alpha_theta` eliminated in closed form.
//!
//! For a candidate platform state `x` with unit information `j_u(x)`:
//!
//! * `F(x, a) = (j_obs - a j_u)^T W (j_obs - a j_u)`
//! * `a_hat(x) = j_u^T W j_obs / j_u^T W j_u`
//! * `G(x) = (j_u^T W j_obs)^2 / j_u^T W j_u`, so that `F(x, a_hat(x)) + G(x) = |j_obs|_W^2`.

use crate::error::{Error, Result};
use crate::fim::{pack9, unit_fim_vec9, unpack9, Fim, FimVec9};
use crate::motion::{free_from_constrained, ConstrainedPlatformState, TargetState, TimeGrid};
use crate::scalar::{lit, Scalar};

/// W-norm of `j_u` below which the unit information counts as degenerate.
const DEGENERATE_NORM: f64 = 1e-300;

/// The intercepted pair: estimated target state and observed information, with the shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedProducts<T = f64> {
    j_obs: FimVec9<T>,
    target: TargetState<T>,
    grid: TimeGrid<T>,
    norm_squared: T,
}

/// Everything the objective computes at one candidate state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms<T = f64> {
    pub j_u: FimVec9<T>,
    /// `j_u^T W j_obs`.
    pub cross: T,
    /// `j_u^T W j_u`.
    pub unit_norm_squared: T,
    pub alpha_hat: T,
    pub g: T,
    /// `F(x, alpha_hat)`, computed from the residual rather than by subtraction.
    pub residual: T,
}

impl<T: Scalar> ObservedProducts<T> {
    pub fn new(j_obs: &Fim<T>, target: TargetState<T>, grid: TimeGrid<T>) -> Result<Self> {
        Self::from_vec9(pack9(j_obs)?, target, grid)
    }

    /// Builds from packed entries; the unpacked matrix must be symmetric PSD.
    pub fn from_vec9(j_obs: FimVec9<T>, target: TargetState<T>, grid: TimeGrid<T>) -> Result<Self> {
        Fim::from_rows(*unpack9(&j_obs).rows())?;
        let norm_squared = j_obs.weighted_norm_squared();
        Ok(Self {
            j_obs,
            target,
            grid,
            norm_squared,
        })
    }

    pub fn j_obs(&self) -> &FimVec9<T> {
        &self.j_obs
    }

    pub fn fim(&self) -> Fim<T> {
        unpack9(&self.j_obs)
    }

    pub fn target(&self) -> &TargetState<T> {
        &self.target
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    /// `j_obs^T W j_obs`, the squared Frobenius norm of the observed matrix.
    pub fn norm_squared(&self) -> T {
        self.norm_squared
    }

    /// The same products with a different turn index.
    pub fn with_turn(&self, turn: usize) -> Result<Self> {
        Ok(Self {
            grid: self.grid.with_turn(turn)?,
            ..self.clone()
        })
    }

    /// Unit information of a candidate state.
    pub fn unit_fim(&self, x: &ConstrainedPlatformState<T>) -> Result<FimVec9<T>> {
        let free = free_from_constrained(x)?;
        unit_fim_vec9(&self.target, &free, &self.grid)
    }

    /// Evaluates `j_u`, `alpha_hat`, `G` and the minimal residual in one pass.
    pub fn evaluate(&self, x: &ConstrainedPlatformState<T>) -> Result<ObjectiveTerms<T>> {
        let j_u = self.unit_fim(x)?;
        let unit_norm_squared = j_u.weighted_norm_squared();
        if unit_norm_squared == T::zero()
            || !(unit_norm_squared.sqrt() >= lit::<T>(DEGENERATE_NORM))
        {
            return Err(Error::DegenerateUnitFim);
        }
        let cross = j_u.weighted_dot(&self.j_obs);
        let alpha_hat = cross / unit_norm_squared;
        let g = cross * alpha_hat;
        let residual = weighted_residual(&self.j_obs, &j_u, alpha_hat);
        Ok(ObjectiveTerms {
            j_u,
            cross,
            unit_norm_squared,
            alpha_hat,
            g,
            residual,
        })
    }
}

fn weighted_residual<T: Scalar>(j_obs: &FimVec9<T>, j_u: &FimVec9<T>, alpha: T) -> T {
    let diff = FimVec9(std::array::from_fn(|m| j_obs.0[m] - alpha * j_u.0[m]));
    diff.weighted_norm_squared()
}

/// `F(x, alpha_theta)`. Any finite `alpha_theta` is accepted, so `F(x, 0) = |j_obs|_W^2`.
pub fn frobenius_objective<T: Scalar>(
    obs: &ObservedProducts<T>,
    x: &ConstrainedPlatformState<T>,
    alpha_theta: T,
) -> Result<T> {
    if !alpha_theta.is_finite() {
        return Err(Error::NonFinite("alpha_theta"));
    }
    let j_u = obs.unit_fim(x)?;
    Ok(weighted_residual(&obs.j_obs, &j_u, alpha_theta))
}

/// Least-squares `alpha_theta` for a fixed state. May be negative for a poor candidate.
pub fn alpha_theta_ls<T: Scalar>(
    obs: &ObservedProducts<T>,
    x: &ConstrainedPlatformState<T>,
) -> Result<T> {
    Ok(obs.evaluate(x)?.alpha_hat)
}

/// The reduced objective `G(x)`, maximized by the true platform state.
pub fn reduced_objective_g<T: Scalar>(
    obs: &ObservedProducts<T>,
    x: &ConstrainedPlatformState<T>,
) -> Result<T> {
    Ok(obs.evaluate(x)?.g)
}

/// `F(x, alpha_hat(x)) / |j_obs|_W^2`, zero at an exact match and at most one.
pub fn residual_ratio<T: Scalar>(
    obs: &ObservedProducts<T>,
    x: &ConstrainedPlatformState<T>,
) -> Result<T> {
    Ok(obs.evaluate(x)?.residual / obs.norm_squared)
}
