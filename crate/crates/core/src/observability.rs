//! The one-parameter family of platform trajectories that produce the same FIM,
//! and the conditions under which it contains a second constant-speed trajectory.

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::motion::{PlatformStateFree, TargetState, TimeGrid};
use crate::scalar::{lit, to_f64, tolerance, Scalar};

/// Default dimensionless cosine tolerance for [`is_stealthy`].
pub const DEFAULT_STEALTH_TOL: f64 = 1e-9;

/// A trajectory indistinguishable from a reference one through its FIM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceMember<T = f64> {
    pub beta: T,
    pub platform: PlatformStateFree<T>,
    pub alpha_theta: T,
}

/// Mixes the reference platform with the target track: positions become
/// `beta p_P + (1 - beta) p_T` at every sample, and `alpha_theta` scales by `beta^2`.
///
/// Every bearing is preserved and every range scales by `|beta|`, so the FIM is unchanged.
/// `beta = 0` puts the platform on the target and is degenerate.
pub fn subspace_member<T: Scalar>(
    platform: &PlatformStateFree<T>,
    alpha_theta: T,
    target: &TargetState<T>,
    grid: &TimeGrid<T>,
    beta: T,
) -> SubspaceMember<T> {
    let v_t = target.velocity(grid);
    let mix = |a: Vec2<T>, b: Vec2<T>| a * beta + b * (T::one() - beta);
    SubspaceMember {
        beta,
        platform: PlatformStateFree {
            p1: mix(platform.p1, target.p1),
            v1: mix(platform.v1, v_t),
            v2: mix(platform.v2, v_t),
        },
        alpha_theta: beta * beta * alpha_theta,
    }
}

/// `|v1'|^2 - |v2'|^2` of the subspace member built from a constant-speed trajectory,
/// in closed form `2 beta (1 - beta) v_T . (v1 - v2)`.
pub fn speed_gap<T: Scalar>(platform: &PlatformStateFree<T>, v_t: Vec2<T>, beta: T) -> Result<T> {
    let s1 = platform.v1.norm();
    let s2 = platform.v2.norm();
    if (s1 - s2).abs() > tolerance::<T>(crate::motion::EQUAL_SPEED_RTOL) * s1.max(s2) {
        return Err(Error::UnequalLegSpeeds {
            first: to_f64(s1),
            second: to_f64(s2),
        });
    }
    Ok(lit::<T>(2.0) * beta * (T::one() - beta) * v_t.dot(platform.v1 - platform.v2))
}

/// True when the leg-velocity change is orthogonal to the target velocity, so that every
/// subspace member keeps equal leg speeds and the trajectory cannot be pinned down.
/// Equal leg velocities (a single leg) also count as stealthy.
pub fn is_stealthy<T: Scalar>(platform: &PlatformStateFree<T>, v_t: Vec2<T>, tol: T) -> bool {
    let dv = platform.v1 - platform.v2;
    v_t.dot(dv).abs() <= tol * dv.norm() * v_t.norm()
}
