//! Kinematics of the constant-velocity target and the two-leg observing platform.
//!
//! Positions are east/north pairs in meters ([`Vec2`] with `x` east, `y` north).
//! Headings and bearings are measured from north toward east and kept in `(-pi, pi]`.
//! Sample indices are 1-based throughout: sample `1` is `t_1`, sample `n` is `t_n`
//! and the turn index `k` satisfies `1 < k < n`.

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::scalar::{lit, to_f64, tolerance, wrap_angle, Scalar};

/// Relative tolerance used when checking the equal-speed constraint between legs.
pub const EQUAL_SPEED_RTOL: f64 = 1e-9;

/// Sample instants of a batch and the index of the platform turn.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T = f64> {
    times: Vec<T>,
    turn: usize,
}

impl<T: Scalar> TimeGrid<T> {
    /// Builds a grid from strictly increasing instants and a 1-based turn index.
    pub fn new(times: Vec<T>, turn: usize) -> Result<Self> {
        let n = times.len();
        if n < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 samples, got {n}"
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("time grid"));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "instants not strictly increasing at sample {}",
                i + 2
            )));
        }
        if turn <= 1 || turn >= n {
            return Err(Error::InvalidGrid(format!(
                "turn index {turn} must satisfy 1 < k < {n}"
            )));
        }
        Ok(Self { times, turn })
    }

    /// `count` samples spaced `period` apart starting at `start`.
    pub fn uniform(start: T, period: T, count: usize, turn: usize) -> Result<Self> {
        if !(period > T::zero()) {
            return Err(Error::InvalidGrid("period must be positive".into()));
        }
        let times = (0..count).map(|i| start + period * lit(i as f64)).collect();
        Self::new(times, turn)
    }

    /// Same instants with a different turn index.
    pub fn with_turn(&self, turn: usize) -> Result<Self> {
        Self::new(self.times.clone(), turn)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    /// 1-based turn index `k`.
    pub fn turn_index(&self) -> usize {
        self.turn
    }

    pub fn first(&self) -> T {
        self.times[0]
    }

    pub fn last(&self) -> T {
        self.times[self.times.len() - 1]
    }

    pub fn turn_time(&self) -> T {
        self.times[self.turn - 1]
    }

    pub fn duration(&self) -> T {
        self.last() - self.first()
    }

    fn check(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.len() {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Instant `t_i`.
    pub fn time(&self, i: usize) -> Result<T> {
        self.check(i)?;
        Ok(self.times[i - 1])
    }

    /// Normalized elapsed time `(t_i - t_1) / (t_n - t_1)`.
    pub fn alpha(&self, i: usize) -> Result<T> {
        self.check(i)?;
        Ok(self.alpha_unchecked(i - 1))
    }

    pub(crate) fn alpha_unchecked(&self, zero_based: usize) -> T {
        if zero_based + 1 == self.len() {
            return T::one();
        }
        (self.times[zero_based] - self.first()) / self.duration()
    }

    /// All normalized times, `alphas()[0] == 0` and `alphas()[n-1] == 1`.
    pub fn alphas(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.alpha_unchecked(i)).collect()
    }

    /// 1-based index of the sample nearest the middle of the observation window
    /// (ties resolved toward the earlier sample).
    pub fn midpoint_index(&self) -> usize {
        let middle = self.first() + self.duration() * lit(0.5);
        let mut best = 0;
        let mut best_gap = T::infinity();
        for (i, &t) in self.times.iter().enumerate() {
            let gap = (t - middle).abs();
            if gap < best_gap {
                best = i;
                best_gap = gap;
            }
        }
        best + 1
    }
}

/// Estimated target state: positions at the first and last sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState<T = f64> {
    pub p1: Vec2<T>,
    pub pn: Vec2<T>,
}

impl<T: Scalar> TargetState<T> {
    pub fn new(p1: Vec2<T>, pn: Vec2<T>) -> Result<Self> {
        if !p1.is_finite() || !pn.is_finite() {
            return Err(Error::NonFinite("target state"));
        }
        Ok(Self { p1, pn })
    }

    /// Target starting at `p1` and moving with constant `velocity` over `grid`.
    pub fn from_velocity(p1: Vec2<T>, velocity: Vec2<T>, grid: &TimeGrid<T>) -> Result<Self> {
        Self::new(p1, p1 + velocity * grid.duration())
    }

    pub fn velocity(&self, grid: &TimeGrid<T>) -> Vec2<T> {
        (self.pn - self.p1) * grid.duration().recip()
    }

    pub(crate) fn position_unchecked(&self, grid: &TimeGrid<T>, zero_based: usize) -> Vec2<T> {
        let a = grid.alpha_unchecked(zero_based);
        if a == T::zero() {
            self.p1
        } else if a == T::one() {
            self.pn
        } else {
            self.p1 + (self.pn - self.p1) * a
        }
    }

    pub fn trajectory(&self, grid: &TimeGrid<T>) -> Vec<Vec2<T>> {
        (0..grid.len())
            .map(|i| self.position_unchecked(grid, i))
            .collect()
    }
}

/// Unconstrained two-leg platform state: initial position and both leg velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatformStateFree<T = f64> {
    pub p1: Vec2<T>,
    pub v1: Vec2<T>,
    pub v2: Vec2<T>,
}

impl<T: Scalar> PlatformStateFree<T> {
    pub fn new(p1: Vec2<T>, v1: Vec2<T>, v2: Vec2<T>) -> Result<Self> {
        if !(p1.is_finite() && v1.is_finite() && v2.is_finite()) {
            return Err(Error::NonFinite("platform state"));
        }
        if v1 == Vec2::zero() && v2 == Vec2::zero() {
            return Err(Error::NonPositiveSpeed(0.0));
        }
        Ok(Self { p1, v1, v2 })
    }

    pub(crate) fn position_unchecked(&self, grid: &TimeGrid<T>, zero_based: usize) -> Vec2<T> {
        let t1 = grid.first();
        let ti = grid.times[zero_based];
        if zero_based + 1 < grid.turn {
            self.p1 + self.v1 * (ti - t1)
        } else {
            let tk = grid.turn_time();
            self.p1 + self.v1 * (tk - t1) + self.v2 * (ti - tk)
        }
    }

    pub fn trajectory(&self, grid: &TimeGrid<T>) -> Vec<Vec2<T>> {
        (0..grid.len())
            .map(|i| self.position_unchecked(grid, i))
            .collect()
    }
}

/// Constant-speed platform state `[xi, eta, s, phi1, phi2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedPlatformState<T = f64> {
    /// East position at `t_1` (m).
    pub xi: T,
    /// North position at `t_1` (m).
    pub eta: T,
    /// Common speed of both legs (m/s).
    pub speed: T,
    /// First-leg heading (rad).
    pub phi1: T,
    /// Second-leg heading (rad).
    pub phi2: T,
}

impl<T: Scalar> ConstrainedPlatformState<T> {
    /// Validates the speed and wraps both headings into `(-pi, pi]`.
    pub fn new(xi: T, eta: T, speed: T, phi1: T, phi2: T) -> Result<Self> {
        if ![xi, eta, speed, phi1, phi2].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("constrained platform state"));
        }
        if !(speed > T::zero()) {
            return Err(Error::NonPositiveSpeed(to_f64(speed)));
        }
        Ok(Self {
            xi,
            eta,
            speed,
            phi1: wrap_angle(phi1),
            phi2: wrap_angle(phi2),
        })
    }

    /// Interprets an unconstrained parameter vector, folding a negative speed
    /// into reversed headings.
    pub fn from_params(params: [T; 5]) -> Result<Self> {
        let [xi, eta, s, phi1, phi2] = params;
        if s < T::zero() {
            Self::new(xi, eta, -s, phi1 + T::PI(), phi2 + T::PI())
        } else {
            Self::new(xi, eta, s, phi1, phi2)
        }
    }

    pub fn params(&self) -> [T; 5] {
        [self.xi, self.eta, self.speed, self.phi1, self.phi2]
    }

    pub fn position(&self) -> Vec2<T> {
        Vec2::new(self.xi, self.eta)
    }
}

/// Platform positions at the first sample, the turn and the last sample.
///
/// Constructed only through [`Waypoints::new`], which enforces equal leg speeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoints<T = f64> {
    p1: Vec2<T>,
    pk: Vec2<T>,
    pn: Vec2<T>,
}

impl<T: Scalar> Waypoints<T> {
    pub fn new(p1: Vec2<T>, pk: Vec2<T>, pn: Vec2<T>, grid: &TimeGrid<T>) -> Result<Self> {
        if !(p1.is_finite() && pk.is_finite() && pn.is_finite()) {
            return Err(Error::NonFinite("waypoints"));
        }
        let (s1, s2) = Self::leg_speeds_of(p1, pk, pn, grid);
        check_equal_speeds(s1, s2)?;
        Ok(Self { p1, pk, pn })
    }

    fn leg_speeds_of(p1: Vec2<T>, pk: Vec2<T>, pn: Vec2<T>, grid: &TimeGrid<T>) -> (T, T) {
        let t1 = grid.first();
        let tk = grid.turn_time();
        let tn = grid.last();
        ((pk - p1).norm() / (tk - t1), (pn - pk).norm() / (tn - tk))
    }

    pub fn p1(&self) -> Vec2<T> {
        self.p1
    }

    pub fn pk(&self) -> Vec2<T> {
        self.pk
    }

    pub fn pn(&self) -> Vec2<T> {
        self.pn
    }
}

fn check_equal_speeds<T: Scalar>(s1: T, s2: T) -> Result<()> {
    let scale = s1.abs().max(s2.abs());
    if (s1 - s2).abs() > tolerance::<T>(EQUAL_SPEED_RTOL) * scale {
        return Err(Error::UnequalLegSpeeds {
            first: to_f64(s1),
            second: to_f64(s2),
        });
    }
    Ok(())
}

/// Target position at sample `i`.
pub fn target_position<T: Scalar>(
    target: &TargetState<T>,
    grid: &TimeGrid<T>,
    i: usize,
) -> Result<Vec2<T>> {
    grid.check(i)?;
    Ok(target.position_unchecked(grid, i - 1))
}

/// Platform position at sample `i` under the two-leg model.
pub fn platform_position<T: Scalar>(
    platform: &PlatformStateFree<T>,
    grid: &TimeGrid<T>,
    i: usize,
) -> Result<Vec2<T>> {
    grid.check(i)?;
    Ok(platform.position_unchecked(grid, i - 1))
}

pub fn free_from_constrained<T: Scalar>(
    x: &ConstrainedPlatformState<T>,
) -> Result<PlatformStateFree<T>> {
    if !(x.speed > T::zero()) {
        return Err(Error::NonPositiveSpeed(to_f64(x.speed)));
    }
    PlatformStateFree::new(
        x.position(),
        Vec2::from_heading(x.phi1) * x.speed,
        Vec2::from_heading(x.phi2) * x.speed,
    )
}

pub fn constrained_from_free<T: Scalar>(
    xp: &PlatformStateFree<T>,
) -> Result<ConstrainedPlatformState<T>> {
    let s1 = xp.v1.norm();
    let s2 = xp.v2.norm();
    check_equal_speeds(s1, s2)?;
    ConstrainedPlatformState::new(xp.p1.x, xp.p1.y, s1, xp.v1.heading(), xp.v2.heading())
}

pub fn waypoints_from_state<T: Scalar>(
    x: &ConstrainedPlatformState<T>,
    grid: &TimeGrid<T>,
) -> Result<Waypoints<T>> {
    let free = free_from_constrained(x)?;
    let pk = free.position_unchecked(grid, grid.turn_index() - 1);
    let pn = free.position_unchecked(grid, grid.len() - 1);
    Waypoints::new(free.p1, pk, pn, grid)
}

pub fn state_from_waypoints<T: Scalar>(
    w: &Waypoints<T>,
    grid: &TimeGrid<T>,
) -> Result<ConstrainedPlatformState<T>> {
    let (s1, s2) = Waypoints::leg_speeds_of(w.p1, w.pk, w.pn, grid);
    check_equal_speeds(s1, s2)?;
    ConstrainedPlatformState::new(
        w.p1.x,
        w.p1.y,
        s1,
        (w.pk - w.p1).heading(),
        (w.pn - w.pk).heading(),
    )
}

/// Bearing from the platform at `platform_pos` to the target at sample `i`.
pub fn bearing<T: Scalar>(
    target: &TargetState<T>,
    platform_pos: Vec2<T>,
    grid: &TimeGrid<T>,
    i: usize,
) -> Result<T> {
    let d = target_position(target, grid, i)? - platform_pos;
    if d == Vec2::zero() {
        return Err(Error::CoincidentPositions { index: i });
    }
    Ok(d.heading())
}

/// Target-platform distance at sample `i`.
pub fn range<T: Scalar>(
    target: &TargetState<T>,
    platform_pos: Vec2<T>,
    grid: &TimeGrid<T>,
    i: usize,
) -> Result<T> {
    let r = (target_position(target, grid, i)? - platform_pos).norm();
    if r == T::zero() {
        return Err(Error::CoincidentPositions { index: i });
    }
    Ok(r)
}
