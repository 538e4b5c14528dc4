//! Initial platform waypoints read off the observed FIM.
//!
//! Block traces give coarse ranges, covariance eigenvectors give bearing axes, the
//! target velocity resolves their signs down to two pairs, and a midpoint probe picks
//! the turn side of a right-triangle path between the endpoint guesses. Since
//! `alpha_theta` is unknown, the construction is repeated over a grid of values and
//! the candidates are grouped into zones, keeping the best one per zone.

use crate::error::{Error, Result};
use crate::fim::{blocks, Fim};
use crate::linalg::{Mat2, Vec2};
use crate::motion::{
    state_from_waypoints, ConstrainedPlatformState, TargetState, TimeGrid, Waypoints,
};
use crate::objective::ObservedProducts;
use crate::scalar::{lit, to_f64, Scalar};

/// Condition estimate above which the observed FIM is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative eigenvalue gap below which a principal axis is ambiguous.
pub const REPEATED_EIGENVALUE_RTOL: f64 = 1e-12;

/// Initializer zone label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Zone {
    A,
    B,
    C,
}

impl Zone {
    pub fn label(self) -> &'static str {
        match self {
            Zone::A => "A",
            Zone::B => "B",
            Zone::C => "C",
        }
    }
}

impl std::fmt::Display for Zone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Coarse platform position at the sample nearest the middle of the observation window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidpointProbe<T = f64> {
    /// 1-based sample index.
    pub index: usize,
    pub position: Vec2<T>,
    pub range: T,
    pub direction: Vec2<T>,
}

/// One grid point `m` of `alpha_theta` combined with one sign pair `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T = f64> {
    /// 1-based grid index.
    pub m: usize,
    /// Pair index, 1 or 2.
    pub g: usize,
    pub alpha_theta: T,
    pub r1: T,
    pub rn: T,
    pub p1: Vec2<T>,
    pub pn: Vec2<T>,
    /// Heading of the chord from `p1` to `pn`.
    pub gamma: T,
    /// The turn guess and its reduced objective, or why it could not be built.
    pub outcome: Result<(Waypoints<T>, T)>,
}

/// Best candidate of a zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneGuess<T = f64> {
    pub zone: Zone,
    pub waypoints: Waypoints<T>,
    pub state: ConstrainedPlatformState<T>,
    pub alpha_theta: T,
    pub m: usize,
    pub g: usize,
    pub g_value: T,
    pub r1: T,
    pub rn: T,
}

/// Where the chord-heading sign flip split one pair's candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZoneSplit {
    pub g: usize,
    /// Last grid index before the flip.
    pub m: usize,
}

/// Per-zone starting points for the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct GuessSet<T = f64> {
    pub zones: Vec<ZoneGuess<T>>,
    pub candidates: Vec<Candidate<T>>,
    pub split: Option<ZoneSplit>,
}

impl<T: Scalar> GuessSet<T> {
    pub fn zone(&self, zone: Zone) -> Option<&ZoneGuess<T>> {
        self.zones.iter().find(|z| z.zone == zone)
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }
}

/// Coarse ranges at the first and last sample from the diagonal block traces.
pub fn range_estimates<T: Scalar>(
    j_obs: &Fim<T>,
    grid: &TimeGrid<T>,
    alpha_theta: T,
) -> Result<(T, T)> {
    if !(alpha_theta > T::zero()) {
        return Err(Error::NonPositiveAlpha(to_f64(alpha_theta)));
    }
    let b = blocks(j_obs);
    let t11 = positive_trace(b.j11, "J11")?;
    let t22 = positive_trace(b.j22, "J22")?;
    let alphas = grid.alphas();
    let s_first: T = alphas
        .iter()
        .map(|a| (T::one() - *a) * (T::one() - *a))
        .sum();
    let s_last: T = alphas.iter().map(|a| *a * *a).sum();
    Ok((
        (alpha_theta * s_first / t11).sqrt(),
        (alpha_theta * s_last / t22).sqrt(),
    ))
}

fn positive_trace<T: Scalar>(m: Mat2<T>, block: &'static str) -> Result<T> {
    let trace = m.trace();
    if !(trace > T::zero()) {
        return Err(Error::NonPositiveTrace {
            block,
            trace: to_f64(trace),
        });
    }
    Ok(trace)
}

/// Diagonal 2x2 blocks of the inverse FIM, by Schur complements.
pub fn covariance_blocks<T: Scalar>(j_obs: &Fim<T>) -> Result<(Mat2<T>, Mat2<T>)> {
    let condition = j_obs.condition_estimate();
    if !(condition <= lit::<T>(MAX_CONDITION)) {
        return Err(Error::SingularFim {
            condition: to_f64(condition),
        });
    }
    let singular = || Error::SingularFim {
        condition: to_f64(condition),
    };
    let b = blocks(j_obs);
    let j11_inv = b.j11.inverse().ok_or_else(singular)?;
    let j22_inv = b.j22.inverse().ok_or_else(singular)?;
    let s11 = b.j11 - b.j12.matmul(&j22_inv).matmul(&b.j21);
    let s22 = b.j22 - b.j21.matmul(&j11_inv).matmul(&b.j12);
    Ok((
        s11.inverse().ok_or_else(singular)?,
        s22.inverse().ok_or_else(singular)?,
    ))
}

/// Unit eigenvector for the largest (`largest = true`) or smallest eigenvalue of a symmetric matrix.
fn principal_axis<T: Scalar>(m: &Mat2<T>, largest: bool, name: &'static str) -> Result<Vec2<T>> {
    let e = m.sym_eigen();
    let [hi, lo] = e.values;
    if !(hi - lo >= lit::<T>(REPEATED_EIGENVALUE_RTOL) * (hi.abs() + lo.abs())) || hi == lo {
        return Err(Error::AmbiguousAxis(name));
    }
    Ok(if largest { e.vectors[0] } else { e.vectors[1] })
}

/// Axes of largest position uncertainty at the first and last sample, each up to sign.
pub fn bearing_axes<T: Scalar>(j_obs: &Fim<T>) -> Result<(Vec2<T>, Vec2<T>)> {
    let (c11, c22) = covariance_blocks(j_obs)?;
    Ok((
        principal_axis(&c11, true, "C11")?,
        principal_axis(&c22, true, "C22")?,
    ))
}

/// Unit vector perpendicular to the target velocity (rotated a quarter turn).
pub fn cross_track_unit<T: Scalar>(v_t: Vec2<T>) -> Result<Vec2<T>> {
    v_t.perp().normalized().ok_or(Error::ZeroTargetVelocity)
}

fn sign_of<T: Scalar>(v: T) -> T {
    if v < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}

/// The two sign combinations of the axes lying on the same side of the target track.
/// Pair 1 points toward `+u`, pair 2 toward `-u`.
pub fn admissible_pairs<T: Scalar>(
    i1: Vec2<T>,
    i_n: Vec2<T>,
    v_t: Vec2<T>,
) -> Result<[(Vec2<T>, Vec2<T>); 2]> {
    let u = cross_track_unit(v_t)?;
    let s1 = i1.dot(u);
    let sn = i_n.dot(u);
    if s1 == T::zero() || sn == T::zero() || !s1.is_finite() || !sn.is_finite() {
        return Err(Error::OnTargetLine);
    }
    let a1 = i1 * sign_of(s1);
    let an = i_n * sign_of(sn);
    Ok([(a1, an), (-a1, -an)])
}

/// Endpoint guesses `p_T + r i` for both pairs.
pub fn endpoint_guesses<T: Scalar>(
    target: &TargetState<T>,
    r1: T,
    rn: T,
    pairs: &[(Vec2<T>, Vec2<T>); 2],
) -> [(Vec2<T>, Vec2<T>); 2] {
    pairs.map(|(i1, i_n)| (target.p1 + i1 * r1, target.pn + i_n * rn))
}

/// Coarse platform position near the middle of the window from the off-diagonal block.
pub fn midpoint_probe<T: Scalar>(
    j_obs: &Fim<T>,
    grid: &TimeGrid<T>,
    alpha_theta: T,
    target: &TargetState<T>,
    i1_resolved: Vec2<T>,
    v_t: Vec2<T>,
) -> Result<MidpointProbe<T>> {
    let direction = probe_direction(j_obs, i1_resolved, v_t)?;
    let range = probe_range(j_obs, grid, alpha_theta)?;
    let index = grid.midpoint_index();
    let center = target.position_unchecked(grid, index - 1);
    Ok(MidpointProbe {
        index,
        position: center + direction * range,
        range,
        direction,
    })
}

fn probe_range<T: Scalar>(j_obs: &Fim<T>, grid: &TimeGrid<T>, alpha_theta: T) -> Result<T> {
    if !(alpha_theta > T::zero()) {
        return Err(Error::NonPositiveAlpha(to_f64(alpha_theta)));
    }
    let trace = positive_trace(blocks(j_obs).j12, "J12")?;
    let s: T = grid.alphas().iter().map(|a| *a * (T::one() - *a)).sum();
    Ok((alpha_theta * s / trace).sqrt())
}

fn probe_direction<T: Scalar>(
    j_obs: &Fim<T>,
    i1_resolved: Vec2<T>,
    v_t: Vec2<T>,
) -> Result<Vec2<T>> {
    let axis = principal_axis(&blocks(j_obs).j12, false, "J12")?;
    let u = cross_track_unit(v_t)?;
    Ok(if sign_of(axis.dot(u)) == sign_of(i1_resolved.dot(u)) {
        axis
    } else {
        -axis
    })
}

/// Right-angle turn path from `p1` to `pn` with equal leg speeds, turning toward the probe.
pub fn turn_guess<T: Scalar>(
    p1: Vec2<T>,
    pn: Vec2<T>,
    grid: &TimeGrid<T>,
    probe: &MidpointProbe<T>,
) -> Result<Waypoints<T>> {
    let chord = pn - p1;
    let length = chord.norm();
    if !(length > T::zero()) {
        return Err(Error::CoincidentEndpoints);
    }
    let t1 = grid.first();
    let tk = grid.turn_time();
    let tn = grid.last();
    let nu = ((tk - t1) / (tn - tk)).atan();
    let leg1 = length * nu.sin();
    let base = chord.heading();
    let tm = grid.time(probe.index)?;

    let mut best: Option<(T, Waypoints<T>)> = None;
    for side in [-T::one(), T::one()] {
        let psi = base + side * (T::FRAC_PI_2() - nu);
        let pk = p1 + Vec2::from_heading(psi) * leg1;
        let w = Waypoints::new(p1, pk, pn, grid)?;
        let at_tm = if tm < tk {
            p1 + (pk - p1) * ((tm - t1) / (tk - t1))
        } else {
            pk + (pn - pk) * ((tm - tk) / (tn - tk))
        };
        let miss = (probe.position - at_tm).norm();
        if best.as_ref().is_none_or(|(d, _)| miss < *d) {
            best = Some((miss, w));
        }
    }
    Ok(best.expect("two sides evaluated").1)
}

/// Smallest recommended size of the `alpha_theta` grid for the given bounds.
pub fn n_theta_min(alpha_min: f64, alpha_max: f64) -> Result<usize> {
    if !(alpha_min > 0.0 && alpha_max >= alpha_min && alpha_max.is_finite()) {
        return Err(Error::InvalidAlphaBounds {
            min: alpha_min,
            max: alpha_max,
        });
    }
    Ok((0.5 * (alpha_min + alpha_max) / alpha_min).ceil() as usize + 1)
}

/// Uniform grid of `count` values spanning `[alpha_min, alpha_max]`.
pub fn alpha_grid<T: Scalar>(alpha_min: T, alpha_max: T, count: usize) -> Vec<T> {
    let span = alpha_max - alpha_min;
    let denom = lit::<T>((count - 1) as f64);
    (0..count)
        .map(|m| {
            if m + 1 == count {
                alpha_max
            } else {
                alpha_min + span * lit::<T>(m as f64) / denom
            }
        })
        .collect()
}

/// Builds candidates over the `alpha_theta` grid and both sign pairs, groups them into
/// zones and keeps the candidate with the largest reduced objective in each.
///
/// The first pair whose chord heading changes sign along the grid is split at the flip
/// into zones B (before) and C (after); the other pair forms zone A. Without a flip
/// pair 1 is zone A, pair 2 is zone B and there is no zone C.
pub fn zone_guesses<T: Scalar>(
    obs: &ObservedProducts<T>,
    alpha_min: T,
    alpha_max: T,
    n_theta: usize,
) -> Result<GuessSet<T>> {
    if !(alpha_min > T::zero() && alpha_max > alpha_min && alpha_max.is_finite()) {
        return Err(Error::InvalidAlphaBounds {
            min: to_f64(alpha_min),
            max: to_f64(alpha_max),
        });
    }
    if n_theta < 3 {
        return Err(Error::TooFewGridPoints {
            min: 3,
            got: n_theta,
        });
    }
    let j_obs = obs.fim();
    let grid = obs.grid();
    let target = obs.target();
    let v_t = target.velocity(grid);

    let (i1, i_n) = bearing_axes(&j_obs)?;
    let pairs = admissible_pairs(i1, i_n, v_t)?;
    let directions = [
        probe_direction(&j_obs, pairs[0].0, v_t)?,
        probe_direction(&j_obs, pairs[1].0, v_t)?,
    ];
    let index = grid.midpoint_index();
    let center = target.position_unchecked(grid, index - 1);

    let mut candidates = Vec::with_capacity(2 * n_theta);
    for (m0, alpha) in alpha_grid(alpha_min, alpha_max, n_theta)
        .into_iter()
        .enumerate()
    {
        let (r1, rn) = range_estimates(&j_obs, grid, alpha)?;
        let range = probe_range(&j_obs, grid, alpha)?;
        let ends = endpoint_guesses(target, r1, rn, &pairs);
        for (g0, (p1, pn)) in ends.into_iter().enumerate() {
            let probe = MidpointProbe {
                index,
                position: center + directions[g0] * range,
                range,
                direction: directions[g0],
            };
            let outcome = turn_guess(p1, pn, grid, &probe).and_then(|w| {
                let state = state_from_waypoints(&w, grid)?;
                Ok((w, obs.evaluate(&state)?.g))
            });
            candidates.push(Candidate {
                m: m0 + 1,
                g: g0 + 1,
                alpha_theta: alpha,
                r1,
                rn,
                p1,
                pn,
                gamma: (pn - p1).heading(),
                outcome,
            });
        }
    }

    let split = find_split(&candidates, n_theta);
    let zone_of = |c: &Candidate<T>| match split {
        Some(s) if c.g == s.g => {
            if c.m <= s.m {
                Zone::B
            } else {
                Zone::C
            }
        }
        Some(_) => Zone::A,
        None if c.g == 1 => Zone::A,
        None => Zone::B,
    };

    let mut zones: Vec<ZoneGuess<T>> = Vec::new();
    for zone in [Zone::A, Zone::B, Zone::C] {
        let mut best: Option<ZoneGuess<T>> = None;
        // Candidates are ordered by m then g, so a strict comparison keeps the earliest tie.
        for c in candidates.iter().filter(|c| zone_of(c) == zone) {
            let Ok((waypoints, g_value)) = &c.outcome else {
                continue;
            };
            if !g_value.is_finite() {
                continue;
            }
            if best.as_ref().is_none_or(|b| *g_value > b.g_value) {
                best = Some(ZoneGuess {
                    zone,
                    waypoints: *waypoints,
                    state: state_from_waypoints(waypoints, grid)?,
                    alpha_theta: c.alpha_theta,
                    m: c.m,
                    g: c.g,
                    g_value: *g_value,
                    r1: c.r1,
                    rn: c.rn,
                });
            }
        }
        zones.extend(best);
    }
    if zones.is_empty() {
        let first_error = candidates
            .iter()
            .find_map(|c| c.outcome.as_ref().err().cloned())
            .unwrap_or(Error::NoGuesses);
        return Err(first_error);
    }
    Ok(GuessSet {
        zones,
        candidates,
        split,
    })
}

fn find_split<T: Scalar>(candidates: &[Candidate<T>], n_theta: usize) -> Option<ZoneSplit> {
    for g in [1, 2] {
        let gammas: Vec<T> = candidates
            .iter()
            .filter(|c| c.g == g)
            .map(|c| c.gamma)
            .collect();
        debug_assert_eq!(gammas.len(), n_theta);
        for m0 in 0..gammas.len().saturating_sub(1) {
            if sign_of(gammas[m0]) != sign_of(gammas[m0 + 1]) {
                return Some(ZoneSplit { g, m: m0 + 1 });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fim::{assemble_fim, synthesize_observed};
    use crate::motion::{free_from_constrained, PlatformStateFree};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn scenario(phi1: f64) -> (ObservedProducts, ConstrainedPlatformState) {
        let grid = TimeGrid::uniform(0.0, 4.0, 201, 101).unwrap();
        let xt = TargetState::from_velocity(Vec2::new(15e3, 35e3), Vec2::new(-10.0, 5.0), &grid)
            .unwrap();
        let truth = ConstrainedPlatformState::new(1e4, 2e4, 7.1, phi1, FRAC_PI_4).unwrap();
        let j = synthesize_observed(&xt, &truth, &grid, 2658.0).unwrap();
        (ObservedProducts::new(&j, xt, grid).unwrap(), truth)
    }

    fn scenario_i() -> (ObservedProducts, ConstrainedPlatformState) {
        scenario(3.0 * PI / 4.0)
    }

    fn scenario_ii() -> (ObservedProducts, ConstrainedPlatformState) {
        scenario(-FRAC_PI_4)
    }

    fn true_positions(obs: &ObservedProducts, truth: &ConstrainedPlatformState) -> Vec<Vec2> {
        free_from_constrained(truth).unwrap().trajectory(obs.grid())
    }

    /// FIM of a platform seen at constant range `r` from a stationary target, built
    /// from per-sample dyads since a circular track is not a two-leg path.
    fn constant_range(r: f64) -> (Fim, TimeGrid, TargetState) {
        let grid = TimeGrid::uniform(0.0, 1.0, 41, 21).unwrap();
        let xt = TargetState::new(Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0)).unwrap();
        let mut m = [[0.0; 4]; 4];
        for (i, a) in grid.alphas().into_iter().enumerate() {
            let theta = -1.2 + 0.05 * i as f64;
            let y = [theta.cos() / r, -theta.sin() / r];
            let g = [(1.0 - a) * y[0], (1.0 - a) * y[1], a * y[0], a * y[1]];
            for (row, gr) in m.iter_mut().zip(g) {
                for (v, gc) in row.iter_mut().zip(g) {
                    *v += 2.0 * gr * gc;
                }
            }
        }
        m[1][2] = m[0][3];
        m[2][1] = m[0][3];
        (Fim::from_rows(m).unwrap(), grid, xt)
    }

    #[test]
    fn constant_range_is_recovered_exactly() {
        let (j, grid, xt) = constant_range(3000.0);
        let (r1, rn) = range_estimates(&j, &grid, 2.0).unwrap();
        assert_relative_eq!(r1, 3000.0, max_relative = 1e-9);
        assert_relative_eq!(rn, 3000.0, max_relative = 1e-9);
        let probe = midpoint_probe(
            &j,
            &grid,
            2.0,
            &xt,
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        )
        .unwrap();
        assert_relative_eq!(probe.range, 3000.0, max_relative = 1e-9);
        let (r1x4, rnx4) = range_estimates(&j, &grid, 8.0).unwrap();
        assert_relative_eq!(r1x4, 2.0 * r1, max_relative = 1e-14);
        assert_relative_eq!(rnx4, 2.0 * rn, max_relative = 1e-14);
    }

    #[test]
    fn range_estimates_are_coarse_but_close() {
        let (obs, truth) = scenario_i();
        let (r1, _) = range_estimates(&obs.fim(), obs.grid(), 2658.0).unwrap();
        let true_r1 = (obs.target().p1 - truth.position()).norm();
        assert_relative_eq!(true_r1, 15811.388300841896, max_relative = 1e-12);
        assert!(r1 > true_r1 / 2.0 && r1 < 2.0 * true_r1, "{r1}");
    }

    #[test]
    fn nonpositive_traces_are_rejected() {
        let grid = TimeGrid::uniform(0.0, 1.0, 5, 3).unwrap();
        let mut m = [[0.0; 4]; 4];
        m[2][2] = 1.0;
        let j = Fim::from_rows(m).unwrap();
        assert!(matches!(
            range_estimates(&j, &grid, 1.0),
            Err(Error::NonPositiveTrace { block: "J11", .. })
        ));
    }

    #[test]
    fn block_diagonal_covariance() {
        let mut m = [[0.0; 4]; 4];
        m[0][0] = 4.0;
        m[0][1] = 1.0;
        m[1][0] = 1.0;
        m[1][1] = 3.0;
        m[2][2] = 2.0;
        m[3][3] = 5.0;
        let j = Fim::from_rows(m).unwrap();
        let (c11, c22) = covariance_blocks(&j).unwrap();
        let inv = Mat2::new(4.0, 1.0, 1.0, 3.0).inverse().unwrap();
        assert!((c11 - inv).max_abs() < 1e-15);
        assert!((c22 - Mat2::diag(0.5, 0.2)).max_abs() < 1e-15);
    }

    /// Dense 4x4 inverse by Gauss-Jordan elimination with partial pivoting.
    fn dense_inverse(a: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
        let mut m = *a;
        let mut inv = [[0.0; 4]; 4];
        for (i, row) in inv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for col in 0..4 {
            let piv = (col..4)
                .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
                .unwrap();
            m.swap(col, piv);
            inv.swap(col, piv);
            let d = m[col][col];
            for c in 0..4 {
                m[col][c] /= d;
                inv[col][c] /= d;
            }
            for r in 0..4 {
                if r != col {
                    let f = m[r][col];
                    for c in 0..4 {
                        m[r][c] -= f * m[col][c];
                        inv[r][c] -= f * inv[col][c];
                    }
                }
            }
        }
        inv
    }

    #[test]
    fn schur_matches_dense_inverse() {
        let (obs, _) = scenario_ii();
        let j = obs.fim();
        let (c11, c22) = covariance_blocks(&j).unwrap();
        let inv = dense_inverse(j.rows());
        for r in 0..2 {
            for c in 0..2 {
                assert_relative_eq!(c11.m[r][c], inv[r][c], max_relative = 1e-9);
                assert_relative_eq!(c22.m[r][c], inv[r + 2][c + 2], max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn single_bearing_fim_is_singular() {
        let grid = TimeGrid::uniform(0.0, 1.0, 11, 6).unwrap();
        let xt = TargetState::new(Vec2::new(0.0, 5000.0), Vec2::new(0.0, 5000.0)).unwrap();
        let xp =
            PlatformStateFree::new(Vec2::zero(), Vec2::new(0.0, 1.0), Vec2::new(0.0, 1.0)).unwrap();
        let j = assemble_fim(&xt, &xp, &grid, 1.0).unwrap();
        assert!(matches!(
            covariance_blocks(&j),
            Err(Error::SingularFim { .. })
        ));
    }

    #[test]
    fn axes_follow_true_bearings() {
        let (obs, truth) = scenario_i();
        let (i1, i_n) = bearing_axes(&obs.fim()).unwrap();
        let p = true_positions(&obs, &truth);
        let true_i1 = (obs.target().p1 - p[0]).normalized().unwrap();
        let true_in = (obs.target().pn - p[200]).normalized().unwrap();
        let five_deg = (5.0_f64).to_radians().cos();
        assert!(i1.dot(true_i1).abs() > five_deg);
        assert!(i_n.dot(true_in).abs() > five_deg);
    }

    #[test]
    fn diagonal_covariance_axis() {
        let axis = principal_axis(&Mat2::diag(4.0_f64, 1.0), true, "C").unwrap();
        assert_eq!(axis.x.abs(), 1.0);
        assert_eq!(axis.y, 0.0);
        assert_eq!(
            principal_axis(&Mat2::diag(2.0, 2.0), true, "C"),
            Err(Error::AmbiguousAxis("C"))
        );
    }

    #[test]
    fn pairs_are_sign_matched() {
        let u = cross_track_unit(Vec2::new(3.0, 4.0)).unwrap();
        let pairs = admissible_pairs(u, u, Vec2::new(3.0, 4.0)).unwrap();
        assert_eq!(pairs, [(u, u), (-u, -u)]);

        let v_t = Vec2::new(-10.0, 5.0);
        let u = cross_track_unit(v_t).unwrap();
        let a = Vec2::from_heading(0.4);
        let b = Vec2::from_heading(2.9);
        for (s1, sn) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let pairs = admissible_pairs(a * s1, b * sn, v_t).unwrap();
            for (x, y) in pairs {
                assert_eq!(x.dot(u) > 0.0, y.dot(u) > 0.0);
            }
            assert!(pairs[0].0.dot(u) > 0.0);
        }
        let along = v_t.normalized().unwrap();
        assert_eq!(admissible_pairs(along, b, v_t), Err(Error::OnTargetLine));
        assert_eq!(
            admissible_pairs(a, b, Vec2::zero()),
            Err(Error::ZeroTargetVelocity)
        );
    }

    #[test]
    fn true_sign_pair_is_admissible() {
        let (obs, truth) = scenario_ii();
        let p = true_positions(&obs, &truth);
        let (i1, i_n) = bearing_axes(&obs.fim()).unwrap();
        let pairs = admissible_pairs(i1, i_n, obs.target().velocity(obs.grid())).unwrap();
        // Axes point from target to platform when added to the target position.
        let d1 = (p[0] - obs.target().p1).normalized().unwrap();
        let dn = (p[200] - obs.target().pn).normalized().unwrap();
        assert!(pairs
            .iter()
            .any(|(a, b)| a.dot(d1) > 0.9 && b.dot(dn) > 0.9));
    }

    #[test]
    fn endpoints() {
        let (obs, truth) = scenario_i();
        let xt = *obs.target();
        let pairs = [(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)); 2];
        let zero = endpoint_guesses(&xt, 0.0, 0.0, &pairs);
        assert_eq!(zero[0], (xt.p1, xt.pn));

        let p = true_positions(&obs, &truth);
        let d1 = p[0] - xt.p1;
        let dn = p[200] - xt.pn;
        let exact = [(d1.normalized().unwrap(), dn.normalized().unwrap()); 2];
        let e = endpoint_guesses(&xt, d1.norm(), dn.norm(), &exact);
        assert!((e[0].0 - p[0]).norm() < 1e-9);
        assert!((e[0].1 - p[200]).norm() < 1e-9);

        let (r1, rn) = range_estimates(&obs.fim(), obs.grid(), 2658.0).unwrap();
        let (i1, i_n) = bearing_axes(&obs.fim()).unwrap();
        let pairs = admissible_pairs(i1, i_n, xt.velocity(obs.grid())).unwrap();
        let best = endpoint_guesses(&xt, r1, rn, &pairs)
            .into_iter()
            .map(|(a, b)| ((a - p[0]).norm() / d1.norm()).max((b - p[200]).norm() / dn.norm()))
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 0.5, "{best}");
    }

    #[test]
    fn single_dyad_probe_is_along_bearing() {
        let theta = 0.7_f64;
        let y = Vec2::new(theta.cos(), -theta.sin());
        let grid = TimeGrid::uniform(0.0, 1.0, 3, 2).unwrap();
        // Only the middle sample (alpha = 1/2) contributes to the cross block.
        let mut m = [[0.0; 4]; 4];
        let g = [0.5 * y.x, 0.5 * y.y, 0.5 * y.x, 0.5 * y.y];
        for r in 0..4 {
            for c in 0..4 {
                m[r][c] = g[r] * g[c];
            }
        }
        m[0][0] += 1.0;
        m[1][1] += 1.0;
        m[2][2] += 1.0;
        m[3][3] += 1.0;
        let j = Fim::from_rows(m).unwrap();
        let xt = TargetState::new(Vec2::zero(), Vec2::new(1.0, 0.0)).unwrap();
        let probe = midpoint_probe(
            &j,
            &grid,
            1.0,
            &xt,
            Vec2::from_heading(theta),
            Vec2::new(1.0, 0.0),
        )
        .unwrap();
        let i_m = Vec2::from_heading(theta);
        assert!((probe.direction.dot(i_m).abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn probe_lands_on_turn_side_of_chord() {
        let (obs, truth) = scenario_i();
        let p = true_positions(&obs, &truth);
        let j = obs.fim();
        let v_t = obs.target().velocity(obs.grid());
        let d1 = (p[0] - obs.target().p1).normalized().unwrap();
        let (i1, i_n) = bearing_axes(&j).unwrap();
        let pairs = admissible_pairs(i1, i_n, v_t).unwrap();
        let true_pair = if pairs[0].0.dot(d1) > 0.0 {
            pairs[0]
        } else {
            pairs[1]
        };
        let probe = midpoint_probe(&j, obs.grid(), 2658.0, obs.target(), true_pair.0, v_t).unwrap();
        let chord = p[200] - p[0];
        let side = |q: Vec2| chord.perp().dot(q - p[0]);
        assert!(side(probe.position) * side(p[100]) > 0.0);
    }

    #[test]
    fn midpoint_turn_is_isosceles() {
        let grid = TimeGrid::uniform(0.0, 1.0, 11, 6).unwrap();
        let p1 = Vec2::new(0.0, 0.0);
        let pn = Vec2::new(100.0, 0.0);
        let probe = |pos| MidpointProbe {
            index: 6,
            position: pos,
            range: 0.0,
            direction: Vec2::zero(),
        };
        let up = turn_guess(p1, pn, &grid, &probe(Vec2::new(50.0, 50.0))).unwrap();
        let down = turn_guess(p1, pn, &grid, &probe(Vec2::new(50.0, -50.0))).unwrap();
        assert_relative_eq!(
            (up.pk() - p1).norm(),
            100.0 / 2.0_f64.sqrt(),
            max_relative = 1e-14
        );
        // Mirror images across the chord.
        assert_relative_eq!(up.pk().x, down.pk().x, max_relative = 1e-14);
        assert_relative_eq!(up.pk().y, -down.pk().y, max_relative = 1e-14);
        assert!(up.pk().y > 0.0);
        assert_eq!(
            turn_guess(p1, p1, &grid, &probe(p1)),
            Err(Error::CoincidentEndpoints)
        );
    }

    #[test]
    fn turn_guess_from_true_endpoints() {
        let (obs, truth) = scenario_ii();
        assert_relative_eq!(wrap(truth.phi2 - truth.phi1), FRAC_PI_2, epsilon = 1e-15);
        let p = true_positions(&obs, &truth);
        let j = obs.fim();
        let v_t = obs.target().velocity(obs.grid());
        let d1 = (p[0] - obs.target().p1).normalized().unwrap();
        let probe = midpoint_probe(&j, obs.grid(), 2658.0, obs.target(), d1, v_t).unwrap();
        let w = turn_guess(p[0], p[200], obs.grid(), &probe).unwrap();
        assert!((w.pk() - p[100]).norm() < 1.0);
    }

    fn wrap(a: f64) -> f64 {
        crate::scalar::wrap_angle(a)
    }

    #[test]
    fn n_theta_rule() {
        assert_eq!(n_theta_min(532.2449, 3206.5).unwrap(), 5);
        assert_eq!(n_theta_min(1.0, 1.0).unwrap(), 2);
        assert_eq!(n_theta_min(1.0, 9.0).unwrap(), 6);
        assert!(n_theta_min(0.0, 1.0).is_err());
        assert!(n_theta_min(2.0, 1.0).is_err());
    }

    #[test]
    fn alpha_grid_endpoints() {
        let g = alpha_grid(532.2449, 3206.5, 5);
        assert_eq!(g[0], 532.2449);
        assert_eq!(g[4], 3206.5);
        assert_relative_eq!(g[2], 0.5 * (532.2449 + 3206.5), max_relative = 1e-15);
    }

    #[test]
    fn zones_split_on_chord_heading_flip() {
        for (obs, _) in [scenario_i(), scenario_ii()] {
            let set = zone_guesses(&obs, 532.2449, 3206.5, 5).unwrap();
            let split = set.split.expect("flip present");
            assert_eq!(set.zones.len(), 3);
            assert_eq!(set.candidates.len(), 10);
            for z in &set.zones {
                let members: Vec<_> = set
                    .candidates
                    .iter()
                    .filter(|c| match z.zone {
                        Zone::A => c.g != split.g,
                        Zone::B => c.g == split.g && c.m <= split.m,
                        Zone::C => c.g == split.g && c.m > split.m,
                    })
                    .collect();
                let best = members
                    .iter()
                    .filter_map(|c| c.outcome.as_ref().ok().map(|(_, g)| *g))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(z.g_value, best);
            }
        }
    }

    fn rspe_to(truth: &[Vec2], path: &[Vec2]) -> f64 {
        path.iter()
            .zip(truth)
            .map(|(a, b)| (*a - *b).norm())
            .sum::<f64>()
            / truth.len() as f64
    }

    /// RSPE of the turn guess and of the straight chord between the same endpoints.
    fn guess_and_chord(w: &Waypoints, grid: &TimeGrid, truth: &[Vec2]) -> (f64, f64) {
        let state = state_from_waypoints(w, grid).unwrap();
        let guess = free_from_constrained(&state).unwrap().trajectory(grid);
        let v = (w.pn() - w.p1()) * grid.duration().recip();
        let chord = PlatformStateFree::new(w.p1(), v, v)
            .unwrap()
            .trajectory(grid);
        (rspe_to(truth, &guess), rspe_to(truth, &chord))
    }

    #[test]
    fn true_zone_guess_beats_chord_baseline() {
        let (obs, truth) = scenario_ii();
        let p = true_positions(&obs, &truth);
        let set = zone_guesses(&obs, 532.2449, 3206.5, 5).unwrap();
        let (guess, chord) = set
            .zones
            .iter()
            .map(|z| guess_and_chord(&z.waypoints, obs.grid(), &p))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        assert!(guess > 0.0 && guess < chord, "{guess} vs {chord}");
    }

    #[test]
    fn true_pair_turn_beats_chord_near_true_alpha() {
        // At the grid value closest to the synthesis constant the right-angle turn is
        // closer to the truth than the chord in both scenarios.
        for (obs, truth) in [scenario_i(), scenario_ii()] {
            let p = true_positions(&obs, &truth);
            let set = zone_guesses(&obs, 532.2449, 3206.5, 5).unwrap();
            let (guess, chord) = set
                .candidates
                .iter()
                .filter(|c| c.m == 4)
                .filter_map(|c| c.outcome.as_ref().ok())
                .map(|(w, _)| guess_and_chord(w, obs.grid(), &p))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap();
            assert!(guess < chord, "{guess} vs {chord}");
        }
    }

    #[test]
    fn zone_guess_argument_checks() {
        let (obs, _) = scenario_i();
        assert!(matches!(
            zone_guesses(&obs, 3.0, 1.0, 5),
            Err(Error::InvalidAlphaBounds { .. })
        ));
        assert!(matches!(
            zone_guesses(&obs, 1.0, 3.0, 2),
            Err(Error::TooFewGridPoints { .. })
        ));
    }
}
