//! Derivative-free identification of the platform state from the zone guesses.
//!
//! Each zone guess seeds a Nelder-Mead run over `[xi, eta, s, phi1, phi2]`. The runs
//! maximize `-F(x, a_hat(x)) / |j_obs|_W^2`, which differs from `G(x) / |j_obs|_W^2` by
//! exactly one but keeps full relative precision near an exact match, where `G`
//! saturates at `|j_obs|_W^2`. The zone with the best objective wins.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::initguess::{zone_guesses, GuessSet, Zone, ZoneGuess};
use crate::linalg::Vec2;
use crate::motion::{free_from_constrained, ConstrainedPlatformState, TimeGrid};
use crate::objective::ObservedProducts;
use crate::observability::{is_stealthy, DEFAULT_STEALTH_TOL};
use crate::scalar::{lit, to_f64, tolerance, Scalar};

/// Residual ratio above which the winner is flagged as not an exact match.
pub const EXACT_MATCH_RATIO: f64 = 1e-8;

/// Nelder-Mead coefficients and stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexParams<T = f64> {
    pub reflection: T,
    pub expansion: T,
    pub contraction: T,
    pub shrink: T,
    pub max_iterations: usize,
    /// Stop when `|f_best - f_worst| <= f_tol * |f_best|`.
    pub f_tol: T,
    /// Stop when every vertex is within `x_tol * (1 + |b_j|)` of the best vertex `b` in each coordinate.
    pub x_tol: T,
    /// Initial simplex offsets `(m, m, m/s, rad, rad)`; derived from the guess ranges when absent.
    pub initial_steps: Option<[T; 5]>,
}

impl<T: Scalar> Default for SimplexParams<T> {
    fn default() -> Self {
        Self {
            reflection: T::one(),
            expansion: lit(2.0),
            contraction: lit(0.5),
            shrink: lit(0.5),
            max_iterations: 20_000,
            f_tol: tolerance(1e-12),
            x_tol: tolerance(1e-9),
            initial_steps: None,
        }
    }
}

impl<T: Scalar> SimplexParams<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSimplexParams(msg.to_string()));
        if !(self.reflection > T::zero()) {
            return bad("reflection must be positive");
        }
        if !(self.expansion > T::one() && self.expansion > self.reflection) {
            return bad("expansion must exceed 1 and the reflection coefficient");
        }
        if !(self.contraction > T::zero() && self.contraction < T::one()) {
            return bad("contraction must lie in (0, 1)");
        }
        if !(self.shrink > T::zero() && self.shrink < T::one()) {
            return bad("shrink must lie in (0, 1)");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.f_tol >= T::zero() && self.x_tol >= T::zero()) {
            return bad("tolerances must be nonnegative");
        }
        if let Some(steps) = self.initial_steps {
            if steps.iter().any(|s| !(s.is_finite() && *s != T::zero())) {
                return bad("initial steps must be finite and nonzero");
            }
        }
        Ok(())
    }

    /// Scale-aware default steps for a start whose coarse ranges are `r1`, `rn`.
    pub fn steps_for(&self, r1: T, rn: T) -> [T; 5] {
        self.initial_steps.unwrap_or_else(|| {
            let pos = lit::<T>(0.05) * r1.max(rn);
            let angle = lit::<T>(0.05);
            [pos, pos, lit(0.5), angle, angle]
        })
    }
}

/// Why a simplex run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ObjectiveSpread,
    SimplexDiameter,
    MaxIterations,
}

/// Best vertex after an iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexTracePoint<T, const N: usize> {
    pub iteration: usize,
    pub value: T,
    pub point: [T; N],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome<T, const N: usize> {
    pub point: [T; N],
    pub value: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
    /// One entry per iteration, starting with iteration 0.
    pub trace: Vec<SimplexTracePoint<T, N>>,
}

/// Maximizes `f` from `x0` with an axis-aligned initial simplex of offsets `steps`.
///
/// Non-finite objective values count as worse than any finite value; a non-finite
/// reflection shrinks the simplex toward the best vertex.
pub fn nelder_mead_maximize<T, const N: usize, F>(
    mut f: F,
    x0: [T; N],
    steps: [T; N],
    params: &SimplexParams<T>,
) -> Result<SimplexOutcome<T, N>>
where
    T: Scalar,
    F: FnMut(&[T; N]) -> T,
{
    params.validate()?;
    let mut evaluations = 0usize;
    let mut eval = |x: &[T; N]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::neg_infinity()
        }
    };

    let mut simplex: Vec<([T; N], T)> = Vec::with_capacity(N + 1);
    for j in 0..=N {
        let mut x = x0;
        if j > 0 {
            x[j - 1] += steps[j - 1];
        }
        let v = eval(&x);
        if !v.is_finite() {
            return Err(Error::ObjectiveFailure(format!(
                "non-finite objective at initial vertex {j}"
            )));
        }
        simplex.push((x, v));
    }

    let n_t = lit::<T>(N as f64);
    let mut trace = Vec::new();
    let mut iteration = 0usize;
    let stop = loop {
        // Values are finite or -inf. The stable sort keeps the earlier vertex first on ties.
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        trace.push(SimplexTracePoint {
            iteration,
            value: simplex[0].1,
            point: simplex[0].0,
        });

        let best = simplex[0];
        let worst = simplex[N];
        if (best.1 - worst.1).abs() <= params.f_tol * best.1.abs() {
            break StopReason::ObjectiveSpread;
        }
        let diameter_ok = simplex[1..].iter().all(|(x, _)| {
            x.iter()
                .zip(best.0.iter())
                .all(|(v, b)| (*v - *b).abs() <= params.x_tol * (T::one() + b.abs()))
        });
        if diameter_ok {
            break StopReason::SimplexDiameter;
        }
        if iteration >= params.max_iterations {
            break StopReason::MaxIterations;
        }
        iteration += 1;

        let mut centroid = [T::zero(); N];
        for (x, _) in &simplex[..N] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += *v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n_t);
        let toward = |from: &[T; N], coef: T| -> [T; N] {
            std::array::from_fn(|j| centroid[j] + coef * (from[j] - centroid[j]))
        };

        let xr = toward(&worst.0, -params.reflection);
        let fr = eval(&xr);
        let second_worst = simplex[N - 1].1;

        let mut shrink = !fr.is_finite();
        if !shrink {
            if fr > best.1 {
                let xe = toward(&xr, params.expansion);
                let fe = eval(&xe);
                simplex[N] = if fe > fr { (xe, fe) } else { (xr, fr) };
            } else if fr > second_worst {
                simplex[N] = (xr, fr);
            } else if fr > worst.1 {
                let xc = toward(&xr, params.contraction);
                let fc = eval(&xc);
                if fc >= fr {
                    simplex[N] = (xc, fc);
                } else {
                    shrink = true;
                }
            } else {
                let xc = toward(&worst.0, params.contraction);
                let fc = eval(&xc);
                if fc > worst.1 {
                    simplex[N] = (xc, fc);
                } else {
                    shrink = true;
                }
            }
        }
        if shrink {
            let anchor = simplex[0].0;
            for vertex in simplex[1..].iter_mut() {
                let x: [T; N] =
                    std::array::from_fn(|j| anchor[j] + params.shrink * (vertex.0[j] - anchor[j]));
                vertex.1 = eval(&x);
                vertex.0 = x;
            }
        }
    };

    let (point, value) = simplex[0];
    Ok(SimplexOutcome {
        point,
        value,
        iterations: iteration,
        evaluations,
        stop,
        trace,
    })
}

/// Known true trajectory, for scoring candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth<T = f64> {
    pub state: ConstrainedPlatformState<T>,
    path: Vec<Vec2<T>>,
}

impl<T: Scalar> Truth<T> {
    /// Samples the true platform on its own grid, whose turn index may differ from the
    /// candidates' grid but whose sample times must match.
    pub fn new(state: ConstrainedPlatformState<T>, grid: &TimeGrid<T>) -> Result<Self> {
        Ok(Self {
            state,
            path: free_from_constrained(&state)?.trajectory(grid),
        })
    }

    pub fn path(&self) -> &[Vec2<T>] {
        &self.path
    }

    /// RSPE of a candidate state evaluated on `grid`.
    pub fn rspe(&self, candidate: &ConstrainedPlatformState<T>, grid: &TimeGrid<T>) -> Result<T> {
        if grid.len() != self.path.len() {
            return Err(Error::InvalidGrid(format!(
                "candidate grid has {} samples, truth has {}",
                grid.len(),
                self.path.len()
            )));
        }
        let path = free_from_constrained(candidate)?.trajectory(grid);
        Ok(mean_distance(&path, &self.path))
    }
}

fn mean_distance<T: Scalar>(a: &[Vec2<T>], b: &[Vec2<T>]) -> T {
    let total: T = a.iter().zip(b).map(|(p, q)| (*p - *q).norm()).sum();
    total / lit::<T>(a.len() as f64)
}

/// Time-averaged position error between two platform states on a shared grid (m).
pub fn rspe<T: Scalar>(
    candidate: &ConstrainedPlatformState<T>,
    truth: &ConstrainedPlatformState<T>,
    grid: &TimeGrid<T>,
) -> Result<T> {
    Truth::new(*truth, grid)?.rspe(candidate, grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdentifyOptions {
    /// Run the zone optimizations on the rayon pool instead of sequentially.
    pub parallel: bool,
}

/// Objective state after one trace iteration of a zone run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneTracePoint<T = f64> {
    pub iteration: usize,
    pub g: T,
    /// Present when a truth was supplied.
    pub rspe: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneResult<T = f64> {
    pub zone: Zone,
    pub state: ConstrainedPlatformState<T>,
    pub g_value: T,
    pub alpha_theta_hat: T,
    /// `F(x, a_hat) / |j_obs|_W^2` at the end of the run.
    pub residual_ratio: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
    pub trace: Vec<ZoneTracePoint<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneRun<T = f64> {
    pub zone: Zone,
    pub start: ZoneGuess<T>,
    pub outcome: Result<ZoneResult<T>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// The identified trajectory changes velocity orthogonally to the target track,
    /// so a second constant-speed trajectory explains the data equally well.
    pub stealthy: bool,
    /// Some zone ended with a negative least-squares `alpha_theta`.
    pub negative_alpha: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationResult<T = f64> {
    pub best_state: ConstrainedPlatformState<T>,
    pub alpha_theta_hat: T,
    pub g_best: T,
    pub residual_ratio: T,
    pub winner: Zone,
    pub zones: Vec<ZoneRun<T>>,
    pub diagnostics: Diagnostics,
}

impl<T: Scalar> IdentificationResult<T> {
    pub fn winning_run(&self) -> &ZoneResult<T> {
        self.zones
            .iter()
            .find(|z| z.zone == self.winner)
            .and_then(|z| z.outcome.as_ref().ok())
            .expect("winner has a successful run")
    }
}

fn run_zone<T: Scalar>(
    obs: &ObservedProducts<T>,
    start: &ZoneGuess<T>,
    params: &SimplexParams<T>,
    truth: Option<&Truth<T>>,
) -> Result<ZoneResult<T>> {
    let norm = obs.norm_squared();
    let objective = |p: &[T; 5]| {
        ConstrainedPlatformState::from_params(*p)
            .and_then(|x| obs.evaluate(&x))
            .map_or(T::nan(), |terms| -terms.residual / norm)
    };
    let steps = params.steps_for(start.r1, start.rn);
    let outcome = nelder_mead_maximize(objective, start.state.params(), steps, params)?;

    let grid = obs.grid();
    let mut trace = Vec::with_capacity(outcome.trace.len());
    let mut last: Option<([T; 5], ZoneTracePoint<T>)> = None;
    for tp in &outcome.trace {
        let point = match &last {
            Some((p, prev)) if *p == tp.point => ZoneTracePoint {
                iteration: tp.iteration,
                ..*prev
            },
            _ => {
                let x = ConstrainedPlatformState::from_params(tp.point)?;
                ZoneTracePoint {
                    iteration: tp.iteration,
                    g: obs.evaluate(&x)?.g,
                    rspe: truth.map(|t| t.rspe(&x, grid)).transpose()?,
                }
            }
        };
        trace.push(point);
        last = Some((tp.point, point));
    }

    let state = ConstrainedPlatformState::from_params(outcome.point)?;
    let terms = obs.evaluate(&state)?;
    Ok(ZoneResult {
        zone: start.zone,
        state,
        g_value: terms.g,
        alpha_theta_hat: terms.alpha_hat,
        residual_ratio: terms.residual / norm,
        iterations: outcome.iterations,
        evaluations: outcome.evaluations,
        stop: outcome.stop,
        trace,
    })
}

/// Optimizes from every zone guess and keeps the best result.
pub fn identify<T: Scalar>(
    obs: &ObservedProducts<T>,
    guesses: &GuessSet<T>,
    params: &SimplexParams<T>,
    truth: Option<&Truth<T>>,
    options: IdentifyOptions,
) -> Result<IdentificationResult<T>> {
    if guesses.is_empty() {
        return Err(Error::NoGuesses);
    }
    params.validate()?;
    let run = |start: &ZoneGuess<T>| ZoneRun {
        zone: start.zone,
        start: *start,
        outcome: run_zone(obs, start, params, truth),
    };
    let zones: Vec<ZoneRun<T>> = if options.parallel {
        guesses.zones.par_iter().map(run).collect()
    } else {
        guesses.zones.iter().map(run).collect()
    };

    // Smallest residual wins; zones are in A, B, C order and a strict comparison keeps the first tie.
    let mut best: Option<&ZoneResult<T>> = None;
    for z in &zones {
        if let Ok(r) = &z.outcome {
            if best.is_none_or(|b| r.residual_ratio < b.residual_ratio) {
                best = Some(r);
            }
        }
    }
    let Some(best) = best else {
        return Err(Error::AllZonesFailed(
            zones
                .iter()
                .filter_map(|z| {
                    z.outcome
                        .as_ref()
                        .err()
                        .map(|e| (z.zone.to_string(), Box::new(e.clone())))
                })
                .collect(),
        ));
    };

    let mut diagnostics = Diagnostics::default();
    for z in &zones {
        match &z.outcome {
            Ok(r) if r.alpha_theta_hat < T::zero() => {
                diagnostics.negative_alpha = true;
                diagnostics
                    .warnings
                    .push(format!("zone {}: negative alpha_theta estimate", z.zone));
            }
            Ok(r) if r.stop == StopReason::MaxIterations => diagnostics
                .warnings
                .push(format!("zone {}: iteration budget exhausted", z.zone)),
            Ok(_) => {}
            Err(e) => diagnostics.warnings.push(format!("zone {}: {e}", z.zone)),
        }
    }
    let free = free_from_constrained(&best.state)?;
    let v_t = obs.target().velocity(obs.grid());
    diagnostics.stealthy = is_stealthy(&free, v_t, lit(DEFAULT_STEALTH_TOL));
    if diagnostics.stealthy {
        diagnostics
            .warnings
            .push("identified trajectory is stealthy; the solution is not unique".to_string());
    }
    if best.residual_ratio > tolerance::<T>(EXACT_MATCH_RATIO) {
        diagnostics.warnings.push(format!(
            "residual ratio {:e} exceeds {EXACT_MATCH_RATIO:e}",
            to_f64(best.residual_ratio)
        ));
    }

    Ok(IdentificationResult {
        best_state: best.state,
        alpha_theta_hat: best.alpha_theta_hat,
        g_best: best.g_value,
        residual_ratio: best.residual_ratio,
        winner: best.zone,
        diagnostics,
        zones,
    })
}

/// How the initializer is configured for each identification run of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessConfig<T = f64> {
    pub alpha_min: T,
    pub alpha_max: T,
    pub n_theta: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow<T = f64> {
    pub k: usize,
    /// Smallest RSPE over the zone outputs, when a truth was supplied.
    pub rspe: Option<T>,
    pub g_best: Option<T>,
    pub error: Option<String>,
}

/// Runs the full pipeline once per candidate turn index, in ascending order of `k`.
pub fn tk_sensitivity<T: Scalar>(
    obs: &ObservedProducts<T>,
    k_candidates: &[usize],
    guess: GuessConfig<T>,
    params: &SimplexParams<T>,
    truth: Option<&Truth<T>>,
    options: IdentifyOptions,
) -> Vec<SensitivityRow<T>> {
    let mut ks = k_candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let one = |k: usize| -> SensitivityRow<T> {
        let run = || -> Result<(T, Option<T>)> {
            let obs_k = obs.with_turn(k)?;
            let guesses = zone_guesses(&obs_k, guess.alpha_min, guess.alpha_max, guess.n_theta)?;
            let result = identify(&obs_k, &guesses, params, None, options)?;
            let rspe = match truth {
                Some(t) => {
                    let mut best: Option<T> = None;
                    for r in result.zones.iter().filter_map(|z| z.outcome.as_ref().ok()) {
                        let e = t.rspe(&r.state, obs_k.grid())?;
                        best = Some(best.map_or(e, |b| b.min(e)));
                    }
                    best
                }
                None => None,
            };
            Ok((result.g_best, rspe))
        };
        match run() {
            Ok((g, rspe)) => SensitivityRow {
                k,
                rspe,
                g_best: Some(g),
                error: None,
            },
            Err(e) => SensitivityRow {
                k,
                rspe: None,
                g_best: None,
                error: Some(e.to_string()),
            },
        }
    };
    if options.parallel {
        ks.par_iter().map(|&k| one(k)).collect()
    } else {
        ks.iter().map(|&k| one(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fim::synthesize_observed;
    use crate::motion::TargetState;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn scenario(phi1: f64) -> (ObservedProducts, ConstrainedPlatformState) {
        let grid = TimeGrid::uniform(0.0, 4.0, 201, 101).unwrap();
        let xt = TargetState::from_velocity(Vec2::new(15e3, 35e3), Vec2::new(-10.0, 5.0), &grid)
            .unwrap();
        let truth = ConstrainedPlatformState::new(1e4, 2e4, 7.1, phi1, FRAC_PI_4).unwrap();
        let j = synthesize_observed(&xt, &truth, &grid, 2658.0).unwrap();
        (ObservedProducts::new(&j, xt, grid).unwrap(), truth)
    }

    #[test]
    fn paraboloid_converges() {
        let c = [3.0, -2.0, 0.5];
        let f = |x: &[f64; 3]| -x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let out = nelder_mead_maximize(f, [0.0; 3], [1.0; 3], &SimplexParams::default()).unwrap();
        for (x, c) in out.point.iter().zip(c) {
            assert!((x - c).abs() < 1e-6);
        }
        assert!(out.value >= f(&[0.0; 3]));
        assert!(out.trace.windows(2).all(|w| w[1].value >= w[0].value));
        assert_eq!(out.trace[0].iteration, 0);
        assert_eq!(out.trace.len(), out.iterations + 1);
    }

    #[test]
    fn budget_is_respected() {
        let params = SimplexParams {
            max_iterations: 7,
            ..SimplexParams::default()
        };
        let out = nelder_mead_maximize(
            |x: &[f64; 2]| -(x[0] * x[0] + 10.0 * x[1] * x[1]),
            [5.0, 5.0],
            [1.0; 2],
            &params,
        )
        .unwrap();
        assert_eq!(out.stop, StopReason::MaxIterations);
        assert_eq!(out.iterations, 7);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let r = nelder_mead_maximize(
            |_: &[f64; 2]| f64::NAN,
            [0.0; 2],
            [1.0; 2],
            &SimplexParams::default(),
        );
        assert!(matches!(r, Err(Error::ObjectiveFailure(_))));
    }

    #[test]
    fn non_finite_region_is_avoided() {
        // Undefined for x < -1, next to the maximum at (-0.8, -0.2).
        let mut undefined_hits = 0;
        let f = |x: &[f64; 2]| {
            if x[0] < -1.0 {
                undefined_hits += 1;
                f64::NAN
            } else {
                -((x[0] + 0.8).powi(2) + 2.0 * (x[1] + 0.2).powi(2))
            }
        };
        let out =
            nelder_mead_maximize(f, [0.5, 0.5], [0.5, 0.5], &SimplexParams::default()).unwrap();
        assert!(
            (out.point[0] + 0.8).abs() < 1e-6 && (out.point[1] + 0.2).abs() < 1e-6,
            "{out:?}"
        );
        assert!(out.trace.windows(2).all(|w| w[1].value >= w[0].value));
        assert!(undefined_hits > 0);
    }

    #[test]
    fn param_validation() {
        let ok = SimplexParams::<f64>::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SimplexParams {
                reflection: 0.0,
                ..ok
            },
            SimplexParams {
                expansion: 0.9,
                ..ok
            },
            SimplexParams {
                contraction: 1.0,
                ..ok
            },
            SimplexParams { shrink: 0.0, ..ok },
            SimplexParams {
                max_iterations: 0,
                ..ok
            },
            SimplexParams {
                initial_steps: Some([0.0; 5]),
                ..ok
            },
        ] {
            assert!(matches!(
                bad.validate(),
                Err(Error::InvalidSimplexParams(_))
            ));
        }
        assert_eq!(
            ok.steps_for(1000.0, 2000.0),
            [100.0, 100.0, 0.5, 0.05, 0.05]
        );
    }

    #[test]
    fn truth_is_a_fixed_point() {
        let (obs, truth) = scenario(-FRAC_PI_4);
        let g0 = obs.evaluate(&truth).unwrap().g;
        let start = ZoneGuess {
            zone: Zone::A,
            waypoints: crate::motion::waypoints_from_state(&truth, obs.grid()).unwrap(),
            state: truth,
            alpha_theta: 2658.0,
            m: 1,
            g: 1,
            g_value: g0,
            r1: 15000.0,
            rn: 15000.0,
        };
        let r = run_zone(&obs, &start, &SimplexParams::default(), None).unwrap();
        assert_relative_eq!(r.g_value, g0, max_relative = 1e-12);
        assert!(rspe(&r.state, &truth, obs.grid()).unwrap() < 1e-3);
    }

    #[test]
    fn rspe_examples() {
        let grid = TimeGrid::uniform(0.0, 4.0, 201, 101).unwrap();
        let truth =
            ConstrainedPlatformState::new(1e4, 2e4, 7.1, 3.0 * PI / 4.0, FRAC_PI_4).unwrap();
        assert_eq!(rspe(&truth, &truth, &grid).unwrap(), 0.0);
        let shifted = ConstrainedPlatformState {
            xi: truth.xi + 37.5,
            ..truth
        };
        assert_relative_eq!(
            rspe(&shifted, &truth, &grid).unwrap(),
            37.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn identifies_both_scenarios() {
        for phi1 in [3.0 * PI / 4.0, -FRAC_PI_4] {
            let (obs, truth) = scenario(phi1);
            let guesses = zone_guesses(&obs, 532.2449, 3206.5, 5).unwrap();
            let t = Truth::new(truth, obs.grid()).unwrap();
            let r = identify(
                &obs,
                &guesses,
                &SimplexParams::default(),
                Some(&t),
                IdentifyOptions::default(),
            )
            .unwrap();
            let e = rspe(&r.best_state, &truth, obs.grid()).unwrap();
            assert!(e < 1.0, "rspe {e}");
            assert!(r.residual_ratio < 1e-8);
            assert_relative_eq!(r.alpha_theta_hat, 2658.0, max_relative = 1e-3);
            assert!(r.g_best <= obs.norm_squared() * (1.0 + 1e-9));
            assert!(!r.diagnostics.stealthy);

            let run = r.winning_run();
            let first = run.trace[0].rspe.unwrap();
            let last = run.trace.last().unwrap().rspe.unwrap();
            assert!(first > last && last < 1.0);
            assert_relative_eq!(
                guesses.zone(r.winner).unwrap().state.xi,
                run_start_xi(&r),
                max_relative = 0.0
            );
        }
    }

    fn run_start_xi(r: &IdentificationResult) -> f64 {
        r.zones
            .iter()
            .find(|z| z.zone == r.winner)
            .unwrap()
            .start
            .state
            .xi
    }

    #[test]
    fn parallel_matches_sequential() {
        let (obs, truth) = scenario(3.0 * PI / 4.0);
        let guesses = zone_guesses(&obs, 532.2449, 3206.5, 5).unwrap();
        let t = Truth::new(truth, obs.grid()).unwrap();
        let params = SimplexParams::default();
        let a = identify(
            &obs,
            &guesses,
            &params,
            Some(&t),
            IdentifyOptions { parallel: false },
        )
        .unwrap();
        let b = identify(
            &obs,
            &guesses,
            &params,
            Some(&t),
            IdentifyOptions { parallel: true },
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn self_consistent_replay() {
        let (obs, _) = scenario(-FRAC_PI_4);
        let guesses = zone_guesses(&obs, 532.2449, 3206.5, 5).unwrap();
        let r = identify(
            &obs,
            &guesses,
            &SimplexParams::default(),
            None,
            IdentifyOptions::default(),
        )
        .unwrap();
        let j = synthesize_observed(obs.target(), &r.best_state, obs.grid(), 1234.5).unwrap();
        let replay = ObservedProducts::new(&j, *obs.target(), obs.grid().clone()).unwrap();
        let terms = replay.evaluate(&r.best_state).unwrap();
        assert!(terms.residual / replay.norm_squared() < 1e-20);
        assert_relative_eq!(terms.alpha_hat, 1234.5, max_relative = 1e-12);
    }

    #[test]
    fn empty_guesses_are_rejected() {
        let (obs, _) = scenario(-FRAC_PI_4);
        let empty = GuessSet {
            zones: vec![],
            candidates: vec![],
            split: None,
        };
        assert_eq!(
            identify(
                &obs,
                &empty,
                &SimplexParams::default(),
                None,
                IdentifyOptions::default()
            ),
            Err(Error::NoGuesses)
        );
    }

    #[test]
    fn sweep_extremes_complete() {
        let (obs, truth) = scenario(-FRAC_PI_4);
        let t = Truth::new(truth, obs.grid()).unwrap();
        let params = SimplexParams {
            max_iterations: 200,
            ..SimplexParams::default()
        };
        let cfg = GuessConfig {
            alpha_min: 532.2449,
            alpha_max: 3206.5,
            n_theta: 5,
        };
        let rows = tk_sensitivity(
            &obs,
            &[200, 2, 1, 201],
            cfg,
            &params,
            Some(&t),
            IdentifyOptions::default(),
        );
        let ks: Vec<_> = rows.iter().map(|r| r.k).collect();
        assert_eq!(ks, [1, 2, 200, 201]);
        assert!(rows[0].error.is_some() && rows[3].error.is_some());
        for r in &rows[1..3] {
            assert!(r.error.is_some() || r.rspe.is_some());
        }
    }
}
