//! The subcommands, as library functions writing their CSV outputs to a directory.

use std::path::{Path, PathBuf};

use platform_ident::{
    free_from_constrained, identify, is_stealthy, synthesize_observed, tk_sensitivity,
    zone_guesses, Error, Fim, GuessSet, IdentificationResult, IdentifyOptions, ObservedProducts,
    SensitivityRow, TimeGrid, Truth, ZoneRun, DEFAULT_STEALTH_TOL,
};

use crate::config::{parse_config, ConfigError, KSweep, ScenarioConfig};
use crate::files::{self, num, opt_num, write_csv};

/// Condition number above which a synthesized FIM is reported as unusable.
pub const SINGULAR_WARNING_CONDITION: f64 = 1e12;

/// Scenario configurations shipped with the binary, by name.
pub const BUNDLED: [(&str, &str); 2] = [
    ("scenario_i", include_str!("../scenarios/scenario_i.toml")),
    ("scenario_ii", include_str!("../scenarios/scenario_ii.toml")),
];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("synthesis failed: {0}")]
    Synthesis(Error),
    #[error("identification failed: {0}")]
    Identification(String),
}

impl CliError {
    /// 2 for identification failures, 1 for everything the user has to fix in the inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Identification(_) => 2,
            _ => 1,
        }
    }
}

/// How many worker threads to use; `None` or `Some(1)` runs everything sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
}

impl RunOptions {
    fn identify_options(&self) -> IdentifyOptions {
        IdentifyOptions {
            parallel: self.threads.is_some_and(|n| n > 1),
        }
    }

    /// Runs `f` on a dedicated pool of the requested size when parallelism is on.
    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
        match self.threads {
            Some(0) => Err(CliError::Input(
                "--parallel needs at least one thread".into(),
            )),
            Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map(|pool| pool.install(f))
                .map_err(|e| CliError::Input(format!("cannot start thread pool: {e}"))),
            _ => Ok(f()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthReport {
    pub fim: Fim,
    pub alpha_theta: f64,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Computes the observed FIM at the true platform and writes `jobs.csv` and `target.csv`.
pub fn run_synth(cfg: &ScenarioConfig, out: &Path) -> Result<SynthReport, CliError> {
    let grid = cfg.grid();
    let target = cfg.target_state(&grid);
    let Some(truth) = cfg.true_platform() else {
        return Err(ConfigError::Invalid {
            field: "platform",
            reason: "section is required for synthesis".into(),
        }
        .into());
    };
    let alpha_theta = cfg.true_alpha_theta()?;
    let fim =
        synthesize_observed(&target, &truth, &grid, alpha_theta).map_err(CliError::Synthesis)?;

    let mut warnings = Vec::new();
    let condition = fim.condition_estimate();
    if !(condition <= SINGULAR_WARNING_CONDITION) {
        warnings.push(format!(
            "observed FIM is numerically singular (condition {condition:.3e}); \
             identification will not succeed"
        ));
    }
    let free = free_from_constrained(&truth).map_err(CliError::Synthesis)?;
    if is_stealthy(&free, target.velocity(&grid), DEFAULT_STEALTH_TOL) {
        warnings.push("true trajectory is stealthy; it cannot be identified uniquely".into());
    }

    let files = vec![
        files::write_jobs(out, &fim)?,
        files::write_target(out, &target, &grid)?,
    ];
    Ok(SynthReport {
        fim,
        alpha_theta,
        files,
        warnings,
    })
}

/// Loads `jobs.csv` and `target.csv`, using the configured turn index.
pub fn load_intercepted(cfg: &ScenarioConfig, dir: &Path) -> Result<ObservedProducts, CliError> {
    let j_obs = files::read_jobs(dir)?;
    let (times, target) = files::read_target(dir)?;
    let expected = cfg.grid();
    if times.len() != expected.len() {
        return Err(CliError::Input(format!(
            "{}: {} samples, but the configured grid has {}",
            dir.join(files::TARGET_CSV).display(),
            times.len(),
            expected.len()
        )));
    }
    let grid = TimeGrid::new(times, cfg.grid.turn_index)
        .map_err(|e| CliError::Input(format!("{}: {e}", dir.join(files::TARGET_CSV).display())))?;
    ObservedProducts::from_vec9(j_obs, target, grid)
        .map_err(|e| CliError::Input(format!("{}: {e}", dir.join(files::JOBS_CSV).display())))
}

fn truth_for(cfg: &ScenarioConfig) -> Result<Option<Truth>, CliError> {
    cfg.true_platform()
        .map(|s| Truth::new(s, &cfg.grid()))
        .transpose()
        .map_err(CliError::Synthesis)
}

#[derive(Debug, Clone)]
pub struct IdentifyReport {
    /// Turn index used, given or searched.
    pub k: usize,
    pub result: IdentificationResult,
    pub guesses: GuessSet,
    pub rspe: Option<f64>,
    pub files: Vec<PathBuf>,
}

/// Identifies the platform from intercepted products and writes the result files.
pub fn run_identify(
    cfg: &ScenarioConfig,
    input: &Path,
    out: &Path,
    options: RunOptions,
) -> Result<IdentifyReport, CliError> {
    let obs = load_intercepted(cfg, input)?;
    identify_observed(cfg, &obs, out, options)
}

/// [`run_identify`] for products already in memory.
pub fn identify_observed(
    cfg: &ScenarioConfig,
    obs: &ObservedProducts,
    out: &Path,
    options: RunOptions,
) -> Result<IdentifyReport, CliError> {
    let truth = truth_for(cfg)?;
    let guess = cfg.guess_config();
    let params = cfg.simplex_params();
    let opts = options.identify_options();

    let k = if cfg.eavesdropper.k_known {
        cfg.grid.turn_index
    } else {
        let ks = cfg.k_sweep().indices();
        let rows = options.install(|| tk_sensitivity(obs, &ks, guess, &params, None, opts))?;
        best_turn(&rows).ok_or_else(|| {
            CliError::Identification("no turn index in the sweep produced a result".into())
        })?
    };
    let obs = obs
        .with_turn(k)
        .map_err(|e| CliError::Identification(e.to_string()))?;
    let guesses = zone_guesses(&obs, guess.alpha_min, guess.alpha_max, guess.n_theta)
        .map_err(|e| CliError::Identification(format!("initial guesses: {e}")))?;

    let result =
        match options.install(|| identify(&obs, &guesses, &params, truth.as_ref(), opts))? {
            Ok(r) => r,
            Err(Error::AllZonesFailed(failures)) => {
                let rows = failures.iter().map(|(zone, e)| {
                    let mut row = vec![zone.clone(), "failed".into(), e.to_string()];
                    row.resize(ZONES_HEADER.len(), String::new());
                    row
                });
                write_csv(&out.join(files::ZONES_CSV), &ZONES_HEADER, rows)?;
                let detail: Vec<String> = failures
                    .iter()
                    .map(|(z, e)| format!("zone {z}: {e}"))
                    .collect();
                return Err(CliError::Identification(detail.join("; ")));
            }
            Err(e) => return Err(CliError::Identification(e.to_string())),
        };

    let grid = obs.grid();
    let rspe = truth
        .as_ref()
        .map(|t| t.rspe(&result.best_state, grid))
        .transpose()
        .map_err(|e| CliError::Identification(e.to_string()))?;
    let files = write_identify_outputs(out, k, &obs, &guesses, &result, truth.as_ref(), rspe)?;
    Ok(IdentifyReport {
        k,
        result,
        guesses,
        rspe,
        files,
    })
}

/// Largest `G_best` over the sweep; the first such row wins ties.
fn best_turn(rows: &[SensitivityRow]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for row in rows {
        if let Some(g) = row.g_best {
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((row.k, g));
            }
        }
    }
    best.map(|(k, _)| k)
}

pub const RESULT_HEADER: [&str; 12] = [
    "zone",
    "k",
    "xi",
    "eta",
    "speed",
    "phi1",
    "phi2",
    "alpha_theta_hat",
    "g_best",
    "residual_ratio",
    "rspe",
    "stealthy",
];
pub const ZONES_HEADER: [&str; 15] = [
    "zone",
    "status",
    "error",
    "xi",
    "eta",
    "speed",
    "phi1",
    "phi2",
    "alpha_theta_hat",
    "g_value",
    "residual_ratio",
    "rspe",
    "iterations",
    "evaluations",
    "stop",
];
pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "xi_true", "eta_true", "xi_est", "eta_est"];
pub const RSPE_TRACE_HEADER: [&str; 4] = ["zone", "iteration", "g", "rspe"];
pub const GUESSES_HEADER: [&str; 18] = [
    "zone",
    "m",
    "g",
    "alpha_theta",
    "g_value",
    "xi_1",
    "eta_1",
    "xi_k",
    "eta_k",
    "xi_n",
    "eta_n",
    "speed",
    "phi1",
    "phi2",
    "r1",
    "rn",
    "rspe",
    "chord_rspe",
];
pub const SENSITIVITY_HEADER: [&str; 4] = ["k", "rspe", "g_best", "error"];

fn zone_row(run: &ZoneRun, truth: Option<&Truth>, grid: &TimeGrid) -> Vec<String> {
    match &run.outcome {
        Ok(r) => {
            let [xi, eta, speed, phi1, phi2] = r.state.params();
            let rspe = truth.and_then(|t| t.rspe(&r.state, grid).ok());
            vec![
                run.zone.to_string(),
                "ok".into(),
                String::new(),
                num(xi),
                num(eta),
                num(speed),
                num(phi1),
                num(phi2),
                num(r.alpha_theta_hat),
                num(r.g_value),
                num(r.residual_ratio),
                opt_num(rspe),
                r.iterations.to_string(),
                r.evaluations.to_string(),
                format!("{:?}", r.stop),
            ]
        }
        Err(e) => {
            let mut row = vec![run.zone.to_string(), "failed".into(), e.to_string()];
            row.resize(ZONES_HEADER.len(), String::new());
            row
        }
    }
}

fn write_identify_outputs(
    out: &Path,
    k: usize,
    obs: &ObservedProducts,
    guesses: &GuessSet,
    result: &IdentificationResult,
    truth: Option<&Truth>,
    rspe: Option<f64>,
) -> Result<Vec<PathBuf>, CliError> {
    let grid = obs.grid();
    let failed = |e: Error| CliError::Identification(e.to_string());
    let [xi, eta, speed, phi1, phi2] = result.best_state.params();

    let result_row = vec![
        result.winner.to_string(),
        k.to_string(),
        num(xi),
        num(eta),
        num(speed),
        num(phi1),
        num(phi2),
        num(result.alpha_theta_hat),
        num(result.g_best),
        num(result.residual_ratio),
        opt_num(rspe),
        result.diagnostics.stealthy.to_string(),
    ];

    let zone_rows = result.zones.iter().map(|z| zone_row(z, truth, grid));

    let estimate = free_from_constrained(&result.best_state)
        .map_err(failed)?
        .trajectory(grid);
    let trajectory_rows = grid.times().iter().enumerate().map(|(i, t)| {
        let (xt, yt) = match truth {
            Some(tr) => (num(tr.path()[i].x), num(tr.path()[i].y)),
            None => (String::new(), String::new()),
        };
        vec![num(*t), xt, yt, num(estimate[i].x), num(estimate[i].y)]
    });

    let trace_rows = result
        .zones
        .iter()
        .filter_map(|z| z.outcome.as_ref().ok())
        .flat_map(|r| {
            r.trace.iter().map(move |p| {
                vec![
                    r.zone.to_string(),
                    p.iteration.to_string(),
                    num(p.g),
                    opt_num(p.rspe),
                ]
            })
        });

    let mut guess_rows = Vec::with_capacity(guesses.zones.len());
    for z in &guesses.zones {
        let w = &z.waypoints;
        let [_, _, speed, phi1, phi2] = z.state.params();
        let (rspe, chord) = match truth {
            Some(t) => {
                let chord = platform_ident::Waypoints::new(
                    w.p1(),
                    w.p1() + (w.pn() - w.p1()) * grid.alpha(grid.turn_index()).map_err(failed)?,
                    w.pn(),
                    grid,
                )
                .ok()
                .and_then(|c| platform_ident::state_from_waypoints(&c, grid).ok())
                .and_then(|s| t.rspe(&s, grid).ok());
                (Some(t.rspe(&z.state, grid).map_err(failed)?), chord)
            }
            None => (None, None),
        };
        guess_rows.push(vec![
            z.zone.to_string(),
            z.m.to_string(),
            z.g.to_string(),
            num(z.alpha_theta),
            num(z.g_value),
            num(w.p1().x),
            num(w.p1().y),
            num(w.pk().x),
            num(w.pk().y),
            num(w.pn().x),
            num(w.pn().y),
            num(speed),
            num(phi1),
            num(phi2),
            num(z.r1),
            num(z.rn),
            opt_num(rspe),
            opt_num(chord),
        ]);
    }

    let paths = [
        files::RESULT_CSV,
        files::ZONES_CSV,
        files::TRAJECTORY_CSV,
        files::RSPE_TRACE_CSV,
        files::GUESSES_CSV,
    ]
    .map(|name| out.join(name));
    write_csv(&paths[0], &RESULT_HEADER, [result_row])?;
    write_csv(&paths[1], &ZONES_HEADER, zone_rows)?;
    write_csv(&paths[2], &TRAJECTORY_HEADER, trajectory_rows)?;
    write_csv(&paths[3], &RSPE_TRACE_HEADER, trace_rows)?;
    write_csv(&paths[4], &GUESSES_HEADER, guess_rows)?;
    Ok(paths.to_vec())
}

/// Re-runs the pipeline for every turn index of the sweep and writes `sensitivity.csv`.
pub fn run_sensitivity(
    cfg: &ScenarioConfig,
    input: &Path,
    out: &Path,
    sweep: Option<KSweep>,
    options: RunOptions,
) -> Result<Vec<SensitivityRow>, CliError> {
    let obs = load_intercepted(cfg, input)?;
    sensitivity_observed(cfg, &obs, out, sweep, options)
}

/// [`run_sensitivity`] for products already in memory.
pub fn sensitivity_observed(
    cfg: &ScenarioConfig,
    obs: &ObservedProducts,
    out: &Path,
    sweep: Option<KSweep>,
    options: RunOptions,
) -> Result<Vec<SensitivityRow>, CliError> {
    let sweep = sweep.unwrap_or_else(|| cfg.k_sweep());
    let n = obs.grid().len();
    if sweep.lo <= 1 || sweep.hi >= n {
        return Err(CliError::Input(format!(
            "k sweep {}:{} must stay within 2..={}",
            sweep.lo,
            sweep.hi,
            n - 1
        )));
    }
    let truth = truth_for(cfg)?;
    let params = cfg.simplex_params();
    let rows = options.install(|| {
        tk_sensitivity(
            obs,
            &sweep.indices(),
            cfg.guess_config(),
            &params,
            truth.as_ref(),
            options.identify_options(),
        )
    })?;
    let csv_rows = rows.iter().map(|r| {
        vec![
            r.k.to_string(),
            opt_num(r.rspe),
            opt_num(r.g_best),
            r.error.clone().unwrap_or_default(),
        ]
    });
    write_csv(
        &out.join(files::SENSITIVITY_CSV),
        &SENSITIVITY_HEADER,
        csv_rows,
    )?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub name: &'static str,
    pub dir: PathBuf,
    pub synth: SynthReport,
    pub identify: IdentifyReport,
    pub sensitivity: Vec<SensitivityRow>,
}

/// Runs synthesis, identification and the turn sweep for each bundled scenario,
/// each into its own subdirectory of `out`.
pub fn run_demo(out: &Path, options: RunOptions) -> Result<Vec<DemoReport>, CliError> {
    let mut reports = Vec::with_capacity(BUNDLED.len());
    for (name, text) in BUNDLED {
        let cfg = parse_config(text)?;
        let dir = out.join(name);
        let synth = run_synth(&cfg, &dir)?;
        let identify = run_identify(&cfg, &dir, &dir, options)?;
        let sensitivity = run_sensitivity(&cfg, &dir, &dir, None, options)?;
        reports.push(DemoReport {
            name,
            dir,
            synth,
            identify,
            sensitivity,
        });
    }
    Ok(reports)
}
