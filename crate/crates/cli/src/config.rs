//! Scenario configuration: a TOML file written with dotted keys, one `section.key = value`
//! per line. The accepted keys are listed in the README.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use platform_ident::{
    n_theta_min, ConstrainedPlatformState, GuessConfig, SimplexParams, TargetState, TimeGrid, Vec2,
};
use serde::Deserialize;

/// Relative slack when checking that the period divides the duration.
const GRID_RTOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub target: TargetConfig,
    /// Ground truth, needed by `synth` and for scoring; absent for a pure interception run.
    #[serde(default)]
    pub platform: Option<PlatformConfig>,
    pub eavesdropper: EavesdropperConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub start: f64,
    pub duration: f64,
    pub period: f64,
    /// 1-based sample index of the true turn.
    pub turn_index: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub xi: f64,
    pub eta: f64,
    pub v_xi: f64,
    pub v_eta: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformConfig {
    pub xi: f64,
    pub eta: f64,
    pub speed: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// Give either `alpha_theta` or both `q2` and `sigma_theta_deg`.
    #[serde(default)]
    pub alpha_theta: Option<f64>,
    #[serde(default)]
    pub q2: Option<f64>,
    #[serde(default)]
    pub sigma_theta_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EavesdropperConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Defaults to the smallest count that brackets the true value.
    #[serde(default)]
    pub n_theta: Option<usize>,
    /// When false, `identify` searches the turn index over the sweep range.
    #[serde(default = "default_true")]
    pub k_known: bool,
    #[serde(default)]
    pub k_sweep_lo: Option<usize>,
    #[serde(default)]
    pub k_sweep_hi: Option<usize>,
    #[serde(default)]
    pub k_sweep_step: Option<usize>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_iterations: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    /// Initial simplex offsets; all three or none.
    pub step_position: Option<f64>,
    pub step_speed: Option<f64>,
    pub step_angle: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let p = SimplexParams::<f64>::default();
        Self {
            reflection: p.reflection,
            expansion: p.expansion,
            contraction: p.contraction,
            shrink: p.shrink,
            max_iterations: p.max_iterations,
            f_tol: p.f_tol,
            x_tol: p.x_tol,
            step_position: None,
            step_speed: None,
            step_angle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Inclusive range of candidate turn indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KSweep {
    pub lo: usize,
    pub hi: usize,
    pub step: usize,
}

impl KSweep {
    pub fn indices(&self) -> Vec<usize> {
        (self.lo..=self.hi).step_by(self.step).collect()
    }
}

impl std::str::FromStr for KSweep {
    type Err = String;

    /// Parses `LO:HI` or `LO:HI:STEP`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(format!("expected LO:HI[:STEP], got {s:?}"));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad sweep bound {p:?}: {e}"))
        };
        let sweep = KSweep {
            lo: num(parts[0])?,
            hi: num(parts[1])?,
            step: parts.get(2).map_or(Ok(1), |p| num(p))?,
        };
        if sweep.step == 0 || sweep.lo > sweep.hi {
            return Err(format!("empty sweep {s:?}"));
        }
        Ok(sweep)
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses and validates a configuration held in memory.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn finite(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, "must be finite"))
    }
}

fn positive(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.sample_count()?;
        let k = self.grid.turn_index;
        if k <= 1 || k >= n {
            return Err(invalid(
                "grid.turn_index",
                format!("{k} must satisfy 1 < k < {n}"),
            ));
        }

        let t = &self.target;
        finite("target.xi", t.xi)?;
        finite("target.eta", t.eta)?;
        finite("target.v_xi", t.v_xi)?;
        finite("target.v_eta", t.v_eta)?;
        if t.v_xi == 0.0 && t.v_eta == 0.0 {
            return Err(invalid("target.v_xi", "target velocity must be non-zero"));
        }

        if let Some(p) = &self.platform {
            finite("platform.xi", p.xi)?;
            finite("platform.eta", p.eta)?;
            positive("platform.speed", p.speed)?;
            finite("platform.phi1", p.phi1)?;
            finite("platform.phi2", p.phi2)?;
            self.true_alpha_theta()?;
        }

        let e = &self.eavesdropper;
        positive("eavesdropper.alpha_min", e.alpha_min)?;
        positive("eavesdropper.alpha_max", e.alpha_max)?;
        if !(e.alpha_min < e.alpha_max) {
            return Err(invalid(
                "eavesdropper.alpha_max",
                format!("must exceed alpha_min = {}", e.alpha_min),
            ));
        }
        if let Some(m) = e.n_theta {
            if m < 3 {
                return Err(invalid("eavesdropper.n_theta", "must be at least 3"));
            }
        }
        let s = self.k_sweep();
        if s.step == 0 {
            return Err(invalid("eavesdropper.k_sweep_step", "must be at least 1"));
        }
        if s.lo <= 1 || s.lo > s.hi {
            return Err(invalid(
                "eavesdropper.k_sweep_lo",
                format!("must satisfy 1 < lo <= hi, got {}..{}", s.lo, s.hi),
            ));
        }
        if s.hi >= n {
            return Err(invalid(
                "eavesdropper.k_sweep_hi",
                format!("must be below the sample count {n}"),
            ));
        }

        let o = &self.optimizer;
        let steps = [o.step_position, o.step_speed, o.step_angle];
        if steps.iter().any(Option::is_some) && !steps.iter().all(Option::is_some) {
            return Err(invalid(
                "optimizer.step_position",
                "step_position, step_speed and step_angle must be given together",
            ));
        }
        for (field, v) in [
            ("optimizer.step_position", o.step_position),
            ("optimizer.step_speed", o.step_speed),
            ("optimizer.step_angle", o.step_angle),
        ] {
            if let Some(v) = v {
                positive(field, v)?;
            }
        }
        self.simplex_params()
            .validate()
            .map_err(|e| invalid("optimizer", e.to_string()))?;
        Ok(())
    }

    /// Number of samples implied by the duration and period.
    pub fn sample_count(&self) -> Result<usize, ConfigError> {
        let g = &self.grid;
        finite("grid.start", g.start)?;
        positive("grid.duration", g.duration)?;
        positive("grid.period", g.period)?;
        let steps = (g.duration / g.period).round();
        if (steps * g.period - g.duration).abs() > GRID_RTOL * g.duration {
            return Err(invalid(
                "grid.period",
                format!("{} does not divide the duration {}", g.period, g.duration),
            ));
        }
        if steps < 2.0 {
            return Err(invalid("grid.period", "grid needs at least 3 samples"));
        }
        Ok(steps as usize + 1)
    }

    pub fn grid(&self) -> TimeGrid {
        let n = self.sample_count().expect("validated config");
        TimeGrid::uniform(self.grid.start, self.grid.period, n, self.grid.turn_index)
            .expect("validated config")
    }

    pub fn target_state(&self, grid: &TimeGrid) -> TargetState {
        let t = &self.target;
        TargetState::from_velocity(Vec2::new(t.xi, t.eta), Vec2::new(t.v_xi, t.v_eta), grid)
            .expect("validated config")
    }

    pub fn true_platform(&self) -> Option<ConstrainedPlatformState> {
        self.platform.as_ref().map(|p| {
            ConstrainedPlatformState::new(p.xi, p.eta, p.speed, p.phi1, p.phi2)
                .expect("validated config")
        })
    }

    /// `alpha_theta` as given, or `q2 / sigma^2` with sigma converted to radians.
    pub fn true_alpha_theta(&self) -> Result<f64, ConfigError> {
        let Some(p) = &self.platform else {
            return Err(invalid("platform", "section is required for synthesis"));
        };
        match (p.alpha_theta, p.q2, p.sigma_theta_deg) {
            (Some(a), None, None) => positive("platform.alpha_theta", a),
            (None, Some(q2), Some(sigma)) => {
                positive("platform.q2", q2)?;
                let sigma = positive("platform.sigma_theta_deg", sigma)?.to_radians();
                Ok(q2 / (sigma * sigma))
            }
            (Some(_), _, _) => Err(invalid(
                "platform.alpha_theta",
                "give either alpha_theta or q2 with sigma_theta_deg, not both",
            )),
            (None, None, _) => Err(invalid(
                "platform.alpha_theta",
                "missing; give alpha_theta or q2 with sigma_theta_deg",
            )),
            (None, Some(_), None) => Err(invalid("platform.sigma_theta_deg", "missing")),
        }
    }

    pub fn guess_config(&self) -> GuessConfig {
        let e = &self.eavesdropper;
        let n_theta = e.n_theta.unwrap_or_else(|| {
            n_theta_min(e.alpha_min, e.alpha_max)
                .expect("validated config")
                .max(3)
        });
        GuessConfig {
            alpha_min: e.alpha_min,
            alpha_max: e.alpha_max,
            n_theta,
        }
    }

    /// Sweep from the config, defaulting to every admissible turn index.
    pub fn k_sweep(&self) -> KSweep {
        let e = &self.eavesdropper;
        let n = self.sample_count().unwrap_or(3);
        KSweep {
            lo: e.k_sweep_lo.unwrap_or(2),
            hi: e.k_sweep_hi.unwrap_or(n.saturating_sub(1)),
            step: e.k_sweep_step.unwrap_or(1),
        }
    }

    pub fn simplex_params(&self) -> SimplexParams {
        let o = &self.optimizer;
        let initial_steps = match (o.step_position, o.step_speed, o.step_angle) {
            (Some(p), Some(s), Some(a)) => Some([p, p, s, a, a]),
            _ => None,
        };
        SimplexParams {
            reflection: o.reflection,
            expansion: o.expansion,
            contraction: o.contraction,
            shrink: o.shrink,
            max_iterations: o.max_iterations,
            f_tol: o.f_tol,
            x_tol: o.x_tol,
            initial_steps,
        }
    }
}

/// Writes a configuration back in the dotted-key form that [`parse_config`] reads.
pub fn emit(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        writeln!(out, "{key} = {value}").expect("writing to a String");
    };
    // Debug formatting of a finite f64 is the shortest exact decimal and valid TOML.
    let f = |v: f64| format!("{v:?}");
    let int = |v: usize| v.to_string();

    let g = &cfg.grid;
    put("grid.start", f(g.start));
    put("grid.duration", f(g.duration));
    put("grid.period", f(g.period));
    put("grid.turn_index", int(g.turn_index));

    let t = &cfg.target;
    put("target.xi", f(t.xi));
    put("target.eta", f(t.eta));
    put("target.v_xi", f(t.v_xi));
    put("target.v_eta", f(t.v_eta));

    if let Some(p) = &cfg.platform {
        put("platform.xi", f(p.xi));
        put("platform.eta", f(p.eta));
        put("platform.speed", f(p.speed));
        put("platform.phi1", f(p.phi1));
        put("platform.phi2", f(p.phi2));
        if let Some(a) = p.alpha_theta {
            put("platform.alpha_theta", f(a));
        }
        if let Some(q2) = p.q2 {
            put("platform.q2", f(q2));
        }
        if let Some(s) = p.sigma_theta_deg {
            put("platform.sigma_theta_deg", f(s));
        }
    }

    let e = &cfg.eavesdropper;
    put("eavesdropper.alpha_min", f(e.alpha_min));
    put("eavesdropper.alpha_max", f(e.alpha_max));
    if let Some(m) = e.n_theta {
        put("eavesdropper.n_theta", int(m));
    }
    put("eavesdropper.k_known", e.k_known.to_string());
    for (key, v) in [
        ("eavesdropper.k_sweep_lo", e.k_sweep_lo),
        ("eavesdropper.k_sweep_hi", e.k_sweep_hi),
        ("eavesdropper.k_sweep_step", e.k_sweep_step),
    ] {
        if let Some(v) = v {
            put(key, int(v));
        }
    }

    let o = &cfg.optimizer;
    put("optimizer.reflection", f(o.reflection));
    put("optimizer.expansion", f(o.expansion));
    put("optimizer.contraction", f(o.contraction));
    put("optimizer.shrink", f(o.shrink));
    put("optimizer.max_iterations", int(o.max_iterations));
    put("optimizer.f_tol", f(o.f_tol));
    put("optimizer.x_tol", f(o.x_tol));
    for (key, v) in [
        ("optimizer.step_position", o.step_position),
        ("optimizer.step_speed", o.step_speed),
        ("optimizer.step_angle", o.step_angle),
    ] {
        if let Some(v) = v {
            put(key, f(v));
        }
    }

    let dir = toml::Value::String(cfg.output.dir.to_string_lossy().into_owned());
    put("output.dir", dir.to_string());
    out
}
