//! Flat `key = value` run configuration.
//!
//! Grammar: one `key = value` pair per line, `#` starts a comment, blank
//! lines ignored. Unknown keys and malformed values are errors naming the
//! offending field. Defaults are the nominal values used throughout
//! (`kappa = 1`, `zeta = 0.01`, a 1 kHz resonance, `|alpha| = 6e8`).

use std::path::{Path, PathBuf};

use rpf_core::model::ResonantParams;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kappa: f64,
    pub zeta: f64,
    pub omega_r_rad_s: f64,
    pub alpha_mag: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub delta_points: usize,
    pub epsilon_lo: f64,
    pub epsilon_hi: f64,
    pub epsilon_points: usize,
    /// Bode grid bounds; `None` defaults to `[omega_r/100, 100 omega_r]`.
    pub bode_lo_rad_s: Option<f64>,
    pub bode_hi_rad_s: Option<f64>,
    pub bode_points: usize,
    pub dt: f64,
    pub t_settle: f64,
    pub t_measure: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            zeta: 0.01,
            omega_r_rad_s: 1000.0 * std::f64::consts::TAU,
            alpha_mag: 6e8,
            mu1: 0.5,
            mu2: 0.0,
            delta_points: 41,
            epsilon_lo: 1e-2,
            epsilon_hi: 1e6,
            epsilon_points: 200,
            bode_lo_rad_s: None,
            bode_hi_rad_s: None,
            bode_points: 400,
            dt: 1e-8,
            t_settle: 0.05,
            t_measure: 0.5,
            seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut saw_rad_s = false;
        let mut saw_hz = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();

            fn num(key: &str, value: &str) -> Result<f64, ConfigError> {
                value
                    .parse::<f64>()
                    .map_err(|_| ConfigError(format!("field `{key}`: invalid number `{value}`")))
                    .and_then(|v| {
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(ConfigError(format!("field `{key}`: must be finite")))
                        }
                    })
            }
            fn int(key: &str, value: &str) -> Result<usize, ConfigError> {
                value.parse::<usize>().map_err(|_| {
                    ConfigError(format!("field `{key}`: invalid integer `{value}`"))
                })
            }

            match key {
                "kappa" => cfg.kappa = num(key, value)?,
                "zeta" => cfg.zeta = num(key, value)?,
                "omega_r_rad_s" => {
                    cfg.omega_r_rad_s = num(key, value)?;
                    saw_rad_s = true;
                }
                "omega_r_hz" => {
                    cfg.omega_r_rad_s = num(key, value)? * std::f64::consts::TAU;
                    saw_hz = true;
                }
                "alpha_mag" => cfg.alpha_mag = num(key, value)?,
                "mu1" => cfg.mu1 = num(key, value)?,
                "mu2" => cfg.mu2 = num(key, value)?,
                "delta_points" => cfg.delta_points = int(key, value)?,
                "epsilon_lo" => cfg.epsilon_lo = num(key, value)?,
                "epsilon_hi" => cfg.epsilon_hi = num(key, value)?,
                "epsilon_points" => cfg.epsilon_points = int(key, value)?,
                "bode_lo_rad_s" => cfg.bode_lo_rad_s = Some(num(key, value)?),
                "bode_hi_rad_s" => cfg.bode_hi_rad_s = Some(num(key, value)?),
                "bode_points" => cfg.bode_points = int(key, value)?,
                "dt" => cfg.dt = num(key, value)?,
                "t_settle" => cfg.t_settle = num(key, value)?,
                "t_measure" => cfg.t_measure = num(key, value)?,
                "seed" => {
                    cfg.seed = value.parse::<u64>().map_err(|_| {
                        ConfigError(format!("field `seed`: invalid u64 `{value}`"))
                    })?;
                }
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                other => {
                    return Err(ConfigError(format!("unknown field `{other}`")));
                }
            }
        }
        if saw_rad_s && saw_hz {
            return Err(ConfigError(
                "fields `omega_r_rad_s` and `omega_r_hz` are mutually exclusive".into(),
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params()
            .map_err(|e| ConfigError(format!("resonant parameters: {e}")))?;
        if !(self.alpha_mag > 0.0) {
            return Err(ConfigError("field `alpha_mag`: must be positive".into()));
        }
        for (name, mu) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !(0.0..1.0).contains(&mu) {
                return Err(ConfigError(format!("field `{name}`: must lie in [0, 1)")));
            }
        }
        if self.delta_points < 2 {
            return Err(ConfigError("field `delta_points`: need at least 2".into()));
        }
        if !(self.epsilon_lo > 0.0 && self.epsilon_hi > self.epsilon_lo) {
            return Err(ConfigError(
                "fields `epsilon_lo`/`epsilon_hi`: need 0 < lo < hi".into(),
            ));
        }
        if self.epsilon_points < 2 {
            return Err(ConfigError("field `epsilon_points`: need at least 2".into()));
        }
        if self.bode_points < 2 {
            return Err(ConfigError("field `bode_points`: need at least 2".into()));
        }
        let (lo, hi) = self.bode_range();
        if !(lo > 0.0 && hi > lo) {
            return Err(ConfigError(
                "fields `bode_lo_rad_s`/`bode_hi_rad_s`: need 0 < lo < hi".into(),
            ));
        }
        for (name, v) in [
            ("dt", self.dt),
            ("t_settle", self.t_settle),
            ("t_measure", self.t_measure),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError(format!("field `{name}`: must be positive")));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> rpf_core::Result<ResonantParams> {
        ResonantParams::new(self.kappa, self.zeta, self.omega_r_rad_s)
    }

    pub fn bode_range(&self) -> (f64, f64) {
        (
            self.bode_lo_rad_s.unwrap_or(self.omega_r_rad_s / 100.0),
            self.bode_hi_rad_s.unwrap_or(self.omega_r_rad_s * 100.0),
        )
    }
}
