//! Scenario files: TOML with SI units, angles in degrees.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    RedshiftPass,
    AlphaForecast,
    FringeDemo,
    WeakvalueScan,
    Constants,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::RedshiftPass => "redshift-pass",
            Mode::AlphaForecast => "alpha-forecast",
            Mode::FringeDemo => "fringe-demo",
            Mode::WeakvalueScan => "weakvalue-scan",
            Mode::Constants => "constants",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// CPF-subset file, relative to the config file. Excludes `[orbit]`.
    pub ephemeris_path: Option<PathBuf>,
    pub orbit: Option<OrbitConfig>,
    pub station: Option<StationConfig>,
    pub pass: Option<PassConfig>,
    pub optics: Option<OpticsConfig>,
    pub noise: Option<NoiseConfig>,
    pub forecast: Option<ForecastSection>,
    pub fringe: Option<FringeConfig>,
    pub spin: Option<SpinConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    pub altitude_m: Option<f64>,
    pub inclination_deg: Option<f64>,
    pub raan_deg: Option<f64>,
    pub phase_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationConfig {
    pub lat_deg: Option<f64>,
    pub lon_deg: Option<f64>,
    pub alt_m: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassConfig {
    pub min_elevation_deg: Option<f64>,
    pub epochs: Option<usize>,
    pub search_start_s: Option<f64>,
    pub search_end_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsConfig {
    pub wavelength_nm: Option<f64>,
    pub delay_length_m: Option<f64>,
    pub group_index: Option<f64>,
    pub tau_l_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    None,
    Gaussian,
    Photon,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: Option<NoiseKind>,
    pub sigma_phi_rad: Option<f64>,
    /// Pulses per epoch per terminal.
    pub photon_budget: Option<u64>,
    pub scan_points: Option<usize>,
    pub efficiency: Option<f64>,
    pub dark_prob: Option<f64>,
    pub visibility: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Exact,
    Expanded,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSection {
    pub alpha: Option<f64>,
    pub trials: Option<usize>,
    pub model: Option<ModelChoice>,
    pub target_sigma: Option<f64>,
    /// Extra photon budgets for a scaling sweep.
    pub budget_sweep: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeConfig {
    pub phase_deg: Option<f64>,
    pub visibility: Option<f64>,
    pub pulses_per_point: Option<u64>,
    pub scan_points: Option<usize>,
    pub efficiency: Option<f64>,
    pub dark_prob: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinConfig {
    /// Exchange coupling, J.
    pub j: Option<f64>,
    pub g: Option<f64>,
    pub omega_rad_s: Option<[f64; 3]>,
    pub k: Option<f64>,
    pub t_s: Option<f64>,
    pub theta_start_deg: Option<f64>,
    pub theta_end_deg: Option<f64>,
    pub theta_steps: Option<usize>,
    pub q: Option<Vec<f64>>,
    pub meter_width: Option<f64>,
    /// Pauli axis of the weakly measured operator.
    pub observable_axis: Option<u8>,
    /// Measured spin: "system" or "meter".
    pub observable_spin: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn require<T>(&mut self, field: &str, value: &Option<T>) -> bool {
        if value.is_none() {
            self.push(field, "required field is missing");
        }
        value.is_some()
    }

    fn range(&mut self, field: &str, value: Option<f64>, lo: f64, hi: f64) {
        if let Some(v) = value {
            if !(v >= lo && v <= hi) {
                self.push(field, format!("{v} outside [{lo}, {hi}]"));
            }
        }
    }

    fn positive(&mut self, field: &str, value: Option<f64>) {
        if let Some(v) = value {
            if !(v > 0.0 && v.is_finite()) {
                self.push(field, format!("{v} must be > 0"));
            }
        }
    }

    fn at_least(&mut self, field: &str, value: Option<usize>, min: usize) {
        if let Some(v) = value {
            if v < min {
                self.push(field, format!("{v} must be >= {min}"));
            }
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Every violation in the file; empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut ck = Checker { violations: Vec::new() };
        if !ck.require("mode", &self.mode) {
            return ck.violations;
        }
        let mode = self.mode.unwrap();
        let needs_link = matches!(mode, Mode::RedshiftPass | Mode::AlphaForecast);
        let stochastic = matches!(mode, Mode::AlphaForecast | Mode::FringeDemo);

        if stochastic {
            ck.require("seed", &self.seed);
        }

        match (&self.orbit, &self.ephemeris_path) {
            (Some(_), Some(_)) => ck.push(
                "orbit",
                "[orbit] and ephemeris_path are mutually exclusive; set exactly one",
            ),
            (None, None) if needs_link => {
                ck.push("orbit", format!("mode {} needs [orbit] or ephemeris_path", mode.name()))
            }
            _ => {}
        }
        if let Some(o) = &self.orbit {
            if ck.require("orbit.altitude_m", &o.altitude_m) {
                ck.range("orbit.altitude_m", o.altitude_m, 1.3e5, 4.3e7);
            }
            ck.range("orbit.inclination_deg", o.inclination_deg, 0.0, 180.0);
            ck.range("orbit.raan_deg", o.raan_deg, -360.0, 360.0);
            ck.range("orbit.phase_deg", o.phase_deg, -360.0, 360.0);
        }

        if needs_link {
            if ck.require("station", &self.station) {
                let s = self.station.as_ref().unwrap();
                ck.require("station.lat_deg", &s.lat_deg);
                ck.require("station.lon_deg", &s.lon_deg);
                ck.range("station.lat_deg", s.lat_deg, -90.0, 90.0);
                ck.range("station.lon_deg", s.lon_deg, -360.0, 360.0);
                ck.range("station.alt_m", s.alt_m, -500.0, 9000.0);
            }
            if ck.require("optics", &self.optics) {
                let o = self.optics.as_ref().unwrap();
                if ck.require("optics.wavelength_nm", &o.wavelength_nm) {
                    ck.positive("optics.wavelength_nm", o.wavelength_nm);
                }
                if ck.require("optics.delay_length_m", &o.delay_length_m) {
                    ck.positive("optics.delay_length_m", o.delay_length_m);
                }
                if o.group_index.is_some() && o.tau_l_s.is_some() {
                    ck.push("optics.tau_l_s", "set group_index or tau_l_s, not both");
                }
                ck.range("optics.group_index", o.group_index, 1.0, 4.0);
                ck.positive("optics.tau_l_s", o.tau_l_s);
            }
            if let Some(p) = &self.pass {
                ck.range("pass.min_elevation_deg", p.min_elevation_deg, 0.0, 89.0);
                ck.at_least("pass.epochs", p.epochs, 2);
                if let (Some(a), Some(b)) = (p.search_start_s, p.search_end_s) {
                    if !(b > a) {
                        ck.push("pass.search_end_s", "must be after search_start_s");
                    }
                }
            }
        }

        if mode == Mode::AlphaForecast {
            if ck.require("noise", &self.noise) {
                self.check_noise(&mut ck, self.noise.as_ref().unwrap());
            }
            if ck.require("forecast", &self.forecast) {
                let f = self.forecast.as_ref().unwrap();
                ck.range("forecast.alpha", f.alpha, -0.5, 0.5);
                if ck.require("forecast.trials", &f.trials) {
                    ck.at_least("forecast.trials", f.trials, 10);
                }
                ck.positive("forecast.target_sigma", f.target_sigma);
                if let Some(sweep) = &f.budget_sweep {
                    if sweep.iter().any(|&b| b == 0) {
                        ck.push("forecast.budget_sweep", "budgets must be >= 1");
                    }
                }
            }
        }

        if mode == Mode::FringeDemo && ck.require("fringe", &self.fringe) {
            let f = self.fringe.as_ref().unwrap();
            ck.range("fringe.visibility", f.visibility, 0.0, 1.0);
            ck.range("fringe.efficiency", f.efficiency, 0.0, 1.0);
            ck.range("fringe.dark_prob", f.dark_prob, 0.0, 0.5);
            ck.at_least("fringe.scan_points", f.scan_points, 4);
            if let Some(0) = f.pulses_per_point {
                ck.push("fringe.pulses_per_point", "must be >= 1");
            }
        }

        if mode == Mode::WeakvalueScan && ck.require("spin", &self.spin) {
            let s = self.spin.as_ref().unwrap();
            ck.positive("spin.g", s.g);
            ck.positive("spin.t_s", s.t_s);
            ck.positive("spin.meter_width", s.meter_width);
            ck.range("spin.theta_start_deg", s.theta_start_deg, -89.9, 89.9);
            ck.range("spin.theta_end_deg", s.theta_end_deg, -89.9, 89.9);
            ck.at_least("spin.theta_steps", s.theta_steps, 1);
            if let Some(axis) = s.observable_axis {
                if !(1..=3).contains(&axis) {
                    ck.push("spin.observable_axis", format!("{axis} must be 1, 2 or 3"));
                }
            }
            if let Some(which) = &s.observable_spin {
                if which != "system" && which != "meter" {
                    ck.push("spin.observable_spin", format!("{which:?} must be \"system\" or \"meter\""));
                }
            }
            if let Some(q) = &s.q {
                if q.is_empty() || q.iter().any(|v| !v.is_finite()) {
                    ck.push("spin.q", "needs at least one finite coupling");
                }
            }
        }
        ck.violations
    }

    fn check_noise(&self, ck: &mut Checker, n: &NoiseConfig) {
        if !ck.require("noise.kind", &n.kind) {
            return;
        }
        match n.kind.unwrap() {
            NoiseKind::None => {}
            NoiseKind::Gaussian => {
                if ck.require("noise.sigma_phi_rad", &n.sigma_phi_rad) {
                    ck.positive("noise.sigma_phi_rad", n.sigma_phi_rad);
                }
            }
            NoiseKind::Photon => {
                ck.require("noise.photon_budget", &n.photon_budget);
                ck.range("noise.efficiency", n.efficiency, 0.0, 1.0);
                ck.range("noise.dark_prob", n.dark_prob, 0.0, 0.5);
                ck.range("noise.visibility", n.visibility, 0.05, 1.0);
                ck.at_least("noise.scan_points", n.scan_points, 4);
                if let (Some(b), Some(p)) = (n.photon_budget, n.scan_points.or(Some(16))) {
                    if p > 0 && (b as usize) < p {
                        ck.push("noise.photon_budget", format!("{b} is below one pulse per scan point"));
                    }
                }
            }
        }
    }
}

/// Resolves `path` against the directory holding the config file.
pub fn resolve(config_path: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(path)
    }
}
