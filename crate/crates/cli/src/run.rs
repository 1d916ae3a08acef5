//! Mode pipelines. Each writes `results.tsv` and `summary.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lpisim::constants::{C, GM_EARTH, R_EARTH};
use lpisim::ephemeris::{parse_cpf_bytes, EphemerisTrajectory};
use lpisim::estimator::{
    precision_forecast, required_phase_noise, required_photon_budget, ForecastConfig, PhaseNoise,
    PhotonNoise, SignalModel,
};
use lpisim::interferometer::{cascade_intensities, fit_phase, fringe_scan, phase_crb, uniform_offsets, Detector};
use lpisim::kinematics::{CircularOrbit, GroundStation, LinkGeometry};
use lpisim::link_model::{
    expanded_signal, first_order_doppler, gravitational_phase, phase_pair, OpticalConfig, RedshiftParams,
};
use lpisim::scenario::{PassScenario, Spacecraft};
use lpisim::spin_weak::{
    constants_report, constants_table, default_two_spin_observable, two_spin_observable, weak_scan_table,
    weak_value_scan, GaussianMeter, SpinCouplingParams, WeakScan,
};
use lpisim::table::{fmt_f64, ColumnTable};
use lpisim::Vector3;

use crate::config::{resolve, ModelChoice, Mode, NoiseKind, ScenarioConfig};
use crate::error::CliError;

pub const OUTPUT_DIR_ENV: &str = "LPISIM_OUTPUT_DIR";
const TARGET_SIGMA: f64 = 1e-5;

/// Human-readable summary, one line per step.
#[derive(Debug, Default)]
pub struct Summary {
    lines: Vec<String>,
    failed: bool,
}

impl Summary {
    fn info(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    fn step<E: std::fmt::Display>(&mut self, name: &str, result: Result<String, E>) {
        match result {
            Ok(text) => self.lines.push(format!("[ok] {name}: {text}")),
            Err(e) => {
                self.failed = true;
                self.lines.push(format!("[FAILED] {name}: {e}"));
            }
        }
    }

    fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: String,
}

fn output_dir(cfg: &ScenarioConfig, config_path: &Path) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        return PathBuf::from(dir);
    }
    match &cfg.output_dir {
        Some(dir) => resolve(config_path, dir),
        None => resolve(config_path, Path::new("output")),
    }
}

fn write_file(path: PathBuf, contents: &str) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Output { path, source })
}

/// Runs a validated config. The summary is written even when the main
/// pipeline fails; the error is returned afterwards.
pub fn run_scenario(cfg: &ScenarioConfig, config_path: &Path) -> Result<RunOutput, CliError> {
    let dir = output_dir(cfg, config_path);
    fs::create_dir_all(&dir).map_err(|source| CliError::Output {
        path: dir.clone(),
        source,
    })?;
    let mut summary = Summary::default();
    let mode = cfg.mode.expect("validated");
    summary.info(format!("mode: {}", mode_name(mode)));
    if let Some(seed) = cfg.seed {
        summary.info(format!("seed: {seed}"));
    }

    let result = match mode {
        Mode::RedshiftPass => redshift_pass(cfg, config_path, &mut summary),
        Mode::AlphaForecast => alpha_forecast(cfg, config_path, &dir, &mut summary),
        Mode::FringeDemo => fringe_demo(cfg, &mut summary),
        Mode::WeakvalueScan => weakvalue_scan(cfg, &mut summary),
        Mode::Constants => Ok(constants_mode(&mut summary)),
    };
    let outcome = match result {
        Ok(table) => {
            write_file(dir.join("results.tsv"), &table.to_tsv())?;
            Ok(())
        }
        Err(e) => {
            summary.step::<&CliError>("pipeline", Err(&e));
            Err(e)
        }
    };
    let text = summary.text();
    write_file(dir.join("summary.txt"), &text)?;
    outcome.map(|_| RunOutput { dir, summary: text })
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::RedshiftPass => "redshift-pass",
        Mode::AlphaForecast => "alpha-forecast",
        Mode::FringeDemo => "fringe-demo",
        Mode::WeakvalueScan => "weakvalue-scan",
        Mode::Constants => "constants",
    }
}

fn optics(cfg: &ScenarioConfig) -> Result<OpticalConfig, CliError> {
    let o = cfg.optics.as_ref().expect("validated");
    let wavelength = o.wavelength_nm.expect("validated") * 1e-9;
    let l = o.delay_length_m.expect("validated");
    let group_index = match (o.tau_l_s, o.group_index) {
        (Some(tau), _) => tau * C / l,
        (None, Some(n)) => n,
        (None, None) => 1.0,
    };
    Ok(OpticalConfig::with_group_index(wavelength, l, group_index)?)
}

fn pass_scenario(cfg: &ScenarioConfig, config_path: &Path) -> Result<PassScenario, CliError> {
    let s = cfg.station.as_ref().expect("validated");
    let station = GroundStation::new(
        s.lat_deg.expect("validated").to_radians(),
        s.lon_deg.expect("validated").to_radians(),
        s.alt_m.unwrap_or(0.0),
    )?;
    let pass = cfg.pass.clone().unwrap_or_default();
    let (spacecraft, default_window) = match (&cfg.orbit, &cfg.ephemeris_path) {
        (Some(o), _) => {
            let orbit = CircularOrbit::new(
                R_EARTH + o.altitude_m.expect("validated"),
                o.inclination_deg.unwrap_or(0.0).to_radians(),
                o.raan_deg.unwrap_or(0.0).to_radians(),
                o.phase_deg.unwrap_or(0.0).to_radians(),
            )?;
            let half = orbit.period() / 2.0;
            (Spacecraft::Circular(orbit), (-half, half))
        }
        (None, Some(path)) => {
            let path = resolve(config_path, path);
            let bytes = fs::read(&path).map_err(|source| CliError::FileUnreadable {
                path: path.clone(),
                source,
            })?;
            let traj = EphemerisTrajectory::new(parse_cpf_bytes(&bytes)?)?;
            let window = traj.time_span();
            (Spacecraft::Ephemeris(traj), window)
        }
        (None, None) => unreachable!("validated"),
    };
    let window = (
        pass.search_start_s.unwrap_or(default_window.0),
        pass.search_end_s.unwrap_or(default_window.1),
    );
    Ok(PassScenario::over_first_pass(
        station,
        spacecraft,
        optics(cfg)?,
        window,
        pass.min_elevation_deg.unwrap_or(10.0).to_radians(),
        pass.epochs.unwrap_or(50),
    )?)
}

fn redshift_pass(cfg: &ScenarioConfig, config_path: &Path, summary: &mut Summary) -> Result<ColumnTable, CliError> {
    let scenario = pass_scenario(cfg, config_path)?;
    let optical = scenario.optical;
    let scale = optical.phase_scale();
    let geometries = scenario.geometries()?;
    let elevations = scenario.elevations()?;
    let red = RedshiftParams::default();
    summary.info(format!(
        "pass: {} epochs from {:.1} s to {:.1} s",
        scenario.epochs.len(),
        scenario.epochs[0],
        scenario.epochs[scenario.epochs.len() - 1]
    ));

    let mut table = ColumnTable::new([
        "t_s",
        "elevation_deg",
        "phi_sc",
        "phi_gs",
        "s_signal",
        "doppler_sc",
        "doppler_gs",
        "gravity_phase",
        "s_expanded",
        "beta_max",
    ]);
    let (mut max_doppler, mut max_gravity, mut max_gap) = (0.0f64, 0.0f64, 0.0f64);
    for ((t, el), geom) in scenario.epochs.iter().zip(&elevations).zip(&geometries) {
        let pair = phase_pair(geom, &optical, &red)?;
        let (up, round) = first_order_doppler(geom);
        let gravity = scale * (geom.u2 - geom.u1);
        let s_expanded = scale * expanded_signal(geom, &red);
        max_doppler = max_doppler.max((scale * up).abs());
        max_gravity = max_gravity.max(gravity.abs());
        max_gap = max_gap.max((pair.s_signal - s_expanded).abs() / (scale * geom.beta_max().powi(3)));
        table.push([
            fmt_f64(*t),
            fmt_f64(el.to_degrees()),
            fmt_f64(pair.phi_sc),
            fmt_f64(pair.phi_gs),
            fmt_f64(pair.s_signal),
            fmt_f64(scale * up),
            fmt_f64(scale * round),
            fmt_f64(gravity),
            fmt_f64(s_expanded),
            fmt_f64(geom.beta_max()),
        ]);
    }

    summary.step("flat-field gravitational phase", flat_field_phase(cfg, &optical, &geometries));
    summary.step(
        "Doppler to gravity ratio",
        if max_gravity > 0.0 {
            Ok(format!(
                "{:.3e} (first-order Doppler phase {:.3e} rad vs gravitational {:.3e} rad; expected order 1e5)",
                max_doppler / max_gravity,
                max_doppler,
                max_gravity
            ))
        } else {
            Err("gravitational phase vanishes over the pass")
        },
    );
    summary.step::<&str>(
        "second-order expansion",
        Ok(format!("max |S - S_expanded| / (omega0 tau_l beta_max^3) = {max_gap:.3}")),
    );
    Ok(table)
}

/// `2 pi g h l / (lambda c^2)` with surface gravity and the spacecraft
/// altitude at the highest point of the pass.
fn flat_field_phase(cfg: &ScenarioConfig, optical: &OpticalConfig, geometries: &[LinkGeometry]) -> Result<String, String> {
    let g = GM_EARTH / (R_EARTH * R_EARTH);
    let h = match &cfg.orbit {
        Some(o) => o.altitude_m.expect("validated"),
        None => {
            let u = geometries.iter().map(|g| g.u2).fold(f64::INFINITY, f64::min);
            GM_EARTH / (C * C * u) - R_EARTH
        }
    };
    let phi = gravitational_phase(optical, g, h, 0.0).map_err(|e| e.to_string())?;
    Ok(format!("{phi:.4} rad at h = {:.0} m (expected: a few radians)", h))
}

fn noise_model(cfg: &ScenarioConfig, budget_override: Option<u64>) -> PhaseNoise {
    let n = cfg.noise.as_ref().expect("validated");
    match n.kind.expect("validated") {
        NoiseKind::None => PhaseNoise::None,
        NoiseKind::Gaussian => PhaseNoise::Gaussian {
            sigma_phi: n.sigma_phi_rad.expect("validated"),
        },
        NoiseKind::Photon => PhaseNoise::Photon(PhotonNoise {
            photon_budget: budget_override.unwrap_or(n.photon_budget.expect("validated")),
            scan_points: n.scan_points.unwrap_or(16),
            visibility: n.visibility.unwrap_or(0.95),
            detector: Detector {
                efficiency: n.efficiency.unwrap_or(0.5),
                dark_prob: n.dark_prob.unwrap_or(0.0),
            },
        }),
    }
}

fn alpha_forecast(
    cfg: &ScenarioConfig,
    config_path: &Path,
    dir: &Path,
    summary: &mut Summary,
) -> Result<ColumnTable, CliError> {
    let scenario = pass_scenario(cfg, config_path)?;
    let geometries = scenario.geometries()?;
    let f = cfg.forecast.as_ref().expect("validated");
    let target = f.target_sigma.unwrap_or(TARGET_SIGMA);
    let alpha = f.alpha.unwrap_or(0.0);
    let fc = ForecastConfig {
        alpha,
        noise: noise_model(cfg, None),
        trials: f.trials.expect("validated"),
        seed: cfg.seed.expect("validated"),
        model: match f.model {
            Some(ModelChoice::Expanded) => SignalModel::Expanded,
            _ => SignalModel::Exact,
        },
    };
    let forecast = precision_forecast(&scenario.epochs, &geometries, &scenario.optical, &fc)?;
    let n = forecast.trials.len() as f64;
    summary.info(format!(
        "pass: {} epochs, {} trials, injected alpha = {alpha:e}",
        scenario.epochs.len(),
        forecast.trials.len()
    ));
    let bias_sigmas = (forecast.mean_alpha - alpha) / (forecast.sigma_empirical / n.sqrt());
    summary.step::<&str>(
        "alpha estimate",
        Ok(format!(
            "mean alpha_hat = {:.4e} ({:+.2} standard errors from truth)",
            forecast.mean_alpha, bias_sigmas
        )),
    );
    summary.step::<&str>(
        "precision",
        Ok(format!(
            "sigma_alpha empirical = {:.4e}, analytic = {:.4e}, target = {target:e}",
            forecast.sigma_empirical, forecast.sigma_analytic
        )),
    );
    summary.step::<&str>(
        "fit quality",
        Ok(format!("mean chi2/dof = {:.3}", forecast.mean_chi2_per_dof)),
    );

    match fc.noise {
        PhaseNoise::Photon(p) => {
            let needed = required_photon_budget(p.photon_budget, forecast.sigma_empirical, target);
            summary.step::<&str>(
                "required photon budget",
                Ok(format!("{needed:.4e} pulses per epoch per terminal for sigma_alpha = {target:e}")),
            );
        }
        _ => summary.step(
            "required phase noise",
            required_phase_noise(&geometries, &scenario.optical, target)
                .map(|s| format!("{s:.4e} rad per terminal for sigma_alpha = {target:e}")),
        ),
    }

    if let (Some(sweep), PhaseNoise::Photon(_)) = (&f.budget_sweep, fc.noise) {
        let mut table = ColumnTable::new(["photon_budget", "sigma_alpha", "sigma_times_sqrt_budget"]);
        let mut ok = true;
        for &budget in sweep {
            let swept = ForecastConfig {
                noise: noise_model(cfg, Some(budget)),
                ..fc
            };
            match precision_forecast(&scenario.epochs, &geometries, &scenario.optical, &swept) {
                Ok(r) => table.push([
                    budget.to_string(),
                    fmt_f64(r.sigma_empirical),
                    fmt_f64(r.sigma_empirical * (budget as f64).sqrt()),
                ]),
                Err(e) => {
                    ok = false;
                    summary.step::<String>(&format!("budget sweep at {budget}"), Err(e.to_string()));
                }
            }
        }
        write_file(dir.join("budget_sweep.tsv"), &table.to_tsv())?;
        if ok {
            summary.step::<&str>("budget sweep", Ok("written to budget_sweep.tsv".into()));
        }
    }
    Ok(forecast.table())
}

fn fringe_demo(cfg: &ScenarioConfig, summary: &mut Summary) -> Result<ColumnTable, CliError> {
    let f = cfg.fringe.as_ref().expect("validated");
    let phase = f.phase_deg.unwrap_or(0.0).to_radians();
    let visibility = f.visibility.unwrap_or(1.0);
    let n = f.pulses_per_point.unwrap_or(100_000);
    let detector = Detector {
        efficiency: f.efficiency.unwrap_or(1.0),
        dark_prob: f.dark_prob.unwrap_or(0.0),
    };
    let offsets = uniform_offsets(f.scan_points.unwrap_or(16));
    let scan = fringe_scan(&offsets, phase, visibility, n, &detector, cfg.seed.expect("validated"))?;

    let mut table = ColumnTable::new([
        "offset_rad",
        "early",
        "central",
        "late",
        "n_sent",
        "i_early",
        "i_central",
        "i_late",
    ]);
    for h in &scan {
        let i = cascade_intensities(phase + h.phase_setting, visibility);
        table.push([
            fmt_f64(h.phase_setting),
            h.counts_early.to_string(),
            h.counts_central.to_string(),
            h.counts_late.to_string(),
            h.n_sent.to_string(),
            fmt_f64(i.early),
            fmt_f64(i.central),
            fmt_f64(i.late),
        ]);
    }
    let peak = cascade_intensities(0.0, visibility);
    summary.step::<&str>(
        "three-peak pattern",
        Ok(format!("central/side intensity at the fringe maximum = {:.4}", peak.central / peak.early)),
    );
    summary.step(
        "fringe fit",
        fit_phase(&scan).map(|fit| {
            let crb = phase_crb(&offsets, phase, visibility, n, &detector);
            format!(
                "phi = {:.6} rad (set {:.6}), sigma_phi = {:.3e} (bound {:.3e}), visibility = {:.4}",
                fit.phi, phase, fit.sigma_phi, crb, fit.visibility
            )
        }),
    );
    Ok(table)
}

fn weakvalue_scan(cfg: &ScenarioConfig, summary: &mut Summary) -> Result<ColumnTable, CliError> {
    let s = cfg.spin.as_ref().expect("validated");
    let omega = s.omega_rad_s.map(Vector3::from).unwrap_or_else(Vector3::zeros);
    let mut params = SpinCouplingParams {
        g: s.g.unwrap_or(lpisim::constants::G_SURFACE),
        omega,
        k: s.k.unwrap_or(1.0),
        j: s.j.unwrap_or(0.0),
        t: s.t_s.unwrap_or(1.0),
        ..SpinCouplingParams::default()
    };
    params.h_vec = params.rotation_field()?;
    let observable = match (s.observable_axis, s.observable_spin.as_deref()) {
        (None, None) => default_two_spin_observable(),
        (axis, which) => two_spin_observable(axis.unwrap_or(3), which != Some("meter"))?,
    };
    let start = s.theta_start_deg.unwrap_or(0.0);
    let end = s.theta_end_deg.unwrap_or(84.0);
    let steps = s.theta_steps.unwrap_or(8);
    let thetas = (0..steps)
        .map(|k| {
            let frac = if steps == 1 { 0.0 } else { k as f64 / (steps - 1) as f64 };
            (start + frac * (end - start)).to_radians()
        })
        .collect();
    let scan = WeakScan {
        params,
        observable,
        thetas,
        qs: s.q.clone().unwrap_or_else(|| vec![1e-3, 1e-2, 1e-1]),
        meter: GaussianMeter::new(0.0, s.meter_width.unwrap_or(1.0))?,
    };
    let rows = weak_value_scan(&scan)?;
    let best = rows
        .iter()
        .max_by(|a, b| a.shift.weak_value.re.abs().total_cmp(&b.shift.weak_value.re.abs()))
        .expect("non-empty grid");
    summary.step::<&str>(
        "amplification",
        Ok(format!(
            "max |Re A_w| = {:.4} at theta = {:.2} deg, postselection probability {:.3e}",
            best.shift.weak_value.re.abs(),
            best.theta.to_degrees(),
            best.shift.postselection_prob
        )),
    );
    let worst = rows
        .iter()
        .filter(|r| r.shift.shift_weak != 0.0)
        .map(|r| (r.shift.shift_exact - r.shift.shift_weak).abs() / r.shift.shift_weak.abs())
        .fold(0.0, f64::max);
    summary.step::<&str>(
        "weak approximation",
        Ok(format!("max relative deviation of exact from weak shift = {worst:.3e}")),
    );
    Ok(weak_scan_table(&rows))
}

fn constants_mode(summary: &mut Summary) -> ColumnTable {
    let report = constants_report();
    for k in &report {
        let text = match (k.reference, k.relative_deviation()) {
            (Some(r), Some(dev)) => {
                let verdict = if dev < 0.03 { "within" } else { "outside" };
                format!("{:.4e} {} (published {r:e}, {verdict} 3%: {:.2}%)", k.value, k.unit, dev * 100.0)
            }
            _ => format!("{:.4e} {}", k.value, k.unit),
        };
        summary.step::<&str>(k.name, Ok(text));
    }
    constants_table(&report)
}

/// Four-line text for `lpisim constants`.
pub fn constants_text() -> String {
    let mut out = String::new();
    for k in constants_report() {
        let _ = writeln!(out, "{}\t{}\t{}", k.name, fmt_f64(k.value), k.unit);
    }
    out
}
