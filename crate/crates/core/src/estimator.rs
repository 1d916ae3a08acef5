//! Recovery of the red-shift violation parameter from pass data and Monte
//! Carlo precision forecasts.
//!
//! Each epoch contributes the Doppler-cancelling combination
//! `S = phi_sc - phi_gs / 2`. After the kinematic part of `S` is removed
//! with the known geometry, the residual is proportional to `1 + alpha`,
//! so the fit is a one-parameter weighted least squares through the origin.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::interferometer::{
    fit_phase, fringe_scan, phase_crb, uniform_offsets, wrap_phase, Detector, InterferometerError,
};
use crate::kinematics::LinkGeometry;
use crate::link_model::{
    expanded_kinematic_terms, phase_pair, signal_decomposition, LinkError, OpticalConfig,
    RedshiftParams,
};
use crate::table::{fmt_f64, ColumnTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("fit is singular: every epoch has U2 = U1")]
    SingularFit,
    #[error("need at least 2 epochs, got {0}")]
    InsufficientEpochs(usize),
    #[error("dataset columns differ in length: {epochs} epochs, {geometries} geometries, {measurements} measurements")]
    LengthMismatch {
        epochs: usize,
        geometries: usize,
        measurements: usize,
    },
    #[error("measurement {index} has non-positive uncertainty")]
    BadUncertainty { index: usize },
    #[error("precision forecast needs at least 10 trials, got {0}")]
    TooFewTrials(usize),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Interferometer(#[from] InterferometerError),
}

/// Measured phases and their one-sigma uncertainties at one epoch, rad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMeasurement {
    pub phi_sc: f64,
    pub sigma_sc: f64,
    pub phi_gs: f64,
    pub sigma_gs: f64,
}

impl PhaseMeasurement {
    pub fn signal(&self) -> f64 {
        self.phi_sc - 0.5 * self.phi_gs
    }

    pub fn signal_variance(&self) -> f64 {
        self.sigma_sc * self.sigma_sc + 0.25 * self.sigma_gs * self.sigma_gs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassDataset {
    epochs: Vec<f64>,
    geometries: Vec<LinkGeometry>,
    measurements: Vec<PhaseMeasurement>,
}

impl PassDataset {
    pub fn new(
        epochs: Vec<f64>,
        geometries: Vec<LinkGeometry>,
        measurements: Vec<PhaseMeasurement>,
    ) -> Result<Self, EstimatorError> {
        if epochs.len() != geometries.len() || epochs.len() != measurements.len() {
            return Err(EstimatorError::LengthMismatch {
                epochs: epochs.len(),
                geometries: geometries.len(),
                measurements: measurements.len(),
            });
        }
        if let Some(index) = measurements
            .iter()
            .position(|m| !(m.sigma_sc > 0.0 && m.sigma_gs > 0.0))
        {
            return Err(EstimatorError::BadUncertainty { index });
        }
        Ok(Self {
            epochs,
            geometries,
            measurements,
        })
    }

    pub fn epochs(&self) -> &[f64] {
        &self.epochs
    }

    pub fn geometries(&self) -> &[LinkGeometry] {
        &self.geometries
    }

    pub fn measurements(&self) -> &[PhaseMeasurement] {
        &self.measurements
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }
}

/// How the kinematic part of `S` is modelled before the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalModel {
    /// Exact frequency-ratio model; `S` is affine in alpha, so the
    /// regression is exact.
    #[default]
    Exact,
    /// Second-order expansion: subtract the velocity and acceleration terms
    /// and regress on `omega0 tau_l (U2 - U1)`. Truncation leaves an
    /// `O(beta^3)` residual.
    Expanded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate {
    pub alpha_hat: f64,
    pub sigma_alpha: f64,
    pub chi2_per_dof: f64,
}

impl AlphaEstimate {
    /// True when chi^2/dof lies in the healthy band [0.5, 2].
    pub fn chi2_healthy(&self) -> bool {
        (0.5..=2.0).contains(&self.chi2_per_dof)
    }
}

pub fn estimate_alpha(data: &PassDataset, cfg: &OpticalConfig) -> Result<AlphaEstimate, EstimatorError> {
    estimate_alpha_with(data, cfg, SignalModel::Exact)
}

pub fn estimate_alpha_with(
    data: &PassDataset,
    cfg: &OpticalConfig,
    model: SignalModel,
) -> Result<AlphaEstimate, EstimatorError> {
    let scale = cfg.phase_scale();
    let mut points = Vec::with_capacity(data.len());
    for (geom, m) in data.geometries.iter().zip(&data.measurements) {
        let (regressor, kinematic) = match model {
            SignalModel::Exact => {
                let d = signal_decomposition(geom, cfg)?;
                (d.gravity, d.offset)
            }
            SignalModel::Expanded => (
                scale * (geom.u2 - geom.u1),
                scale * expanded_kinematic_terms(geom),
            ),
        };
        let weight = 1.0 / m.signal_variance();
        points.push((regressor, m.signal() - kinematic, weight));
    }

    let sxx: f64 = points.iter().map(|(x, _, w)| w * x * x).sum();
    if !(sxx > 0.0) {
        return Err(EstimatorError::SingularFit);
    }
    if points.len() < 2 {
        return Err(EstimatorError::InsufficientEpochs(points.len()));
    }
    let sxy: f64 = points.iter().map(|(x, y, w)| w * x * y).sum();
    let gain = sxy / sxx;
    let chi2: f64 = points
        .iter()
        .map(|(x, y, w)| {
            let r = y - gain * x;
            w * r * r
        })
        .sum();
    Ok(AlphaEstimate {
        alpha_hat: gain - 1.0,
        sigma_alpha: sxx.sqrt().recip(),
        chi2_per_dof: chi2 / (points.len() - 1) as f64,
    })
}

/// Photon-counting readout of both terminals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonNoise {
    /// Pulses sent per epoch per terminal, split evenly over the scan points.
    pub photon_budget: u64,
    pub scan_points: usize,
    pub visibility: f64,
    pub detector: Detector,
}

impl PhotonNoise {
    fn per_point(&self) -> u64 {
        self.photon_budget / self.scan_points as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseNoise {
    /// Exact phases with unit weights.
    None,
    /// Additive white Gaussian phase noise, rad.
    Gaussian { sigma_phi: f64 },
    /// Fringe scans with binomial counts, fitted per epoch.
    Photon(PhotonNoise),
}

impl PhaseNoise {
    fn validate(&self) -> Result<(), EstimatorError> {
        match self {
            PhaseNoise::None => Ok(()),
            PhaseNoise::Gaussian { sigma_phi } if *sigma_phi > 0.0 => Ok(()),
            PhaseNoise::Gaussian { sigma_phi } => Err(EstimatorError::InvalidNoise(format!(
                "sigma_phi = {sigma_phi} must be positive"
            ))),
            PhaseNoise::Photon(p) => {
                if p.scan_points < 4 || p.per_point() == 0 {
                    return Err(EstimatorError::InvalidNoise(format!(
                        "need >= 4 scan points and >= 1 pulse per point, got {} points, budget {}",
                        p.scan_points, p.photon_budget
                    )));
                }
                Ok(())
            }
        }
    }

    /// Per-terminal phase uncertainty implied by the noise model at a given
    /// true phase.
    fn analytic_sigma(&self, phase: f64) -> f64 {
        match self {
            PhaseNoise::None => 0.0,
            PhaseNoise::Gaussian { sigma_phi } => *sigma_phi,
            PhaseNoise::Photon(p) => phase_crb(
                &uniform_offsets(p.scan_points),
                phase,
                p.visibility,
                p.per_point(),
                &p.detector,
            ),
        }
    }
}

/// SplitMix64 step, used to derive independent stream seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reads one terminal through a fringe scan and resolves the 2 pi
/// ambiguity against `reference`.
fn photon_readout(
    noise: &PhotonNoise,
    phase: f64,
    reference: f64,
    seed: u64,
) -> Result<(f64, f64), EstimatorError> {
    let offsets = uniform_offsets(noise.scan_points);
    let scan = fringe_scan(
        &offsets,
        phase,
        noise.visibility,
        noise.per_point(),
        &noise.detector,
        seed,
    )?;
    let fit = fit_phase(&scan)?;
    Ok((reference + wrap_phase(fit.phi - reference), fit.sigma_phi))
}

/// Simulates measured phases for a pass with the given true alpha.
pub fn synthesize_dataset(
    epochs: &[f64],
    geometries: &[LinkGeometry],
    cfg: &OpticalConfig,
    red: &RedshiftParams,
    noise: &PhaseNoise,
    seed: u64,
) -> Result<PassDataset, EstimatorError> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut measurements = Vec::with_capacity(geometries.len());
    for (k, geom) in geometries.iter().enumerate() {
        let truth = phase_pair(geom, cfg, red)?;
        let m = match noise {
            PhaseNoise::None => PhaseMeasurement {
                phi_sc: truth.phi_sc,
                sigma_sc: 1.0,
                phi_gs: truth.phi_gs,
                sigma_gs: 1.0,
            },
            PhaseNoise::Gaussian { sigma_phi } => {
                let normal = Normal::new(0.0, *sigma_phi).expect("sigma_phi validated");
                PhaseMeasurement {
                    phi_sc: truth.phi_sc + normal.sample(&mut rng),
                    sigma_sc: *sigma_phi,
                    phi_gs: truth.phi_gs + normal.sample(&mut rng),
                    sigma_gs: *sigma_phi,
                }
            }
            PhaseNoise::Photon(p) => {
                // a priori prediction used only to unwrap
                let predicted = phase_pair(geom, cfg, &RedshiftParams::default())?;
                let k = k as u64;
                let (phi_sc, sigma_sc) =
                    photon_readout(p, truth.phi_sc, predicted.phi_sc, derive_seed(seed, 2 * k))?;
                let (phi_gs, sigma_gs) =
                    photon_readout(p, truth.phi_gs, predicted.phi_gs, derive_seed(seed, 2 * k + 1))?;
                PhaseMeasurement {
                    phi_sc,
                    sigma_sc,
                    phi_gs,
                    sigma_gs,
                }
            }
        };
        measurements.push(m);
    }
    PassDataset::new(epochs.to_vec(), geometries.to_vec(), measurements)
}

/// Uncertainty of alpha propagated from the per-terminal phase
/// uncertainties of the noise model, `1 / sqrt(sum G_k^2 / sigma_S,k^2)`
/// with `G_k` the alpha-sensitivity of `S`.
pub fn analytic_sigma_alpha(
    geometries: &[LinkGeometry],
    cfg: &OpticalConfig,
    red: &RedshiftParams,
    noise: &PhaseNoise,
) -> Result<f64, EstimatorError> {
    let mut information = 0.0;
    for geom in geometries {
        let truth = phase_pair(geom, cfg, red)?;
        let gravity = signal_decomposition(geom, cfg)?.gravity;
        let s_sc = noise.analytic_sigma(truth.phi_sc);
        let s_gs = noise.analytic_sigma(truth.phi_gs);
        let var = s_sc * s_sc + 0.25 * s_gs * s_gs;
        if var == 0.0 {
            return Ok(0.0);
        }
        information += gravity * gravity / var;
    }
    if !(information > 0.0) {
        return Err(EstimatorError::SingularFit);
    }
    Ok(information.sqrt().recip())
}

/// Per-terminal white phase noise at which the pass reaches `target`
/// precision on alpha.
pub fn required_phase_noise(
    geometries: &[LinkGeometry],
    cfg: &OpticalConfig,
    target: f64,
) -> Result<f64, EstimatorError> {
    let unit = analytic_sigma_alpha(
        geometries,
        cfg,
        &RedshiftParams::default(),
        &PhaseNoise::Gaussian { sigma_phi: 1.0 },
    )?;
    Ok(target / unit)
}

/// Photon budget reaching `target` given `sigma` at `budget`, assuming the
/// shot-noise scaling `sigma ~ 1 / sqrt(budget)`.
pub fn required_photon_budget(budget: u64, sigma: f64, target: f64) -> f64 {
    budget as f64 * (sigma / target).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastConfig {
    pub alpha: f64,
    pub noise: PhaseNoise,
    pub trials: usize,
    pub seed: u64,
    pub model: SignalModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub estimate: AlphaEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub trials: Vec<TrialResult>,
    pub mean_alpha: f64,
    pub sigma_empirical: f64,
    pub sigma_analytic: f64,
    pub mean_chi2_per_dof: f64,
}

impl Forecast {
    /// One row per trial plus a summary row (seed column `summary`).
    pub fn table(&self) -> ColumnTable {
        let mut table = ColumnTable::new(["seed", "alpha_hat", "sigma_alpha", "chi2_per_dof"]);
        for t in &self.trials {
            table.push([
                t.seed.to_string(),
                fmt_f64(t.estimate.alpha_hat),
                fmt_f64(t.estimate.sigma_alpha),
                fmt_f64(t.estimate.chi2_per_dof),
            ]);
        }
        table.push([
            "summary".to_string(),
            fmt_f64(self.mean_alpha),
            fmt_f64(self.sigma_empirical),
            fmt_f64(self.mean_chi2_per_dof),
        ]);
        table
    }
}

/// Runs `trials` independent simulated passes through the full readout and
/// estimation chain. Trials run in parallel; results are ordered by trial
/// index.
pub fn precision_forecast(
    epochs: &[f64],
    geometries: &[LinkGeometry],
    cfg: &OpticalConfig,
    fc: &ForecastConfig,
) -> Result<Forecast, EstimatorError> {
    if fc.trials < 10 {
        return Err(EstimatorError::TooFewTrials(fc.trials));
    }
    fc.noise.validate()?;
    let red = RedshiftParams { alpha: fc.alpha };
    let trials: Vec<TrialResult> = (0..fc.trials as u64)
        .into_par_iter()
        .map(|k| {
            let seed = derive_seed(fc.seed, k);
            let data = synthesize_dataset(epochs, geometries, cfg, &red, &fc.noise, seed)?;
            let estimate = estimate_alpha_with(&data, cfg, fc.model)?;
            Ok(TrialResult { seed, estimate })
        })
        .collect::<Result<_, EstimatorError>>()?;

    let n = trials.len() as f64;
    let mean_alpha = trials.iter().map(|t| t.estimate.alpha_hat).sum::<f64>() / n;
    let var = trials
        .iter()
        .map(|t| (t.estimate.alpha_hat - mean_alpha).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let mean_chi2_per_dof = trials.iter().map(|t| t.estimate.chi2_per_dof).sum::<f64>() / n;
    Ok(Forecast {
        trials,
        mean_alpha,
        sigma_empirical: var.sqrt(),
        sigma_analytic: analytic_sigma_alpha(geometries, cfg, &red, &fc.noise)?,
        mean_chi2_per_dof,
    })
}

/// Copies of `geometries` with Gaussian velocity errors of `sigma_v` m/s
/// added to every platform, for orbit-knowledge sensitivity studies.
pub fn perturb_velocities(geometries: &[LinkGeometry], sigma_v: f64, seed: u64) -> Vec<LinkGeometry> {
    use crate::constants::C;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_v.abs() / C).expect("finite sigma");
    let mut jitter = || nalgebra::Vector3::from_fn(|_, _| normal.sample(&mut rng));
    geometries
        .iter()
        .map(|g| {
            let mut p = LinkGeometry::from_parts(
                g.beta1 + jitter(),
                g.beta2 + jitter(),
                g.beta3 + jitter(),
                g.n12,
                g.n23,
                g.u1,
                g.u2,
                g.u3,
                g.a1,
                g.t_up,
            );
            p.t_down = g.t_down;
            p
        })
        .collect()
}
