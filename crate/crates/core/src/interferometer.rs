//! Two-MZI time-bin cascade: arrival-time peaks, photon counting and
//! fringe-scan phase readout.
//!
//! A pulse leaving one output of the first interferometer is split into a
//! short (S) and a long (L) time bin; the second interferometer splits each
//! again. With balanced splitters every path carries amplitude 1/4 at one
//! output port, giving three arrival peaks: SS (early), SL + LS (central,
//! interfering) and LL (late).

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::table::{fmt_f64, ColumnTable};

const SIDE_PEAK: f64 = 1.0 / 16.0;
const CENTRAL_MEAN: f64 = 1.0 / 8.0;
const MIN_VISIBILITY: f64 = 0.05;
const MAX_IRLS_ITER: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterferometerError {
    #[error("fringe scan needs at least 4 points spanning pi, got {points} points spanning {span} rad")]
    InsufficientScan { points: usize, span: f64 },
    #[error("fringe fit diverged; residuals {residuals:?}")]
    FitDiverged { residuals: Vec<f64> },
    #[error("fitted visibility {0} below 0.05, phase unidentifiable")]
    DegenerateVisibility(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Detection probability per sent photon in each arrival peak at one port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakIntensities {
    pub early: f64,
    pub central: f64,
    pub late: f64,
}

impl PeakIntensities {
    pub fn total(&self) -> f64 {
        self.early + self.central + self.late
    }
}

/// Output port of the second interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputPort {
    /// The monitored port, central peak `(1 + V cos phi) / 8`.
    Primary,
    /// The other port, central peak `(1 - V cos phi) / 8`.
    Complementary,
}

pub fn cascade_intensities(phi: f64, visibility: f64) -> PeakIntensities {
    cascade_intensities_at(phi, visibility, OutputPort::Primary)
}

pub fn cascade_intensities_at(phi: f64, visibility: f64, port: OutputPort) -> PeakIntensities {
    let fringe = visibility * phi.cos();
    let central = match port {
        OutputPort::Primary => CENTRAL_MEAN * (1.0 + fringe),
        OutputPort::Complementary => CENTRAL_MEAN * (1.0 - fringe),
    };
    PeakIntensities {
        early: SIDE_PEAK,
        central,
        late: SIDE_PEAK,
    }
}

/// Detector and channel losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    /// Probability that a photon reaching the detector is registered,
    /// including link losses.
    pub efficiency: f64,
    /// Background click probability per pulse per peak window.
    pub dark_prob: f64,
}

impl Detector {
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_prob: 0.0,
        }
    }

    pub fn with_efficiency(efficiency: f64) -> Self {
        Self {
            efficiency,
            dark_prob: 0.0,
        }
    }

    fn click_probability(&self, intensity: f64) -> f64 {
        let p = intensity * self.efficiency;
        p + self.dark_prob * (1.0 - p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionHistogram {
    pub counts_early: u64,
    pub counts_central: u64,
    pub counts_late: u64,
    pub n_sent: u64,
    /// Scan offset applied on top of the link phase, rad.
    pub phase_setting: f64,
}

impl DetectionHistogram {
    pub fn total(&self) -> u64 {
        self.counts_early + self.counts_central + self.counts_late
    }
}

/// Draws the three peak counts for `n_sent` pulses. Counts are sampled as a
/// multinomial through sequential conditional binomials, so each peak is
/// marginally `Binomial(n_sent, p_peak)` and the total never exceeds
/// `n_sent`.
pub fn simulate_counts(
    intensities: &PeakIntensities,
    n_sent: u64,
    detector: &Detector,
    seed: u64,
) -> DetectionHistogram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_counts(intensities, n_sent, detector, &mut rng)
}

fn sample_counts(
    intensities: &PeakIntensities,
    n_sent: u64,
    detector: &Detector,
    rng: &mut ChaCha8Rng,
) -> DetectionHistogram {
    let probs = [
        detector.click_probability(intensities.early),
        detector.click_probability(intensities.central),
        detector.click_probability(intensities.late),
    ];
    let mut remaining = n_sent;
    let mut left_mass = 1.0;
    let mut counts = [0u64; 3];
    for (count, &p) in counts.iter_mut().zip(&probs) {
        if remaining == 0 || left_mass <= 0.0 {
            break;
        }
        let conditional = (p / left_mass).clamp(0.0, 1.0);
        *count = Binomial::new(remaining, conditional)
            .expect("conditional probability lies in [0, 1]")
            .sample(rng);
        remaining -= *count;
        left_mass -= p;
    }
    DetectionHistogram {
        counts_early: counts[0],
        counts_central: counts[1],
        counts_late: counts[2],
        n_sent,
        phase_setting: 0.0,
    }
}

fn check_scan(offsets: &[f64]) -> Result<(), InterferometerError> {
    let lo = offsets.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if offsets.is_empty() { 0.0 } else { hi - lo };
    if offsets.len() < 4 || !(span >= std::f64::consts::PI - 1e-12) {
        return Err(InterferometerError::InsufficientScan {
            points: offsets.len(),
            span,
        });
    }
    Ok(())
}

/// `n` equally spaced offsets over one full period.
pub fn uniform_offsets(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| std::f64::consts::TAU * k as f64 / n as f64)
        .collect()
}

/// One histogram per offset, each at total phase `base_phase + offset`.
pub fn fringe_scan(
    offsets: &[f64],
    base_phase: f64,
    visibility: f64,
    n_per_point: u64,
    detector: &Detector,
    seed: u64,
) -> Result<Vec<DetectionHistogram>, InterferometerError> {
    check_scan(offsets)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(offsets
        .iter()
        .map(|&offset| {
            let intensities = cascade_intensities(base_phase + offset, visibility);
            DetectionHistogram {
                phase_setting: offset,
                ..sample_counts(&intensities, n_per_point, detector, &mut rng)
            }
        })
        .collect())
}

/// Expected counts rounded to the nearest integer, no sampling noise.
pub fn noiseless_scan(
    offsets: &[f64],
    base_phase: f64,
    visibility: f64,
    n_per_point: u64,
    detector: &Detector,
) -> Result<Vec<DetectionHistogram>, InterferometerError> {
    check_scan(offsets)?;
    let n = n_per_point as f64;
    Ok(offsets
        .iter()
        .map(|&offset| {
            let i = cascade_intensities(base_phase + offset, visibility);
            DetectionHistogram {
                counts_early: (n * detector.click_probability(i.early)).round() as u64,
                counts_central: (n * detector.click_probability(i.central)).round() as u64,
                counts_late: (n * detector.click_probability(i.late)).round() as u64,
                n_sent: n_per_point,
                phase_setting: offset,
            }
        })
        .collect())
}

/// Result of a fringe fit `rate = A (1 + V cos(phi + offset))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseFit {
    /// Phase in `(-pi, pi]`.
    pub phi: f64,
    pub sigma_phi: f64,
    pub visibility: f64,
    pub amplitude: f64,
    pub chi2: f64,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = phi - TAU * (phi / TAU).round();
    if w <= -PI {
        w + TAU
    } else if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Weighted least-squares fit of the central-peak counts.
///
/// The model is rewritten as `A + q cos(offset) - r sin(offset)` with
/// `q = A V cos(phi)` and `r = A V sin(phi)`, which is linear; the binomial
/// weights are iterated from the model prediction. The phase variance is
/// propagated from the parameter covariance.
pub fn fit_phase(scan: &[DetectionHistogram]) -> Result<PhaseFit, InterferometerError> {
    let offsets: Vec<f64> = scan.iter().map(|h| h.phase_setting).collect();
    check_scan(&offsets)?;
    if scan.iter().any(|h| h.n_sent == 0) {
        return Err(InterferometerError::InvalidArgument("scan point with n_sent = 0".into()));
    }

    let rates: Vec<f64> = scan
        .iter()
        .map(|h| h.counts_central as f64 / h.n_sent as f64)
        .collect();
    let design: Vec<Vector3<f64>> = offsets
        .iter()
        .map(|o| Vector3::new(1.0, o.cos(), -o.sin()))
        .collect();
    let variance = |p: f64, n: f64| -> f64 { (p * (1.0 - p)).max(1.0 / n) / n };

    let mut weights: Vec<f64> = scan
        .iter()
        .zip(&rates)
        .map(|(h, &p)| 1.0 / variance(p, h.n_sent as f64))
        .collect();
    let mut params = Vector3::zeros();
    let mut cov = Matrix3::zeros();
    let mut converged = false;
    for _ in 0..MAX_IRLS_ITER {
        let mut normal = Matrix3::zeros();
        let mut rhs = Vector3::zeros();
        for ((x, &y), &w) in design.iter().zip(&rates).zip(&weights) {
            normal += x * x.transpose() * w;
            rhs += x * (w * y);
        }
        let Some(inv) = normal.try_inverse() else {
            break;
        };
        let next = inv * rhs;
        if !next.iter().all(|v| v.is_finite()) {
            break;
        }
        let step = (next - params).norm();
        params = next;
        cov = inv;
        weights = scan
            .iter()
            .zip(&design)
            .map(|(h, x)| 1.0 / variance(x.dot(&params).clamp(0.0, 1.0), h.n_sent as f64))
            .collect();
        if step <= 1e-9 * params.norm() {
            converged = true;
            break;
        }
    }

    let residuals: Vec<f64> = design
        .iter()
        .zip(&rates)
        .map(|(x, y)| y - x.dot(&params))
        .collect();
    let amplitude = params[0];
    if !converged || !(amplitude > 0.0) {
        return Err(InterferometerError::FitDiverged { residuals });
    }
    let (q, r) = (params[1], params[2]);
    let rho2 = q * q + r * r;
    let visibility = rho2.sqrt() / amplitude;
    if visibility < MIN_VISIBILITY {
        return Err(InterferometerError::DegenerateVisibility(visibility));
    }
    let grad = Vector3::new(0.0, -r / rho2, q / rho2);
    let sigma_phi = (grad.transpose() * cov * grad)[(0, 0)].sqrt();
    let chi2 = residuals
        .iter()
        .zip(&weights)
        .map(|(res, w)| res * res * w)
        .sum();
    Ok(PhaseFit {
        phi: wrap_phase(r.atan2(q)),
        sigma_phi,
        visibility,
        amplitude,
        chi2,
    })
}

/// Cramér-Rao bound on the fitted phase for a scan with unknown amplitude,
/// visibility and phase, binomial counts per point.
pub fn phase_crb(
    offsets: &[f64],
    base_phase: f64,
    visibility: f64,
    n_per_point: u64,
    detector: &Detector,
) -> f64 {
    let n = n_per_point as f64;
    let eta = detector.efficiency;
    let amp = CENTRAL_MEAN;
    let mut fisher = Matrix3::zeros();
    for &o in offsets {
        let angle = base_phase + o;
        let (s, c) = angle.sin_cos();
        let p = detector
            .click_probability(amp * (1.0 + visibility * c))
            .max(1e-15);
        let grad = Vector3::new(eta * (1.0 + visibility * c), eta * amp * c, -eta * amp * visibility * s)
            * (1.0 - detector.dark_prob);
        fisher += grad * grad.transpose() * (n / (p * (1.0 - p)));
    }
    fisher
        .try_inverse()
        .map(|inv| inv[(2, 2)].sqrt())
        .unwrap_or(f64::INFINITY)
}

/// Columnar form of a scan: offset, the three counts and `n_sent`.
pub fn histograms_table(scan: &[DetectionHistogram]) -> ColumnTable {
    let mut table = ColumnTable::new(["offset_rad", "early", "central", "late", "n_sent"]);
    for h in scan {
        table.push([
            fmt_f64(h.phase_setting),
            h.counts_early.to_string(),
            h.counts_central.to_string(),
            h.counts_late.to_string(),
            h.n_sent.to_string(),
        ]);
    }
    table
}
