//! Relativistic frequency ratios and interferometric phases of the
//! ground-to-satellite optical link.
//!
//! The exact ratios differ from one at the 1e-10 level, so every ratio is
//! evaluated as an offset `ratio - 1` from the numerator-minus-denominator
//! differences, never by subtracting one from a rounded quotient.

use nalgebra::Vector3;
use thiserror::Error;

use crate::constants::C;
use crate::kinematics::LinkGeometry;

const MIN_DENOMINATOR: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid optical configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Optical parameters shared by both terminals.
///
/// `omega0` is the proper emission frequency and doubles as the frequency
/// of the emitted line at the ground station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalConfig {
    /// Wavelength, m.
    pub wavelength: f64,
    /// Angular frequency `2 pi c / wavelength`, rad/s.
    pub omega0: f64,
    /// MZI length imbalance, m.
    pub delay_length: f64,
    pub group_index: f64,
    /// Proper temporal imbalance `delay_length * group_index / c`, s.
    pub tau_l: f64,
}

impl OpticalConfig {
    pub fn new(wavelength: f64, delay_length: f64) -> Result<Self, LinkError> {
        Self::with_group_index(wavelength, delay_length, 1.0)
    }

    pub fn with_group_index(
        wavelength: f64,
        delay_length: f64,
        group_index: f64,
    ) -> Result<Self, LinkError> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(LinkError::InvalidConfig(format!(
                "wavelength {wavelength} m must be positive"
            )));
        }
        if !(delay_length > 0.0 && delay_length.is_finite()) {
            return Err(LinkError::InvalidConfig(format!(
                "delay length {delay_length} m must be positive"
            )));
        }
        if !(group_index >= 1.0 && group_index.is_finite()) {
            return Err(LinkError::InvalidConfig(format!(
                "group index {group_index} must be at least 1"
            )));
        }
        Ok(Self {
            wavelength,
            omega0: std::f64::consts::TAU * C / wavelength,
            delay_length,
            group_index,
            tau_l: delay_length * group_index / C,
        })
    }

    /// `omega0 * tau_l`, the factor converting fractional frequency shifts
    /// into phase.
    pub fn phase_scale(&self) -> f64 {
        self.omega0 * self.tau_l
    }
}

/// Red-shift violation parameter; `alpha = 0` in general relativity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RedshiftParams {
    pub alpha: f64,
}

impl RedshiftParams {
    pub fn new(alpha: f64) -> Result<Self, LinkError> {
        if !(alpha.abs() < 1.0) {
            return Err(LinkError::InvalidArgument(format!("|alpha| = {alpha} must be below 1")));
        }
        Ok(Self { alpha })
    }
}

/// Phases measured at the spacecraft and at the ground station and the
/// Doppler-cancelling combination `S = phi_sc - phi_gs / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    pub phi_sc: f64,
    pub phi_gs: f64,
    pub s_signal: f64,
}

impl PhasePair {
    pub fn new(phi_sc: f64, phi_gs: f64) -> Self {
        Self {
            phi_sc,
            phi_gs,
            s_signal: phi_sc - 0.5 * phi_gs,
        }
    }
}

/// `(1 + alpha) (2 pi / lambda) g h l / c^2`.
pub fn gravitational_phase(cfg: &OpticalConfig, g: f64, h: f64, alpha: f64) -> Result<f64, LinkError> {
    if !(g > 0.0) || !(h >= 0.0) {
        return Err(LinkError::InvalidArgument(format!(
            "need g > 0 and h >= 0, got g = {g}, h = {h}"
        )));
    }
    Ok((1.0 + alpha) * std::f64::consts::TAU / cfg.wavelength * g * h * cfg.delay_length / (C * C))
}

/// Fractional frequency shift `(1 + alpha)(U2 - U1)`.
pub fn redshift_fraction(red: &RedshiftParams, u1: f64, u2: f64) -> f64 {
    (1.0 + red.alpha) * (u2 - u1)
}

fn check_denominator(value: f64, what: &str) -> Result<f64, LinkError> {
    if value < MIN_DENOMINATOR || !value.is_finite() {
        return Err(LinkError::DegenerateGeometry(format!("{what} = {value} below 0.5")));
    }
    Ok(value)
}

/// `|b2|^2 - |b1|^2` without cancellation.
fn squared_norm_difference(b2: &Vector3<f64>, b1: &Vector3<f64>) -> f64 {
    (b2 - b1).dot(&(b2 + b1))
}

/// Fractional offsets of the two factors of the uplink ratio:
/// gravitational/transverse factor `1 + x`, Doppler factor `1 + y`, plus the
/// common denominator of the first factor.
struct UplinkFactors {
    x: f64,
    y: f64,
    potential_denominator: f64,
}

fn uplink_factors(geom: &LinkGeometry, alpha: f64) -> Result<UplinkFactors, LinkError> {
    let b1 = &geom.beta1;
    let b2 = &geom.beta2;
    // numerator - denominator of the potential factor, with (U2 - U1)
    // scaled by (1 + alpha)
    let potential_numerator_excess =
        (1.0 + alpha) * (geom.u2 - geom.u1) + 0.5 * squared_norm_difference(b2, b1);
    let potential_denominator =
        check_denominator(1.0 - geom.u2 - 0.5 * b2.norm_squared(), "1 - U2 - beta2^2/2")?;
    let doppler_denominator = check_denominator(1.0 - geom.n12.dot(b1), "1 - n12.beta1")?;
    Ok(UplinkFactors {
        x: potential_numerator_excess / potential_denominator,
        y: geom.n12.dot(&(b1 - b2)) / doppler_denominator,
        potential_denominator,
    })
}

/// `omega12 / omega0 - 1` with the potential difference scaled by `1 + alpha`.
pub fn uplink_frequency_offset(geom: &LinkGeometry, red: &RedshiftParams) -> Result<f64, LinkError> {
    let f = uplink_factors(geom, red.alpha)?;
    Ok(f.x + f.y + f.x * f.y)
}

/// `omega12 / omega0` exactly as the product of the potential and Doppler
/// factors (general-relativistic prediction).
pub fn uplink_frequency_ratio(geom: &LinkGeometry) -> Result<f64, LinkError> {
    Ok(1.0 + uplink_frequency_offset(geom, &RedshiftParams::default())?)
}

/// `omega13 / omega0 - 1` after the go-return trip.
pub fn roundtrip_frequency_offset(geom: &LinkGeometry) -> Result<f64, LinkError> {
    let down_den = check_denominator(1.0 - geom.n23.dot(&geom.beta2), "1 - n23.beta2")?;
    let up_den = check_denominator(1.0 - geom.n12.dot(&geom.beta1), "1 - n12.beta1")?;
    let down = geom.n23.dot(&(geom.beta2 - geom.beta3)) / down_den;
    let up = geom.n12.dot(&(geom.beta1 - geom.beta2)) / up_den;
    Ok(down + up + down * up)
}

/// `omega13 / omega0`; potentials cancel because the pulse returns to the
/// emission potential.
pub fn roundtrip_frequency_ratio(geom: &LinkGeometry) -> Result<f64, LinkError> {
    Ok(1.0 + roundtrip_frequency_offset(geom)?)
}

/// Phases `(omega12 - omega11) tau_l` and `(omega13 - omega11) tau_l`.
pub fn phase_pair(
    geom: &LinkGeometry,
    cfg: &OpticalConfig,
    red: &RedshiftParams,
) -> Result<PhasePair, LinkError> {
    let scale = cfg.phase_scale();
    Ok(PhasePair::new(
        scale * uplink_frequency_offset(geom, red)?,
        scale * roundtrip_frequency_offset(geom)?,
    ))
}

/// Second-order expansion of `S / (omega0 tau_l)`:
/// `(1+alpha)(U2-U1) + |beta1-beta2|^2/2 - (d1-d2)^2 - T n12.a1 / c`.
pub fn expanded_signal(geom: &LinkGeometry, red: &RedshiftParams) -> f64 {
    (1.0 + red.alpha) * (geom.u2 - geom.u1) + expanded_kinematic_terms(geom)
}

/// Velocity and acceleration terms of [`expanded_signal`], without the
/// potential difference.
pub fn expanded_kinematic_terms(geom: &LinkGeometry) -> f64 {
    let dd = geom.d1 - geom.d2;
    0.5 * (geom.beta1 - geom.beta2).norm_squared() - dd * dd - geom.t_up * geom.n12.dot(&geom.a1) / C
}

/// First-order Doppler parts of `phi_sc / (omega0 tau_l)` and
/// `phi_gs / (omega0 tau_l)`.
pub fn first_order_doppler(geom: &LinkGeometry) -> (f64, f64) {
    let up = geom.n12.dot(&(geom.beta1 - geom.beta2));
    let down = geom.n23.dot(&(geom.beta2 - geom.beta3));
    (up, up + down)
}

/// Exact split of the target signal, `S = offset + (1 + alpha) * gravity`.
///
/// `S` is affine in alpha because alpha only enters the numerator of the
/// potential factor; `gravity` reduces to `omega0 tau_l (U2 - U1)` at zero
/// velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalDecomposition {
    pub offset: f64,
    pub gravity: f64,
}

pub fn signal_decomposition(geom: &LinkGeometry, cfg: &OpticalConfig) -> Result<SignalDecomposition, LinkError> {
    let scale = cfg.phase_scale();
    let f = uplink_factors(geom, -1.0)?;
    let phi_sc_kinematic = scale * (f.x + f.y + f.x * f.y);
    let phi_gs = scale * roundtrip_frequency_offset(geom)?;
    Ok(SignalDecomposition {
        offset: phi_sc_kinematic - 0.5 * phi_gs,
        gravity: scale * (geom.u2 - geom.u1) * (1.0 + f.y) / f.potential_denominator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::R_EARTH;
    use crate::kinematics::newtonian_potential;

    fn static_geometry(u1: f64, u2: f64) -> LinkGeometry {
        let n = Vector3::x();
        LinkGeometry::from_parts(
            Vector3::zeros(),
            Vector3::zeros(),
            Vector3::zeros(),
            n,
            -n,
            u1,
            u2,
            u1,
            Vector3::zeros(),
            1.334e-3,
        )
    }

    fn reference_optics() -> OpticalConfig {
        OpticalConfig::new(800e-9, 6e3).unwrap()
    }

    #[test]
    fn optical_config_invariants() {
        let cfg = reference_optics();
        assert!((cfg.omega0 * cfg.wavelength / (std::f64::consts::TAU * C) - 1.0).abs() < 1e-9);
        assert!((cfg.tau_l - 2.0014e-5).abs() < 1e-9);
        assert!(OpticalConfig::new(-800e-9, 6e3).is_err());
        assert!(OpticalConfig::new(800e-9, 0.0).is_err());
    }

    #[test]
    fn gravitational_phase_examples() {
        let cfg = reference_optics();
        let phi = gravitational_phase(&cfg, 9.81, 4e5, 0.0).unwrap();
        // direct evaluation: 2 pi / 800e-9 * 9.81 * 4e5 * 6e3 / c^2
        let direct = 2.0 * std::f64::consts::PI / 800e-9 * 9.81 * 4e5 * 6e3 / (C * C);
        assert!((phi - direct).abs() < 1e-12);
        assert!((phi - 2.06).abs() < 0.01);
        assert_eq!(gravitational_phase(&cfg, 9.81, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(gravitational_phase(&cfg, 9.81, 4e5, 1.0).unwrap(), 2.0 * phi);
    }

    #[test]
    fn identity_configuration_has_unit_ratio() {
        let g = static_geometry(6.961e-10, 6.961e-10);
        assert_eq!(uplink_frequency_ratio(&g).unwrap(), 1.0);
        assert_eq!(roundtrip_frequency_ratio(&g).unwrap(), 1.0);
    }

    #[test]
    fn pure_gravitational_redshift() {
        let u1 = 6.961e-10;
        let u2 = u1 - 4.11e-11;
        let g = static_geometry(u1, u2);
        let off = uplink_frequency_offset(&g, &RedshiftParams::default()).unwrap();
        // (1 - U1)/(1 - U2) - 1 = (U2 - U1)/(1 - U2)
        assert!((off - (-4.11e-11)).abs() < 1e-15);
        assert!((off - (u2 - u1) / (1.0 - u2)).abs() < 1e-24);
    }

    #[test]
    fn first_order_doppler_dominates_uplink() {
        let n = Vector3::x();
        let b2 = n * 2.5e-5;
        let g = LinkGeometry::from_parts(Vector3::zeros(), b2, Vector3::zeros(), n, -n, 7e-10, 7e-10, 7e-10, Vector3::zeros(), 1e-3);
        let off = uplink_frequency_offset(&g, &RedshiftParams::default()).unwrap();
        assert!((off - (-2.5e-5)).abs() < 1e-9);
    }

    #[test]
    fn two_way_doppler() {
        let n = Vector3::x();
        let d2 = 2.5e-5;
        let g = LinkGeometry::from_parts(Vector3::zeros(), n * d2, Vector3::zeros(), n, -n, 7e-10, 7e-10, 7e-10, Vector3::zeros(), 1e-3);
        let off = roundtrip_frequency_offset(&g).unwrap();
        // (1 - d2)/(1 + d2) - 1 = -2 d2 + 2 d2^2 - ...
        assert!((off - (-2.0 * d2)).abs() < 3.0 * d2 * d2);
        assert!((off - (-2.0 * d2 / (1.0 + d2))).abs() < 1e-20);
    }

    #[test]
    fn comoving_endpoints_cancel_on_roundtrip() {
        let n = Vector3::new(0.6, 0.8, 0.0);
        let b = Vector3::new(1.2e-6, -0.7e-6, 0.3e-6);
        let g = LinkGeometry::from_parts(b, b, b, n, -n, 7e-10, 6.5e-10, 7e-10, Vector3::zeros(), 1e-3);
        assert_eq!(roundtrip_frequency_ratio(&g).unwrap(), 1.0);
        assert_eq!(roundtrip_frequency_offset(&g).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_denominators() {
        let n = Vector3::x();
        let g = LinkGeometry::from_parts(n * 0.6, Vector3::zeros(), Vector3::zeros(), n, -n, 7e-10, 7e-10, 7e-10, Vector3::zeros(), 1e-3);
        assert!(matches!(uplink_frequency_ratio(&g), Err(LinkError::DegenerateGeometry(_))));
        assert!(matches!(roundtrip_frequency_ratio(&g), Err(LinkError::DegenerateGeometry(_))));
    }

    #[test]
    fn static_phase_pair() {
        let cfg = reference_optics();
        let red = RedshiftParams::default();
        let g = static_geometry(7e-10, 7e-10);
        let p = phase_pair(&g, &cfg, &red).unwrap();
        assert_eq!((p.phi_sc, p.phi_gs, p.s_signal), (0.0, 0.0, 0.0));

        let u1 = newtonian_potential(&Vector3::new(R_EARTH, 0.0, 0.0));
        let u2 = newtonian_potential(&Vector3::new(R_EARTH + 4e5, 0.0, 0.0));
        let p = phase_pair(&static_geometry(u1, u2), &cfg, &red).unwrap();
        let by_hand = -cfg.omega0 * 4.11e-11 * 2.0014e-5;
        assert!((p.phi_sc - by_hand).abs() / by_hand.abs() < 0.01);
        assert!((p.phi_sc - (-1.94)).abs() < 0.0194);
        assert_eq!(p.phi_gs, 0.0);
        assert_eq!(p.s_signal, p.phi_sc);
    }

    #[test]
    fn static_expansion_is_pure_redshift() {
        let g = static_geometry(7e-10, 6.6e-10);
        let red = RedshiftParams { alpha: 1e-5 };
        assert_eq!(expanded_signal(&g, &red), (1.0 + 1e-5) * (6.6e-10 - 7e-10));
        let diff = expanded_signal(&g, &red) - expanded_signal(&g, &RedshiftParams::default());
        assert!((diff - 1e-5 * (6.6e-10 - 7e-10)).abs() < 1e-25);
    }

    #[test]
    fn redshift_fraction_examples() {
        let zero = RedshiftParams::default();
        assert_eq!(redshift_fraction(&zero, 7e-10, 7e-10), 0.0);
        let u1 = newtonian_potential(&Vector3::new(R_EARTH, 0.0, 0.0));
        let u2 = newtonian_potential(&Vector3::new(R_EARTH + 4e5, 0.0, 0.0));
        assert!((redshift_fraction(&zero, u1, u2) - (-4.11e-11)).abs() < 0.01 * 4.11e-11);
        assert_eq!(redshift_fraction(&RedshiftParams { alpha: -1.0 }, u1, u2), 0.0);
        assert!(RedshiftParams::new(1.5).is_err());
    }

    #[test]
    fn decomposition_reproduces_phase_pair() {
        let cfg = reference_optics();
        let n = Vector3::new(0.3, 0.9, 0.1).normalize();
        let g = LinkGeometry::from_parts(
            Vector3::new(1.1e-6, 0.4e-6, 0.0),
            Vector3::new(-1.2e-5, 2.0e-5, 0.3e-5),
            Vector3::new(1.1e-6, 0.41e-6, 0.0),
            n,
            -n,
            6.96e-10,
            6.55e-10,
            6.96e-10,
            Vector3::new(-3e-2, -1e-2, 0.0),
            2e-3,
        );
        for alpha in [0.0, 3e-4, -0.2] {
            let red = RedshiftParams { alpha };
            let s = phase_pair(&g, &cfg, &red).unwrap().s_signal;
            let d = signal_decomposition(&g, &cfg).unwrap();
            assert!((s - (d.offset + (1.0 + alpha) * d.gravity)).abs() < 1e-8);
        }
    }
}
