//! Platform trajectories, light-time solution and link geometry assembly.
//!
//! All positions are Earth-centered inertial (ECI), metres, and all epochs
//! are seconds of a single continuous scenario time scale. At scenario time
//! zero the Earth-fixed and inertial axes coincide; Earth rotation is the
//! rotation about +z at [`OMEGA_EARTH`].

use nalgebra::Vector3;
use thiserror::Error;

use crate::constants::{C, GM_EARTH, OMEGA_EARTH, R_EARTH};
use crate::ephemeris::EphemerisError;

/// Lower bound of the semi-major axis accepted for analytic orbits, m.
pub const MIN_SEMI_MAJOR_AXIS: f64 = 6.5e6;
/// Upper bound of the semi-major axis accepted for analytic orbits, m.
pub const MAX_SEMI_MAJOR_AXIS: f64 = 5.0e7;

const LIGHT_TIME_TOLERANCE: f64 = 1e-12;
const LIGHT_TIME_MAX_ITER: usize = 50;
const MIN_RANGE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("semi-major axis {0} m outside [6.5e6, 5e7] m")]
    BadAltitude(f64),
    #[error("station latitude {0} rad outside [-pi/2, pi/2]")]
    BadLatitude(f64),
    #[error("light-time iteration did not converge after {iterations} iterations (last step {last_step:e} s)")]
    NoConvergence { iterations: usize, last_step: f64 },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid state vector: {0}")]
    InvalidState(String),
    #[error("invalid link geometry: {0}")]
    InvalidGeometry(String),
    #[error(transparent)]
    Ephemeris(#[from] EphemerisError),
}

/// Position, velocity and epoch of a platform in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub epoch: f64,
}

impl StateVector {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>, epoch: f64) -> Self {
        Self {
            position,
            velocity,
            epoch,
        }
    }

    /// Checks the near-Earth sanity window: `|r| > 6.3e6 m`, `|v| < 1.1e4 m/s`.
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let r = self.position.norm();
        let v = self.velocity.norm();
        if !(r > 6.3e6) || !r.is_finite() {
            return Err(KinematicsError::InvalidState(format!(
                "|position| = {r} m must exceed 6.3e6 m"
            )));
        }
        if !(v < 1.1e4) {
            return Err(KinematicsError::InvalidState(format!(
                "|velocity| = {v} m/s must be below 1.1e4 m/s"
            )));
        }
        Ok(())
    }

    /// Velocity in units of c.
    pub fn beta(&self) -> Vector3<f64> {
        self.velocity / C
    }
}

/// A time-parameterized state source.
pub trait Trajectory: Sync {
    fn state_at(&self, t: f64) -> Result<StateVector, KinematicsError>;

    /// Inertial acceleration. The default differentiates the velocity
    /// numerically with a 1 s central step.
    fn acceleration_at(&self, t: f64) -> Result<Vector3<f64>, KinematicsError> {
        let h = 1.0;
        let fwd = self.state_at(t + h)?;
        let bwd = self.state_at(t - h)?;
        Ok((fwd.velocity - bwd.velocity) / (2.0 * h))
    }
}

/// Two-body circular Keplerian orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularOrbit {
    pub semi_major_axis: f64,
    pub inclination: f64,
    pub raan: f64,
    /// Argument of latitude at t = 0.
    pub phase: f64,
}

impl CircularOrbit {
    pub fn new(
        semi_major_axis: f64,
        inclination: f64,
        raan: f64,
        phase: f64,
    ) -> Result<Self, KinematicsError> {
        if !(MIN_SEMI_MAJOR_AXIS..=MAX_SEMI_MAJOR_AXIS).contains(&semi_major_axis) {
            return Err(KinematicsError::BadAltitude(semi_major_axis));
        }
        Ok(Self {
            semi_major_axis,
            inclination,
            raan,
            phase,
        })
    }

    /// Mean motion, rad/s.
    pub fn mean_motion(&self) -> f64 {
        (GM_EARTH / self.semi_major_axis.powi(3)).sqrt()
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.mean_motion()
    }

    pub fn state(&self, t: f64) -> StateVector {
        let a = self.semi_major_axis;
        let n = self.mean_motion();
        let u = self.phase + n * t;
        let (su, cu) = u.sin_cos();
        let (si, ci) = self.inclination.sin_cos();
        let (so, co) = self.raan.sin_cos();

        let position = Vector3::new(
            co * cu - so * su * ci,
            so * cu + co * su * ci,
            su * si,
        ) * a;
        let velocity = Vector3::new(
            -co * su - so * cu * ci,
            -so * su + co * cu * ci,
            cu * si,
        ) * (a * n);
        StateVector::new(position, velocity, t)
    }
}

impl Trajectory for CircularOrbit {
    fn state_at(&self, t: f64) -> Result<StateVector, KinematicsError> {
        Ok(self.state(t))
    }

    fn acceleration_at(&self, t: f64) -> Result<Vector3<f64>, KinematicsError> {
        let r = self.state(t).position;
        Ok(-r * (GM_EARTH / r.norm().powi(3)))
    }
}

pub fn circular_orbit_state(
    semi_major_axis: f64,
    inclination: f64,
    raan: f64,
    phase: f64,
    t: f64,
) -> Result<StateVector, KinematicsError> {
    Ok(CircularOrbit::new(semi_major_axis, inclination, raan, phase)?.state(t))
}

/// Station fixed on a spherical, uniformly rotating Earth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStation {
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
}

impl GroundStation {
    pub fn new(lat: f64, lon: f64, alt: f64) -> Result<Self, KinematicsError> {
        if !(lat.abs() <= std::f64::consts::FRAC_PI_2) {
            return Err(KinematicsError::BadLatitude(lat));
        }
        Ok(Self { lat, lon, alt })
    }

    pub fn radius(&self) -> f64 {
        R_EARTH + self.alt
    }

    pub fn position(&self, t: f64) -> Vector3<f64> {
        let r = self.radius();
        let (sl, cl) = self.lat.sin_cos();
        let (sa, ca) = (self.lon + OMEGA_EARTH * t).sin_cos();
        Vector3::new(r * cl * ca, r * cl * sa, r * sl)
    }

    pub fn state(&self, t: f64) -> StateVector {
        let position = self.position(t);
        StateVector::new(position, earth_rotation_vector().cross(&position), t)
    }

    /// `omega x (omega x r)`, the centripetal acceleration of the station.
    pub fn centripetal_acceleration(&self, t: f64) -> Vector3<f64> {
        let w = earth_rotation_vector();
        w.cross(&w.cross(&self.position(t)))
    }
}

impl Trajectory for GroundStation {
    fn state_at(&self, t: f64) -> Result<StateVector, KinematicsError> {
        Ok(self.state(t))
    }

    fn acceleration_at(&self, t: f64) -> Result<Vector3<f64>, KinematicsError> {
        Ok(self.centripetal_acceleration(t))
    }
}

pub fn ground_station_state(
    lat: f64,
    lon: f64,
    alt: f64,
    t: f64,
) -> Result<StateVector, KinematicsError> {
    Ok(GroundStation::new(lat, lon, alt)?.state(t))
}

/// Uniform straight-line motion; `position(t) = origin + velocity * (t - t0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMotion {
    pub origin: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub t0: f64,
}

impl LinearMotion {
    pub fn fixed(position: Vector3<f64>) -> Self {
        Self {
            origin: position,
            velocity: Vector3::zeros(),
            t0: 0.0,
        }
    }
}

impl Trajectory for LinearMotion {
    fn state_at(&self, t: f64) -> Result<StateVector, KinematicsError> {
        Ok(StateVector::new(
            self.origin + self.velocity * (t - self.t0),
            self.velocity,
            t,
        ))
    }

    fn acceleration_at(&self, _t: f64) -> Result<Vector3<f64>, KinematicsError> {
        Ok(Vector3::zeros())
    }
}

pub fn earth_rotation_vector() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, OMEGA_EARTH)
}

/// `U = GM / (c^2 |r|)`, positive and decreasing with altitude.
pub fn newtonian_potential(position: &Vector3<f64>) -> f64 {
    GM_EARTH / (C * C * position.norm())
}

/// Result of a one-way light-time solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightTime {
    /// Propagation time, s.
    pub duration: f64,
    /// Unit vector from the emission point to the reception point.
    pub n_hat: Vector3<f64>,
    pub receiver: StateVector,
    pub iterations: usize,
}

/// Solves `|r_recv(t_emit + T) - r_emit| = c T` by fixed-point iteration.
pub fn solve_light_time(
    emit_state: &StateVector,
    receiver: &dyn Trajectory,
    t_emit: f64,
) -> Result<LightTime, KinematicsError> {
    let r_emit = emit_state.position;
    let mut recv = receiver.state_at(t_emit)?;
    let mut duration = (recv.position - r_emit).norm() / C;
    if duration * C < MIN_RANGE {
        return Err(KinematicsError::DegenerateGeometry(
            "receiver coincides with emitter".into(),
        ));
    }
    let mut last_step = f64::INFINITY;
    for iteration in 1..=LIGHT_TIME_MAX_ITER {
        recv = receiver.state_at(t_emit + duration)?;
        let range = (recv.position - r_emit).norm();
        if range < MIN_RANGE {
            return Err(KinematicsError::DegenerateGeometry(
                "receiver coincides with emitter".into(),
            ));
        }
        let next = range / C;
        last_step = next - duration;
        duration = next;
        if last_step.abs() < LIGHT_TIME_TOLERANCE {
            let recv = receiver.state_at(t_emit + duration)?;
            let n_hat = (recv.position - r_emit).normalize();
            return Ok(LightTime {
                duration,
                n_hat,
                receiver: recv,
                iterations: iteration,
            });
        }
    }
    Err(KinematicsError::NoConvergence {
        iterations: LIGHT_TIME_MAX_ITER,
        last_step,
    })
}

/// Every kinematic input of the relativistic link model.
///
/// Index 1 is the ground station at emission, 2 the spacecraft at
/// reception (and instantaneous retro-reflection), 3 the ground station at
/// reception of the returned beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub beta1: Vector3<f64>,
    pub beta2: Vector3<f64>,
    pub beta3: Vector3<f64>,
    /// Uplink direction, GS to SC.
    pub n12: Vector3<f64>,
    /// Downlink direction, SC to GS.
    pub n23: Vector3<f64>,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    /// Centripetal acceleration of the GS at emission, m/s^2.
    pub a1: Vector3<f64>,
    /// Upward propagation time, s.
    pub t_up: f64,
    /// Downward propagation time, s.
    pub t_down: f64,
    /// `n12 . beta1`
    pub d1: f64,
    /// `n12 . beta2`
    pub d2: f64,
    /// `n23 . beta3`
    pub d3: f64,
}

impl LinkGeometry {
    /// Assembles a geometry from its primitive parts and fills in the
    /// projections. `t_down` is set equal to `t_up`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        beta1: Vector3<f64>,
        beta2: Vector3<f64>,
        beta3: Vector3<f64>,
        n12: Vector3<f64>,
        n23: Vector3<f64>,
        u1: f64,
        u2: f64,
        u3: f64,
        a1: Vector3<f64>,
        t_up: f64,
    ) -> Self {
        Self {
            beta1,
            beta2,
            beta3,
            n12,
            n23,
            u1,
            u2,
            u3,
            a1,
            t_up,
            t_down: t_up,
            d1: n12.dot(&beta1),
            d2: n12.dot(&beta2),
            d3: n23.dot(&beta3),
        }
    }

    /// Largest `|beta_i|`.
    pub fn beta_max(&self) -> f64 {
        self.beta1
            .norm()
            .max(self.beta2.norm())
            .max(self.beta3.norm())
    }

    /// Returns a copy with every velocity (and the acceleration) scaled by `s`.
    pub fn scale_velocities(&self, s: f64) -> Self {
        let mut g = Self::from_parts(
            self.beta1 * s,
            self.beta2 * s,
            self.beta3 * s,
            self.n12,
            self.n23,
            self.u1,
            self.u2,
            self.u3,
            self.a1 * s,
            self.t_up,
        );
        g.t_down = self.t_down;
        g
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |msg: String| Err(KinematicsError::InvalidGeometry(msg));
        for (name, n) in [("n12", self.n12), ("n23", self.n23)] {
            if (n.norm() - 1.0).abs() > 1e-12 {
                return bad(format!("|{name}| = {} is not unit", n.norm()));
            }
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2), ("beta3", self.beta3)] {
            if !(b.norm() < 4e-5) {
                return bad(format!("|{name}| = {:e} exceeds 4e-5", b.norm()));
            }
        }
        for (name, u) in [("U1", self.u1), ("U2", self.u2), ("U3", self.u3)] {
            if !(u > 0.0 && u < 1e-8) {
                return bad(format!("{name} = {u:e} outside (0, 1e-8)"));
            }
        }
        if (self.u3 - self.u1).abs() > 1e-15 {
            return bad(format!(
                "U3 - U1 = {:e} exceeds 1e-15",
                self.u3 - self.u1
            ));
        }
        if !(self.t_up >= 0.0) {
            return bad(format!("negative propagation time {}", self.t_up));
        }
        Ok(())
    }
}

/// Builds the full up-and-down link geometry for a pulse emitted by the
/// ground station at `t_emit`.
pub fn build_link_geometry(
    gs: &dyn Trajectory,
    sc: &dyn Trajectory,
    t_emit: f64,
) -> Result<LinkGeometry, KinematicsError> {
    let s1 = gs.state_at(t_emit)?;
    let up = solve_light_time(&s1, sc, t_emit)?;
    let s2 = up.receiver;
    let t2 = t_emit + up.duration;
    let down = solve_light_time(&s2, gs, t2)?;
    let s3 = down.receiver;
    for s in [&s1, &s2, &s3] {
        s.validate()?;
    }
    let a1 = gs.acceleration_at(t_emit)?;

    let mut geom = LinkGeometry::from_parts(
        s1.beta(),
        s2.beta(),
        s3.beta(),
        up.n_hat,
        down.n_hat,
        newtonian_potential(&s1.position),
        newtonian_potential(&s2.position),
        newtonian_potential(&s3.position),
        a1,
        up.duration,
    );
    geom.t_down = down.duration;
    geom.validate()?;
    Ok(geom)
}

/// Elevation of `target` above the local horizontal plane at `station`
/// (spherical Earth), rad.
pub fn elevation(station: &Vector3<f64>, target: &Vector3<f64>) -> f64 {
    let los = target - station;
    (los.dot(&station.normalize()) / los.norm()).asin()
}

/// Finds the first contiguous interval within `[t_start, t_end]` where the
/// spacecraft is above `mask` elevation. Edges are refined by bisection.
pub fn find_pass(
    gs: &dyn Trajectory,
    sc: &dyn Trajectory,
    t_start: f64,
    t_end: f64,
    step: f64,
    mask: f64,
) -> Result<Option<(f64, f64)>, KinematicsError> {
    let elev = |t: f64| -> Result<f64, KinematicsError> {
        Ok(elevation(&gs.state_at(t)?.position, &sc.state_at(t)?.position) - mask)
    };
    let refine = |mut lo: f64, mut hi: f64| -> Result<f64, KinematicsError> {
        let rising = elev(lo)? < 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if (elev(mid)? < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let mut t = t_start;
    let mut prev = elev(t)?;
    let mut rise = if prev >= 0.0 { Some(t_start) } else { None };
    while t < t_end {
        let next_t = (t + step).min(t_end);
        let cur = elev(next_t)?;
        if rise.is_none() && prev < 0.0 && cur >= 0.0 {
            rise = Some(refine(t, next_t)?);
        } else if let Some(r) = rise {
            if prev >= 0.0 && cur < 0.0 {
                return Ok(Some((r, refine(t, next_t)?)));
            }
        }
        prev = cur;
        t = next_t;
    }
    Ok(rise.map(|r| (r, t_end)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn leo_period_matches_keplers_third_law() {
        let a = 6.778e6;
        let orbit = CircularOrbit::new(a, 0.3, 0.1, 0.0).unwrap();
        // Kepler: T^2 = 4 pi^2 a^3 / GM, evaluated independently.
        let kepler = (4.0 * PI * PI * a * a * a / 3.986004418e14).sqrt();
        assert!((orbit.period() - kepler).abs() < 0.1);
        assert!((orbit.period() - 5.554e3).abs() < 1.0);
        // returning to the same state after one period
        let s0 = orbit.state(12.0);
        let s1 = orbit.state(12.0 + kepler);
        assert!((s0.position - s1.position).norm() < 1e-3);
    }

    #[test]
    fn circular_orbit_initial_state_is_on_x_axis() {
        let s = circular_orbit_state(7.0e6, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert!((s.position - Vector3::new(7.0e6, 0.0, 0.0)).norm() < 1e-9);
        assert!(s.velocity.x.abs() < 1e-9 && s.velocity.z.abs() < 1e-9);
        assert!(s.velocity.y > 0.0);
    }

    #[test]
    fn circular_orbit_rejects_low_altitude() {
        assert_eq!(
            circular_orbit_state(1.0e6, 0.0, 0.0, 0.0, 0.0),
            Err(KinematicsError::BadAltitude(1.0e6))
        );
    }

    #[test]
    fn circular_orbit_energy_like_check() {
        let orbit = CircularOrbit::new(6.9e6, 1.1, 2.3, 0.4).unwrap();
        for k in 0..50 {
            let s = orbit.state(k as f64 * 137.0);
            let v2 = s.velocity.norm_squared();
            assert!((v2 * orbit.semi_major_axis / GM_EARTH - 1.0).abs() < 1e-12);
            assert!((s.position.norm() - orbit.semi_major_axis).abs() < 1e-6);
        }
    }

    #[test]
    fn equatorial_station_speed_and_acceleration() {
        let s = GroundStation::new(0.0, 0.3, 0.0).unwrap();
        let v = s.state(100.0).velocity.norm();
        assert!((v - 7.2921159e-5 * 6.371e6).abs() < 0.1);
        let a = s.centripetal_acceleration(100.0).norm();
        let expect = 7.2921159e-5_f64.powi(2) * 6.371e6;
        assert!((a - expect).abs() / expect < 1e-12);
        assert!((a - 3.39e-2).abs() / 3.39e-2 < 0.01);
        // points towards the rotation axis
        let r = s.position(100.0);
        assert!(s.centripetal_acceleration(100.0).dot(&r) < 0.0);
    }

    #[test]
    fn polar_station_is_at_rest() {
        let s = GroundStation::new(FRAC_PI_2, 1.0, 0.0).unwrap();
        assert!(s.state(500.0).velocity.norm() < 1e-9);
        assert!(s.centripetal_acceleration(500.0).norm() < 1e-15);
        assert!(GroundStation::new(1.6, 0.0, 0.0).is_err());
    }

    #[test]
    fn static_light_time() {
        let emit = StateVector::new(Vector3::new(R_EARTH, 0.0, 0.0), Vector3::zeros(), 0.0);
        let recv = LinearMotion::fixed(Vector3::new(R_EARTH + 4e5, 0.0, 0.0));
        let lt = solve_light_time(&emit, &recv, 0.0).unwrap();
        assert!((lt.duration - 4e5 / C).abs() < 1e-9);
        assert!((lt.duration - 1.334e-3).abs() < 1e-6);
        assert!((lt.n_hat - Vector3::x()).norm() < 1e-15);
    }

    #[test]
    fn coincident_receiver_is_degenerate() {
        let p = Vector3::new(R_EARTH, 0.0, 0.0);
        let emit = StateVector::new(p, Vector3::zeros(), 0.0);
        let err = solve_light_time(&emit, &LinearMotion::fixed(p), 0.0).unwrap_err();
        assert!(matches!(err, KinematicsError::DegenerateGeometry(_)));
    }

    #[test]
    fn receding_receiver_matches_dense_grid_search() {
        let r0 = 4e5;
        let v = 7e3;
        let base = Vector3::new(R_EARTH, 0.0, 0.0);
        let emit = StateVector::new(base, Vector3::zeros(), 0.0);
        let recv = LinearMotion {
            origin: base + Vector3::new(r0, 0.0, 0.0),
            velocity: Vector3::new(v, 0.0, 0.0),
            t0: 0.0,
        };
        let lt = solve_light_time(&emit, &recv, 0.0).unwrap();
        let excess = lt.duration - r0 / C;

        // Oracle: scan a dense time grid for the sign change of
        // range(t) - c t, then interpolate linearly inside the bracket.
        let f = |t: f64| (recv.state_at(t).unwrap().position - base).norm() - C * t;
        let n = 200_000;
        let (lo, hi) = (1.3e-3, 1.4e-3);
        let dt = (hi - lo) / n as f64;
        let mut root = f64::NAN;
        for k in 0..n {
            let (a, b) = (lo + k as f64 * dt, lo + (k + 1) as f64 * dt);
            let (fa, fb) = (f(a), f(b));
            if fa >= 0.0 && fb < 0.0 {
                root = a + dt * fa / (fa - fb);
                break;
            }
        }
        let oracle_excess = root - r0 / C;
        assert!((excess - oracle_excess).abs() <= 0.01 * oracle_excess);
        assert!((excess - 3.1e-8).abs() < 0.05e-8);
    }

    #[test]
    fn reception_range_is_consistent() {
        let gs = GroundStation::new(0.2, 0.0, 100.0).unwrap();
        let sc = CircularOrbit::new(6.778e6, 0.4, 0.0, 0.25).unwrap();
        for k in 0..20 {
            let t = k as f64 * 7.0;
            let s1 = gs.state(t);
            let lt = solve_light_time(&s1, &sc, t).unwrap();
            let range = (sc.state(t + lt.duration).position - s1.position).norm();
            assert!((range - C * lt.duration).abs() < 1e-3);
        }
    }

    #[test]
    fn direction_reverses_under_swap() {
        let a = Vector3::new(R_EARTH, 1e3, -2e3);
        let b = Vector3::new(R_EARTH + 3e5, 4e5, 1e5);
        let ab = solve_light_time(&StateVector::new(a, Vector3::zeros(), 0.0), &LinearMotion::fixed(b), 0.0)
            .unwrap();
        let ba = solve_light_time(&StateVector::new(b, Vector3::zeros(), 0.0), &LinearMotion::fixed(a), 0.0)
            .unwrap();
        assert!((ab.n_hat + ba.n_hat).norm() < 1e-12);
    }

    #[test]
    fn potential_values() {
        let surface = newtonian_potential(&Vector3::new(R_EARTH, 0.0, 0.0));
        let by_hand = 3.986004418e14 / (299792458.0_f64.powi(2) * 6.371e6);
        assert!((surface - by_hand).abs() / by_hand < 1e-12);
        assert!((surface - 6.961e-10).abs() / 6.961e-10 < 1e-3);

        let h = 4e5;
        let diff = surface - newtonian_potential(&Vector3::new(0.0, R_EARTH + h, 0.0));
        let oracle = 3.986004418e14 * h / (299792458.0_f64.powi(2) * R_EARTH * (R_EARTH + h));
        assert!((diff - oracle).abs() / oracle < 1e-9);
        assert!((diff - 4.11e-11).abs() / 4.11e-11 < 0.01);

        let mut last = surface;
        for k in 1..40 {
            let u = newtonian_potential(&Vector3::new(R_EARTH * 1.5_f64.powi(k), 0.0, 0.0));
            assert!(u < last && u > 0.0);
            last = u;
        }
        assert!(last < 1e-15);
    }

    #[test]
    fn static_overhead_geometry() {
        let gs = LinearMotion::fixed(Vector3::new(R_EARTH, 0.0, 0.0));
        let sc = LinearMotion::fixed(Vector3::new(R_EARTH + 4e5, 0.0, 0.0));
        let g = build_link_geometry(&gs, &sc, 0.0).unwrap();
        assert_eq!(g.beta1, Vector3::zeros());
        assert_eq!(g.beta2, Vector3::zeros());
        assert_eq!(g.beta3, Vector3::zeros());
        assert!((g.n23 + g.n12).norm() < 1e-15);
        assert_eq!(g.u3, g.u1);
        assert!(g.u2 < g.u1);
    }

    #[test]
    fn zenith_pass_geometry() {
        let gs = GroundStation::new(0.0, 0.0, 0.0).unwrap();
        let sc = CircularOrbit::new(R_EARTH + 4e5, 0.0, 0.0, 0.0).unwrap();
        let g = build_link_geometry(&gs, &sc, 0.0).unwrap();
        // componentwise recomputation from the states
        let b1 = gs.state(0.0).velocity / C;
        let b2 = sc.state(g.t_up).velocity / C;
        assert!((g.beta1 - b1).norm() < 1e-20);
        assert!((g.beta2 - b2).norm() < 1e-20);
        assert!((g.d1 - g.n12.dot(&b1)).abs() < 1e-20);
        assert!(g.d1.abs() <= g.beta1.norm());
        assert!(g.u2 < g.u1);
        assert!((g.u3 - g.u1).abs() < 1e-15);
        // light time close to altitude / c at zenith
        assert!((g.t_up - 4e5 / C).abs() < 1e-6);

        for k in 0..30 {
            let t = -200.0 + k as f64 * 13.0;
            let g = build_link_geometry(&gs, &sc, t).unwrap();
            assert!((g.u3 - g.u1).abs() < 1e-15);
        }
    }

    #[test]
    fn zenith_pass_is_found() {
        let gs = GroundStation::new(0.0, 0.0, 0.0).unwrap();
        let sc = CircularOrbit::new(R_EARTH + 4e5, 0.0, 0.0, -0.5).unwrap();
        let (rise, set) = find_pass(&gs, &sc, 0.0, 3000.0, 5.0, 10f64.to_radians())
            .unwrap()
            .unwrap();
        assert!(rise > 0.0 && set > rise);
        // central angle at 10 deg elevation for h = 400 km is ~0.2118 rad
        let rel_rate = sc.mean_motion() - OMEGA_EARTH;
        assert!(((set - rise) * rel_rate / 2.0 - 0.2118).abs() < 1e-3);
        let mid = 0.5 * (rise + set);
        let el = elevation(&gs.position(mid), &sc.state(mid).position);
        assert!((el - FRAC_PI_2).abs() < 1e-3);
    }
}
