//! Pass scenarios: a ground station, a spacecraft trajectory, the optics and
//! the emission epochs of one pass.

use rayon::prelude::*;
use thiserror::Error;

use crate::constants::R_EARTH;
use crate::ephemeris::EphemerisTrajectory;
use crate::kinematics::{
    build_link_geometry, elevation, find_pass, CircularOrbit, GroundStation, KinematicsError,
    LinkGeometry, StateVector, Trajectory,
};
use crate::link_model::OpticalConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("no pass above {mask_deg} deg elevation in [{start}, {end}] s")]
    NoPass { mask_deg: f64, start: f64, end: f64 },
    #[error("a pass sweep needs at least 2 epochs, got {0}")]
    TooFewEpochs(usize),
}

/// Spacecraft motion, either analytic or ephemeris-driven.
#[derive(Debug, Clone)]
pub enum Spacecraft {
    Circular(CircularOrbit),
    Ephemeris(EphemerisTrajectory),
}

impl Trajectory for Spacecraft {
    fn state_at(&self, t: f64) -> Result<StateVector, KinematicsError> {
        match self {
            Spacecraft::Circular(o) => o.state_at(t),
            Spacecraft::Ephemeris(e) => e.state_at(t),
        }
    }

    fn acceleration_at(&self, t: f64) -> Result<nalgebra::Vector3<f64>, KinematicsError> {
        match self {
            Spacecraft::Circular(o) => o.acceleration_at(t),
            Spacecraft::Ephemeris(e) => e.acceleration_at(t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PassScenario {
    pub station: GroundStation,
    pub spacecraft: Spacecraft,
    pub optical: OpticalConfig,
    /// Emission epochs, s.
    pub epochs: Vec<f64>,
}

impl PassScenario {
    /// Sweeps `n_epochs` equally spaced emission epochs over the first pass
    /// above `mask` (rad) found in `[search_start, search_end]`.
    pub fn over_first_pass(
        station: GroundStation,
        spacecraft: Spacecraft,
        optical: OpticalConfig,
        search: (f64, f64),
        mask: f64,
        n_epochs: usize,
    ) -> Result<Self, ScenarioError> {
        if n_epochs < 2 {
            return Err(ScenarioError::TooFewEpochs(n_epochs));
        }
        let (start, end) = search;
        let no_pass = || ScenarioError::NoPass {
            mask_deg: mask.to_degrees(),
            start,
            end,
        };
        let (rise, set) = find_pass(&station, &spacecraft, start, end, 5.0, mask)?.ok_or_else(no_pass)?;
        // keep the last epoch's return leg inside the search window
        let set = set.min(end - 1.0);
        if !(set > rise) {
            return Err(no_pass());
        }
        let step = (set - rise) / (n_epochs - 1) as f64;
        let epochs = (0..n_epochs).map(|k| rise + k as f64 * step).collect();
        Ok(Self {
            station,
            spacecraft,
            optical,
            epochs,
        })
    }

    /// Equatorial station under an equatorial circular orbit of the given
    /// altitude, overhead at t = 0.
    pub fn zenith_leo(
        altitude: f64,
        optical: OpticalConfig,
        mask: f64,
        n_epochs: usize,
    ) -> Result<Self, ScenarioError> {
        let station = GroundStation::new(0.0, 0.0, 0.0)?;
        let orbit = CircularOrbit::new(R_EARTH + altitude, 0.0, 0.0, 0.0)?;
        let half = orbit.period() / 4.0;
        Self::over_first_pass(
            station,
            Spacecraft::Circular(orbit),
            optical,
            (-half, half),
            mask,
            n_epochs,
        )
    }

    pub fn geometries(&self) -> Result<Vec<LinkGeometry>, KinematicsError> {
        self.epochs
            .par_iter()
            .map(|&t| build_link_geometry(&self.station, &self.spacecraft, t))
            .collect()
    }

    /// Elevation of the spacecraft at each emission epoch, rad.
    pub fn elevations(&self) -> Result<Vec<f64>, KinematicsError> {
        self.epochs
            .iter()
            .map(|&t| {
                Ok(elevation(
                    &self.station.state_at(t)?.position,
                    &self.spacecraft.state_at(t)?.position,
                ))
            })
            .collect()
    }
}
