use std::path::PathBuf;

use thiserror::Error;

use lpisim::ephemeris::EphemerisError;
use lpisim::estimator::EstimatorError;
use lpisim::interferometer::InterferometerError;
use lpisim::kinematics::KinematicsError;
use lpisim::link_model::LinkError;
use lpisim::scenario::ScenarioError;
use lpisim::spin_weak::SpinError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}", path = path.display())]
    FileUnreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}", path = path.display())]
    ConfigParse { path: PathBuf, message: String },
    #[error("invalid config:\n{0}")]
    ConfigInvalid(String),
    #[error("cannot write {path}: {source}", path = path.display())]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("ephemeris: {0}")]
    Ephemeris(#[from] EphemerisError),
    #[error("kinematics: {0}")]
    Kinematics(#[from] KinematicsError),
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("link model: {0}")]
    Link(#[from] LinkError),
    #[error("interferometer: {0}")]
    Interferometer(#[from] InterferometerError),
    #[error("estimator: {0}")]
    Estimator(#[from] EstimatorError),
    #[error("spin model: {0}")]
    Spin(#[from] SpinError),
}

impl CliError {
    /// 2 for configuration problems, 3 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::FileUnreadable { .. } | CliError::ConfigParse { .. } | CliError::ConfigInvalid(_) => 2,
            _ => 3,
        }
    }
}
