//! Satellite ephemeris tables in a simplified ILRS CPF layout.
//!
//! Only two kinds of lines are recognised:
//!
//! ```text
//! H1 CPF 2 SIM 2024 01 01 00 ...      header, kept verbatim as the source id
//! 10 0 58600 0.0 0 7000000.0 0.0 0.0  position: flag, MJD, seconds of day,
//!                                     leap-second flag, ECEF x y z in metres
//! ```
//!
//! Every other line is ignored. Positions are interpolated with Lagrange
//! polynomials over the nearest nodes, velocities come from the analytic
//! derivative of the same polynomial, and the result is rotated into the
//! inertial frame with the uniform Earth rotation used by
//! [`crate::kinematics::GroundStation`].

use std::fmt::Write as _;

use nalgebra::{Rotation3, Vector3};
use thiserror::Error;

use crate::constants::{OMEGA_EARTH, SECONDS_PER_DAY};
use crate::kinematics::{earth_rotation_vector, KinematicsError, StateVector, Trajectory};

/// Default number of Lagrange nodes.
pub const DEFAULT_INTERPOLATION_NODES: usize = 8;
/// Minimum number of records needed to interpolate (cubic).
pub const MIN_INTERPOLATION_NODES: usize = 4;

const MIN_RADIUS: f64 = 6.4e6;
const MAX_RADIUS: f64 = 5.0e8;
const MAX_GAP_RATIO: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EphemerisError {
    #[error("line {line}: malformed position record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: not valid UTF-8 text")]
    InvalidEncoding { line: usize },
    #[error("no position records found in {lines} lines")]
    EmptyEphemeris { lines: usize },
    #[error("line {line}: epoch does not increase")]
    NonMonotonicTime { line: usize },
    #[error("line {line}: |position| = {radius} m outside [6.4e6, 5e8] m")]
    PositionOutOfRange { line: usize, radius: f64 },
    #[error("line {line}: gap of {gap} s exceeds 10x the median spacing {median} s")]
    IrregularSpacing { line: usize, gap: f64, median: f64 },
    #[error("epoch {offset} s from table start lies outside [0, {span}] s")]
    OutOfRange { offset: f64, span: f64 },
    #[error("interpolation needs at least {need} records, table has {have}")]
    InsufficientRecords { have: usize, need: usize },
}

/// Integer Modified Julian Day plus seconds of day, continuous time scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epoch {
    pub mjd: i64,
    pub sod: f64,
}

impl Epoch {
    pub fn new(mjd: i64, sod: f64) -> Self {
        Self { mjd, sod }
    }

    pub fn seconds_since(&self, other: &Epoch) -> f64 {
        (self.mjd - other.mjd) as f64 * SECONDS_PER_DAY + (self.sod - other.sod)
    }

    /// The epoch `seconds` later, normalised so that `0 <= sod < 86400`.
    pub fn offset(&self, seconds: f64) -> Epoch {
        let total = self.sod + seconds;
        let days = (total / SECONDS_PER_DAY).floor();
        Epoch {
            mjd: self.mjd + days as i64,
            sod: total - days * SECONDS_PER_DAY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EphemerisRecord {
    pub direction_flag: u8,
    pub mjd: i64,
    pub sod: f64,
    /// Parsed and carried through serialisation; not used in time arithmetic.
    pub leap_second: i32,
    /// Earth-centered Earth-fixed position, m.
    pub position: Vector3<f64>,
}

impl EphemerisRecord {
    pub fn epoch(&self) -> Epoch {
        Epoch::new(self.mjd, self.sod)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    EarthFixed,
}

/// An ordered, immutable list of position records.
#[derive(Debug, Clone, PartialEq)]
pub struct EphemerisTable {
    records: Vec<EphemerisRecord>,
    source: String,
}

impl EphemerisTable {
    /// Builds a table, checking ordering, the radius sanity window and the
    /// spacing regularity. Line numbers in errors are 1-based record indices.
    pub fn new(records: Vec<EphemerisRecord>, source: impl Into<String>) -> Result<Self, EphemerisError> {
        let lines: Vec<usize> = (1..=records.len()).collect();
        Self::checked(records, &lines, source.into())
    }

    fn checked(
        records: Vec<EphemerisRecord>,
        lines: &[usize],
        source: String,
    ) -> Result<Self, EphemerisError> {
        if records.is_empty() {
            return Err(EphemerisError::EmptyEphemeris { lines: lines.len() });
        }
        for (k, rec) in records.iter().enumerate() {
            let radius = rec.position.norm();
            if !(MIN_RADIUS..=MAX_RADIUS).contains(&radius) {
                return Err(EphemerisError::PositionOutOfRange {
                    line: lines[k],
                    radius,
                });
            }
            if k > 0 && !(rec.epoch().seconds_since(&records[k - 1].epoch()) > 0.0) {
                return Err(EphemerisError::NonMonotonicTime { line: lines[k] });
            }
        }
        if records.len() >= 3 {
            let gaps: Vec<f64> = records
                .windows(2)
                .map(|w| w[1].epoch().seconds_since(&w[0].epoch()))
                .collect();
            let mut sorted = gaps.clone();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[sorted.len() / 2];
            if let Some(k) = gaps.iter().position(|&g| g > MAX_GAP_RATIO * median) {
                return Err(EphemerisError::IrregularSpacing {
                    line: lines[k + 1],
                    gap: gaps[k],
                    median,
                });
            }
        }
        Ok(Self { records, source })
    }

    pub fn records(&self) -> &[EphemerisRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Header lines joined with newlines.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn frame(&self) -> Frame {
        Frame::EarthFixed
    }

    pub fn start(&self) -> Epoch {
        self.records[0].epoch()
    }

    /// Seconds between the first and last record.
    pub fn span(&self) -> f64 {
        self.records[self.records.len() - 1]
            .epoch()
            .seconds_since(&self.start())
    }

    /// Samples an inertial trajectory every `step` seconds from scenario
    /// time 0 and stores the Earth-fixed positions, with scenario time 0
    /// mapped to `start`.
    pub fn from_trajectory(
        trajectory: &dyn Trajectory,
        start: Epoch,
        step: f64,
        count: usize,
        source: impl Into<String>,
    ) -> Result<Self, KinematicsError> {
        let mut records = Vec::with_capacity(count);
        for k in 0..count {
            let t = k as f64 * step;
            let r_inertial = trajectory.state_at(t)?.position;
            let epoch = start.offset(t);
            records.push(EphemerisRecord {
                direction_flag: 0,
                mjd: epoch.mjd,
                sod: epoch.sod,
                leap_second: 0,
                position: earth_rotation(t).inverse() * r_inertial,
            });
        }
        Ok(Self::new(records, source)?)
    }

    /// Writes the table back in the accepted text layout.
    pub fn to_cpf_string(&self) -> String {
        let mut out = String::new();
        for header in self.source.lines() {
            out.push_str(header);
            out.push('\n');
        }
        for r in &self.records {
            let _ = writeln!(
                out,
                "10 {} {} {} {} {} {} {}",
                r.direction_flag, r.mjd, r.sod, r.leap_second, r.position.x, r.position.y, r.position.z
            );
        }
        out.push_str("99\n");
        out
    }
}

fn is_header(token: &str) -> bool {
    let b = token.as_bytes();
    b.len() == 2 && b[0] == b'H' && b[1].is_ascii_digit()
}

fn parse_record(tokens: &[&str], line: usize) -> Result<EphemerisRecord, EphemerisError> {
    let malformed = |reason: String| EphemerisError::MalformedRecord { line, reason };
    if tokens.len() != 8 {
        return Err(malformed(format!("expected 8 fields, found {}", tokens.len())));
    }
    let direction_flag: u8 = tokens[1]
        .parse()
        .map_err(|_| malformed(format!("bad direction flag {:?}", tokens[1])))?;
    let mjd: i64 = tokens[2]
        .parse()
        .map_err(|_| malformed(format!("bad MJD {:?}", tokens[2])))?;
    let real = |idx: usize, what: &str| -> Result<f64, EphemerisError> {
        match tokens[idx].parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(malformed(format!("bad {what} {:?}", tokens[idx]))),
        }
    };
    let sod = real(3, "seconds of day")?;
    if !(0.0..SECONDS_PER_DAY).contains(&sod) {
        return Err(malformed(format!("seconds of day {sod} outside [0, 86400)")));
    }
    let leap_second: i32 = tokens[4]
        .parse()
        .map_err(|_| malformed(format!("bad leap-second flag {:?}", tokens[4])))?;
    let position = Vector3::new(real(5, "x")?, real(6, "y")?, real(7, "z")?);
    Ok(EphemerisRecord {
        direction_flag,
        mjd,
        sod,
        leap_second,
        position,
    })
}

/// Parses the simplified CPF text.
pub fn parse_cpf(text: &str) -> Result<EphemerisTable, EphemerisError> {
    parse_lines(text.lines().map(Ok))
}

/// Parses raw bytes; non-UTF-8 lines are reported with their line number.
pub fn parse_cpf_bytes(bytes: &[u8]) -> Result<EphemerisTable, EphemerisError> {
    parse_lines(bytes.split(|b| *b == b'\n').map(std::str::from_utf8))
}

fn parse_lines<'a, I>(lines: I) -> Result<EphemerisTable, EphemerisError>
where
    I: Iterator<Item = Result<&'a str, std::str::Utf8Error>>,
{
    let mut headers = Vec::new();
    let mut records = Vec::new();
    let mut record_lines = Vec::new();
    let mut count = 0;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 1;
        count = line_no;
        let line = line.map_err(|_| EphemerisError::InvalidEncoding { line: line_no })?;
        let trimmed = line.trim();
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match tokens.first() {
            Some(&"10") => {
                records.push(parse_record(&tokens, line_no)?);
                record_lines.push(line_no);
            }
            Some(t) if is_header(t) => headers.push(tokens.join(" ")),
            _ => {}
        }
    }
    if records.is_empty() {
        return Err(EphemerisError::EmptyEphemeris { lines: count });
    }
    EphemerisTable::checked(records, &record_lines, headers.join("\n"))
}

fn earth_rotation(t: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), OMEGA_EARTH * t)
}

/// Lagrange value and first derivative at `t` through `(times, values)`.
fn lagrange(times: &[f64], values: &[Vector3<f64>], t: f64) -> (Vector3<f64>, Vector3<f64>) {
    let n = times.len();
    let mut value = Vector3::zeros();
    let mut slope = Vector3::zeros();
    for j in 0..n {
        let mut basis = 1.0;
        for k in 0..n {
            if k != j {
                basis *= (t - times[k]) / (times[j] - times[k]);
            }
        }
        let mut dbasis = 0.0;
        for m in 0..n {
            if m == j {
                continue;
            }
            let mut term = 1.0 / (times[j] - times[m]);
            for k in 0..n {
                if k != j && k != m {
                    term *= (t - times[k]) / (times[j] - times[k]);
                }
            }
            dbasis += term;
        }
        value += values[j] * basis;
        slope += values[j] * dbasis;
    }
    (value, slope)
}

/// Inertial trajectory backed by an ephemeris table. Scenario time 0 maps
/// to `start`, where the Earth-fixed and inertial axes coincide.
#[derive(Debug, Clone)]
pub struct EphemerisTrajectory {
    table: EphemerisTable,
    start: Epoch,
    nodes: usize,
}

impl EphemerisTrajectory {
    pub fn new(table: EphemerisTable) -> Result<Self, EphemerisError> {
        let start = table.start();
        Self::with_start(table, start)
    }

    pub fn with_start(table: EphemerisTable, start: Epoch) -> Result<Self, EphemerisError> {
        if table.len() < MIN_INTERPOLATION_NODES {
            return Err(EphemerisError::InsufficientRecords {
                have: table.len(),
                need: MIN_INTERPOLATION_NODES,
            });
        }
        Ok(Self {
            table,
            start,
            nodes: DEFAULT_INTERPOLATION_NODES,
        })
    }

    /// Sets the number of Lagrange nodes (at least 4).
    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes.max(MIN_INTERPOLATION_NODES);
        self
    }

    pub fn table(&self) -> &EphemerisTable {
        &self.table
    }

    /// Scenario time interval covered by the table.
    pub fn time_span(&self) -> (f64, f64) {
        let t0 = self.table.start().seconds_since(&self.start);
        (t0, t0 + self.table.span())
    }

    /// Earth-fixed position and velocity at scenario time `t`.
    pub fn earth_fixed(&self, t: f64) -> Result<(Vector3<f64>, Vector3<f64>), EphemerisError> {
        let records = self.table.records();
        let table_start = self.table.start();
        let offset = t + self.start.seconds_since(&table_start);
        let span = self.table.span();
        if !(offset >= -1e-9 && offset <= span + 1e-9) {
            return Err(EphemerisError::OutOfRange { offset, span });
        }
        let n = records.len();
        let nodes = self.nodes.min(n);
        let times: Vec<f64> = records
            .iter()
            .map(|r| r.epoch().seconds_since(&table_start))
            .collect();
        let idx = times.partition_point(|&x| x <= offset).saturating_sub(1);
        let first = (idx + 1).saturating_sub(nodes / 2).min(n - nodes);
        let window = first..first + nodes;
        // centre the abscissae for conditioning
        let centre = times[first + nodes / 2];
        let local: Vec<f64> = times[window.clone()].iter().map(|x| x - centre).collect();
        let values: Vec<Vector3<f64>> = records[window].iter().map(|r| r.position).collect();
        Ok(lagrange(&local, &values, offset - centre))
    }
}

impl Trajectory for EphemerisTrajectory {
    fn state_at(&self, t: f64) -> Result<StateVector, KinematicsError> {
        let (r_fixed, v_fixed) = self.earth_fixed(t)?;
        let rot = earth_rotation(t);
        let position = rot * r_fixed;
        let velocity = rot * v_fixed + earth_rotation_vector().cross(&position);
        Ok(StateVector::new(position, velocity, t))
    }
}

/// Inertial state at `epoch`, with scenario time measured from the first
/// record of the table.
pub fn interpolate_state(table: &EphemerisTable, epoch: Epoch) -> Result<StateVector, EphemerisError> {
    let traj = EphemerisTrajectory::new(table.clone())?;
    let t = epoch.seconds_since(&table.start());
    traj.state_at(t).map_err(|e| match e {
        KinematicsError::Ephemeris(inner) => inner,
        other => unreachable!("ephemeris interpolation produced {other}"),
    })
}
