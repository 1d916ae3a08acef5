//! Spin-rotation and spin-acceleration couplings, the two-spin exchange
//! model, exact evolution for up to two spins, weak values and Gaussian
//! meter kicks.
//!
//! Energies are in joules. States are complex vectors of dimension 2 or 4;
//! two-spin operators act on `system ⊗ meter-spin`.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::constants::{BOHR_MAGNETON_EV_PER_T, C, EV, G_SURFACE, HBAR, OMEGA_EARTH};
use crate::table::{fmt_f64, ColumnTable};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("Pauli axis must be 1, 2 or 3, got {0}")]
    BadAxis(u8),
    #[error("state dimension must be 2 or 4, got {0}")]
    BadDimension(usize),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("dimension mismatch: operator {operator}, state {state}")]
    DimensionMismatch { operator: usize, state: usize },
    #[error("operator is not Hermitian: relative defect {0:e}")]
    NonHermitian(f64),
    #[error("pre- and post-selected states are orthogonal: |<f|i>| = {0:e}")]
    OrthogonalSelection(f64),
    #[error("invalid coupling parameters: {0}")]
    InvalidParams(String),
    #[error("meter width must be positive, got {0}")]
    BadMeter(f64),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli(axis: u8) -> Result<CMatrix, SpinError> {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    let m = match axis {
        1 => [o, l, l, o],
        2 => [o, -i, i, o],
        3 => [l, o, o, -l],
        _ => return Err(SpinError::BadAxis(axis)),
    };
    Ok(CMatrix::from_row_slice(2, 2, &m))
}

fn pauli_vec() -> [CMatrix; 3] {
    [pauli(1).unwrap(), pauli(2).unwrap(), pauli(3).unwrap()]
}

fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `v · sigma` for a real 3-vector.
pub fn sigma_dot(v: &Vector3<f64>) -> CMatrix {
    let s = pauli_vec();
    s[0].scale(v.x) + s[1].scale(v.y) + s[2].scale(v.z)
}

/// Relative Hermiticity defect `|H - H^dagger| / |H|` (0 for the zero matrix).
pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    let norm = h.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (h - h.adjoint()).norm() / norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: CVector,
}

impl QuantumState {
    pub fn new(amplitudes: CVector) -> Result<Self, SpinError> {
        let dim = amplitudes.len();
        if dim != 2 && dim != 4 {
            return Err(SpinError::BadDimension(dim));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SpinError::NotNormalized(norm));
        }
        Ok(Self { amplitudes })
    }

    /// Normalises `amplitudes` first.
    pub fn normalized(amplitudes: CVector) -> Result<Self, SpinError> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) {
            return Err(SpinError::NotNormalized(norm));
        }
        Self::new(amplitudes.unscale(norm))
    }

    pub fn from_slice(amplitudes: &[Complex64]) -> Result<Self, SpinError> {
        Self::new(CVector::from_column_slice(amplitudes))
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self, SpinError> {
        if dim != 2 && dim != 4 {
            return Err(SpinError::BadDimension(dim));
        }
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinCouplingParams {
    /// Acceleration magnitude, m/s^2.
    pub g: f64,
    /// Unit direction of the acceleration.
    pub accel_dir: Vector3<f64>,
    /// Frame angular velocity, rad/s.
    pub omega: Vector3<f64>,
    /// Spin-gravity coupling strength; 1 reproduces the bare coupling.
    pub k: f64,
    /// Particle mass, kg.
    pub m: f64,
    /// Momentum, kg m/s.
    pub p: Vector3<f64>,
    /// Dimensionless rotation field entering the two-spin model.
    pub h_vec: Vector3<f64>,
    /// Exchange coupling, J.
    pub j: f64,
    /// `J t / hbar`, when given independently.
    pub lambda_c: Option<f64>,
    /// Interaction duration, s.
    pub t: f64,
    /// Spin-independent energy offset, J.
    pub scalar_offset: f64,
}

impl Default for SpinCouplingParams {
    fn default() -> Self {
        Self {
            g: G_SURFACE,
            accel_dir: Vector3::z(),
            omega: Vector3::zeros(),
            k: 1.0,
            m: 1.674_927_498_04e-27,
            p: Vector3::zeros(),
            h_vec: Vector3::zeros(),
            j: 0.0,
            lambda_c: None,
            t: 1.0,
            scalar_offset: 0.0,
        }
    }
}

impl SpinCouplingParams {
    /// Earth-surface rotation about `z` with `h = -c omega / g`.
    pub fn earth_surface() -> Self {
        let mut p = Self {
            omega: Vector3::new(0.0, 0.0, OMEGA_EARTH),
            ..Self::default()
        };
        p.h_vec = p.rotation_field().expect("g > 0");
        p
    }

    /// `h = -c omega / g`.
    pub fn rotation_field(&self) -> Result<Vector3<f64>, SpinError> {
        if !(self.g > 0.0) {
            return Err(SpinError::InvalidParams(format!(
                "g = {} must be positive to derive h from omega",
                self.g
            )));
        }
        Ok(-self.omega * (C / self.g))
    }

    pub fn acceleration(&self) -> Vector3<f64> {
        self.accel_dir * self.g
    }

    pub fn validate(&self) -> Result<(), SpinError> {
        let finite = self.g.is_finite()
            && self.k.is_finite()
            && self.j.is_finite()
            && self.t.is_finite()
            && self.omega.iter().chain(self.p.iter()).chain(self.h_vec.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(SpinError::InvalidParams("non-finite parameter".into()));
        }
        if (self.accel_dir.norm() - 1.0).abs() > 1e-12 {
            return Err(SpinError::InvalidParams("accel_dir must be a unit vector".into()));
        }
        if let Some(lambda) = self.lambda_c {
            let expected = self.j * self.t / HBAR;
            if (lambda - expected).abs() > 1e-12 * expected.abs().max(lambda.abs()).max(1e-300) {
                return Err(SpinError::InvalidParams(format!(
                    "lambda_c = {lambda} but J t / hbar = {expected}"
                )));
            }
        }
        Ok(())
    }
}

/// Rotation coupling plus the spin-orbit acceleration term:
/// `-(hbar/2) omega·sigma + hbar/(4 m c^2) sigma·(a x p)`.
pub fn h_sigma(params: &SpinCouplingParams) -> Result<CMatrix, SpinError> {
    if !(params.m > 0.0) {
        return Err(SpinError::InvalidParams(format!("mass {} must be positive", params.m)));
    }
    let rotation = sigma_dot(&params.omega).scale(-0.5 * HBAR);
    let a_cross_p = params.acceleration().cross(&params.p);
    let orbit = sigma_dot(&a_cross_p).scale(HBAR / (4.0 * params.m * C * C));
    Ok(rotation + orbit)
}

/// Spin-acceleration coupling `(hbar k / 2c) a·sigma`.
pub fn h_ext(params: &SpinCouplingParams) -> CMatrix {
    sigma_dot(&params.acceleration()).scale(HBAR * params.k / (2.0 * C))
}

/// `sigma_a ⊗ 1 + 1 ⊗ sigma_a`.
fn both_spins(s: &CMatrix) -> CMatrix {
    kron(s, &identity(2)) + kron(&identity(2), s)
}

/// The exchange part `sigma_1 ⊗ sigma_1`, carrying the factor `J`.
pub fn exchange_operator() -> CMatrix {
    let s1 = pauli(1).unwrap();
    kron(&s1, &s1)
}

/// The `g`-proportional part of the two-spin Hamiltonian, J.
pub fn two_spin_field_term(params: &SpinCouplingParams) -> CMatrix {
    let [s1, s2, s3] = pauli_vec();
    // k couples along the acceleration, z for a vertical laboratory
    let h = params.h_vec + params.accel_dir * params.k;
    let field = both_spins(&s1).scale(h.x) + both_spins(&s2).scale(h.y) + both_spins(&s3).scale(h.z);
    field.scale(HBAR * params.g / (2.0 * C))
}

pub fn two_spin_hamiltonian(params: &SpinCouplingParams) -> CMatrix {
    exchange_operator().scale(params.j)
        + two_spin_field_term(params)
        + identity(4).scale(params.scalar_offset)
}

/// `H = (hbar lambda / t) H0 + H1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSplit {
    pub lambda: f64,
    pub t: f64,
    pub h0: CMatrix,
    pub h1: CMatrix,
}

impl HamiltonianSplit {
    pub fn total(&self) -> CMatrix {
        self.h0.scale(HBAR * self.lambda / self.t) + &self.h1
    }
}

pub fn two_spin_split(params: &SpinCouplingParams) -> Result<HamiltonianSplit, SpinError> {
    params.validate()?;
    if !(params.t > 0.0) {
        return Err(SpinError::InvalidParams(format!("t = {} must be positive", params.t)));
    }
    Ok(HamiltonianSplit {
        lambda: params.lambda_c.unwrap_or(params.j * params.t / HBAR),
        t: params.t,
        h0: exchange_operator(),
        h1: two_spin_field_term(params) + identity(4).scale(params.scalar_offset),
    })
}

/// Real eigenvalues and eigenvectors of a Hermitian matrix. The matrix is
/// rescaled to unit norm first so tiny energies decompose accurately.
pub fn hermitian_eigen(h: &CMatrix) -> Result<(Vec<f64>, CMatrix), SpinError> {
    let defect = hermiticity_defect(h);
    if defect > 1e-10 {
        return Err(SpinError::NonHermitian(defect));
    }
    let n = h.nrows();
    let norm = h.norm();
    if norm == 0.0 {
        return Ok((vec![0.0; n], identity(n)));
    }
    let scaled = (h + h.adjoint()).unscale(2.0 * norm);
    let eig = scaled.symmetric_eigen();
    Ok((eig.eigenvalues.iter().map(|v| v * norm).collect(), eig.eigenvectors))
}

/// `exp(-i H t / hbar) |psi>`.
pub fn evolve(state: &QuantumState, h: &CMatrix, t: f64) -> Result<QuantumState, SpinError> {
    if h.nrows() != state.dim() || h.ncols() != state.dim() {
        return Err(SpinError::DimensionMismatch {
            operator: h.nrows(),
            state: state.dim(),
        });
    }
    let (values, vectors) = hermitian_eigen(h)?;
    let mut coeffs = vectors.adjoint() * state.amplitudes();
    for (a, e) in coeffs.iter_mut().zip(&values) {
        *a *= Complex64::from_polar(1.0, -e * t / HBAR);
    }
    QuantumState::new(vectors * coeffs)
}

/// `<f|A|i> / <f|i>`.
pub fn weak_value(a: &CMatrix, s_i: &QuantumState, s_f: &QuantumState) -> Result<Complex64, SpinError> {
    if s_i.dim() != s_f.dim() || a.nrows() != s_i.dim() {
        return Err(SpinError::DimensionMismatch {
            operator: a.nrows(),
            state: s_i.dim(),
        });
    }
    let overlap = s_f.inner(s_i);
    if overlap.norm() < 1e-12 {
        return Err(SpinError::OrthogonalSelection(overlap.norm()));
    }
    let num = s_f.amplitudes().dotc(&(a * s_i.amplitudes()));
    Ok(num / overlap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMeter {
    pub mean: f64,
    pub width: f64,
}

impl GaussianMeter {
    pub fn new(mean: f64, width: f64) -> Result<Self, SpinError> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(SpinError::BadMeter(width));
        }
        Ok(Self { mean, width })
    }

    /// Position-space amplitude shifted by `shift`.
    fn amplitude(&self, x: f64, shift: f64) -> f64 {
        let s = self.width;
        let u = x - self.mean - shift;
        (2.0 * std::f64::consts::PI * s * s).powf(-0.25) * (-u * u / (4.0 * s * s)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterShift {
    pub shift_exact: f64,
    pub shift_weak: f64,
    pub postselection_prob: f64,
    pub weak_value: Complex64,
}

const QUADRATURE_POINTS: usize = 20_001;

/// Pointer displacement after the impulsive coupling `exp(-i q A p)` and
/// post-selection on `s_f`.
///
/// The post-selected pointer wavefunction is the finite sum
/// `sum_j <f|P_j|i> m(x - q a_j)` over the eigen-decomposition of `A`;
/// its mean is computed by trapezoidal quadrature.
pub fn meter_shift(
    q: f64,
    a: &CMatrix,
    s_i: &QuantumState,
    s_f: &QuantumState,
    meter: &GaussianMeter,
) -> Result<MeterShift, SpinError> {
    let aw = weak_value(a, s_i, s_f)?;
    let (values, vectors) = hermitian_eigen(a)?;
    // <f|a_j><a_j|i>
    let weights: Vec<Complex64> = (0..values.len())
        .map(|j| {
            let v = vectors.column(j);
            s_f.amplitudes().dotc(&v) * v.dotc(s_i.amplitudes())
        })
        .collect();

    let reach = values.iter().fold(0.0f64, |m, v| m.max((q * v).abs()));
    let lo = meter.mean - reach - 12.0 * meter.width;
    let hi = meter.mean + reach + 12.0 * meter.width;
    let dx = (hi - lo) / (QUADRATURE_POINTS - 1) as f64;
    let (mut norm, mut first) = (0.0, 0.0);
    for n in 0..QUADRATURE_POINTS {
        let x = lo + n as f64 * dx;
        let phi: Complex64 = weights
            .iter()
            .zip(&values)
            .map(|(w, a)| w * meter.amplitude(x, q * a))
            .sum();
        let end = if n == 0 || n == QUADRATURE_POINTS - 1 { 0.5 } else { 1.0 };
        let density = phi.norm_sqr() * end;
        norm += density;
        // measured from the meter mean to keep the sum well conditioned
        first += density * (x - meter.mean);
    }
    if !(norm > 0.0) {
        return Err(SpinError::OrthogonalSelection(0.0));
    }
    Ok(MeterShift {
        shift_exact: first / norm,
        shift_weak: q * aw.re,
        postselection_prob: norm * dx,
        weak_value: aw,
    })
}

/// `cos(theta) |i> + sin(theta) |i_perp>`, with `|i_perp>` the normalised
/// part of `A|i>` orthogonal to `|i>`. With this choice
/// `A_w = <A> + tan(theta) Delta A`.
pub fn postselection_state(a: &CMatrix, s_i: &QuantumState, theta: f64) -> Result<QuantumState, SpinError> {
    let i = s_i.amplitudes();
    let ai = a * i;
    let mut perp = &ai - i * i.dotc(&ai);
    if perp.norm() < 1e-12 * ai.norm().max(1.0) {
        // |i> is an eigenvector; any orthogonal direction will do
        let k = (0..i.len()).min_by(|&x, &y| i[x].norm().total_cmp(&i[y].norm())).unwrap();
        let mut e = CVector::zeros(i.len());
        e[k] = c(1.0, 0.0);
        perp = &e - i * i.dotc(&e);
    }
    let perp = perp.unscale(perp.norm());
    QuantumState::normalized(i.scale(theta.cos()) + perp.scale(theta.sin()))
}

/// Default weakly measured operator for the two-spin model, `sigma_3 ⊗ 1`.
pub fn default_two_spin_observable() -> CMatrix {
    kron(&pauli(3).unwrap(), &identity(2))
}

/// Operator `sigma_axis` on the system spin (`on_system`) or the meter spin.
pub fn two_spin_observable(axis: u8, on_system: bool) -> Result<CMatrix, SpinError> {
    let s = pauli(axis)?;
    Ok(if on_system {
        kron(&s, &identity(2))
    } else {
        kron(&identity(2), &s)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakScan {
    pub params: SpinCouplingParams,
    pub observable: CMatrix,
    pub thetas: Vec<f64>,
    pub qs: Vec<f64>,
    pub meter: GaussianMeter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakScanRow {
    pub theta: f64,
    pub q: f64,
    pub shift: MeterShift,
}

/// Pre-selects `exp(-i H t / hbar)|00>`, post-selects along
/// [`postselection_state`] for each `theta`, and evaluates the meter shift
/// for each coupling `q`. Grid points run in parallel; rows come back in
/// theta-major order.
pub fn weak_value_scan(scan: &WeakScan) -> Result<Vec<WeakScanRow>, SpinError> {
    scan.params.validate()?;
    let h = two_spin_hamiltonian(&scan.params);
    let s_i = evolve(&QuantumState::basis(4, 0)?, &h, scan.params.t)?;
    let grid: Vec<(f64, f64)> = scan
        .thetas
        .iter()
        .flat_map(|&th| scan.qs.iter().map(move |&q| (th, q)))
        .collect();
    grid.par_iter()
        .map(|&(theta, q)| {
            let s_f = postselection_state(&scan.observable, &s_i, theta)?;
            let shift = meter_shift(q, &scan.observable, &s_i, &s_f, &scan.meter)?;
            Ok(WeakScanRow { theta, q, shift })
        })
        .collect()
}

pub fn weak_scan_table(rows: &[WeakScanRow]) -> ColumnTable {
    let mut table = ColumnTable::new([
        "theta",
        "q",
        "aw_re",
        "aw_im",
        "shift_exact",
        "shift_weak",
        "postselection_prob",
    ]);
    for r in rows {
        table.push([
            fmt_f64(r.theta),
            fmt_f64(r.q),
            fmt_f64(r.shift.weak_value.re),
            fmt_f64(r.shift.weak_value.im),
            fmt_f64(r.shift.shift_exact),
            fmt_f64(r.shift.shift_weak),
            fmt_f64(r.shift.postselection_prob),
        ]);
    }
    table
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedConstant {
    pub name: &'static str,
    pub value: f64,
    pub unit: &'static str,
    /// Published figure to compare against, if any.
    pub reference: Option<f64>,
}

impl NamedConstant {
    pub fn relative_deviation(&self) -> Option<f64> {
        self.reference.map(|r| (self.value - r).abs() / r.abs())
    }
}

/// Spin-gravity energy scale `hbar g / c` in eV.
pub fn spin_gravity_energy_ev() -> f64 {
    HBAR * G_SURFACE / C / EV
}

/// Magnetic field whose Zeeman energy `mu_B B` equals `hbar g / c`.
pub fn equivalent_magnetic_field() -> f64 {
    spin_gravity_energy_ev() / BOHR_MAGNETON_EV_PER_T
}

pub fn constants_report() -> Vec<NamedConstant> {
    vec![
        NamedConstant {
            name: "hbar_g_over_c",
            value: spin_gravity_energy_ev(),
            unit: "eV",
            reference: Some(2.15e-23),
        },
        NamedConstant {
            name: "equivalent_field",
            value: equivalent_magnetic_field(),
            unit: "T",
            reference: Some(3.7e-19),
        },
        NamedConstant {
            name: "omega_e_c_over_g",
            value: OMEGA_EARTH * C / G_SURFACE,
            unit: "1",
            reference: Some(2.22e3),
        },
        NamedConstant {
            name: "mashhoon_energy",
            value: HBAR * OMEGA_EARTH / 2.0 / EV,
            unit: "eV",
            reference: None,
        },
    ]
}

pub fn constants_table(constants: &[NamedConstant]) -> ColumnTable {
    let mut table = ColumnTable::new(["name", "value", "unit", "reference", "rel_deviation"]);
    for k in constants {
        table.push([
            k.name.to_string(),
            fmt_f64(k.value),
            k.unit.to_string(),
            k.reference.map(fmt_f64).unwrap_or_else(|| "-".into()),
            k.relative_deviation().map(fmt_f64).unwrap_or_else(|| "-".into()),
        ]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    fn sorted_eigs(h: &CMatrix) -> Vec<f64> {
        let mut v = hermitian_eigen(h).unwrap().0;
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn pauli_algebra() {
        let s3 = pauli(3).unwrap();
        assert_eq!(s3, CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)])));
        let prod = pauli(1).unwrap() * pauli(2).unwrap();
        assert!(max_abs(&(prod - s3.scale(1.0) * c(0.0, 1.0))) < 1e-15);
        for axis in 1..=3 {
            let s = pauli(axis).unwrap();
            assert_eq!(sorted_eigs(&s), vec![-1.0, 1.0]);
            assert!(max_abs(&(&s * &s - identity(2))) == 0.0);
            assert_eq!(s.trace(), c(0.0, 0.0));
        }
        assert_eq!(pauli(4), Err(SpinError::BadAxis(4)));
    }

    #[test]
    fn mashhoon_eigenvalues() {
        let omega = 2.0;
        let p = SpinCouplingParams {
            omega: Vector3::new(0.0, 0.0, omega),
            ..Default::default()
        };
        let e = sorted_eigs(&h_sigma(&p).unwrap());
        assert!((e[0] + HBAR * omega / 2.0).abs() < 1e-15 * HBAR);
        assert!((e[1] - HBAR * omega / 2.0).abs() < 1e-15 * HBAR);

        let earth = SpinCouplingParams::earth_surface();
        let e = sorted_eigs(&h_sigma(&earth).unwrap());
        assert!((e[1] / HBAR - 3.646e-5).abs() < 1e-8);
    }

    #[test]
    fn parallel_momentum_has_no_orbit_term() {
        let p = SpinCouplingParams {
            p: Vector3::new(0.0, 0.0, 3e-20),
            ..Default::default()
        };
        assert_eq!(max_abs(&h_sigma(&p).unwrap()), 0.0);
        let bad = SpinCouplingParams { m: 0.0, ..Default::default() };
        assert!(h_sigma(&bad).is_err());
    }

    #[test]
    fn spin_gravity_term() {
        let zero = SpinCouplingParams { k: 0.0, ..Default::default() };
        assert_eq!(max_abs(&h_ext(&zero)), 0.0);
        let one = SpinCouplingParams::default();
        let e = sorted_eigs(&h_ext(&one));
        let expected = HBAR * G_SURFACE / (2.0 * C);
        assert!((e[1] - expected).abs() < 1e-14 * expected);
        assert!((2.0 * e[1] / EV - 2.15e-23).abs() / 2.15e-23 < 3e-3);
        let two = SpinCouplingParams { k: 2.0, ..Default::default() };
        assert_eq!(h_ext(&two), h_ext(&one).scale(2.0));
    }

    #[test]
    fn exchange_limit() {
        let p = SpinCouplingParams {
            g: 1e-300,
            h_vec: Vector3::new(0.3, -0.2, 0.5),
            j: 1.5e-25,
            ..Default::default()
        };
        let e = sorted_eigs(&two_spin_hamiltonian(&p));
        for (got, want) in e.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((got - want * p.j).abs() < 1e-12 * p.j, "{e:?}");
        }
    }

    #[test]
    fn field_only_limit() {
        let p = SpinCouplingParams::default();
        let e = sorted_eigs(&two_spin_hamiltonian(&p));
        let u = HBAR * G_SURFACE / C;
        for (got, want) in e.iter().zip([-u, 0.0, 0.0, u]) {
            assert!((got - want).abs() < 1e-12 * u, "{e:?}");
        }
    }

    #[test]
    fn split_reassembles() {
        let p = SpinCouplingParams {
            j: 2e-25,
            t: 0.3,
            h_vec: Vector3::new(0.1, 0.2, 0.3),
            ..Default::default()
        };
        let split = two_spin_split(&p).unwrap();
        let h = two_spin_hamiltonian(&p);
        assert!(max_abs(&(split.total() - &h)) < 1e-12 * max_abs(&h));
        let wrong = SpinCouplingParams { lambda_c: Some(1.0), ..p };
        assert!(matches!(wrong.validate(), Err(SpinError::InvalidParams(_))));
    }

    #[test]
    fn evolution_examples() {
        let plus = QuantumState::normalized(CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
        let minus = QuantumState::normalized(CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)])).unwrap();
        let omega = 3.0;
        let h = pauli(3).unwrap().scale(HBAR * omega / 2.0);
        assert!((evolve(&plus, &h, 0.0).unwrap().amplitudes() - plus.amplitudes()).norm() < 1e-15);
        let out = evolve(&plus, &h, PI / omega).unwrap();
        // equal up to a global phase
        assert!((out.inner(&minus).norm() - 1.0).abs() < 1e-10);

        let bad = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(evolve(&plus, &bad, 1.0), Err(SpinError::NonHermitian(_))));
    }

    #[test]
    fn weak_value_examples() {
        let sx = pauli(1).unwrap();
        let zero = QuantumState::basis(2, 0).unwrap();
        let theta: f64 = 1.47;
        let f = QuantumState::from_slice(&[c(theta.cos(), 0.0), c(theta.sin(), 0.0)]).unwrap();
        let aw = weak_value(&sx, &zero, &f).unwrap();
        assert!((aw.re - theta.tan()).abs() < 1e-12);
        assert!((aw.re - 9.89).abs() < 5e-3);

        let s3 = pauli(3).unwrap();
        assert_eq!(weak_value(&s3, &zero, &zero).unwrap(), c(1.0, 0.0));
        let one = QuantumState::basis(2, 1).unwrap();
        assert!(matches!(weak_value(&sx, &zero, &one), Err(SpinError::OrthogonalSelection(_))));
    }

    #[test]
    fn meter_shift_regimes() {
        let sx = pauli(1).unwrap();
        let zero = QuantumState::basis(2, 0).unwrap();
        let theta: f64 = 1.47;
        let f = QuantumState::from_slice(&[c(theta.cos(), 0.0), c(theta.sin(), 0.0)]).unwrap();
        let meter = GaussianMeter::new(0.0, 1.0).unwrap();
        let weak = meter_shift(1e-3, &sx, &zero, &f, &meter).unwrap();
        let rel = (weak.shift_exact - weak.shift_weak).abs() / weak.shift_weak.abs();
        assert!(rel < 1e-2, "{rel}");
        let strong = meter_shift(1.0, &sx, &zero, &f, &meter).unwrap();
        let rel = (strong.shift_exact - strong.shift_weak).abs() / strong.shift_weak.abs();
        assert!(rel > 0.1, "{rel}");
    }

    #[test]
    fn eigenstate_shift_is_exact() {
        let s3 = pauli(3).unwrap();
        let zero = QuantumState::basis(2, 0).unwrap();
        let meter = GaussianMeter::new(0.4, 0.7).unwrap();
        for q in [1e-3, 0.5, 3.0] {
            let r = meter_shift(q, &s3, &zero, &zero, &meter).unwrap();
            assert!((r.shift_exact - q).abs() < 1e-10, "{q} {}", r.shift_exact);
            assert_eq!(r.shift_weak, q);
            assert!((r.postselection_prob - 1.0).abs() < 1e-10);
        }
        assert!(GaussianMeter::new(0.0, 0.0).is_err());
    }

    #[test]
    fn postselection_gives_tan_amplification() {
        let a = default_two_spin_observable();
        let s = QuantumState::normalized(CVector::from_vec(vec![
            c(0.6, 0.1),
            c(0.2, -0.3),
            c(0.5, 0.0),
            c(0.1, 0.4),
        ]))
        .unwrap();
        let i = s.amplitudes();
        let mean = i.dotc(&(&a * i)).re;
        let var = i.dotc(&(&a * &a * i)).re - mean * mean;
        for theta in [0.0, 0.4, 1.2, 1.5] {
            let f = postselection_state(&a, &s, theta).unwrap();
            let aw = weak_value(&a, &s, &f).unwrap();
            let want = mean + theta.tan() * var.sqrt();
            assert!((aw.re - want).abs() < 1e-9 * want.abs().max(1.0), "{theta} {aw} {want}");
            assert!(aw.im.abs() < 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn scan_rows_ordered() {
        let scan = WeakScan {
            params: SpinCouplingParams {
                j: 1e-34,
                t: 1.0,
                ..SpinCouplingParams::earth_surface()
            },
            observable: default_two_spin_observable(),
            thetas: vec![0.5, 1.0, 1.4],
            qs: vec![1e-3, 1e-2],
            meter: GaussianMeter::new(0.0, 1.0).unwrap(),
        };
        let rows = weak_value_scan(&scan).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!((rows[1].theta, rows[1].q), (0.5, 1e-2));
        assert_eq!((rows[2].theta, rows[2].q), (1.0, 1e-3));
        let text = weak_scan_table(&rows).to_tsv();
        assert!(text.starts_with("theta\tq\taw_re\taw_im\tshift_exact\tshift_weak\tpostselection_prob\n"));
    }

    #[test]
    fn constants_match_published_figures() {
        let report = constants_report();
        assert_eq!(report.len(), 4);
        for k in report.iter().filter(|k| k.reference.is_some()) {
            assert!(k.relative_deviation().unwrap() < 0.03, "{k:?}");
        }
        assert!((report[0].value - 2.154e-23).abs() < 1e-26);
        assert!((report[2].value - 2228.5).abs() < 0.5);
    }
}
