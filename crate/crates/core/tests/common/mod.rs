//! Shared test oracles: double-double arithmetic, the frequency-ratio
//! products evaluated without the library's offset rearrangement, and a
//! beam-splitter amplitude model of the interferometer cascade.

#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Neg, Sub};

use lpisim::kinematics::LinkGeometry;
use lpisim::Vector3;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`, about 106 bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        // two Newton corrections on the f64 quotient
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from(q2);
        let q3 = r.hi / o.hi;
        Dd::from(q1) + Dd::from(q2) + Dd::from(q3)
    }
}

pub fn dd_dot(a: &Vector3<f64>, b: &Vector3<f64>) -> Dd {
    (0..3).fold(Dd::ZERO, |acc, i| acc + Dd::from(a[i]) * Dd::from(b[i]))
}

fn half() -> Dd {
    Dd::from(0.5)
}

/// `omega12 / omega0 - 1` from the unexpanded product of the potential and
/// Doppler factors, with `U2 - U1` scaled by `1 + alpha`.
pub fn uplink_offset(g: &LinkGeometry, alpha: f64) -> Dd {
    let one = Dd::ONE;
    let (u1, u2) = (Dd::from(g.u1), Dd::from(g.u2));
    let num_pot = one - u2 + Dd::from(1.0 + alpha) * (u2 - u1) - half() * dd_dot(&g.beta1, &g.beta1);
    let den_pot = one - u2 - half() * dd_dot(&g.beta2, &g.beta2);
    let num_dop = one - dd_dot(&g.n12, &g.beta2);
    let den_dop = one - dd_dot(&g.n12, &g.beta1);
    (num_pot * num_dop) / (den_pot * den_dop) - one
}

/// `omega13 / omega0 - 1`.
pub fn roundtrip_offset(g: &LinkGeometry) -> Dd {
    let one = Dd::ONE;
    let down = (one - dd_dot(&g.n23, &g.beta3)) / (one - dd_dot(&g.n23, &g.beta2));
    let up = (one - dd_dot(&g.n12, &g.beta2)) / (one - dd_dot(&g.n12, &g.beta1));
    down * up - one
}

/// `S / (omega0 tau_l)`.
pub fn signal(g: &LinkGeometry, alpha: f64) -> Dd {
    uplink_offset(g, alpha) - half() * roundtrip_offset(g)
}

/// `S / (omega0 tau_l)` to second order, evaluated independently.
pub fn second_order_signal(g: &LinkGeometry, alpha: f64) -> f64 {
    let dv = g.beta1 - g.beta2;
    let dd = g.n12.dot(&g.beta1) - g.n12.dot(&g.beta2);
    (1.0 + alpha) * (g.u2 - g.u1) + 0.5 * dv.dot(&dv) - dd * dd - g.t_up * g.n12.dot(&g.a1) / lpisim::constants::C
}

/// Central/side intensities of the two-MZI cascade from 50:50 beam
/// splitter amplitudes, mixing coherent and incoherent sums by `v`.
/// Returns `[early, central, late]` on the chosen output port.
pub fn cascade_oracle(phi: f64, v: f64, port: usize) -> [f64; 3] {
    use num_complex::Complex64 as C;
    let t = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = C::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let bs = [[t, i], [i, t]];
    // first MZI: short path then long path towards its used output
    let first = [bs[0][0] * bs[0][0], bs[0][1] * bs[1][0]];
    // second MZI: short arm, long arm carrying the interferometric phase
    let arm = [bs[0][0], bs[0][1] * C::from_polar(1.0, phi)];
    let out = bs[port];
    let amp = |a: usize, b: usize| first[a] * arm[b] * out[b];
    let early = amp(0, 0).norm_sqr();
    let late = amp(1, 1).norm_sqr();
    let (sl, ls) = (amp(0, 1), amp(1, 0));
    let coherent = (sl + ls).norm_sqr();
    let incoherent = sl.norm_sqr() + ls.norm_sqr();
    [early, v * coherent + (1.0 - v) * incoherent, late]
}

/// Link geometry for a station placed within a few degrees of the
/// sub-satellite point of a random LEO/MEO orbit.
pub fn visible_geometry() -> impl proptest::strategy::Strategy<Value = LinkGeometry> {
    use lpisim::constants::{OMEGA_EARTH, R_EARTH};
    use lpisim::kinematics::{build_link_geometry, CircularOrbit, GroundStation};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    (4e5..2e6f64, 0.0..PI, 0.0..2.0 * PI, 0.0..2.0 * PI, 0.0..6000.0f64, -0.1..0.1f64, -0.1..0.1f64, 0.0..3000.0f64).prop_map(
        |(h, inc, raan, phase, t, dlat, dlon, alt)| {
            let orbit = CircularOrbit::new(R_EARTH + h, inc, raan, phase).unwrap();
            let r = orbit.state(t).position;
            let lat = (r.z / r.norm()).asin();
            let lon = r.y.atan2(r.x) - OMEGA_EARTH * t;
            let lat = (lat + dlat).clamp(-1.5, 1.5);
            let gs = GroundStation::new(lat, lon + dlon, alt).unwrap();
            build_link_geometry(&gs, &orbit, t).unwrap()
        },
    )
}
