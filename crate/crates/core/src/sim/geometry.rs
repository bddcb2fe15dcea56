//! Ray geometry and the per-path channel response.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Blocker, PathKind, PropagationPath};
use crate::csi::{ComplexSample, SPEED_OF_LIGHT};

/// A point on the ground plane in meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point::new(x, y)
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Power-law amplitude decay `a = reference_gain / length^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Propagation {
    pub reference_gain: f64,
    pub exponent: f64,
}

impl Default for Propagation {
    fn default() -> Self {
        Self {
            reference_gain: 1.0,
            exponent: 1.0,
        }
    }
}

/// Resolved geometry of one path between a transmitter and one antenna.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGeometry {
    /// Total travelled length in meters.
    pub length: f64,
    /// Unit vector from the receiver towards the last bounce (or the transmitter).
    pub arrival: Point,
    /// Extra attenuation from blockers intersecting the ray, dB.
    pub blocked_db: f64,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point, q: Point, r: Point) -> bool {
    q.x <= p.x.max(r.x) && q.x >= p.x.min(r.x) && q.y <= p.y.max(r.y) && q.y >= p.y.min(r.y)
}

/// True if segments `p1-p2` and `q1-q2` intersect (touching counts).
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, p1, q2))
        || (d2 == 0.0 && on_segment(q1, p2, q2))
        || (d3 == 0.0 && on_segment(p1, q1, p2))
        || (d4 == 0.0 && on_segment(p1, q2, p2))
}

/// Total blocker attenuation (dB) on the straight ray `tx -> rx`.
pub fn blocking_db(tx: Point, rx: Point, blockers: &[Blocker], per_blocker_db: f64) -> f64 {
    blockers
        .iter()
        .filter(|b| segments_intersect(tx, rx, b.start, b.end))
        .map(|b| per_blocker_db * b.strength)
        .sum()
}

/// Length, arrival direction and blocking of `path` from `tx` to `rx`.
///
/// Only the direct ray is subject to blockers.
pub fn path_geometry(path: &PropagationPath, tx: Point, rx: Point, blockers: &[Blocker]) -> PathGeometry {
    let (length, last, blocked_db) = match path.kind {
        PathKind::Direct => (
            tx.dist(rx),
            tx,
            blocking_db(tx, rx, blockers, path.blocked_extra_attenuation_db),
        ),
        PathKind::Reflector { point } => (tx.dist(point) + point.dist(rx), point, 0.0),
    };
    let d = last.sub(rx);
    let n = d.x.hypot(d.y);
    let arrival = if n > 0.0 {
        Point::new(d.x / n, d.y / n)
    } else {
        Point::new(1.0, 0.0)
    };
    PathGeometry {
        length,
        arrival,
        blocked_db,
    }
}

/// Amplitude of a path with resolved geometry, before receiver-side gains.
pub fn path_amplitude(path: &PropagationPath, geom: &PathGeometry, prop: &Propagation) -> f64 {
    path.base_attenuation * prop.reference_gain / geom.length.powf(prop.exponent)
        * db_to_amplitude(-geom.blocked_db)
}

/// `a * exp(-j 2 pi f tau)` with `tau = length / c`.
///
/// The phase is reduced modulo one cycle before the exponential so long
/// paths at GHz carriers keep full precision.
pub fn delayed(amplitude: f64, length: f64, freq_hz: f64) -> ComplexSample {
    let cycles = freq_hz * (length / SPEED_OF_LIGHT);
    ComplexSample::from_polar(amplitude, -2.0 * PI * cycles.fract())
}

/// Frequency response contributed by one propagation path.
pub fn path_response(
    path: &PropagationPath,
    tx: Point,
    rx: Point,
    freq_hz: f64,
    prop: &Propagation,
    blockers: &[Blocker],
) -> ComplexSample {
    assert!(tx != rx, "transmitter and receiver coincide");
    let geom = path_geometry(path, tx, rx, blockers);
    delayed(path_amplitude(path, &geom, prop), geom.length, freq_hz)
}

/// Far-field phase shift between two antennas `d` apart for a signal
/// arriving at `aoa_rad` from boresight.
pub fn antenna_phase_delta(aoa_rad: f64, d: f64, freq_hz: f64) -> f64 {
    -2.0 * PI * d * aoa_rad.sin() * freq_hz / SPEED_OF_LIGHT
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct(a: f64) -> PropagationPath {
        PropagationPath {
            kind: PathKind::Direct,
            base_attenuation: a,
            blocked_extra_attenuation_db: 10.0,
        }
    }

    const FLAT: Propagation = Propagation {
        reference_gain: 1.0,
        exponent: 0.0,
    };

    /// Exact product `a*b` as an unevaluated sum of two doubles.
    fn two_product(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    /// Fractional cycles `f*d/c` carried in double-double precision.
    fn cycles_dd(f: f64, d: f64) -> f64 {
        let (hi, lo) = two_product(f, d);
        let q = hi / SPEED_OF_LIGHT;
        // remainder of the division, also exact via fma
        let r = (-q).mul_add(SPEED_OF_LIGHT, hi) + lo;
        let whole = q.floor();
        (q - whole) + r / SPEED_OF_LIGHT
    }

    #[test]
    fn one_wavelength_is_full_cycle() {
        let f = 5.19e9;
        let d = SPEED_OF_LIGHT / f;
        let h = path_response(&direct(1.0), Point::new(0.0, 0.0), Point::new(d, 0.0), f, &FLAT, &[]);
        assert!(wrap_angle(h.arg()).abs() < 1e-9);
        assert!((h.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_wavelength_is_minus_pi() {
        let f = 2.4e9;
        let d = SPEED_OF_LIGHT / (2.0 * f);
        let h = path_response(&direct(1.0), Point::new(0.0, 0.0), Point::new(0.0, d), f, &FLAT, &[]);
        // -pi and pi are the same angle
        assert!((h.arg().abs() - PI).abs() < 1e-9);
        assert!((h.re + 1.0).abs() < 1e-9);
    }

    #[test]
    fn blocker_adds_attenuation_to_direct_only() {
        let blockers = [Blocker {
            start: Point::new(5.0, -1.0),
            end: Point::new(5.0, 1.0),
            strength: 1.0,
        }];
        let tx = Point::new(0.0, 0.0);
        let rx = Point::new(10.0, 0.0);
        let free = path_response(&direct(1.0), tx, rx, 5e9, &FLAT, &[]);
        let blocked = path_response(&direct(1.0), tx, rx, 5e9, &FLAT, &blockers);
        assert!((blocked.norm() / free.norm() - db_to_amplitude(-10.0)).abs() < 1e-12);
        let refl = PropagationPath {
            kind: PathKind::Reflector {
                point: Point::new(5.0, 5.0),
            },
            base_attenuation: 0.5,
            blocked_extra_attenuation_db: 10.0,
        };
        let r = path_response(&refl, tx, rx, 5e9, &FLAT, &blockers);
        assert!((r.norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn boresight_and_endfire_phase_delta() {
        assert_eq!(antenna_phase_delta(0.0, 0.052, 5e9), 0.0);
        let f = 5.19e9;
        let d = SPEED_OF_LIGHT / (2.0 * f);
        assert!((antenna_phase_delta(PI / 2.0, d, f) + PI).abs() < 1e-12);
    }

    #[test]
    fn segment_intersection_cases() {
        let p = Point::new;
        assert!(segments_intersect(p(0., 0.), p(2., 2.), p(0., 2.), p(2., 0.)));
        assert!(!segments_intersect(p(0., 0.), p(1., 1.), p(2., 0.), p(3., 1.)));
        assert!(segments_intersect(p(0., 0.), p(2., 0.), p(1., 0.), p(1., 5.)));
        assert!(!segments_intersect(p(0., 0.), p(2., 0.), p(3., 0.), p(4., 0.)));
    }

    proptest! {
        #[test]
        fn response_matches_direct_formula(
            x in -50.0f64..50.0, y in -50.0f64..50.0,
            rx in -50.0f64..50.0, ry in 0.5f64..30.0,
            a in 0.01f64..1.0,
            f in 2.4e9f64..5.9e9,
            alpha in 0.0f64..2.0,
        ) {
            let tx = Point::new(x, y);
            let rxp = Point::new(rx, y + ry);
            let prop = Propagation { reference_gain: 1.0, exponent: alpha };
            let h = path_response(&direct(a), tx, rxp, f, &prop, &[]);
            let d = tx.dist(rxp);
            let amp = a / d.powf(alpha);
            let frac = cycles_dd(f, d);
            let expect = ComplexSample::from_polar(amp, -2.0 * PI * frac);
            prop_assert!((h - expect).norm() <= 1e-9 * amp.max(1e-300));
        }

        #[test]
        fn phase_delta_formula(theta in -PI..PI, d in 0.001f64..0.2, f in 1e9f64..6e9) {
            let expect = -2.0 * PI * d * theta.sin() * f / SPEED_OF_LIGHT;
            prop_assert!((antenna_phase_delta(theta, d, f) - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }

        #[test]
        fn wrap_angle_range(x in -100.0f64..100.0) {
            let w = wrap_angle(x);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!((((x - w) / (2.0 * PI)).round() * 2.0 * PI - (x - w)).abs() < 1e-9);
        }
    }
}
