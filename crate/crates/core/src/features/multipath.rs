//! Two dominant multipath components from the eigenvalues of `X X^H`.

use serde::{Deserialize, Serialize};

use crate::csi::{ComplexSample, CsiPacket};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipathProfile {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `lambda1 / max(lambda2, 1e-12)`, clipped to the configured cap.
    pub ratio: f64,
}

const RATIO_EPS: f64 = 1e-12;

/// Eigenvalues of the 2x2 Gram matrix of the pair's CSI rows.
///
/// The off-diagonal entry is first rotated onto the real axis, then a single
/// Jacobi rotation diagonalizes the resulting real symmetric matrix.
pub fn multipath_profile(packet: &CsiPacket, pair: (usize, usize), cap: f64) -> MultipathProfile {
    let (x1, x2) = (&packet.csi[pair.0], &packet.csi[pair.1]);
    let g11: f64 = x1.iter().map(|c| c.norm_sqr()).sum();
    let g22: f64 = x2.iter().map(|c| c.norm_sqr()).sum();
    let g12: ComplexSample = x1.iter().zip(x2).map(|(a, b)| a * b.conj()).sum();
    let b = g12.norm();

    let (l1, l2) = if b == 0.0 {
        (g11, g22)
    } else {
        let theta = 0.5 * (2.0 * b).atan2(g11 - g22);
        let (s, c) = theta.sin_cos();
        (
            c * c * g11 + 2.0 * s * c * b + s * s * g22,
            s * s * g11 - 2.0 * s * c * b + c * c * g22,
        )
    };
    let (lambda1, lambda2) = if l1 >= l2 { (l1, l2) } else { (l2, l1) };
    let lambda2 = lambda2.max(0.0);
    let ratio = (lambda1 / lambda2.max(RATIO_EPS)).min(cap);
    MultipathProfile {
        lambda1,
        lambda2,
        ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn packet(x1: Vec<ComplexSample>, x2: Vec<ComplexSample>) -> CsiPacket {
        CsiPacket {
            timestamp: 0.0,
            seq: 0,
            rss: vec![0.0, 0.0],
            csi: vec![x1, x2],
        }
    }

    /// Closed-form eigenvalues of a 2x2 Hermitian matrix from trace and determinant.
    fn closed_form(x1: &[ComplexSample], x2: &[ComplexSample]) -> (f64, f64) {
        let a: f64 = x1.iter().map(|c| c.re * c.re + c.im * c.im).sum();
        let d: f64 = x2.iter().map(|c| c.re * c.re + c.im * c.im).sum();
        let (mut br, mut bi) = (0.0, 0.0);
        for (p, q) in x1.iter().zip(x2) {
            br += p.re * q.re + p.im * q.im;
            bi += p.im * q.re - p.re * q.im;
        }
        let tr = a + d;
        let det = a * d - (br * br + bi * bi);
        let disc = ((tr * tr / 4.0) - det).max(0.0).sqrt();
        (tr / 2.0 + disc, tr / 2.0 - disc)
    }

    #[test]
    fn rank_one_rows() {
        let x1: Vec<_> = (0..30).map(|k| ComplexSample::from_polar(1.0 + k as f64 * 0.1, k as f64)).collect();
        let x2: Vec<_> = x1.iter().map(|c| c * ComplexSample::new(0.5, -0.7)).collect();
        let p = multipath_profile(&packet(x1, x2), (0, 1), 1e6);
        assert!(p.lambda2 <= 1e-9 * p.lambda1);
        assert_eq!(p.ratio, 1e6);
    }

    #[test]
    fn orthogonal_equal_rows() {
        let mut x1 = vec![ComplexSample::new(0.0, 0.0); 30];
        let mut x2 = x1.clone();
        x1[0] = ComplexSample::new(2.0, 0.0);
        x2[1] = ComplexSample::new(0.0, 2.0);
        let p = multipath_profile(&packet(x1, x2), (0, 1), 1e6);
        assert!((p.lambda1 - 4.0).abs() < 1e-12 && (p.lambda2 - 4.0).abs() < 1e-12);
        assert!((p.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_matches_closed_form() {
        let mut r = rng::stream(9, "mp");
        for _ in 0..1000 {
            let mut row = || -> Vec<ComplexSample> {
                (0..30).map(|_| ComplexSample::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect()
            };
            let (x1, x2) = (row(), row());
            let (e1, e2) = closed_form(&x1, &x2);
            let total: f64 = x1.iter().chain(&x2).map(|c| c.norm_sqr()).sum();
            let p = multipath_profile(&packet(x1, x2), (0, 1), 1e6);
            assert!((p.lambda1 - e1).abs() <= 1e-9 * e1);
            assert!((p.lambda2 - e2).abs() <= 1e-9 * e1);
            assert!((p.lambda1 + p.lambda2 - total).abs() <= 1e-9 * total);
            assert!(p.lambda2 >= -1e-12);
        }
    }
}
