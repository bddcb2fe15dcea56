//! Power delay profile from the inverse DFT of each antenna's CFR.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::csi::{ComplexSample, CsiPacket};

/// Reusable inverse transform with `1/N` scaling.
#[derive(Clone)]
pub struct PdpTransform {
    n: usize,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PdpTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PdpTransform").field("n", &self.n).finish()
    }
}

impl PdpTransform {
    pub fn new(n: usize) -> Self {
        let ifft = FftPlanner::new().plan_fft_inverse(n);
        Self { n, ifft }
    }

    /// Channel impulse response of one CFR.
    pub fn cir(&self, cfr: &[ComplexSample]) -> Vec<ComplexSample> {
        assert_eq!(cfr.len(), self.n, "CFR length does not match the transform");
        let mut buf = cfr.to_vec();
        self.ifft.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Tap magnitudes (or squared magnitudes) of both pair antennas, concatenated.
    pub fn pdp(&self, packet: &CsiPacket, pair: (usize, usize), squared: bool) -> Vec<f64> {
        [pair.0, pair.1]
            .iter()
            .flat_map(|&a| self.cir(&packet.csi[a]))
            .map(|c| if squared { c.norm_sqr() } else { c.norm() })
            .collect()
    }
}

/// `|CIR|` taps of the pair's two antennas (60 values for 30 subcarriers).
pub fn power_delay_profile(packet: &CsiPacket, pair: (usize, usize)) -> Vec<f64> {
    PdpTransform::new(packet.n_sub()).pdp(packet, pair, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use std::f64::consts::PI;

    fn naive_idft(x: &[ComplexSample]) -> Vec<ComplexSample> {
        let n = x.len();
        (0..n)
            .map(|t| {
                let mut acc = ComplexSample::new(0.0, 0.0);
                for (k, v) in x.iter().enumerate() {
                    // exact integer reduction keeps the twiddle argument small
                    let e = ((k * t) % n) as f64;
                    acc += v * ComplexSample::from_polar(1.0, 2.0 * PI * e / n as f64);
                }
                acc / n as f64
            })
            .collect()
    }

    fn packet(rows: Vec<Vec<ComplexSample>>) -> CsiPacket {
        CsiPacket {
            timestamp: 0.0,
            seq: 0,
            rss: vec![0.0; rows.len()],
            csi: rows,
        }
    }

    #[test]
    fn constant_cfr_is_impulse() {
        let ones = vec![ComplexSample::new(1.0, 0.0); 30];
        let p = power_delay_profile(&packet(vec![ones.clone(), ones]), (0, 1));
        assert_eq!(p.len(), 60);
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1..30].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn pure_delay_shifts_impulse() {
        let m = 4;
        let row: Vec<_> = (0..30)
            .map(|k| ComplexSample::from_polar(1.0, -2.0 * PI * ((k * m) % 30) as f64 / 30.0))
            .collect();
        let t = PdpTransform::new(30);
        let cir = t.cir(&row);
        let peak = (0..30).max_by(|&a, &b| cir[a].norm().total_cmp(&cir[b].norm())).unwrap();
        assert_eq!(peak, m);
        assert!((cir[m].norm() - 1.0).abs() < 1e-12);
        let conj: Vec<_> = row.iter().map(|c| c.conj()).collect();
        assert!((t.cir(&conj)[30 - m].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_matches_naive_and_parseval() {
        let mut r = rng::stream(4, "pdp");
        let t = PdpTransform::new(30);
        for _ in 0..1000 {
            let x: Vec<_> = (0..30)
                .map(|_| ComplexSample::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
                .collect();
            let fast = t.cir(&x);
            let slow = naive_idft(&x);
            let scale = slow.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-9 * scale);
            }
            let time: f64 = fast.iter().map(|c| c.norm_sqr()).sum();
            let freq: f64 = x.iter().map(|c| c.norm_sqr()).sum::<f64>() / 30.0;
            assert!((time - freq).abs() <= 1e-9 * freq);
        }
    }
}
