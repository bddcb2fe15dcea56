//! Variance-based subcarrier selection.

use super::{FeatureError, VbssScore};
use crate::csi::CsiPacket;

/// Score of each subcarrier of `antenna` over the packets of a window.
///
/// Amplitudes are mean-centered per subcarrier before the covariance.
pub fn covariance_scores(packets: &[CsiPacket], antenna: usize, score: VbssScore) -> Vec<f64> {
    let n_sub = packets.first().map_or(0, CsiPacket::n_sub);
    let n = packets.len() as f64;
    let mut amps: Vec<Vec<f64>> = vec![Vec::with_capacity(packets.len()); n_sub];
    for p in packets {
        for (k, h) in p.csi[antenna].iter().enumerate() {
            amps[k].push(h.norm());
        }
    }
    for col in &mut amps {
        let m = col.iter().sum::<f64>() / n;
        col.iter_mut().for_each(|x| *x -= m);
    }
    let mut cov = vec![vec![0.0; n_sub]; n_sub];
    for i in 0..n_sub {
        for j in i..n_sub {
            let c = amps[i].iter().zip(&amps[j]).map(|(a, b)| a * b).sum::<f64>() / n;
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    (0..n_sub)
        .map(|i| {
            (0..n_sub)
                .filter(|&j| j != i)
                .map(|j| match score {
                    VbssScore::CovSum => cov[i][j],
                    VbssScore::AbsCovSum => cov[i][j].abs(),
                    VbssScore::CorrSum => {
                        let d = (cov[i][i] * cov[j][j]).sqrt();
                        if d > 0.0 {
                            cov[i][j] / d
                        } else {
                            0.0
                        }
                    }
                })
                .sum()
        })
        .collect()
}

/// Subcarrier 0 plus the `n - 1` highest-scoring other subcarriers of
/// `ref_antenna`, in ascending index order. Ties go to the lower index.
pub fn vbss_select(packets: &[CsiPacket], n: usize, ref_antenna: usize, score: VbssScore) -> Result<Vec<usize>, FeatureError> {
    if packets.len() < 2 {
        return Err(FeatureError::DegenerateWindow(packets.len()));
    }
    let n_sub = packets[0].n_sub();
    if !(1..=n_sub).contains(&n) {
        return Err(FeatureError::InvalidConfig(format!("n must lie in 1..={n_sub}, got {n}")));
    }
    let scores = covariance_scores(packets, ref_antenna, score);
    let mut rest: Vec<usize> = (1..n_sub).collect();
    rest.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut out = vec![0];
    out.extend_from_slice(&rest[..n - 1]);
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::ComplexSample;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn window(amps: &[Vec<f64>]) -> Vec<CsiPacket> {
        amps.iter()
            .enumerate()
            .map(|(t, row)| CsiPacket {
                timestamp: t as f64 * 0.01,
                seq: t as u64,
                rss: vec![0.0; 3],
                csi: (0..3)
                    .map(|_| row.iter().map(|&a| ComplexSample::new(a, 0.0)).collect())
                    .collect(),
            })
            .collect()
    }

    fn random_amps(seed: u64, n_pkt: usize) -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, "vbss-test");
        (0..n_pkt)
            .map(|_| (0..30).map(|_| 1.0 + r.random_range(-0.1..0.1)).collect())
            .collect()
    }

    #[test]
    fn n_one_and_all() {
        let w = window(&random_amps(1, 20));
        assert_eq!(vbss_select(&w, 1, 2, VbssScore::CovSum).unwrap(), vec![0]);
        assert_eq!(vbss_select(&w, 30, 2, VbssScore::CovSum).unwrap(), (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_window_rejected() {
        let w = window(&random_amps(1, 1));
        assert!(matches!(vbss_select(&w, 3, 2, VbssScore::CovSum), Err(FeatureError::DegenerateWindow(1))));
    }

    #[test]
    fn shared_signal_subcarriers_win() {
        let mut r = rng::stream(5, "shared");
        let amps: Vec<Vec<f64>> = (0..200)
            .map(|t| {
                let s = (t as f64 * 0.3).sin() * 2.0;
                (0..30)
                    .map(|k| {
                        let noise = r.random_range(-0.05..0.05);
                        if k == 3 || k == 7 {
                            3.0 + s + noise
                        } else {
                            1.0 + noise
                        }
                    })
                    .collect()
            })
            .collect();
        let w = window(&amps);
        // brute-force covariance oracle, sample (n-1) normalization
        let n = amps.len() as f64;
        let means: Vec<f64> = (0..30).map(|k| amps.iter().map(|r| r[k]).sum::<f64>() / n).collect();
        let cov = |i: usize, j: usize| {
            amps.iter().map(|r| (r[i] - means[i]) * (r[j] - means[j])).sum::<f64>() / (n - 1.0)
        };
        let mut best: Vec<(f64, usize)> = (1..30)
            .map(|i| ((0..30).filter(|&j| j != i).map(|j| cov(i, j)).sum(), i))
            .collect();
        best.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut expect = vec![0, best[0].1, best[1].1];
        expect.sort();
        assert_eq!(expect, vec![0, 3, 7]);
        assert_eq!(vbss_select(&w, 3, 2, VbssScore::CovSum).unwrap(), expect);
    }

    #[test]
    fn ties_go_to_lower_index() {
        // constant amplitudes: every score is zero
        let w = window(&vec![vec![1.0; 30]; 5]);
        assert_eq!(vbss_select(&w, 4, 2, VbssScore::CovSum).unwrap(), vec![0, 1, 2, 3]);
    }

    proptest! {
        #[test]
        fn contains_zero_unique_and_order_invariant(seed in 0u64..1000, n in 1usize..=30, rot in 0usize..20) {
            let amps = random_amps(seed, 20);
            let w = window(&amps);
            let sel = vbss_select(&w, n, 2, VbssScore::CovSum).unwrap();
            prop_assert_eq!(sel.len(), n);
            prop_assert!(sel.contains(&0));
            let mut d = sel.clone();
            d.dedup();
            prop_assert_eq!(d.len(), n);
            let mut shuffled = amps.clone();
            shuffled.rotate_left(rot);
            shuffled.reverse();
            let sel2 = vbss_select(&window(&shuffled), n, 2, VbssScore::CovSum).unwrap();
            prop_assert_eq!(sel, sel2);
        }
    }
}
