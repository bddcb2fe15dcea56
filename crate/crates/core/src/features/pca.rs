//! Principal components of the power delay profile.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Fitted projection onto the top principal components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpBasis {
    pub mean: Vec<f64>,
    /// `components[i]` is the i-th unit-norm principal direction.
    pub components: Vec<Vec<f64>>,
    /// Fraction of total variance along each kept component.
    pub explained_variance_ratio: Vec<f64>,
}

impl PdpBasis {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((w, x), m)| w * (x - m)).sum())
            .collect()
    }
}

/// Fit the top `m` components of `rows`.
///
/// Components are ordered by decreasing variance, with the sign chosen so the
/// largest-magnitude coordinate is positive. Directions carrying no variance
/// are dropped (with a warning) instead of being returned as arbitrary vectors.
pub fn fit_pdp_pca(rows: &[Vec<f64>], m: usize) -> Result<PdpBasis, FeatureError> {
    let d = rows.first().map_or(0, Vec::len);
    if rows.len() < m + 1 {
        return Err(FeatureError::NoData("PCA needs at least m + 1 rows"));
    }
    if m == 0 || m > d {
        return Err(FeatureError::InvalidConfig(format!("cannot fit {m} components in {d} dimensions")));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|x| *x /= n);

    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for r in rows {
        for ((c, x), m) in centered.iter_mut().zip(r).zip(&mean) {
            *c = x - m;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (n - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let floor = 1e-12 * total.max(f64::MIN_POSITIVE);

    let mut components = Vec::new();
    let mut ratios = Vec::new();
    for &i in order.iter().take(m) {
        let lambda = eig.eigenvalues[i];
        if lambda <= floor {
            log::warn!("PDP covariance has rank {}; reducing PCA from {m} components", components.len());
            break;
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let big = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if big < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        ratios.push(lambda / total);
    }
    if components.is_empty() {
        return Err(FeatureError::NoData("PDP rows have zero variance"));
    }
    Ok(PdpBasis {
        mean,
        components,
        explained_variance_ratio: ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn rank_one_direction_recovered() {
        let dir: Vec<f64> = (0..60).map(|i| ((i as f64) * 0.37).sin()).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|t| dir.iter().map(|x| 2.0 + x * (t as f64 - 25.0)).collect())
            .collect();
        let b = fit_pdp_pca(&rows, 1).unwrap();
        let cos: f64 = b.components[0].iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() / norm;
        assert!(cos.abs() > 0.999);
        // asking for more than the rank reduces m
        let b3 = fit_pdp_pca(&rows, 3).unwrap();
        assert_eq!(b3.dim(), 1);
    }

    #[test]
    fn isotropic_rows_spread_variance_evenly() {
        let mut r = rng::stream(2, "pca");
        let rows: Vec<Vec<f64>> = (0..20_000)
            .map(|_| (0..60).map(|_| StandardNormal.sample(&mut r)).collect())
            .collect();
        let b = fit_pdp_pca(&rows, 5).unwrap();
        for &ev in &b.explained_variance_ratio {
            // top eigenvalues of a Wishart matrix sit slightly above 1/60
            assert!((ev - 1.0 / 60.0).abs() < 0.2 / 60.0, "{ev}");
        }
    }

    #[test]
    fn orthonormal_and_signed() {
        let mut r = rng::stream(3, "pca2");
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut r);
                (0..60)
                    .map(|i| { let e: f64 = StandardNormal.sample(&mut r); z * (i as f64 / 10.0) + 0.1 * e })
                    .collect()
            })
            .collect();
        let b = fit_pdp_pca(&rows, 3).unwrap();
        assert_eq!(b.dim(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = b.components[i].iter().zip(&b.components[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-9);
            }
            let big = b.components[i].iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(big > 0.0);
        }
        assert!(b.explained_variance_ratio.windows(2).all(|w| w[0] >= w[1]));
    }
}
