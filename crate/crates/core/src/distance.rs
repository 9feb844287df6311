//! Divergence between two embedding sets.

use rayon::prelude::*;

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};

/// k-nearest-neighbour estimate of `KL(P || Q)`:
///
/// `(d/n) Σ ln(ν_k(x_i) / ρ_k(x_i)) + ln(m / (n - 1))`
///
/// where `ρ_k` is the distance from `x_i` to its k-th neighbour in `P`
/// (itself excluded), `ν_k` the distance to its k-th neighbour in `Q`, and
/// distances are Euclidean. Zero distances (duplicates) are skipped when
/// ranking neighbours; points left without `k` positive distances on either
/// side do not contribute. Finite-sample estimates can be negative.
pub fn knn_kl_divergence(p: &EmbeddingSet, q: &EmbeddingSet, k: usize) -> Result<f64> {
    if p.d() != q.d() {
        return Err(Error::DimensionMismatch {
            expected: format!("dimension {}", p.d()),
            found: format!("dimension {}", q.d()),
        });
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    if p.n() <= k || q.n() <= k {
        return Err(Error::DegenerateSample(format!(
            "need more than k={k} samples per set, got {} and {}",
            p.n(),
            q.n()
        )));
    }

    let terms: Vec<Option<f64>> = (0..p.n())
        .into_par_iter()
        .map(|i| {
            let x = p.row(i);
            let rho2 = kth_positive_sq_distance(x, p, k, Some(i))?;
            let nu2 = kth_positive_sq_distance(x, q, k, None)?;
            Some(0.5 * (nu2.ln() - rho2.ln()))
        })
        .collect();

    let used: Vec<f64> = terms.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::DegenerateSample("all neighbour distances are zero".into()));
    }
    let d = p.d() as f64;
    let n = p.n() as f64;
    let m = q.n() as f64;
    Ok(d * used.iter().sum::<f64>() / used.len() as f64 + (m / (n - 1.0)).ln())
}

/// k-th smallest positive squared distance from `x` to the rows of `set`.
fn kth_positive_sq_distance(x: &[f32], set: &EmbeddingSet, k: usize, skip: Option<usize>) -> Option<f64> {
    // ascending, at most k entries
    let mut best: Vec<f64> = Vec::with_capacity(k + 1);
    for (j, y) in set.rows().enumerate() {
        if Some(j) == skip {
            continue;
        }
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (*a as f64 - *b as f64).powi(2)).sum();
        if d2 == 0.0 {
            continue;
        }
        if best.len() == k && d2 >= best[k - 1] {
            continue;
        }
        let pos = best.partition_point(|&v| v <= d2);
        best.insert(pos, d2);
        best.truncate(k);
    }
    (best.len() == k).then(|| best[k - 1])
}

/// Closed-form KL between diagonal Gaussians fitted to each set (unbiased
/// per-coordinate variances).
pub fn gaussian_kl(p: &EmbeddingSet, q: &EmbeddingSet) -> Result<f64> {
    if p.d() != q.d() {
        return Err(Error::DimensionMismatch {
            expected: format!("dimension {}", p.d()),
            found: format!("dimension {}", q.d()),
        });
    }
    if p.n() < 2 || q.n() < 2 {
        return Err(Error::DegenerateSample("need at least two samples per set".into()));
    }
    let (mp, vp) = diag_moments(p);
    let (mq, vq) = diag_moments(q);
    let mut kl = 0.0;
    for j in 0..p.d() {
        if vq[j] <= 0.0 || vp[j] <= 0.0 {
            return Err(Error::DegenerateSample(format!("zero variance in coordinate {j}")));
        }
        let r = vp[j] / vq[j];
        kl += 0.5 * (r + (mq[j] - mp[j]).powi(2) / vq[j] - 1.0 - r.ln());
    }
    Ok(kl)
}

fn diag_moments(s: &EmbeddingSet) -> (Vec<f64>, Vec<f64>) {
    let n = s.n() as f64;
    let mut mean = vec![0.0; s.d()];
    for r in s.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += *v as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; s.d()];
    for r in s.rows() {
        for ((acc, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *acc += (*v as f64 - m).powi(2);
        }
    }
    var.iter_mut().for_each(|v| *v /= n - 1.0);
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[&[f32]]) -> EmbeddingSet {
        EmbeddingSet::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), "t").unwrap()
    }

    #[test]
    fn kth_neighbour_skips_self_and_duplicates() {
        let s = set(&[&[0.0], &[0.0], &[1.0], &[3.0], &[6.0]]);
        assert_eq!(kth_positive_sq_distance(&[0.0], &s, 1, Some(0)), Some(1.0));
        assert_eq!(kth_positive_sq_distance(&[0.0], &s, 3, Some(0)), Some(36.0));
        assert_eq!(kth_positive_sq_distance(&[0.0], &s, 4, Some(0)), None);
    }

    #[test]
    fn constant_sets_are_degenerate() {
        let row: &[f32] = &[1.0, 2.0];
        let c = set(&[row; 8]);
        assert!(matches!(knn_kl_divergence(&c, &c, 5), Err(Error::DegenerateSample(_))));
        assert!(matches!(gaussian_kl(&c, &c), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn too_few_samples_or_mismatched_dims() {
        let a = set(&[&[0.0], &[1.0], &[2.0]]);
        assert!(matches!(knn_kl_divergence(&a, &a, 3), Err(Error::DegenerateSample(_))));
        let b = set(&[&[0.0, 1.0], &[1.0, 1.0], &[2.0, 0.0]]);
        assert!(matches!(knn_kl_divergence(&a, &b, 1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gaussian_kl_identity_and_closed_forms() {
        let a = set(&[&[0.0, 1.0], &[1.0, 3.0], &[2.0, 2.0], &[5.0, -1.0]]);
        assert_eq!(gaussian_kl(&a, &a).unwrap(), 0.0);

        // Shifting every row by (1, 2) leaves variances unchanged: KL = Σ μ²/(2σ²).
        let shifted = set(&[&[1.0, 3.0], &[2.0, 5.0], &[3.0, 4.0], &[6.0, 1.0]]);
        let (_, v) = diag_moments(&a);
        let want = 0.5 * (1.0 / v[0] + 4.0 / v[1]);
        assert!((gaussian_kl(&a, &shifted).unwrap() - want).abs() < 1e-12);

        // Scaling one coordinate by s gives variance ratio r = 1/s² per coordinate.
        let scaled = set(&[&[0.0, 2.0], &[2.0, 6.0], &[4.0, 4.0], &[10.0, -2.0]]);
        let r: f64 = 0.25;
        let (m, _) = diag_moments(&a);
        let (ms, vs) = diag_moments(&scaled);
        let mean_term: f64 = (0..2).map(|j| (m[j] - ms[j]).powi(2) / vs[j]).sum::<f64>() * 0.5;
        let want = 2.0 * 0.5 * (r + (1.0 / r).ln() - 1.0) + mean_term;
        assert!((gaussian_kl(&a, &scaled).unwrap() - want).abs() < 1e-12);
    }
}
