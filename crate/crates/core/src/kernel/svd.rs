//! Thin SVD of the projection matrix.

use faer::{Mat, MatRef};

use crate::digest::Digest;
use crate::error::{invalid, Error, Result};
use crate::forward::{ProjectionMatrix, ScanGeometry};

/// `A = U diag(σ) Vᵀ`, equivalently `Aᵀ = V S Uᵀ`.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    /// `m × n`, orthonormal columns.
    pub u: Mat<f64>,
    /// Non-increasing, non-negative.
    pub sigma: Vec<f64>,
    /// `n × n`, orthogonal.
    pub v: Mat<f64>,
    pub geometry: Option<ScanGeometry>,
    pub grid_digest: Option<Digest>,
}

impl SvdFactors {
    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    /// Smallest non-zero singular value.
    pub fn sigma_min_positive(&self) -> f64 {
        self.sigma
            .iter()
            .copied()
            .filter(|&s| s > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// SVD of the projection matrix, computed as the SVD of `Aᵀ` so the
/// row-major buffer is used in place.
pub fn svd_of_transpose(a: &ProjectionMatrix) -> Result<SvdFactors> {
    if a.rows < a.cols {
        return Err(invalid(format!(
            "SVD route needs at least as many rays as unknowns (m = {}, n = {})",
            a.rows, a.cols
        )));
    }
    let at = MatRef::from_column_major_slice(&a.values, a.cols, a.rows);
    let mut f = svd_wide(at)?;
    f.geometry = Some(a.geometry.clone());
    f.grid_digest = Some(a.grid_digest);
    Ok(f)
}

/// SVD of a tall matrix `b` (`m ≥ n`).
pub fn svd_mat(b: MatRef<'_, f64>) -> Result<SvdFactors> {
    if b.nrows() < b.ncols() {
        return Err(invalid("svd_mat expects a tall matrix"));
    }
    svd_wide(b.transpose())
}

/// Factorises `Aᵀ = P Σ Qᵀ` (`n × m`, `n ≤ m`) and returns `U = Q`, `V = P`.
fn svd_wide(at: MatRef<'_, f64>) -> Result<SvdFactors> {
    let (n, m) = (at.nrows(), at.ncols());
    if n == 0 {
        return Ok(SvdFactors {
            u: Mat::zeros(m, 0),
            sigma: Vec::new(),
            v: Mat::zeros(0, 0),
            geometry: None,
            grid_digest: None,
        });
    }
    let svd = at
        .thin_svd()
        .map_err(|e| Error::Factorization(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let mut sigma: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let p = svd.U();
    let q = svd.V();
    let mut u = Mat::zeros(m, n);
    let mut v = Mat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        // Sign convention: the largest-magnitude entry of each V column is positive.
        let mut best = 0usize;
        for r in 0..n {
            if p[(r, i)].abs() > p[(best, i)].abs() {
                best = r;
            }
        }
        let sign = if p[(best, i)] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            v[(r, k)] = sign * p[(r, i)];
        }
        for r in 0..m {
            u[(r, k)] = sign * q[(r, i)];
        }
    }
    sigma = order.iter().map(|&i| sigma[i].max(0.0)).collect();
    Ok(SvdFactors {
        u,
        sigma,
        v,
        geometry: None,
        grid_digest: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reconstructs_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (m, n) = (50, 30);
        let a = Mat::from_fn(m, n, |_, _| rng.random::<f64>() - 0.5);
        let f = svd_mat(a.as_ref()).unwrap();
        let mut r = f.u.clone();
        for j in 0..n {
            for i in 0..m {
                r[(i, j)] *= f.sigma[j];
            }
        }
        let rec = &r * f.v.transpose();
        let err = (&rec - &a).norm_l2() / a.norm_l2();
        assert!(err < 1e-12, "err = {err}");
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        for k in 0..n {
            let col = f.v.col(k);
            let big = (0..n).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs())).unwrap();
            assert!(col[big] > 0.0);
        }
    }

    #[test]
    fn diagonal_input() {
        let a = Mat::from_fn(4, 3, |i, j| if i == j { [2.0, -5.0, 1.0][i] } else { 0.0 });
        let f = svd_mat(a.as_ref()).unwrap();
        for (s, want) in f.sigma.iter().zip([5.0, 2.0, 1.0]) {
            assert!((s - want).abs() < 1e-14);
        }
    }
}
