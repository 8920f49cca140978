//! Reconstruction kernels `Ψ = U Σ_τ Vᵀ Eᵀ` and their application.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::digest::{Digest, Fingerprint};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::forward::{ScanGeometry, Sinogram};
use crate::phantom::Lattice;

use super::filter::{filter_factors, filter_values, FilterSpec};
use super::mollifier::MollifierMatrix;
use super::svd::SvdFactors;

/// Everything a kernel was built from, so stale kernels can be rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelProvenance {
    pub geometry: ScanGeometry,
    pub geometry_digest: Digest,
    pub grid_digest: Digest,
    pub gamma: f64,
    pub filter: FilterSpec,
    pub lattice: Lattice,
}

impl KernelProvenance {
    pub fn new(geometry: ScanGeometry, grid_digest: Digest, gamma: f64, filter: FilterSpec, lattice: Lattice) -> Self {
        KernelProvenance {
            geometry_digest: geometry.digest(),
            geometry,
            grid_digest,
            gamma,
            filter,
            lattice,
        }
    }

    /// Fails unless `g` was recorded with the geometry this kernel was built for.
    pub fn check_data(&self, g: &Sinogram) -> Result<()> {
        if g.geometry.digest() != self.geometry_digest {
            return Err(Error::Provenance(format!(
                "sinogram geometry {:?} does not match kernel geometry {:?}",
                g.geometry, self.geometry
            )));
        }
        Ok(())
    }

    pub fn digest(&self) -> Digest {
        let mut f = Fingerprint::new("kernel-provenance");
        f.bytes(&self.geometry_digest)
            .bytes(&self.grid_digest)
            .f64(self.gamma)
            .bytes(filter_tag(&self.filter).as_bytes())
            .u64(self.lattice.width as u64)
            .u64(self.lattice.height as u64)
            .f64s(&[
                self.lattice.extent.x0,
                self.lattice.extent.x1,
                self.lattice.extent.y0,
                self.lattice.extent.y1,
            ]);
        f.finish()
    }
}

fn filter_tag(f: &FilterSpec) -> String {
    match *f {
        FilterSpec::NoFilter => "none".into(),
        FilterSpec::Tikhonov { tau } => format!("tikhonov:{:016x}", tau.to_bits()),
        FilterSpec::Arctan { tau } => format!("arctan:{:016x}", tau.to_bits()),
        FilterSpec::Truncate { rank } => format!("truncate:{rank}"),
    }
}

/// A linear map from data (length `m`) to reconstruction values (length `r`)
/// given as `Ψᵀ`.
pub trait KernelOperator: Send + Sync {
    fn data_len(&self) -> usize;
    fn image_len(&self) -> usize;
    fn provenance(&self) -> &KernelProvenance;
    /// `Ψᵀ g`.
    fn apply_transpose(&self, g: &[f64], exec: Exec) -> Result<Vec<f64>>;
    /// `Ψ y`.
    fn apply(&self, y: &[f64], exec: Exec) -> Result<Vec<f64>>;
}

/// Dense `m × r` kernel matrix, stored column-major so that column `l`
/// (the kernel for reconstruction point `z_l`) is contiguous.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub provenance: KernelProvenance,
}

impl KernelMatrix {
    pub fn column(&self, l: usize) -> &[f64] {
        &self.values[l * self.rows..(l + 1) * self.rows]
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        MatRef::from_column_major_slice(&self.values, self.rows, self.cols)
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

impl KernelOperator for KernelMatrix {
    fn data_len(&self) -> usize {
        self.rows
    }

    fn image_len(&self) -> usize {
        self.cols
    }

    fn provenance(&self) -> &KernelProvenance {
        &self.provenance
    }

    fn apply_transpose(&self, g: &[f64], exec: Exec) -> Result<Vec<f64>> {
        check_len("data vector", self.rows, g.len())?;
        // Column-major Ψ is row-major Ψᵀ.
        Ok(exec::matvec(exec, &self.values, self.cols, self.rows, g))
    }

    fn apply(&self, y: &[f64], exec: Exec) -> Result<Vec<f64>> {
        check_len("image vector", self.cols, y.len())?;
        Ok(exec::matvec_t(exec, &self.values, self.cols, self.rows, y))
    }
}

fn svd_provenance(svd: &SvdFactors) -> Result<(ScanGeometry, Digest)> {
    match (&svd.geometry, svd.grid_digest) {
        (Some(g), Some(d)) => Ok((g.clone(), d)),
        _ => Err(Error::Provenance("SVD factors carry no geometry or grid record".into())),
    }
}

fn check_mollifier(svd: &SvdFactors, e: &MollifierMatrix) -> Result<()> {
    check_len("mollifier columns", svd.cols(), e.cols)?;
    if let Some(d) = svd.grid_digest {
        if e.grid_digest != d {
            return Err(Error::Provenance("mollifier was built on a different interpolation grid".into()));
        }
    }
    Ok(())
}

/// `Ψ = U Σ_τ Vᵀ Eᵀ`, an `m × r` matrix whose column `l` is the kernel for `z_l`.
pub fn compute_lark(svd: &SvdFactors, e: &MollifierMatrix, f: &FilterSpec) -> Result<KernelMatrix> {
    compute_lark_with(svd, e, f, Exec::default())
}

pub fn compute_lark_with(svd: &SvdFactors, e: &MollifierMatrix, f: &FilterSpec, exec: Exec) -> Result<KernelMatrix> {
    check_mollifier(svd, e)?;
    f.validate(svd.cols())?;
    let (geometry, grid_digest) = svd_provenance(svd)?;
    let par = exec.faer_par();
    let (m, n, r) = (svd.rows(), svd.cols(), e.rows);
    let em = MatRef::from_row_major_slice(&e.values, r, n);
    // W = E V Σ_τ   (r × n)
    let mut w = Mat::<f64>::zeros(r, n);
    matmul(w.as_mut(), Accum::Replace, em, svd.v.as_ref(), 1.0, par);
    let d = filter_factors(f, &svd.sigma);
    for (k, &dk) in d.iter().enumerate() {
        for l in 0..r {
            w[(l, k)] *= dk;
        }
    }
    // Ψ = U Wᵀ   (m × r)
    let mut psi = Mat::<f64>::zeros(m, r);
    matmul(psi.as_mut(), Accum::Replace, svd.u.as_ref(), w.transpose(), 1.0, par);
    let mut values = Vec::with_capacity(m * r);
    for l in 0..r {
        values.extend((0..m).map(|j| psi[(j, l)]));
    }
    Ok(KernelMatrix {
        rows: m,
        cols: r,
        values,
        provenance: KernelProvenance::new(geometry, grid_digest, e.gamma, *f, e.lattice),
    })
}

/// The mollifier actually realised by the filtered kernel,
/// `E^{γ,τ} = E V diag(F_τ(σ)) Vᵀ`.
pub fn effective_mollifier(e: &MollifierMatrix, svd: &SvdFactors, f: &FilterSpec) -> Result<MollifierMatrix> {
    check_mollifier(svd, e)?;
    f.validate(svd.cols())?;
    let fv = filter_values(f, &svd.sigma);
    if fv.iter().all(|&x| x == 1.0) {
        return Ok(e.clone());
    }
    let par = Exec::default().faer_par();
    let (n, r) = (svd.cols(), e.rows);
    let em = MatRef::from_row_major_slice(&e.values, r, n);
    let mut w = Mat::<f64>::zeros(r, n);
    matmul(w.as_mut(), Accum::Replace, em, svd.v.as_ref(), 1.0, par);
    for (k, &fk) in fv.iter().enumerate() {
        for l in 0..r {
            w[(l, k)] *= fk;
        }
    }
    let mut out = Mat::<f64>::zeros(r, n);
    matmul(out.as_mut(), Accum::Replace, w.as_ref(), svd.v.transpose(), 1.0, par);
    let mut values = Vec::with_capacity(r * n);
    for l in 0..r {
        values.extend((0..n).map(|i| out[(l, i)]));
    }
    Ok(MollifierMatrix { values, ..e.clone() })
}

/// Largest singular value of `Ψ` by power iteration on `ΨᵀΨ`.
pub fn kernel_norm(k: &dyn KernelOperator) -> Result<f64> {
    kernel_norm_with(k, 1e-6, Exec::default())
}

/// Power iteration with the Rayleigh quotient as estimate. Iteration stops
/// once successive estimates agree to `tol²`, which keeps the error of the
/// result well below `tol` for moderate spectral gaps.
pub fn kernel_norm_with(k: &dyn KernelOperator, tol: f64, exec: Exec) -> Result<f64> {
    let r = k.image_len();
    if r == 0 || k.data_len() == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_4e4e);
    let mut x: Vec<f64> = (0..r).map(|_| rng.random::<f64>() - 0.5).collect();
    let nx = exec::norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut est = 0.0f64;
    let max_iter = 20_000;
    for it in 0..max_iter {
        let y = k.apply(&x, exec)?;
        let rho = exec::dot(&y, &y); // xᵀ ΨᵀΨ x with ‖x‖ = 1
        let z = k.apply_transpose(&y, exec)?;
        let nz = exec::norm2(&z);
        if nz == 0.0 {
            return Ok(0.0);
        }
        let done = it > 0 && (rho - est).abs() <= tol * tol * rho.max(f64::MIN_POSITIVE);
        est = rho;
        if done {
            break;
        }
        if it + 1 == max_iter {
            log::warn!("kernel norm power iteration stopped after {max_iter} steps");
        }
        x = z.into_iter().map(|v| v / nz).collect();
    }
    Ok(est.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::Extent;

    fn prov(m: usize, r: usize) -> KernelProvenance {
        let g = ScanGeometry::new(0.1, m, 1).unwrap();
        KernelProvenance::new(g, [0; 32], 1.0, FilterSpec::NoFilter, Lattice::new(r, 1, Extent::UNIT).unwrap())
    }

    fn dense(m: usize, r: usize, values: Vec<f64>) -> KernelMatrix {
        KernelMatrix {
            rows: m,
            cols: r,
            values,
            provenance: prov(m, r),
        }
    }

    #[test]
    fn single_column_norm() {
        let mut v = vec![0.0; 12];
        v[4..8].copy_from_slice(&[1.0, 2.0, 2.0, 4.0]);
        let k = dense(4, 3, v);
        assert!((kernel_norm(&k).unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_norm() {
        let (c, s) = (0.6, 0.8);
        let k = dense(2, 2, vec![c, s, -s, c]);
        assert!((kernel_norm(&k).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn apply_is_adjoint_of_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (m, r) = (17, 9);
        let k = dense(m, r, (0..m * r).map(|_| rng.random::<f64>() - 0.5).collect());
        let g: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..r).map(|_| rng.random::<f64>()).collect();
        let a = exec::dot(&k.apply_transpose(&g, Exec::Sequential).unwrap(), &y);
        let b = exec::dot(&g, &k.apply(&y, Exec::Sequential).unwrap());
        assert!((a - b).abs() < 1e-12);
    }
}
