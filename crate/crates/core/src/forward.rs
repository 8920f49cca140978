//! Scan geometry, projection matrix assembly, noise and data pre-smoothing.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, RadonProfile};
use crate::digest::{Digest, Fingerprint};
use crate::error::{invalid, Error, Result};
use crate::exec::{self, Exec};
use crate::grid::InterpolationGrid;

/// Parallel-beam geometry with a missing wedge of width `phi_missing`.
///
/// Angles are uniform over `[-(π−Φ)/2, (π−Φ)/2]` including both ends (a
/// single angle sits at 0). Detector offsets are bin centres
/// `s_j = −1 + (j + ½)·2/q`. Samples are ordered angle-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGeometry {
    pub phi_missing: f64,
    pub n_angles: usize,
    pub n_detectors: usize,
}

impl ScanGeometry {
    pub fn new(phi_missing: f64, n_angles: usize, n_detectors: usize) -> Result<Self> {
        let g = ScanGeometry {
            phi_missing,
            n_angles,
            n_detectors,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..PI).contains(&self.phi_missing) {
            return Err(invalid(format!(
                "missing angle must lie in [0, π), got {}",
                self.phi_missing
            )));
        }
        if self.n_angles == 0 || self.n_detectors == 0 {
            return Err(invalid("geometry needs at least one angle and one detector"));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.n_angles * self.n_detectors
    }

    /// Half-width `(π − Φ)/2` of the measured angular range.
    pub fn half_range(&self) -> f64 {
        0.5 * (PI - self.phi_missing)
    }

    pub fn angles(&self) -> Vec<f64> {
        let p = self.n_angles;
        if p == 1 {
            return vec![0.0];
        }
        let a = self.half_range();
        (0..p)
            .map(|i| {
                // Mirror the upper half so the grid is exactly symmetric.
                if 2 * i + 1 < p {
                    -a + 2.0 * a * i as f64 / (p - 1) as f64
                } else if 2 * i + 1 == p {
                    0.0
                } else {
                    a - 2.0 * a * (p - 1 - i) as f64 / (p - 1) as f64
                }
            })
            .collect()
    }

    pub fn detectors(&self) -> Vec<f64> {
        let q = self.n_detectors;
        (0..q)
            .map(|j| {
                if 2 * j + 1 < q || q == 1 {
                    -1.0 + (j as f64 + 0.5) * 2.0 / q as f64
                } else {
                    1.0 - ((q - 1 - j) as f64 + 0.5) * 2.0 / q as f64
                }
            })
            .collect()
    }

    pub fn detector_spacing(&self) -> f64 {
        2.0 / self.n_detectors as f64
    }

    /// Angular step, zero for a single angle.
    pub fn angle_step(&self) -> f64 {
        if self.n_angles <= 1 {
            0.0
        } else {
            2.0 * self.half_range() / (self.n_angles - 1) as f64
        }
    }

    pub fn digest(&self) -> Digest {
        let mut f = Fingerprint::new("geometry");
        f.f64(self.phi_missing)
            .u64(self.n_angles as u64)
            .u64(self.n_detectors as u64);
        f.finish()
    }
}

/// Data vector on a scan geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    pub geometry: ScanGeometry,
    pub values: Vec<f64>,
}

impl Sinogram {
    pub fn new(geometry: ScanGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.m() {
            return Err(Error::DimensionMismatch {
                what: "sinogram length",
                expected: geometry.m(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sinogram values must be finite"));
        }
        Ok(Sinogram { geometry, values })
    }

    pub fn zeros(geometry: ScanGeometry) -> Self {
        let m = geometry.m();
        Sinogram {
            geometry,
            values: vec![0.0; m],
        }
    }

    /// Detector row of angle `a`.
    pub fn row(&self, a: usize) -> &[f64] {
        let q = self.geometry.n_detectors;
        &self.values[a * q..(a + 1) * q]
    }

    pub fn norm(&self) -> f64 {
        exec::norm2(&self.values)
    }
}

/// Length of the line `{x : x·(cos θ, sin θ) = s}` inside the closed square
/// of side `h` centred at `center`.
pub fn pixel_line_intersection(s: f64, theta: f64, center: [f64; 2], h: f64) -> f64 {
    let (sn, cs) = theta.sin_cos();
    // x(t) = s·θ + t·θ⊥ with θ⊥ = (−sin θ, cos θ).
    let base = [s * cs, s * sn];
    let dir = [-sn, cs];
    let half = 0.5 * h;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for k in 0..2 {
        let a = center[k] - half - base[k];
        let b = center[k] + half - base[k];
        if dir[k] == 0.0 {
            if a > 0.0 || b < 0.0 {
                return 0.0;
            }
        } else {
            let (t1, t2) = (a / dir[k], b / dir[k]);
            lo = lo.max(t1.min(t2));
            hi = hi.min(t1.max(t2));
        }
    }
    (hi - lo).max(0.0)
}

/// Dense `m × n` matrix of `A = Ξ_m R_Φ Π_n`, row-major, rows angle-major.
#[derive(Clone, Debug)]
pub struct ProjectionMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub geometry: ScanGeometry,
    pub grid_digest: Digest,
}

impl ProjectionMatrix {
    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.cols..(j + 1) * self.cols]
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.cols + i]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.rows).map(|j| self.get(j, i)).collect()
    }
}

/// One row of the projection matrix for ray `(s, θ)`.
pub(crate) fn projection_row(grid: &InterpolationGrid, s: f64, theta: f64, out: &mut [f64]) {
    let (sn, cs) = theta.sin_cos();
    match grid.basis {
        BasisSpec::Pixel { side } => {
            let reach = side * std::f64::consts::FRAC_1_SQRT_2;
            for (o, c) in out.iter_mut().zip(&grid.centers) {
                let t = s - (c[0] * cs + c[1] * sn);
                *o = if t.abs() > reach {
                    0.0
                } else {
                    pixel_line_intersection(s, theta, *c, side)
                };
            }
        }
        b => {
            let mut prof = RadonProfile::new(b).expect("grid basis validated on construction");
            for (o, c) in out.iter_mut().zip(&grid.centers) {
                *o = prof.eval(s - (c[0] * cs + c[1] * sn));
            }
        }
    }
}

pub fn build_projection_matrix(geom: &ScanGeometry, grid: &InterpolationGrid) -> Result<ProjectionMatrix> {
    build_projection_matrix_with(geom, grid, Exec::default())
}

pub fn build_projection_matrix_with(
    geom: &ScanGeometry,
    grid: &InterpolationGrid,
    exec: Exec,
) -> Result<ProjectionMatrix> {
    geom.validate()?;
    if grid.is_empty() {
        return Err(invalid("grid has no centres"));
    }
    let (m, n) = (geom.m(), grid.len());
    let angles = geom.angles();
    let s = geom.detectors();
    let q = geom.n_detectors;
    let mut values = vec![0.0; m * n];
    exec.fill_rows(&mut values, n, |j, row| {
        projection_row(grid, s[j % q], angles[j / q], row)
    });
    Ok(ProjectionMatrix {
        rows: m,
        cols: n,
        values,
        geometry: geom.clone(),
        grid_digest: grid.digest(),
    })
}

pub fn apply_forward(a: &ProjectionMatrix, f: &[f64]) -> Result<Sinogram> {
    apply_forward_with(a, f, Exec::default())
}

pub fn apply_forward_with(a: &ProjectionMatrix, f: &[f64], exec: Exec) -> Result<Sinogram> {
    if f.len() != a.cols {
        return Err(Error::DimensionMismatch {
            what: "coefficient vector",
            expected: a.cols,
            got: f.len(),
        });
    }
    Ok(Sinogram {
        geometry: a.geometry.clone(),
        values: exec::matvec(exec, &a.values, a.rows, a.cols, f),
    })
}

/// `Aᵀ g`.
pub fn apply_adjoint(a: &ProjectionMatrix, g: &[f64], exec: Exec) -> Result<Vec<f64>> {
    if g.len() != a.rows {
        return Err(Error::DimensionMismatch {
            what: "data vector",
            expected: a.rows,
            got: g.len(),
        });
    }
    Ok(exec::matvec_t(exec, &a.values, a.rows, a.cols, g))
}

/// The forward operator `A`, dense or sparse.
pub trait ForwardOperator: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn geometry(&self) -> &ScanGeometry;
    fn grid_digest(&self) -> Digest;
    /// `A f`.
    fn forward(&self, f: &[f64], exec: Exec) -> Result<Vec<f64>>;
    /// `Aᵀ g`.
    fn adjoint(&self, g: &[f64], exec: Exec) -> Result<Vec<f64>>;
}

impl ForwardOperator for ProjectionMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn geometry(&self) -> &ScanGeometry {
        &self.geometry
    }

    fn grid_digest(&self) -> Digest {
        self.grid_digest
    }

    fn forward(&self, f: &[f64], exec: Exec) -> Result<Vec<f64>> {
        Ok(apply_forward_with(self, f, exec)?.values)
    }

    fn adjoint(&self, g: &[f64], exec: Exec) -> Result<Vec<f64>> {
        apply_adjoint(self, g, exec)
    }
}

/// Row-compressed projection matrix. Pixel rays meet only `O(√n)` cells and
/// compactly supported bases only the centres near the ray, so this is the
/// practical form of `A` for large grids.
#[derive(Clone, Debug)]
pub struct SparseProjection {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
    pub geometry: ScanGeometry,
    pub grid_digest: Digest,
}

impl SparseProjection {
    pub fn row(&self, j: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[j]..self.row_ptr[j + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> ProjectionMatrix {
        let mut values = vec![0.0; self.rows * self.cols];
        for j in 0..self.rows {
            let (idx, v) = self.row(j);
            for (&i, &x) in idx.iter().zip(v) {
                values[j * self.cols + i as usize] = x;
            }
        }
        ProjectionMatrix {
            rows: self.rows,
            cols: self.cols,
            values,
            geometry: self.geometry.clone(),
            grid_digest: self.grid_digest,
        }
    }
}

pub fn build_sparse_projection(geom: &ScanGeometry, grid: &InterpolationGrid) -> Result<SparseProjection> {
    build_sparse_projection_with(geom, grid, Exec::default())
}

pub fn build_sparse_projection_with(
    geom: &ScanGeometry,
    grid: &InterpolationGrid,
    exec: Exec,
) -> Result<SparseProjection> {
    geom.validate()?;
    if grid.is_empty() {
        return Err(invalid("grid has no centres"));
    }
    if grid.len() > u32::MAX as usize {
        return Err(invalid("grid too large for sparse storage"));
    }
    let (m, n) = (geom.m(), grid.len());
    let angles = geom.angles();
    let s = geom.detectors();
    let q = geom.n_detectors;
    let rows: Vec<Vec<(u32, f64)>> = exec.map(m, |j| {
        let mut buf = vec![0.0; n];
        projection_row(grid, s[j % q], angles[j / q], &mut buf);
        buf.iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32, *v))
            .collect()
    });
    let mut row_ptr = Vec::with_capacity(m + 1);
    row_ptr.push(0);
    let nnz: usize = rows.iter().map(Vec::len).sum();
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    for r in rows {
        for (i, v) in r {
            col_idx.push(i);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    Ok(SparseProjection {
        rows: m,
        cols: n,
        row_ptr,
        col_idx,
        values,
        geometry: geom.clone(),
        grid_digest: grid.digest(),
    })
}

impl ForwardOperator for SparseProjection {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn geometry(&self) -> &ScanGeometry {
        &self.geometry
    }

    fn grid_digest(&self) -> Digest {
        self.grid_digest
    }

    fn forward(&self, f: &[f64], exec: Exec) -> Result<Vec<f64>> {
        if f.len() != self.cols {
            return Err(Error::DimensionMismatch {
                what: "coefficient vector",
                expected: self.cols,
                got: f.len(),
            });
        }
        let mut y = vec![0.0; self.rows];
        exec.fill(&mut y, |j| {
            let (idx, v) = self.row(j);
            idx.iter().zip(v).map(|(&i, &a)| a * f[i as usize]).sum()
        });
        Ok(y)
    }

    fn adjoint(&self, g: &[f64], exec: Exec) -> Result<Vec<f64>> {
        if g.len() != self.rows {
            return Err(Error::DimensionMismatch {
                what: "data vector",
                expected: self.rows,
                got: g.len(),
            });
        }
        // Same fixed-block reduction as the dense transpose product, so the
        // result does not depend on the execution strategy.
        let block = exec::REDUCE_BLOCK;
        let partials = exec.map(self.rows.div_ceil(block), |b| {
            let mut acc = vec![0.0; self.cols];
            for j in b * block..((b + 1) * block).min(self.rows) {
                let (idx, v) = self.row(j);
                for (&i, &a) in idx.iter().zip(v) {
                    acc[i as usize] += a * g[j];
                }
            }
            acc
        });
        let mut y = vec![0.0; self.cols];
        for p in partials {
            for (a, v) in y.iter_mut().zip(p) {
                *a += v;
            }
        }
        Ok(y)
    }
}

/// Standard-normal vector from the seeded generator.
pub fn noise_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Adds Gaussian noise scaled so that `‖g^δ − g‖/‖g‖ = level`.
pub fn add_noise(g: &Sinogram, level: f64, seed: u64) -> Result<Sinogram> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(invalid(format!("noise level must be non-negative, got {level}")));
    }
    if level == 0.0 {
        return Ok(g.clone());
    }
    let gn = g.norm();
    if gn == 0.0 {
        return Err(invalid("cannot scale relative noise against zero data"));
    }
    let e = noise_vector(g.values.len(), seed);
    let scale = level * gn / exec::norm2(&e);
    let values = g.values.iter().zip(&e).map(|(v, n)| v + scale * n).collect();
    Ok(Sinogram {
        geometry: g.geometry.clone(),
        values,
    })
}

/// Signal-to-noise ratio `−20 log₁₀(level)` in decibels.
pub fn snr_of_level(level: f64) -> Result<f64> {
    if !(level > 0.0) {
        return Err(invalid(format!("noise level must be positive, got {level}")));
    }
    Ok(-20.0 * level.log10())
}

/// Discrete smoothing kernel `φ̄_ν(i·d)` on the detector lattice, normalised to
/// unit sum, returned for offsets `0..=half`.
pub fn presmooth_kernel(nu_basis: &BasisSpec, spacing: f64) -> Result<Vec<f64>> {
    let mut prof = RadonProfile::new(*nu_basis)?;
    let reach = nu_basis.effective_radius();
    let half = (reach / spacing).floor() as usize;
    let mut k: Vec<f64> = (0..=half).map(|i| prof.eval(i as f64 * spacing)).collect();
    while k.len() > 1 && *k.last().unwrap() == 0.0 {
        k.pop();
    }
    let total: f64 = k[0] + 2.0 * k[1..].iter().sum::<f64>();
    if !(total > 0.0) {
        return Err(invalid("smoothing kernel has no mass on the detector grid"));
    }
    k.iter_mut().for_each(|v| *v /= total);
    Ok(k)
}

/// Convolves every detector row with the sampled Radon profile of `nu_basis`,
/// zero-padded outside the detector range.
pub fn presmooth_sinogram(g: &Sinogram, nu_basis: &BasisSpec) -> Result<Sinogram> {
    presmooth_sinogram_with(g, nu_basis, Exec::default())
}

pub fn presmooth_sinogram_with(g: &Sinogram, nu_basis: &BasisSpec, exec: Exec) -> Result<Sinogram> {
    if !nu_basis.is_radial() {
        return Err(invalid("pre-smoothing needs a radial basis"));
    }
    let q = g.geometry.n_detectors;
    let k = presmooth_kernel(nu_basis, g.geometry.detector_spacing())?;
    if k.len() == 1 {
        log::warn!("smoothing support below one detector spacing; data left unchanged");
        return Ok(g.clone());
    }
    let mut values = vec![0.0; g.values.len()];
    exec.fill_rows(&mut values, q, |a, out| {
        let row = g.row(a);
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = k[0] * row[j];
            for (i, &w) in k.iter().enumerate().skip(1) {
                if j >= i {
                    acc += w * row[j - i];
                }
                if j + i < q {
                    acc += w * row[j + i];
                }
            }
            *o = acc;
        }
    });
    Ok(Sinogram {
        geometry: g.geometry.clone(),
        values,
    })
}

/// `|χ̂_ν(ξ)|² / φ̂_μ(ξ)` for unit-mass Gaussians of variances `ν` and `μ`.
/// Bounded in `‖ξ‖` exactly when `ν ≥ μ/2`.
pub fn gaussian_dominance_ratio(mu: f64, nu: f64, xi: f64) -> f64 {
    ((0.5 * mu - nu) * xi * xi).exp() / (2.0 * PI)
}
