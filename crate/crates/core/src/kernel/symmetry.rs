//! Block-diagonalisation of `A` under the mirror symmetries of the scan.
//!
//! Reflecting the plane in the `y` axis (`x → −x`) maps the ray `(s, θ)` to
//! `(−s, −θ)`; reflecting in the `x` axis (`y → −y`) maps it to `(s, −θ)`.
//! With mirrored angle and detector grids both act as permutations of the
//! rays, and on any centre set that is mirror symmetric they act as
//! permutations of the centres. `A` commutes with these permutations, so in
//! a basis adapted to the four characters of `Z₂ × Z₂` it splits into four
//! blocks of roughly a quarter of the size. The SVD of `A` is the union of
//! the block SVDs, which cuts the cost of the factorisation sixteen-fold and
//! the memory four-fold.
//!
//! Only the rows of `A` (and of `E^γ`) belonging to one representative per
//! orbit are ever formed: for a vector `y` in the isotypic component of a
//! character `χ`, `w_rᵀ y = √|O_r| · y[r₀]` with `r₀` the representative of
//! the orbit `O_r`.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef};

use crate::digest::Digest;
use crate::error::{invalid, Error, Result};
use crate::exec::{self, Exec};
use crate::forward::{projection_row, ScanGeometry};
use crate::grid::{CenterIndex, InterpolationGrid};
use crate::phantom::Lattice;

use super::filter::FilterSpec;
use super::lark::{check_len, KernelMatrix, KernelOperator, KernelProvenance};
use super::mollifier::Mollifier;
use super::svd::{svd_mat, SvdFactors};

/// Characters `(χ(x → −x), χ(y → −y))`.
pub const CHARACTERS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

fn character_value(chi: (i8, i8), g: usize) -> f64 {
    // g: 0 identity, 1 x → −x, 2 y → −y, 3 both.
    let v = match g {
        0 => 1,
        1 => chi.0,
        2 => chi.1,
        _ => chi.0 * chi.1,
    };
    f64::from(v)
}

/// Images of every index under the four group elements.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexAction {
    pub images: Vec<[u32; 4]>,
}

impl IndexAction {
    /// Action on rays of a mirrored scan geometry, angle-major ordering.
    pub fn rays(geom: &ScanGeometry) -> Self {
        let (p, q) = (geom.n_angles, geom.n_detectors);
        let images = (0..p * q)
            .map(|j| {
                let (a, d) = (j / q, j % q);
                let ra = p - 1 - a;
                let rd = q - 1 - d;
                [j, ra * q + rd, ra * q + d, a * q + rd].map(|v| v as u32)
            })
            .collect();
        IndexAction { images }
    }

    /// Action on a point set, or `None` if the set is not mirror symmetric.
    pub fn points(points: &[[f64; 2]]) -> Option<Self> {
        if points.is_empty() {
            return Some(IndexAction { images: Vec::new() });
        }
        let scale = points.iter().fold(1.0f64, |a, p| a.max(p[0].abs()).max(p[1].abs()));
        let tol = 1e-9 * scale;
        let index = CenterIndex::new(points, spacing_hint(points));
        let find = |p: [f64; 2]| -> Option<u32> {
            let (i, d) = index.nearest(p);
            (d <= tol).then_some(i as u32)
        };
        let mut images = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            images.push([
                i as u32,
                find([-p[0], p[1]])?,
                find([p[0], -p[1]])?,
                find([-p[0], -p[1]])?,
            ]);
        }
        Some(IndexAction { images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Orthonormal basis of the isotypic component of `chi`, one vector per
    /// orbit on which `chi` is compatible with the stabiliser.
    pub fn orbits(&self, chi: (i8, i8)) -> Vec<Orbit> {
        let mut out = Vec::new();
        for (i, im) in self.images.iter().enumerate() {
            if im.iter().any(|&j| (j as usize) < i) {
                continue;
            }
            let mut o = Orbit {
                len: 0,
                idx: [0; 4],
                coef: [0.0; 4],
            };
            for (g, &j) in im.iter().enumerate() {
                let c = character_value(chi, g);
                match o.idx[..o.len].iter().position(|&k| k == j) {
                    Some(k) => o.coef[k] += c,
                    None => {
                        o.idx[o.len] = j;
                        o.coef[o.len] = c;
                        o.len += 1;
                    }
                }
            }
            let norm = o.coef[..o.len].iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            o.coef[..o.len].iter_mut().for_each(|c| *c /= norm);
            out.push(o);
        }
        out
    }
}

fn spacing_hint(points: &[[f64; 2]]) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let area = ((x1 - x0) * (y1 - y0)).max(1e-12);
    (area / points.len() as f64).sqrt().max(1e-6)
}

/// One basis vector `Σ_k coef_k e_{idx_k}`; `idx[0]` is the representative
/// and `coef[0] = 1/√|O| > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Orbit {
    pub len: usize,
    pub idx: [u32; 4],
    pub coef: [f64; 4],
}

impl Orbit {
    pub fn rep(&self) -> usize {
        self.idx[0] as usize
    }

    /// `√|O|`.
    pub fn scale(&self) -> f64 {
        1.0 / self.coef[0]
    }

    fn gather(&self, x: &[f64]) -> f64 {
        (0..self.len).map(|k| self.coef[k] * x[self.idx[k] as usize]).sum()
    }

    fn scatter(&self, v: f64, out: &mut [f64]) {
        for k in 0..self.len {
            out[self.idx[k] as usize] += self.coef[k] * v;
        }
    }

    /// `w_c · row` for a full-length row.
    fn dot_row(&self, row: &[f64]) -> f64 {
        self.gather(row)
    }
}

/// SVD of one symmetry block.
#[derive(Clone, Debug)]
pub struct SvdBlock {
    pub chi: (i8, i8),
    pub rays: Vec<Orbit>,
    pub centres: Vec<Orbit>,
    pub factors: SvdFactors,
}

/// SVD of `A` assembled from its symmetry blocks.
#[derive(Clone, Debug)]
pub struct SymmetricSvd {
    pub geometry: ScanGeometry,
    pub grid_digest: Digest,
    pub rows: usize,
    pub cols: usize,
    pub centre_action: IndexAction,
    pub blocks: Vec<SvdBlock>,
}

impl SymmetricSvd {
    /// All singular values, non-increasing, with their `(block, column)`.
    pub fn ranked(&self) -> Vec<(f64, usize, usize)> {
        let mut all: Vec<(f64, usize, usize)> = self
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| blk.factors.sigma.iter().enumerate().map(move |(k, &s)| (s, b, k)))
            .collect();
        all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        all
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.ranked().into_iter().map(|r| r.0).collect()
    }

    pub fn sigma_min_positive(&self) -> f64 {
        self.sigma().into_iter().filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min)
    }

    /// `F_τ(σ)/σ` per block, using the global rank of each singular value.
    fn block_factors(&self, f: &FilterSpec) -> Vec<Vec<f64>> {
        let mut d: Vec<Vec<f64>> = self.blocks.iter().map(|b| vec![0.0; b.factors.sigma.len()]).collect();
        for (rank, (s, b, k)) in self.ranked().into_iter().enumerate() {
            d[b][k] = f.factor(s, rank);
        }
        d
    }

    /// The equivalent dense factors `U = W_r U_χ`, `V = W_c V_χ`, ordered by
    /// global rank. Meant for small problems and cross-checks.
    pub fn to_dense(&self) -> SvdFactors {
        let (m, n) = (self.rows, self.cols);
        let ranked = self.ranked();
        let mut u = Mat::zeros(m, n);
        let mut v = Mat::zeros(n, n);
        let mut sigma = Vec::with_capacity(n);
        let mut col = vec![0.0; m.max(n)];
        for (k, &(s, b, c)) in ranked.iter().enumerate() {
            let blk = &self.blocks[b];
            sigma.push(s);
            col[..m].iter_mut().for_each(|x| *x = 0.0);
            for (o, orb) in blk.rays.iter().enumerate() {
                orb.scatter(blk.factors.u[(o, c)], &mut col[..m]);
            }
            for j in 0..m {
                u[(j, k)] = col[j];
            }
            col[..n].iter_mut().for_each(|x| *x = 0.0);
            for (o, orb) in blk.centres.iter().enumerate() {
                orb.scatter(blk.factors.v[(o, c)], &mut col[..n]);
            }
            for i in 0..n {
                v[(i, k)] = col[i];
            }
        }
        SvdFactors {
            u,
            sigma,
            v,
            geometry: Some(self.geometry.clone()),
            grid_digest: Some(self.grid_digest),
        }
    }
}

/// Block SVD of `A` for a mirror-symmetric grid. Fails if the grid is not
/// symmetric or a block has fewer rays than unknowns.
pub fn symmetric_svd(geom: &ScanGeometry, grid: &InterpolationGrid) -> Result<SymmetricSvd> {
    symmetric_svd_with(geom, grid, Exec::default())
}

pub fn symmetric_svd_with(geom: &ScanGeometry, grid: &InterpolationGrid, exec: Exec) -> Result<SymmetricSvd> {
    geom.validate()?;
    let centre_action = IndexAction::points(&grid.centers)
        .ok_or_else(|| invalid("interpolation grid is not mirror symmetric"))?;
    let ray_action = IndexAction::rays(geom);
    let (m, n) = (geom.m(), grid.len());
    let angles = geom.angles();
    let s = geom.detectors();
    let q = geom.n_detectors;

    let per_chi: Vec<(Vec<Orbit>, Vec<Orbit>)> = CHARACTERS
        .iter()
        .map(|&chi| (ray_action.orbits(chi), centre_action.orbits(chi)))
        .collect();
    for (chi, (r, c)) in CHARACTERS.iter().zip(&per_chi) {
        if r.len() < c.len() {
            return Err(invalid(format!(
                "symmetry block {chi:?} has {} rays for {} unknowns; use more angles or detectors",
                r.len(),
                c.len()
            )));
        }
    }

    // Rows of A for every ray representative, shared by all blocks.
    let mut reps: Vec<usize> = per_chi.iter().flat_map(|(r, _)| r.iter().map(Orbit::rep)).collect();
    reps.sort_unstable();
    reps.dedup();
    let mut slot = vec![usize::MAX; m];
    for (k, &r) in reps.iter().enumerate() {
        slot[r] = k;
    }
    let mut rows = vec![0.0; reps.len() * n];
    exec.fill_rows(&mut rows, n, |k, row| {
        let j = reps[k];
        projection_row(grid, s[j % q], angles[j / q], row)
    });

    let mut blocks = Vec::with_capacity(4);
    for (&chi, (rays, centres)) in CHARACTERS.iter().zip(per_chi) {
        let (mb, nb) = (rays.len(), centres.len());
        let mut b = vec![0.0; mb * nb];
        exec.fill_rows(&mut b, nb, |r, out| {
            let orb = &rays[r];
            let row = &rows[slot[orb.rep()] * n..(slot[orb.rep()] + 1) * n];
            let sc = orb.scale();
            for (o, c) in out.iter_mut().zip(&centres) {
                *o = sc * c.dot_row(row);
            }
        });
        let factors = if nb == 0 {
            SvdFactors {
                u: Mat::zeros(mb, 0),
                sigma: Vec::new(),
                v: Mat::zeros(0, 0),
                geometry: None,
                grid_digest: None,
            }
        } else {
            svd_mat(MatRef::from_row_major_slice(&b, mb, nb))?
        };
        blocks.push(SvdBlock {
            chi,
            rays,
            centres,
            factors,
        });
    }
    Ok(SymmetricSvd {
        geometry: geom.clone(),
        grid_digest: grid.digest(),
        rows: m,
        cols: n,
        centre_action,
        blocks,
    })
}

/// One block of the kernel: `K_χ = U_χ Σ_τ V_χᵀ E_χᵀ`, `m_χ × r_χ`,
/// column-major.
#[derive(Clone, Debug)]
pub struct KernelBlock {
    pub chi: (i8, i8),
    pub rays: Vec<Orbit>,
    pub points: Vec<Orbit>,
    pub values: Vec<f64>,
}

/// The reconstruction kernel in symmetry-adapted form.
#[derive(Clone, Debug)]
pub struct BlockKernel {
    pub rows: usize,
    pub cols: usize,
    pub blocks: Vec<KernelBlock>,
    pub provenance: KernelProvenance,
}

/// Block form of `Ψ = U Σ_τ Vᵀ Eᵀ`; the mollifier rows are generated for
/// one representative reconstruction point per orbit.
pub fn compute_block_lark(
    svd: &SymmetricSvd,
    moll: &Mollifier,
    lattice: &Lattice,
    f: &FilterSpec,
) -> Result<BlockKernel> {
    compute_block_lark_with(svd, moll, lattice, f, Exec::default())
}

pub fn compute_block_lark_with(
    svd: &SymmetricSvd,
    moll: &Mollifier,
    lattice: &Lattice,
    f: &FilterSpec,
    exec: Exec,
) -> Result<BlockKernel> {
    f.validate(svd.cols)?;
    if moll.grid_digest != svd.grid_digest {
        return Err(Error::Provenance("mollifier was built on a different interpolation grid".into()));
    }
    let n = svd.cols;
    let points = lattice.points();
    let point_action = IndexAction::points(&points)
        .ok_or_else(|| invalid("reconstruction lattice is not mirror symmetric"))?;
    let factors = svd.block_factors(f);
    let par = exec.faer_par();
    let mut blocks = Vec::with_capacity(svd.blocks.len());
    for (blk, d) in svd.blocks.iter().zip(factors) {
        let zs = point_action.orbits(blk.chi);
        let (mb, nb, rb) = (blk.rays.len(), blk.centres.len(), zs.len());
        // E_χ (r_χ × n_χ), row-major.
        let mut e = vec![0.0; rb * nb];
        exec.fill_rows(&mut e, nb, |r, out| {
            let orb = &zs[r];
            let mut row = vec![0.0; n];
            moll.row(points[orb.rep()], &mut row);
            let sc = orb.scale();
            for (o, c) in out.iter_mut().zip(&blk.centres) {
                *o = sc * c.dot_row(&row);
            }
        });
        let mut values = vec![0.0; mb * rb];
        if nb > 0 && rb > 0 {
            let em = MatRef::from_row_major_slice(&e, rb, nb);
            let mut w = Mat::<f64>::zeros(rb, nb);
            matmul(w.as_mut(), Accum::Replace, em, blk.factors.v.as_ref(), 1.0, par);
            for (k, &dk) in d.iter().enumerate() {
                for l in 0..rb {
                    w[(l, k)] *= dk;
                }
            }
            let mut kmat = Mat::<f64>::zeros(mb, rb);
            matmul(kmat.as_mut(), Accum::Replace, blk.factors.u.as_ref(), w.transpose(), 1.0, par);
            for l in 0..rb {
                for j in 0..mb {
                    values[l * mb + j] = kmat[(j, l)];
                }
            }
        }
        blocks.push(KernelBlock {
            chi: blk.chi,
            rays: blk.rays.clone(),
            points: zs,
            values,
        });
    }
    Ok(BlockKernel {
        rows: svd.rows,
        cols: lattice.len(),
        blocks,
        provenance: KernelProvenance::new(svd.geometry.clone(), svd.grid_digest, moll.gamma, *f, *lattice),
    })
}

impl BlockKernel {
    /// Dense `m × r` form. Meant for small problems and cross-checks.
    pub fn to_dense(&self) -> KernelMatrix {
        let (m, r) = (self.rows, self.cols);
        let mut values = vec![0.0; m * r];
        let mut e = vec![0.0; r];
        for l in 0..r {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[l] = 1.0;
            let col = self.apply(&e, Exec::Sequential).expect("length checked");
            values[l * m..(l + 1) * m].copy_from_slice(&col);
        }
        KernelMatrix {
            rows: m,
            cols: r,
            values,
            provenance: self.provenance.clone(),
        }
    }
}

impl KernelOperator for BlockKernel {
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
        let mut out = vec![0.0; self.cols];
        for b in &self.blocks {
            let gb: Vec<f64> = b.rays.iter().map(|o| o.gather(g)).collect();
            let yb = exec::matvec(exec, &b.values, b.points.len(), b.rays.len(), &gb);
            for (o, y) in b.points.iter().zip(yb) {
                o.scatter(y, &mut out);
            }
        }
        Ok(out)
    }

    fn apply(&self, y: &[f64], exec: Exec) -> Result<Vec<f64>> {
        check_len("image vector", self.cols, y.len())?;
        let mut out = vec![0.0; self.rows];
        for b in &self.blocks {
            let yb: Vec<f64> = b.points.iter().map(|o| o.gather(y)).collect();
            let gb = exec::matvec_t(exec, &b.values, b.points.len(), b.rays.len(), &yb);
            for (o, v) in b.rays.iter().zip(gb) {
                o.scatter(v, &mut out);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use crate::forward::build_projection_matrix;
    use crate::grid::{make_grid, GridSpec};
    use crate::kernel::lark::compute_lark;
    use crate::kernel::mollifier::{build_mollifier_matrix, MollifierMode};
    use crate::kernel::svd::svd_of_transpose;

    fn orthonormal(o: &[Orbit], len: usize) {
        let mut vecs = Vec::new();
        for orb in o {
            let mut v = vec![0.0; len];
            orb.scatter(1.0, &mut v);
            vecs.push(v);
        }
        for (i, a) in vecs.iter().enumerate() {
            for (j, b) in vecs.iter().enumerate() {
                let d = exec::dot(a, b);
                assert!((d - f64::from(u8::from(i == j))).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn orbits_form_an_orthonormal_basis() {
        let pts = Lattice::square(5).points();
        let act = IndexAction::points(&pts).unwrap();
        let mut total = 0;
        for chi in CHARACTERS {
            let o = act.orbits(chi);
            orthonormal(&o, pts.len());
            total += o.len();
        }
        assert_eq!(total, 25);
        let rays = IndexAction::rays(&ScanGeometry::new(0.3, 7, 9).unwrap());
        assert_eq!(CHARACTERS.iter().map(|&c| rays.orbits(c).len()).sum::<usize>(), 63);
    }

    #[test]
    fn asymmetric_points_are_rejected() {
        assert!(IndexAction::points(&[[0.1, 0.2], [-0.1, 0.2], [0.1, -0.2]]).is_none());
    }

    #[test]
    fn block_kernel_matches_dense_route() {
        let n = 7;
        let grid = make_grid(&GridSpec::pixel_tiling(n), BasisSpec::Pixel { side: 2.0 / n as f64 }).unwrap();
        let geom = ScanGeometry::new(0.5, 11, 13).unwrap();
        let lat = Lattice::square(9);
        let f = FilterSpec::Arctan { tau: 0.05 };
        let mode = MollifierMode::Integral { order: 6 };

        let a = build_projection_matrix(&geom, &grid).unwrap();
        let dense_svd = svd_of_transpose(&a).unwrap();
        let e = build_mollifier_matrix(&grid, &lat, 0.02, mode).unwrap();
        let dense = compute_lark(&dense_svd, &e, &f).unwrap();

        let bsvd = symmetric_svd(&geom, &grid).unwrap();
        let mut s1 = bsvd.sigma();
        let s0 = dense_svd.sigma.clone();
        s1.truncate(s0.len());
        for (x, y) in s0.iter().zip(&s1) {
            assert!((x - y).abs() < 1e-12 * s0[0]);
        }
        let moll = Mollifier::new(&grid, 0.02, mode).unwrap();
        let blk = compute_block_lark(&bsvd, &moll, &lat, &f).unwrap().to_dense();
        let scale = dense.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (x, y) in dense.values.iter().zip(&blk.values) {
            assert!((x - y).abs() < 1e-9 * scale, "{x} vs {y}");
        }
    }
}
