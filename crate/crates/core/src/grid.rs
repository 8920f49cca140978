//! Interpolation grids, the grid density measure and collocation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::digest::{Digest, Fingerprint};
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::phantom::{lattice_points, Extent};
use crate::quad::halton2;

/// Default number of domain samples for [`grid_density_measure`].
pub const DEFAULT_DENSITY_SAMPLES: usize = 100_000;

/// Default lower bound on the min/max pairwise distance ratio before a
/// warning is logged.
pub const DEFAULT_REGULARITY_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GridSpec {
    /// `nx × ny` lattice including the extent's edges, stored row-major from
    /// the top row.
    Rectangular { nx: usize, ny: usize, extent: Extent },
    /// Origin plus rings of radius `j·spacing`, `j = 1..=n_rings`.
    Circular {
        n_rings: usize,
        spacing: f64,
        #[serde(default)]
        counts: Option<Vec<usize>>,
    },
    /// The circular grid on the unit disk with `n_rings` rings, mapped by
    /// `diag(A, B)`.
    Elliptic {
        semi_axes: [f64; 2],
        n_rings: usize,
        #[serde(default)]
        counts: Option<Vec<usize>>,
    },
}

impl GridSpec {
    /// Lattice of pixel centres tiling `[-1, 1]²` with `n × n` squares.
    pub fn pixel_tiling(n: usize) -> Self {
        let half = 1.0 - 1.0 / n as f64;
        GridSpec::Rectangular {
            nx: n,
            ny: n,
            extent: Extent::square(half),
        }
    }

    /// Points on ring `j` (1-based) when no explicit count is given: the ring
    /// length over the radial spacing, rounded up to a multiple of four so the
    /// grid is symmetric under both axis reflections.
    pub fn default_ring_count(j: usize) -> usize {
        let c = (2.0 * PI * j as f64 - 1e-9).ceil() as usize;
        c.div_ceil(4) * 4
    }

    fn ring_counts(n_rings: usize, counts: &Option<Vec<usize>>) -> Result<Vec<usize>> {
        match counts {
            Some(c) => {
                if c.len() != n_rings {
                    return Err(Error::DimensionMismatch {
                        what: "ring counts",
                        expected: n_rings,
                        got: c.len(),
                    });
                }
                if c.contains(&0) {
                    return Err(invalid("ring point counts must be positive"));
                }
                Ok(c.clone())
            }
            None => Ok((1..=n_rings).map(Self::default_ring_count).collect()),
        }
    }

    /// Generates the centre list.
    pub fn centers(&self) -> Result<Vec<[f64; 2]>> {
        match self {
            GridSpec::Rectangular { nx, ny, extent } => {
                if *nx == 0 || *ny == 0 {
                    return Err(invalid("rectangular grid needs at least one point per axis"));
                }
                extent.validate()?;
                Ok(lattice_points(*nx, *ny, extent))
            }
            GridSpec::Circular {
                n_rings,
                spacing,
                counts,
            } => {
                if !(*spacing > 0.0) {
                    return Err(invalid("ring spacing must be positive"));
                }
                if *n_rings as f64 * spacing > 1.0 + 1e-12 {
                    return Err(invalid(format!(
                        "outer ring radius {} leaves the unit disk",
                        *n_rings as f64 * spacing
                    )));
                }
                let counts = Self::ring_counts(*n_rings, counts)?;
                Ok(rings(&counts, |j| j as f64 * spacing, [1.0, 1.0]))
            }
            GridSpec::Elliptic {
                semi_axes,
                n_rings,
                counts,
            } => {
                let [a, b] = *semi_axes;
                if !(a > 0.0 && b > 0.0) {
                    return Err(invalid("elliptic grid semi-axes must be positive"));
                }
                if a > 1.0 + 1e-12 || b > 1.0 + 1e-12 {
                    return Err(invalid("elliptic grid leaves the unit disk"));
                }
                if *n_rings == 0 {
                    return Err(invalid("elliptic grid needs at least one ring"));
                }
                let counts = Self::ring_counts(*n_rings, counts)?;
                let n = *n_rings as f64;
                Ok(rings(&counts, |j| j as f64 / n, [a, b]))
            }
        }
    }
}

fn rings(counts: &[usize], radius: impl Fn(usize) -> f64, scale: [f64; 2]) -> Vec<[f64; 2]> {
    let mut pts = vec![[0.0, 0.0]];
    for (idx, &c) in counts.iter().enumerate() {
        let r = radius(idx + 1);
        for i in 0..c {
            let (sn, cs) = (2.0 * PI * i as f64 / c as f64).sin_cos();
            pts.push([scale[0] * r * cs, scale[1] * r * sn]);
        }
    }
    pts
}

/// Centres `x_i` together with the basis `φ` that defines `Π_n`.
#[derive(Clone, Debug)]
pub struct InterpolationGrid {
    pub centers: Vec<[f64; 2]>,
    pub basis: BasisSpec,
    /// The construction the centres came from, if any.
    pub spec: Option<GridSpec>,
    density_h: OnceLock<f64>,
}

impl InterpolationGrid {
    pub fn new(centers: Vec<[f64; 2]>, basis: BasisSpec) -> Result<Self> {
        basis.validate()?;
        if centers.is_empty() {
            return Err(invalid("interpolation grid has no centres"));
        }
        if centers.iter().any(|c| !(c[0].is_finite() && c[1].is_finite())) {
            return Err(invalid("grid centres must be finite"));
        }
        let g = InterpolationGrid {
            centers,
            basis,
            spec: None,
            density_h: OnceLock::new(),
        };
        if g.centers.len() > 1 && g.index(0.0).min_separation() == 0.0 {
            return Err(invalid("grid centres must be pairwise distinct"));
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Grid density `h` from [`DEFAULT_DENSITY_SAMPLES`] samples, cached.
    pub fn density_h(&self) -> f64 {
        *self
            .density_h
            .get_or_init(|| grid_density_measure(self, DEFAULT_DENSITY_SAMPLES))
    }

    /// Minimum over maximum pairwise centre distance.
    pub fn regularity_ratio(&self) -> f64 {
        if self.centers.len() < 2 {
            return 1.0;
        }
        let min = self.index(0.0).min_separation();
        let mut max2: f64 = 0.0;
        for (i, a) in self.centers.iter().enumerate() {
            for b in &self.centers[i + 1..] {
                max2 = max2.max((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2));
            }
        }
        min / max2.sqrt()
    }

    pub fn digest(&self) -> Digest {
        let mut f = Fingerprint::new("grid");
        match self.basis {
            BasisSpec::Pixel { side } => f.u64(0).f64(side),
            BasisSpec::Gaussian { mu } => f.u64(1).f64(mu),
            BasisSpec::Wendland { mu, k, unit_mass } => f.u64(2).f64(mu).u64(k as u64).u64(unit_mass as u64),
        };
        f.u64(self.centers.len() as u64);
        for c in &self.centers {
            f.f64(c[0]).f64(c[1]);
        }
        f.finish()
    }

    pub(crate) fn index(&self, cell_hint: f64) -> CenterIndex<'_> {
        CenterIndex::new(&self.centers, cell_hint)
    }
}

/// Builds the grid described by `spec` with basis `basis`.
pub fn make_grid(spec: &GridSpec, basis: BasisSpec) -> Result<InterpolationGrid> {
    let centers = spec.centers()?;
    if matches!(spec, GridSpec::Circular { .. } | GridSpec::Elliptic { .. }) {
        if let Some(c) = centers.iter().find(|c| c[0].hypot(c[1]) > 1.0 + 1e-12) {
            return Err(invalid(format!("grid centre ({}, {}) lies outside the unit disk", c[0], c[1])));
        }
    }
    let mut g = InterpolationGrid::new(centers, basis)?;
    g.spec = Some(spec.clone());
    let ratio = g.regularity_ratio();
    if ratio < DEFAULT_REGULARITY_THRESHOLD {
        log::warn!("grid regularity ratio {ratio:.3e} below {DEFAULT_REGULARITY_THRESHOLD:e}");
    }
    Ok(g)
}

/// Uniform bucket grid over the centres for neighbour queries.
pub(crate) struct CenterIndex<'a> {
    pts: &'a [[f64; 2]],
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> CenterIndex<'a> {
    pub(crate) fn new(pts: &'a [[f64; 2]], cell_hint: f64) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in pts {
            x0 = x0.min(p[0]);
            y0 = y0.min(p[1]);
            x1 = x1.max(p[0]);
            y1 = y1.max(p[1]);
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-12);
        let auto = span / (pts.len() as f64).sqrt().max(1.0);
        let cell = if cell_hint > 0.0 { cell_hint.max(auto * 0.25) } else { auto };
        let nx = ((x1 - x0) / cell) as usize + 1;
        let ny = ((y1 - y0) / cell) as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, p) in pts.iter().enumerate() {
            let cx = ((p[0] - x0) / cell) as usize;
            let cy = ((p[1] - y0) / cell) as usize;
            buckets[cy.min(ny - 1) * nx + cx.min(nx - 1)].push(i as u32);
        }
        CenterIndex {
            pts,
            x0,
            y0,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    /// Bucket containing the projection of `p` onto the bounding box.
    fn cell_of(&self, p: [f64; 2]) -> (isize, isize) {
        let cx = ((p[0] - self.x0) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64);
        let cy = ((p[1] - self.y0) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64);
        (cx as isize, cy as isize)
    }

    /// Calls `f(i)` for every centre within distance `r` of `p`.
    pub(crate) fn within(&self, p: [f64; 2], r: f64, mut f: impl FnMut(usize)) {
        let (cx, cy) = self.cell_of(p);
        let k = (r / self.cell).ceil() as isize + 1;
        let r2 = r * r;
        for by in (cy - k).max(0)..=(cy + k).min(self.ny as isize - 1) {
            for bx in (cx - k).max(0)..=(cx + k).min(self.nx as isize - 1) {
                for &i in &self.buckets[by as usize * self.nx + bx as usize] {
                    let q = self.pts[i as usize];
                    if (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) <= r2 {
                        f(i as usize);
                    }
                }
            }
        }
    }

    /// Nearest centre to `p` and its distance.
    pub(crate) fn nearest(&self, p: [f64; 2]) -> (usize, f64) {
        let (cx, cy) = self.cell_of(p);
        let mut best = (usize::MAX, f64::INFINITY);
        let mut ring = 0isize;
        loop {
            for by in cy - ring..=cy + ring {
                for bx in cx - ring..=cx + ring {
                    let on_ring = (by - cy).abs() == ring || (bx - cx).abs() == ring;
                    if !on_ring || bx < 0 || by < 0 || bx >= self.nx as isize || by >= self.ny as isize {
                        continue;
                    }
                    for &i in &self.buckets[by as usize * self.nx + bx as usize] {
                        let q = self.pts[i as usize];
                        let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
                        if d < best.1 {
                            best = (i as usize, d);
                        }
                    }
                }
            }
            // Unvisited buckets are at least `ring` cells from the projection
            // of the query onto the bounding box, hence at least that far
            // from the query itself.
            let reach = ring as f64 * self.cell;
            let outside = cx - ring <= 0 && cy - ring <= 0
                && cx + ring >= self.nx as isize - 1
                && cy + ring >= self.ny as isize - 1;
            if (best.0 != usize::MAX && best.1 <= reach * reach) || outside {
                break;
            }
            ring += 1;
        }
        (best.0, best.1.sqrt())
    }

    pub(crate) fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, p) in self.pts.iter().enumerate() {
            let (cx, cy) = self.cell_of(*p);
            for by in (cy - 1).max(0)..=(cy + 1).min(self.ny as isize - 1) {
                for bx in (cx - 1).max(0)..=(cx + 1).min(self.nx as isize - 1) {
                    for &j in &self.buckets[by as usize * self.nx + bx as usize] {
                        if j as usize != i {
                            let q = self.pts[j as usize];
                            best = best.min((q[0] - p[0]).hypot(q[1] - p[1]));
                        }
                    }
                }
            }
        }
        if best.is_finite() {
            return best;
        }
        // Buckets too fine to see neighbours: fall back to nearest queries.
        self.pts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                self.pts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, q)| (q[0] - p[0]).hypot(q[1] - p[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Estimates `h = sup_{x ∈ Ω_n} min_j ‖x − x_j‖` from `samples` deterministic
/// points, where `Ω_n` is the union of the basis supports intersected with the
/// unit disk. One tenth of the samples lie on the unit circle, the rest follow
/// a Halton sequence mapped to the disk. The estimate approaches the supremum
/// from below as `samples` grows.
pub fn grid_density_measure(g: &InterpolationGrid, samples: usize) -> f64 {
    grid_density_measure_with(g, samples, Exec::default())
}

pub fn grid_density_measure_with(g: &InterpolationGrid, samples: usize, exec: Exec) -> f64 {
    let idx = g.index(0.0);
    let boundary = samples / 10;
    let interior = samples - boundary;
    let in_support = |p: [f64; 2], nearest: f64| -> bool {
        match g.basis {
            BasisSpec::Gaussian { .. } => true,
            BasisSpec::Wendland { mu, .. } => nearest <= mu,
            BasisSpec::Pixel { side } => {
                let h = 0.5 * side;
                let mut hit = false;
                idx.within(p, h * std::f64::consts::SQRT_2, |i| {
                    let c = g.centers[i];
                    hit |= (p[0] - c[0]).abs() <= h && (p[1] - c[1]).abs() <= h;
                });
                hit
            }
        }
    };
    let dists = exec.map(samples, |i| {
        let p = if i < interior {
            let [u, v] = halton2(i);
            let r = u.sqrt();
            let (sn, cs) = (2.0 * PI * v).sin_cos();
            [r * cs, r * sn]
        } else {
            let t = 2.0 * PI * (i - interior) as f64 / boundary as f64;
            [t.cos(), t.sin()]
        };
        let (_, d) = idx.nearest(p);
        if in_support(p, d) {
            d
        } else {
            0.0
        }
    });
    dists.into_iter().fold(0.0, f64::max)
}

/// Result of a collocation solve.
#[derive(Clone, Debug)]
pub struct Collocation {
    pub coefficients: Vec<f64>,
    /// Diagonal lift that had to be added, zero if none.
    pub lift: f64,
    pub smallest_pivot: f64,
}

/// Collocation matrix `M_{ji} = φ(x_j − x_i)` (column-major).
pub fn collocation_matrix(grid: &InterpolationGrid) -> Mat<f64> {
    let c = &grid.centers;
    let b = grid.basis;
    Mat::from_fn(c.len(), c.len(), |j, i| b.eval(c[j][0] - c[i][0], c[j][1] - c[i][1]))
}

/// Coefficients `f` with `Σ_i f_i φ(x_j − x_i) = samples_j` for all `j`.
pub fn interpolation_coefficients(samples: &[f64], grid: &InterpolationGrid) -> Result<Vec<f64>> {
    Ok(collocate(samples, grid)?.coefficients)
}

/// Like [`interpolation_coefficients`], also reporting the factorisation.
pub fn collocate(samples: &[f64], grid: &InterpolationGrid) -> Result<Collocation> {
    let n = grid.len();
    if samples.len() != n {
        return Err(Error::DimensionMismatch {
            what: "collocation samples",
            expected: n,
            got: samples.len(),
        });
    }
    if !grid.basis.is_radial() {
        return Ok(Collocation {
            coefficients: samples.to_vec(),
            lift: 0.0,
            smallest_pivot: 1.0,
        });
    }
    let m = collocation_matrix(grid);
    let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
    let factor = |lift: f64| {
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += lift;
        }
        match a.ldlt(Side::Lower) {
            Ok(f) => {
                let d = f.D().column_vector();
                let min = (0..n).map(|i| d[i]).fold(f64::INFINITY, f64::min);
                (Some(f), min)
            }
            Err(_) => (None, 0.0),
        }
    };
    let tiny = f64::EPSILON * trace / n as f64;
    let (mut f, mut pivot) = factor(0.0);
    let mut lift = 0.0;
    if f.is_none() || !(pivot > tiny) {
        lift = 1e-12 * trace / n as f64;
        log::warn!("collocation pivot {pivot:e} too small, lifting diagonal by {lift:e}");
        (f, pivot) = factor(lift);
    }
    let f = match f {
        Some(f) if pivot > 0.0 => f,
        _ => return Err(Error::NotPositiveDefinite { smallest_pivot: pivot }),
    };
    let mut x = Mat::from_fn(n, 1, |i, _| samples[i]);
    f.solve_in_place(x.as_mut());
    let coefficients: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    Ok(Collocation {
        coefficients,
        lift,
        smallest_pivot: pivot,
    })
}

/// `Π_n f(x) = Σ_i coeffs_i φ(x − x_i)`.
pub fn interpolant_eval(coeffs: &[f64], grid: &InterpolationGrid, x: [f64; 2]) -> f64 {
    let b = grid.basis;
    grid.centers
        .iter()
        .zip(coeffs)
        .filter(|(_, &c)| c != 0.0)
        .map(|(p, c)| c * b.eval(x[0] - p[0], x[1] - p[1]))
        .sum()
}

/// Evaluates the interpolant at many points using a neighbour index when the
/// basis has compact support.
pub fn interpolant_eval_many(coeffs: &[f64], grid: &InterpolationGrid, xs: &[[f64; 2]], exec: Exec) -> Vec<f64> {
    let b = grid.basis;
    let mut out = vec![0.0; xs.len()];
    match b.support_radius() {
        Some(r) => {
            let idx = grid.index(r);
            exec.fill(&mut out, |k| {
                let x = xs[k];
                let mut acc = 0.0;
                idx.within(x, r, |i| {
                    let p = grid.centers[i];
                    acc += coeffs[i] * b.eval(x[0] - p[0], x[1] - p[1]);
                });
                acc
            });
        }
        None => exec.fill(&mut out, |k| interpolant_eval(coeffs, grid, xs[k])),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_three_by_three() {
        let spec = GridSpec::Rectangular {
            nx: 3,
            ny: 3,
            extent: Extent::UNIT,
        };
        let c = spec.centers().unwrap();
        assert_eq!(c.len(), 9);
        assert_eq!(c[0], [-1.0, 1.0]);
        assert_eq!(c[4], [0.0, 0.0]);
        assert_eq!(c[8], [1.0, -1.0]);
    }

    #[test]
    fn single_ring() {
        let spec = GridSpec::Circular {
            n_rings: 1,
            spacing: 0.5,
            counts: Some(vec![4]),
        };
        let c = spec.centers().unwrap();
        let want = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [-0.5, 0.0], [0.0, -0.5]];
        assert_eq!(c.len(), 5);
        for (a, b) in c.iter().zip(want) {
            assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn ring_counts_are_multiples_of_four() {
        for j in 1..20 {
            let c = GridSpec::default_ring_count(j);
            assert_eq!(c % 4, 0);
            assert!(c as f64 >= 2.0 * PI * j as f64);
        }
    }

    #[test]
    fn elliptic_inside() {
        let spec = GridSpec::Elliptic {
            semi_axes: [0.69, 0.92],
            n_rings: 12,
            counts: None,
        };
        for c in spec.centers().unwrap() {
            assert!((c[0] / 0.69).powi(2) + (c[1] / 0.92).powi(2) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn outside_disk_rejected() {
        let spec = GridSpec::Circular {
            n_rings: 5,
            spacing: 0.25,
            counts: None,
        };
        assert!(make_grid(&spec, BasisSpec::wendland(0.3, 2)).is_err());
    }

    #[test]
    fn nearest_matches_brute_force() {
        let g = make_grid(
            &GridSpec::Circular {
                n_rings: 6,
                spacing: 0.15,
                counts: None,
            },
            BasisSpec::wendland(0.3, 2),
        )
        .unwrap();
        let idx = g.index(0.0);
        for i in 0..500 {
            let [u, v] = halton2(i);
            let p = [2.4 * u - 1.2, 2.4 * v - 1.2];
            let brute = g
                .centers
                .iter()
                .map(|c| (c[0] - p[0]).hypot(c[1] - p[1]))
                .fold(f64::INFINITY, f64::min);
            assert!((idx.nearest(p).1 - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn density_single_pixel() {
        let g = InterpolationGrid::new(vec![[0.0, 0.0]], BasisSpec::Pixel { side: 2.0 }).unwrap();
        let h = grid_density_measure(&g, 10_000);
        assert!(h <= 1.0 + 1e-12 && h > 0.999, "h = {h}");
    }

    #[test]
    fn density_of_lattice() {
        let d = 0.1;
        let spec = GridSpec::Rectangular {
            nx: 11,
            ny: 11,
            extent: Extent::square(0.5),
        };
        let g = make_grid(&spec, BasisSpec::Pixel { side: d }).unwrap();
        let h = grid_density_measure(&g, 100_000);
        let want = d / 2f64.sqrt();
        assert!((h - want).abs() < 0.02 * want, "h = {h}");

        let spec = GridSpec::Rectangular {
            nx: 61,
            ny: 61,
            extent: Extent::UNIT,
        };
        let g = make_grid(&spec, BasisSpec::wendland(4.0 / 30.0, 2)).unwrap();
        let want = (2.0 / 60.0) / 2f64.sqrt();
        let h = g.density_h();
        assert!((h - want).abs() < 0.02 * want, "h = {h}");
    }

    #[test]
    fn pixel_collocation_is_identity() {
        let g = make_grid(&GridSpec::pixel_tiling(4), BasisSpec::Pixel { side: 0.5 }).unwrap();
        let v: Vec<f64> = (0..16).map(|i| i as f64).collect();
        assert_eq!(interpolation_coefficients(&v, &g).unwrap(), v);
        // Piecewise-constant lookup.
        assert_eq!(interpolant_eval(&v, &g, [-0.9, 0.9]), 0.0);
        assert_eq!(interpolant_eval(&v, &g, [0.9, -0.9]), 15.0);
    }

    #[test]
    fn single_center_solve() {
        let g = InterpolationGrid::new(vec![[0.0, 0.0]], BasisSpec::wendland(1.0, 1)).unwrap();
        let c = interpolation_coefficients(&[3.0], &g).unwrap();
        assert!((c[0] - 60.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_centers_rejected() {
        assert!(InterpolationGrid::new(vec![[0.1, 0.2], [0.1, 0.2]], BasisSpec::wendland(0.5, 1)).is_err());
    }

    #[test]
    fn ill_scaled_gaussian_reports_pivot() {
        // Huge variance against tiny spacing makes the matrix numerically rank one.
        let spec = GridSpec::Rectangular {
            nx: 8,
            ny: 8,
            extent: Extent::square(0.1),
        };
        let g = make_grid(&spec, BasisSpec::Gaussian { mu: 100.0 }).unwrap();
        let v = vec![1.0; g.len()];
        match collocate(&v, &g) {
            Err(Error::NotPositiveDefinite { smallest_pivot }) => assert!(smallest_pivot <= 0.0),
            Ok(c) => assert!(c.lift > 0.0),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
