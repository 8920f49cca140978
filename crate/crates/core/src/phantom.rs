//! Ellipse phantoms, their exact Radon transforms and rasterisation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::forward::{ScanGeometry, Sinogram};

/// A solid ellipse of constant additive density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: [f64; 2],
    /// Semi-axes `(a, b)` along the ellipse's own x and y directions.
    pub semi_axes: [f64; 2],
    /// Counter-clockwise rotation in radians.
    pub rotation: f64,
    pub intensity: f64,
}

impl Ellipse {
    pub fn new(center: [f64; 2], semi_axes: [f64; 2], rotation: f64, intensity: f64) -> Self {
        Ellipse {
            center,
            semi_axes,
            rotation,
            intensity,
        }
    }

    pub fn disk(center: [f64; 2], radius: f64, intensity: f64) -> Self {
        Ellipse::new(center, [radius, radius], 0.0, intensity)
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.semi_axes;
        if !(a > 0.0 && b > 0.0) {
            return Err(invalid(format!("ellipse semi-axes must be positive, got ({a}, {b})")));
        }
        let reach = self.center[0].hypot(self.center[1]) + a.max(b);
        if reach > 1.0 + 1e-12 {
            return Err(invalid(format!(
                "ellipse at ({}, {}) leaves the unit disk (reach {reach})",
                self.center[0], self.center[1]
            )));
        }
        if ![self.rotation, self.intensity, self.center[0], self.center[1]]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(invalid("ellipse parameters must be finite"));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (sn, cs) = self.rotation.sin_cos();
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        let u = dx * cs + dy * sn;
        let v = -dx * sn + dy * cs;
        let [a, b] = self.semi_axes;
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    }

    /// The same ellipse after rotating the plane by `alpha` about the origin.
    pub fn rotated(&self, alpha: f64) -> Ellipse {
        let (sn, cs) = alpha.sin_cos();
        let [x, y] = self.center;
        Ellipse {
            center: [cs * x - sn * y, sn * x + cs * y],
            rotation: self.rotation + alpha,
            ..*self
        }
    }

    pub fn mass(&self) -> f64 {
        self.intensity * std::f64::consts::PI * self.semi_axes[0] * self.semi_axes[1]
    }
}

/// Line integral of `e` along `{x : x·(cos θ, sin θ) = s}`.
pub fn ellipse_radon(e: &Ellipse, s: f64, theta: f64) -> f64 {
    let (sn, cs) = theta.sin_cos();
    let sp = s - (e.center[0] * cs + e.center[1] * sn);
    let tp = theta - e.rotation;
    let [a, b] = e.semi_axes;
    let r2 = (a * tp.cos()).powi(2) + (b * tp.sin()).powi(2);
    let d = r2 - sp * sp;
    if d <= 0.0 {
        return 0.0;
    }
    e.intensity * 2.0 * a * b * d.sqrt() / r2
}

/// Which Shepp-Logan intensity set to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SheppLoganContrast {
    /// Original intensities (skull 2.0, brain −0.98, features ±0.01–0.02).
    Original,
    /// Toft's modified set with visible soft-tissue contrast.
    #[default]
    HighContrast,
}

/// Superposition of ellipses, optionally rotated as a whole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    pub ellipses: Vec<Ellipse>,
    /// Global counter-clockwise rotation in radians.
    #[serde(default)]
    pub rotation: f64,
}

impl Phantom {
    pub fn new(ellipses: Vec<Ellipse>, rotation: f64) -> Result<Self> {
        let p = Phantom { ellipses, rotation };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ellipses.is_empty() {
            return Err(invalid("phantom has no ellipses"));
        }
        if !self.rotation.is_finite() {
            return Err(invalid("phantom rotation must be finite"));
        }
        self.ellipses.iter().try_for_each(Ellipse::validate)
    }

    /// The ten-ellipse Shepp-Logan head phantom.
    ///
    /// Geometry from Shepp & Logan (1974); the high-contrast intensities are
    /// the "modified" set of Toft (1996) used by most software packages.
    pub fn shepp_logan(contrast: SheppLoganContrast) -> Self {
        // a, b, x0, y0, angle (deg), original, high contrast
        const TABLE: [[f64; 7]; 10] = [
            [0.69, 0.92, 0.0, 0.0, 0.0, 2.0, 1.0],
            [0.6624, 0.874, 0.0, -0.0184, 0.0, -0.98, -0.8],
            [0.11, 0.31, 0.22, 0.0, -18.0, -0.02, -0.2],
            [0.16, 0.41, -0.22, 0.0, 18.0, -0.02, -0.2],
            [0.21, 0.25, 0.0, 0.35, 0.0, 0.01, 0.1],
            [0.046, 0.046, 0.0, 0.1, 0.0, 0.01, 0.1],
            [0.046, 0.046, 0.0, -0.1, 0.0, 0.01, 0.1],
            [0.046, 0.023, -0.08, -0.605, 0.0, 0.01, 0.1],
            [0.023, 0.023, 0.0, -0.606, 0.0, 0.01, 0.1],
            [0.023, 0.046, 0.06, -0.605, 0.0, 0.01, 0.1],
        ];
        let ellipses = TABLE
            .iter()
            .map(|r| {
                let rho = match contrast {
                    SheppLoganContrast::Original => r[5],
                    SheppLoganContrast::HighContrast => r[6],
                };
                Ellipse::new([r[2], r[3]], [r[0], r[1]], r[4].to_radians(), rho)
            })
            .collect();
        Phantom {
            ellipses,
            rotation: 0.0,
        }
    }

    pub fn with_rotation(mut self, alpha: f64) -> Self {
        self.rotation = alpha;
        self
    }

    /// Ellipses with the global rotation folded in.
    pub fn effective_ellipses(&self) -> Vec<Ellipse> {
        if self.rotation == 0.0 {
            return self.ellipses.clone();
        }
        self.ellipses.iter().map(|e| e.rotated(self.rotation)).collect()
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        density_of(&self.effective_ellipses(), x, y)
    }

    pub fn radon(&self, s: f64, theta: f64) -> f64 {
        self.effective_ellipses()
            .iter()
            .map(|e| ellipse_radon(e, s, theta))
            .sum()
    }
}

fn density_of(ellipses: &[Ellipse], x: f64, y: f64) -> f64 {
    ellipses
        .iter()
        .filter(|e| e.contains(x, y))
        .map(|e| e.intensity)
        .sum()
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Extent {
    pub const UNIT: Extent = Extent {
        x0: -1.0,
        x1: 1.0,
        y0: -1.0,
        y1: 1.0,
    };

    pub fn square(half: f64) -> Self {
        Extent {
            x0: -half,
            x1: half,
            y0: -half,
            y1: half,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let inside = |v: f64| (-1.0 - 1e-12..=1.0 + 1e-12).contains(&v);
        if !(self.x0 <= self.x1 && self.y0 <= self.y1) {
            return Err(invalid("extent bounds are reversed"));
        }
        if ![self.x0, self.x1, self.y0, self.y1].into_iter().all(inside) {
            return Err(invalid("extent must lie within [-1, 1]²"));
        }
        Ok(())
    }
}

/// Rectangular lattice of reconstruction points `z_l`.
///
/// Points include the extent's edges. Row 0 is the top row (`y = y1`) and
/// column 0 the left column (`x = x0`); points are numbered row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub width: usize,
    pub height: usize,
    pub extent: Extent,
}

impl Lattice {
    pub fn new(width: usize, height: usize, extent: Extent) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("lattice needs at least one point per axis"));
        }
        extent.validate()?;
        Ok(Lattice { width, height, extent })
    }

    /// `n × n` lattice over `[-1, 1]²`.
    pub fn square(n: usize) -> Self {
        Lattice {
            width: n,
            height: n,
            extent: Extent::UNIT,
        }
    }

    /// `n × n` lattice of pixel centres tiling `[-1, 1]²`.
    pub fn pixel_centers(n: usize) -> Self {
        Lattice {
            width: n,
            height: n,
            extent: Extent::square(1.0 - 1.0 / n as f64),
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        lattice_points(self.width, self.height, &self.extent)
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        lattice_point(self.width, self.height, &self.extent, idx / self.width, idx % self.width)
    }

    pub fn spacing(&self) -> (f64, f64) {
        spacing(self.width, self.height, &self.extent)
    }

    pub fn image(&self, values: Vec<f64>) -> Result<ReconImage> {
        ReconImage::from_values(self.width, self.height, self.extent, values)
    }
}

/// Densities sampled on a rectangular lattice.
///
/// Lattice points include the extent's edges. Row 0 is the top row
/// (`y = y1`) and column 0 the left column (`x = x0`); values are row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconImage {
    pub width: usize,
    pub height: usize,
    pub extent: Extent,
    pub values: Vec<f64>,
}

/// `i`-th of `n` points from `lo` to `hi`; the upper half is measured from
/// `hi` so that symmetric ranges give exactly mirrored points.
fn lin(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        return 0.5 * (lo + hi);
    }
    let d = (n - 1) as f64;
    if 2 * i + 1 < n {
        lo + (hi - lo) * i as f64 / d
    } else if 2 * i + 1 == n {
        0.5 * (lo + hi)
    } else {
        hi - (hi - lo) * (n - 1 - i) as f64 / d
    }
}

impl ReconImage {
    pub fn zeros(width: usize, height: usize, extent: Extent) -> Self {
        ReconImage {
            width,
            height,
            extent,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, extent: Extent, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(crate::Error::DimensionMismatch {
                what: "image values",
                expected: width * height,
                got: values.len(),
            });
        }
        Ok(ReconImage {
            width,
            height,
            extent,
            values,
        })
    }

    pub fn lattice(&self) -> Lattice {
        Lattice {
            width: self.width,
            height: self.height,
            extent: self.extent,
        }
    }

    /// Lattice point of pixel `(row, col)`.
    pub fn point(&self, row: usize, col: usize) -> [f64; 2] {
        lattice_point(self.width, self.height, &self.extent, row, col)
    }

    /// All lattice points in storage order.
    pub fn points(&self) -> Vec<[f64; 2]> {
        lattice_points(self.width, self.height, &self.extent)
    }

    /// Horizontal and vertical lattice spacing. A single-pixel axis reports the
    /// full extent width.
    pub fn spacing(&self) -> (f64, f64) {
        spacing(self.width, self.height, &self.extent)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

pub(crate) fn spacing(width: usize, height: usize, e: &Extent) -> (f64, f64) {
    let d = |lo: f64, hi: f64, n: usize| {
        if n <= 1 {
            hi - lo
        } else {
            (hi - lo) / (n - 1) as f64
        }
    };
    (d(e.x0, e.x1, width), d(e.y0, e.y1, height))
}

pub(crate) fn lattice_point(width: usize, height: usize, e: &Extent, row: usize, col: usize) -> [f64; 2] {
    [lin(e.x0, e.x1, width, col), lin(e.y1, e.y0, height, row)]
}

pub(crate) fn lattice_points(width: usize, height: usize, e: &Extent) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            out.push(lattice_point(width, height, e, r, c));
        }
    }
    out
}

/// Samples the phantom density at the lattice points of a `width × height`
/// image over `[-1, 1]²`.
pub fn rasterize(p: &Phantom, width: usize, height: usize) -> ReconImage {
    rasterize_with(p, width, height, Extent::UNIT, 1, Exec::default())
}

/// Rasterisation on the points of `lattice` with `k × k` supersampling.
pub fn rasterize_lattice(p: &Phantom, lattice: &Lattice, supersample: usize) -> ReconImage {
    rasterize_with(p, lattice.width, lattice.height, lattice.extent, supersample, Exec::default())
}

/// Rasterisation with an explicit extent and `k × k` supersampling inside each
/// pixel cell.
pub fn rasterize_with(
    p: &Phantom,
    width: usize,
    height: usize,
    extent: Extent,
    supersample: usize,
    exec: Exec,
) -> ReconImage {
    let k = supersample.max(1);
    let ellipses = p.effective_ellipses();
    let (dx, dy) = spacing(width, height, &extent);
    let offsets: Vec<f64> = (0..k).map(|i| (i as f64 + 0.5) / k as f64 - 0.5).collect();
    let mut values = vec![0.0; width * height];
    exec.fill(&mut values, |idx| {
        let [x, y] = lattice_point(width, height, &extent, idx / width, idx % width);
        if k == 1 {
            return density_of(&ellipses, x, y);
        }
        let mut acc = 0.0;
        for oy in &offsets {
            for ox in &offsets {
                acc += density_of(&ellipses, x + ox * dx, y + oy * dy);
            }
        }
        acc / (k * k) as f64
    });
    ReconImage {
        width,
        height,
        extent,
        values,
    }
}

/// Exact analytic sinogram of `p` on the geometry's sample points.
pub fn phantom_sinogram(p: &Phantom, geom: &ScanGeometry) -> Sinogram {
    phantom_sinogram_with(p, geom, Exec::default())
}

pub fn phantom_sinogram_with(p: &Phantom, geom: &ScanGeometry, exec: Exec) -> Sinogram {
    let ellipses = p.effective_ellipses();
    let q = geom.n_detectors;
    let angles = geom.angles();
    let s = geom.detectors();
    let mut values = vec![0.0; geom.m()];
    exec.fill(&mut values, |j| {
        let th = angles[j / q];
        let sj = s[j % q];
        ellipses.iter().map(|e| ellipse_radon(e, sj, th)).sum()
    });
    Sinogram {
        geometry: geom.clone(),
        values,
    }
}
