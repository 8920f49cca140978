//! Mollifier matrices `E^γ_{li} = ∫ φ(x − x_i) e^γ_{z_l}(x) dx` with the
//! Gaussian mollifier `e^γ_z(x) = (2πγ)^{-1} exp(−‖x − z‖²/(2γ))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::digest::Digest;
use crate::error::{invalid, Error, Result};
use crate::exec::{self, Exec};
use crate::grid::InterpolationGrid;
use crate::phantom::Lattice;
use crate::quad::GaussRule;

/// Largest relative change tolerated when the quadrature order is doubled.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// Gaussian tail cut-off in standard deviations.
const CUTOFF_SIGMAS: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MollifierMode {
    /// `E_{li} = e^γ_{z_l}(x_i) · ∫φ`, i.e. the mollifier sampled at the
    /// centres and weighted by the basis mass (`h²` for pixels).
    Point,
    /// The integral against the basis. Pixel and Gaussian bases use closed
    /// forms; Wendland bases use panel Gauss–Legendre quadrature of the given
    /// order per panel.
    Integral { order: usize },
}

impl Default for MollifierMode {
    fn default() -> Self {
        MollifierMode::Point
    }
}

pub fn gaussian_mollifier(gamma: f64, d2: f64) -> f64 {
    (-d2 / (2.0 * gamma)).exp() / (2.0 * PI * gamma)
}

#[derive(Clone, Debug)]
enum Kind {
    Point { weight: f64 },
    PixelErf { side: f64 },
    GaussianExact { var: f64 },
    Table(RadialTable),
}

/// Row generator for `E^γ`: evaluates rows for arbitrary points `z` without
/// storing the whole matrix.
#[derive(Clone, Debug)]
pub struct Mollifier {
    pub gamma: f64,
    pub mode: MollifierMode,
    pub centers: Vec<[f64; 2]>,
    pub grid_digest: Digest,
    kind: Kind,
    reach: f64,
}

impl Mollifier {
    pub fn new(grid: &InterpolationGrid, gamma: f64, mode: MollifierMode) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("mollifier width must be positive, got {gamma}")));
        }
        let sd = gamma.sqrt();
        let basis = grid.basis;
        let (kind, reach) = match (mode, basis) {
            (MollifierMode::Point, b) => (Kind::Point { weight: b.integral() }, CUTOFF_SIGMAS * sd),
            (MollifierMode::Integral { .. }, BasisSpec::Pixel { side }) => (
                Kind::PixelErf { side },
                CUTOFF_SIGMAS * sd + side * std::f64::consts::FRAC_1_SQRT_2,
            ),
            (MollifierMode::Integral { .. }, BasisSpec::Gaussian { mu }) => (
                Kind::GaussianExact { var: mu + gamma },
                CUTOFF_SIGMAS * (mu + gamma).sqrt(),
            ),
            (MollifierMode::Integral { order }, BasisSpec::Wendland { mu, .. }) => {
                if order == 0 {
                    return Err(invalid("quadrature order must be positive"));
                }
                let t = RadialTable::build(&basis, mu, gamma, order)?;
                let reach = t.dmax;
                (Kind::Table(t), reach)
            }
        };
        Ok(Mollifier {
            gamma,
            mode,
            centers: grid.centers.clone(),
            grid_digest: grid.digest(),
            kind,
            reach,
        })
    }

    /// Distance beyond which entries are treated as zero.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn entry(&self, z: [f64; 2], x: [f64; 2]) -> f64 {
        let dx = x[0] - z[0];
        let dy = x[1] - z[1];
        let d2 = dx * dx + dy * dy;
        if d2 > self.reach * self.reach {
            return 0.0;
        }
        match &self.kind {
            Kind::Point { weight } => weight * gaussian_mollifier(self.gamma, d2),
            Kind::PixelErf { side } => {
                let s = (2.0 * self.gamma).sqrt();
                let h = 0.5 * side;
                let axis = |c: f64| 0.5 * (libm::erf((c + h) / s) - libm::erf((c - h) / s));
                axis(dx) * axis(dy)
            }
            Kind::GaussianExact { var } => gaussian_mollifier(*var, d2),
            Kind::Table(t) => t.eval(d2.sqrt()),
        }
    }

    /// Row `E[z, :]` over all centres.
    pub fn row(&self, z: [f64; 2], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(&self.centers) {
            *o = self.entry(z, *x);
        }
    }

    /// `E f` evaluated row by row at the points of `lattice`.
    pub fn apply(&self, lattice: &Lattice, f: &[f64], exec: Exec) -> Vec<f64> {
        let n = self.centers.len();
        let mut out = vec![0.0; lattice.len()];
        exec.fill(&mut out, |l| {
            let mut row = vec![0.0; n];
            self.row(lattice.point(l), &mut row);
            exec::dot(&row, f)
        });
        out
    }
}

/// `C(d) = ∫ φ(y) e^γ(y − d·e₁) dy` for a radial basis `φ`, tabulated on a
/// uniform grid in `d` and read back with four-point Lagrange interpolation.
#[derive(Clone, Debug)]
struct RadialTable {
    step: f64,
    dmax: f64,
    values: Vec<f64>,
}

impl RadialTable {
    fn build(basis: &BasisSpec, mu: f64, gamma: f64, order: usize) -> Result<Self> {
        let sd = gamma.sqrt();
        let dmax = mu + CUTOFF_SIGMAS * sd;
        let step = sd.min(mu) / 128.0;
        let n = (dmax / step).ceil() as usize + 3;
        let rule = GaussRule::new(order);
        let values: Vec<f64> = Exec::default().map(n, |i| radial_convolution(basis, mu, gamma, i as f64 * step, &rule));
        // Order-doubling check on a subset of nodes.
        let fine = GaussRule::new(2 * order);
        let peak = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let checks: Vec<usize> = (0..n).step_by((n / 64).max(1)).collect();
        let diffs = Exec::default().map(checks.len(), |k| {
            let i = checks[k];
            (radial_convolution(basis, mu, gamma, i as f64 * step, &fine) - values[i]).abs()
        });
        let change = diffs.into_iter().fold(0.0, f64::max) / peak.max(f64::MIN_POSITIVE);
        if change > QUADRATURE_TOLERANCE {
            return Err(Error::QuadratureOrder {
                order,
                change,
                tolerance: QUADRATURE_TOLERANCE,
            });
        }
        Ok(RadialTable { step, dmax, values })
    }

    fn eval(&self, d: f64) -> f64 {
        if d >= self.dmax {
            return 0.0;
        }
        let x = d / self.step;
        let i = (x.floor() as usize).max(1).min(self.values.len() - 3);
        let t = x - i as f64;
        let v = &self.values[i - 1..i + 3];
        // Lagrange weights for nodes −1, 0, 1, 2.
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        w0 * v[0] + w1 * v[1] + w2 * v[2] + w3 * v[3]
    }
}

/// `2∫_0^μ ∫_0^π φ(r) e^γ(r, θ; d) r dθ dr` on panels no wider than the
/// Gaussian's length scale.
fn radial_convolution(basis: &BasisSpec, mu: f64, gamma: f64, d: f64, rule: &GaussRule) -> f64 {
    let sd = gamma.sqrt();
    let d = d.abs();
    let nr = (mu / sd).ceil().max(1.0) as usize;
    let theta_scale = if d > 0.0 { (gamma / (mu * d)).sqrt() } else { PI };
    let nt = (PI / (2.0 * theta_scale)).ceil().clamp(1.0, 4096.0) as usize;
    let norm = 1.0 / (2.0 * PI * gamma);
    let mut total = 0.0;
    for pr in 0..nr {
        let (r0, r1) = (mu * pr as f64 / nr as f64, mu * (pr + 1) as f64 / nr as f64);
        for (r, wr) in rule.mapped(r0, r1) {
            let phi = basis.radial(r).unwrap();
            if phi == 0.0 {
                continue;
            }
            let radial = (-(r - d) * (r - d) / (2.0 * gamma)).exp();
            if radial == 0.0 {
                continue;
            }
            let mut ang = 0.0;
            for pt in 0..nt {
                let (t0, t1) = (PI * pt as f64 / nt as f64, PI * (pt + 1) as f64 / nt as f64);
                for (t, wt) in rule.mapped(t0, t1) {
                    ang += wt * (-r * d * (1.0 - t.cos()) / gamma).exp();
                }
            }
            total += wr * phi * r * radial * ang;
        }
    }
    2.0 * norm * total
}

/// Dense `r × n` mollifier matrix, row-major.
#[derive(Clone, Debug)]
pub struct MollifierMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub gamma: f64,
    pub lattice: Lattice,
    pub grid_digest: Digest,
}

impl MollifierMatrix {
    pub fn identity(n: usize, lattice: Lattice) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        MollifierMatrix {
            rows: n,
            cols: n,
            values,
            gamma: 0.0,
            lattice,
            grid_digest: [0; 32],
        }
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.values[l * self.cols..(l + 1) * self.cols]
    }

    pub fn apply(&self, f: &[f64], exec: Exec) -> Result<Vec<f64>> {
        if f.len() != self.cols {
            return Err(Error::DimensionMismatch {
                what: "coefficient vector",
                expected: self.cols,
                got: f.len(),
            });
        }
        Ok(exec::matvec(exec, &self.values, self.rows, self.cols, f))
    }
}

pub fn build_mollifier_matrix(
    grid: &InterpolationGrid,
    lattice: &Lattice,
    gamma: f64,
    mode: MollifierMode,
) -> Result<MollifierMatrix> {
    build_mollifier_matrix_with(grid, lattice, gamma, mode, Exec::default())
}

pub fn build_mollifier_matrix_with(
    grid: &InterpolationGrid,
    lattice: &Lattice,
    gamma: f64,
    mode: MollifierMode,
    exec: Exec,
) -> Result<MollifierMatrix> {
    let moll = Mollifier::new(grid, gamma, mode)?;
    let (r, n) = (lattice.len(), grid.len());
    let mut values = vec![0.0; r * n];
    exec.fill_rows(&mut values, n, |l, row| moll.row(lattice.point(l), row));
    Ok(MollifierMatrix {
        rows: r,
        cols: n,
        values,
        gamma,
        lattice: *lattice,
        grid_digest: moll.grid_digest,
    })
}
