//! Smoothed total variation and the descent loop shared by the variational
//! methods.

use log::debug;

use crate::error::{Error, Result};
use crate::exec;
use crate::phantom::ReconImage;

/// `TV_β(u) = Σ √(D_x u² + D_y u² + β²) · a` with forward divided
/// differences, replicate boundary (zero difference across the last row and
/// column) and pixel area `a`. Returns the value and its exact gradient.
pub fn smoothed_tv(img: &ReconImage, beta: f64) -> (f64, ReconImage) {
    let (w, h) = (img.width, img.height);
    let (dx, dy) = img.spacing();
    let area = dx * dy;
    let b2 = beta * beta;
    let u = &img.values;
    let mut grad = vec![0.0; w * h];
    let mut value = 0.0;
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let gx = if c + 1 < w { (u[i + 1] - u[i]) / dx } else { 0.0 };
            let gy = if r + 1 < h { (u[i + w] - u[i]) / dy } else { 0.0 };
            let nrm = (gx * gx + gy * gy + b2).sqrt();
            value += nrm * area;
            let sx = area * gx / (nrm * dx);
            let sy = area * gy / (nrm * dy);
            if c + 1 < w {
                grad[i + 1] += sx;
                grad[i] -= sx;
            }
            if r + 1 < h {
                grad[i + w] += sy;
                grad[i] -= sy;
            }
        }
    }
    let g = ReconImage {
        values: grad,
        ..img.clone()
    };
    (value, g)
}

/// Maximum number of step halvings before a step is declared divergent.
pub const MAX_HALVINGS: usize = 30;

/// Trace of a descent run.
#[derive(Clone, Debug, PartialEq)]
pub struct DescentReport {
    /// Objective at the start and after every accepted step.
    pub objective: Vec<f64>,
    pub iterations: usize,
    /// Whether the gradient criterion was met before `max_iters`.
    pub converged: bool,
    pub final_step: f64,
}

impl DescentReport {
    /// True if no accepted step increased the objective.
    pub fn is_monotone(&self) -> bool {
        self.objective.windows(2).all(|w| w[1] <= w[0])
    }
}

pub(crate) struct DescentSettings {
    pub step: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Normalisation of the gradient criterion.
    pub scale: f64,
}

/// Gradient descent with backtracking: a trial step that increases the
/// objective is halved until it does not; after a step accepted without
/// halving the step grows by a quarter.
pub(crate) fn descend<G, F>(mut x: Vec<f64>, s: &DescentSettings, mut value_grad: G, mut value: F) -> Result<(Vec<f64>, DescentReport)>
where
    G: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut step = s.step;
    let (mut q, mut g) = value_grad(&x)?;
    let mut report = DescentReport {
        objective: vec![q],
        iterations: 0,
        converged: false,
        final_step: step,
    };
    let scale = if s.scale > 0.0 { s.scale } else { 1.0 };
    for it in 0..s.max_iters {
        if exec::norm2(&g) / scale <= s.grad_tol {
            report.converged = true;
            break;
        }
        let mut halvings = 0;
        let (xn, qn) = loop {
            let xn: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let qn = value(&xn)?;
            if qn <= q {
                break (xn, qn);
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::Divergence { iteration: it, halvings });
            }
            step *= 0.5;
        };
        if halvings == 0 {
            step *= 1.25;
        }
        x = xn;
        // The accepted trial value is the objective of record, so the trace
        // is monotone even if the two evaluation paths round differently.
        g = value_grad(&x)?.1;
        q = qn;
        report.objective.push(q);
        report.iterations = it + 1;
    }
    if !report.converged && exec::norm2(&g) / scale <= s.grad_tol {
        report.converged = true;
    }
    report.final_step = step;
    debug!(
        "descent stopped after {} iterations, objective {:.6e}",
        report.iterations,
        report.objective.last().copied().unwrap_or(f64::NAN)
    );
    Ok((x, report))
}
