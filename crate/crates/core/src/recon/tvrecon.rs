//! Classic TV-regularised reconstruction on the pixel grid.

use crate::error::{invalid, Result};
use crate::exec::{self, Exec};
use crate::forward::{ForwardOperator, Sinogram};
use crate::phantom::{Lattice, ReconImage};

use super::tv::{descend, smoothed_tv, DescentReport, DescentSettings};
use super::ReconConfig;

/// Approximate minimiser of `½‖A f − g^δ‖² + λ TV_β(f)` for an `n × n` pixel
/// basis, starting from `f = 0`.
pub fn tv_reconstruct(a: &dyn ForwardOperator, gd: &Sinogram, cfg: &ReconConfig) -> Result<ReconImage> {
    Ok(tv_reconstruct_traced(a, gd, cfg, Exec::default())?.0)
}

pub fn tv_reconstruct_traced(
    a: &dyn ForwardOperator,
    gd: &Sinogram,
    cfg: &ReconConfig,
    exec: Exec,
) -> Result<(ReconImage, DescentReport)> {
    cfg.validate()?;
    if gd.geometry != *a.geometry() {
        return Err(crate::Error::Provenance("sinogram geometry does not match the forward operator".into()));
    }
    let n = (a.cols() as f64).sqrt().round() as usize;
    if n * n != a.cols() {
        return Err(invalid("TV reconstruction needs a square pixel grid"));
    }
    let lattice = Lattice::pixel_centers(n);
    let data = &gd.values;
    let (lambda, beta) = (cfg.lambda, cfg.beta);

    let value = |f: &[f64]| -> Result<f64> {
        let r = a.forward(f, exec)?;
        let fit = 0.5 * r.iter().zip(data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        if lambda == 0.0 {
            return Ok(fit);
        }
        Ok(fit + lambda * smoothed_tv(&lattice.image(f.to_vec())?, beta).0)
    };
    let value_grad = |f: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut r = a.forward(f, exec)?;
        for (x, y) in r.iter_mut().zip(data) {
            *x -= y;
        }
        let fit = 0.5 * exec::dot(&r, &r);
        let mut grad = a.adjoint(&r, exec)?;
        if lambda == 0.0 {
            return Ok((fit, grad));
        }
        let (tv, tg) = smoothed_tv(&lattice.image(f.to_vec())?, beta);
        for (x, y) in grad.iter_mut().zip(tg.values) {
            *x += lambda * y;
        }
        Ok((fit + lambda * tv, grad))
    };
    let step = match cfg.step {
        Some(s) => s,
        None => 1.0 / operator_norm_squared(a, exec)?.max(f64::MIN_POSITIVE),
    };
    let settings = DescentSettings {
        step,
        max_iters: cfg.max_iters,
        grad_tol: cfg.grad_tol,
        scale: exec::norm2(data),
    };
    let (f, report) = descend(vec![0.0; a.cols()], &settings, value_grad, value)?;
    Ok((lattice.image(f)?, report))
}

/// `‖A‖²` by power iteration on `AᵀA` from a fixed start.
pub fn operator_norm_squared(a: &dyn ForwardOperator, exec: Exec) -> Result<f64> {
    let n = a.cols();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i * 7919) % 13) as f64 / 13.0).collect();
    let nx = exec::norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut est = 0.0;
    for _ in 0..200 {
        let y = a.forward(&x, exec)?;
        let z = a.adjoint(&y, exec)?;
        let rho = exec::dot(&y, &y);
        let nz = exec::norm2(&z);
        if nz == 0.0 {
            return Ok(0.0);
        }
        let done = (rho - est).abs() <= 1e-8 * rho;
        est = rho;
        if done {
            break;
        }
        x = z.into_iter().map(|v| v / nz).collect();
    }
    Ok(est)
}
