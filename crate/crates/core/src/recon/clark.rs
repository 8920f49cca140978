//! Constrained kernel reconstruction: TV-penalised denoising of the data
//! before the kernel is applied.

use crate::error::Result;
use crate::exec::{self, Exec};
use crate::forward::Sinogram;
use crate::kernel::lark::KernelOperator;

use super::tv::{descend, smoothed_tv, DescentReport, DescentSettings};
use super::ReconConfig;

/// Approximate minimiser of `Q(g) = ½‖g − g^δ‖² + λ TV_β(Ψᵀ g)`.
pub fn clark_denoise(gd: &Sinogram, k: &dyn KernelOperator, cfg: &ReconConfig) -> Result<Sinogram> {
    Ok(clark_denoise_traced(gd, k, cfg, Exec::default())?.0)
}

/// As [`clark_denoise`], also returning the descent trace.
pub fn clark_denoise_traced(
    gd: &Sinogram,
    k: &dyn KernelOperator,
    cfg: &ReconConfig,
    exec: Exec,
) -> Result<(Sinogram, DescentReport)> {
    cfg.validate()?;
    k.provenance().check_data(gd)?;
    let lattice = k.provenance().lattice;
    let data = &gd.values;
    let (lambda, beta) = (cfg.lambda, cfg.beta);

    let value = |g: &[f64]| -> Result<f64> {
        let fit = 0.5 * g.iter().zip(data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        if lambda == 0.0 {
            return Ok(fit);
        }
        let img = lattice.image(k.apply_transpose(g, exec)?)?;
        Ok(fit + lambda * smoothed_tv(&img, beta).0)
    };
    let value_grad = |g: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut grad: Vec<f64> = g.iter().zip(data).map(|(a, b)| a - b).collect();
        let fit = 0.5 * exec::dot(&grad, &grad);
        if lambda == 0.0 {
            return Ok((fit, grad));
        }
        let img = lattice.image(k.apply_transpose(g, exec)?)?;
        let (tv, tg) = smoothed_tv(&img, beta);
        let back = k.apply(&tg.values, exec)?;
        for (a, b) in grad.iter_mut().zip(back) {
            *a += lambda * b;
        }
        Ok((fit + lambda * tv, grad))
    };
    let settings = DescentSettings {
        // The quadratic part has Lipschitz constant 1.
        step: cfg.step.unwrap_or(1.0),
        max_iters: cfg.max_iters,
        grad_tol: cfg.grad_tol,
        scale: exec::norm2(data),
    };
    let (g, report) = descend(data.clone(), &settings, value_grad, value)?;
    Ok((Sinogram::new(gd.geometry.clone(), g)?, report))
}
