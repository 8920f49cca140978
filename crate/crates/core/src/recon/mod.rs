//! Kernel application, data denoising, baselines and image metrics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::forward::Sinogram;
use crate::kernel::lark::KernelOperator;
use crate::phantom::ReconImage;

pub mod clark;
pub mod fbp;
pub mod metrics;
pub mod tv;
pub mod tvrecon;

pub use clark::{clark_denoise, clark_denoise_traced};
pub use fbp::fbp_reconstruct;
pub use metrics::{cone_energy_ratio, missing_cone_deficit, psnr, relative_error};
pub use tv::{smoothed_tv, DescentReport};
pub use tvrecon::{tv_reconstruct, tv_reconstruct_traced};

/// Settings for the variational methods. The reconstruction lattice is
/// taken from the kernel (CLARK) or from the pixel grid (TV).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconConfig {
    /// Penalty weight `λ ≥ 0`.
    pub lambda: f64,
    /// TV smoothing `β > 0`.
    pub beta: f64,
    /// Initial gradient step; `None` uses `1/L` for the quadratic part.
    pub step: Option<f64>,
    pub max_iters: usize,
    /// Stop once `‖∇Q‖` relative to the data norm falls below this.
    pub grad_tol: f64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            lambda: 0.0,
            beta: 1e-3,
            step: None,
            max_iters: 300,
            grad_tol: 1e-6,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if let Some(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid(format!("step must be positive, got {s}")));
            }
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(invalid("grad_tol must be positive"));
        }
        Ok(())
    }
}

/// `f^γ = Ψᵀ g` on the kernel's reconstruction lattice.
pub fn apply_kernel(k: &dyn KernelOperator, g: &Sinogram) -> Result<ReconImage> {
    apply_kernel_with(k, g, Exec::default())
}

pub fn apply_kernel_with(k: &dyn KernelOperator, g: &Sinogram, exec: Exec) -> Result<ReconImage> {
    k.provenance().check_data(g)?;
    let v = k.apply_transpose(&g.values, exec)?;
    k.provenance().lattice.image(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ReconConfig::default().validate().is_ok());
        let bad = ReconConfig { beta: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ReconConfig { max_iters: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let parsed: std::result::Result<ReconConfig, _> = toml::from_str("lambda = 1.0\nbogus = 2");
        assert!(parsed.is_err());
    }
}
