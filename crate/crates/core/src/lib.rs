//! Limited-angle CT reconstruction with filtered SVD reconstruction kernels.
//!
//! The crate covers the whole pipeline: analytic ellipse phantoms and their
//! exact Radon transforms, radial basis interpolation (Wendland, Gaussian and
//! pixel bases), assembly of the dense projection matrix `A`, the filtered
//! reconstruction kernel `Ψ = U Σ_τ Vᵀ Eᵀ` and its constrained variant with a
//! total-variation data denoising step, plus FBP and TV baselines.
//!
//! Data-parallel loops run through [`Exec`]; build without the default
//! `parallel` feature to get a purely sequential library with identical output.

pub mod basis;
pub mod digest;
pub mod error;
pub mod exec;
pub mod forward;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod phantom;
pub mod quad;
pub mod recon;

pub use error::{Error, Result};
pub use exec::Exec;

/// Degrees to radians.
pub fn deg(d: f64) -> f64 {
    d.to_radians()
}
