//! The steps behind the command-line tools, driven by a [`RunConfig`].

use std::path::{Path, PathBuf};

use log::info;

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::forward::{
    add_noise, build_projection_matrix_with, build_sparse_projection_with, presmooth_sinogram_with,
    ForwardOperator, ProjectionMatrix, ScanGeometry, Sinogram,
};
use crate::grid::{interpolation_coefficients, make_grid, InterpolationGrid};
use crate::kernel::filter::FilterSpec;
use crate::kernel::lark::{compute_lark_with, KernelMatrix, KernelOperator};
use crate::kernel::mollifier::{build_mollifier_matrix_with, Mollifier};
use crate::kernel::svd::{svd_of_transpose, SvdFactors};
use crate::kernel::symmetry::{compute_block_lark_with, symmetric_svd_with, BlockKernel, SymmetricSvd};
use crate::phantom::{phantom_sinogram_with, rasterize_lattice, Lattice, Phantom, ReconImage};

use super::config::{DataModel, RunConfig};

/// SVD of `A` by either route.
pub enum Decomposition {
    /// Mirror-symmetric grid and lattice: four independent blocks.
    Blocks(SymmetricSvd),
    Dense(SvdFactors),
}

impl Decomposition {
    /// All singular values, non-increasing.
    pub fn sigma(&self) -> Vec<f64> {
        match self {
            Decomposition::Blocks(s) => s.sigma(),
            Decomposition::Dense(s) => s.sigma.clone(),
        }
    }

    pub fn sigma_min_positive(&self) -> f64 {
        match self {
            Decomposition::Blocks(s) => s.sigma_min_positive(),
            Decomposition::Dense(s) => s.sigma_min_positive(),
        }
    }
}

pub enum BuiltKernel {
    Blocks(BlockKernel),
    Dense(KernelMatrix),
}

impl BuiltKernel {
    pub fn operator(&self) -> &dyn KernelOperator {
        match self {
            BuiltKernel::Blocks(k) => k,
            BuiltKernel::Dense(k) => k,
        }
    }

    pub fn into_dense(self) -> KernelMatrix {
        match self {
            BuiltKernel::Blocks(k) => k.to_dense(),
            BuiltKernel::Dense(k) => k,
        }
    }
}

/// Configuration plus the directory relative paths resolve against.
pub struct Pipeline {
    pub cfg: RunConfig,
    pub base: PathBuf,
    pub exec: Exec,
}

impl Pipeline {
    pub fn new(cfg: RunConfig, base: &Path) -> Self {
        Pipeline {
            cfg,
            base: base.to_path_buf(),
            exec: Exec::default(),
        }
    }

    pub fn output_dir(&self) -> Result<PathBuf> {
        let d = self.base.join(&self.cfg.output);
        std::fs::create_dir_all(&d)?;
        Ok(d)
    }

    pub fn geometry(&self) -> Result<ScanGeometry> {
        self.cfg.geometry.build()
    }

    pub fn grid(&self) -> Result<InterpolationGrid> {
        make_grid(&self.cfg.grid, self.cfg.basis)
    }

    pub fn lattice(&self) -> Result<Lattice> {
        self.cfg.kernel.lattice.build()
    }

    pub fn phantom(&self) -> Result<Phantom> {
        self.cfg.phantom.load(&self.base)
    }

    /// The phantom sampled on the reconstruction lattice.
    pub fn reference_image(&self) -> Result<ReconImage> {
        Ok(rasterize_lattice(&self.phantom()?, &self.lattice()?, self.cfg.data.supersample))
    }

    /// Noise-free data for the configured data model.
    pub fn clean_sinogram(&self) -> Result<Sinogram> {
        let geom = self.geometry()?;
        let ph = self.phantom()?;
        match self.cfg.data.model {
            DataModel::Analytic => Ok(phantom_sinogram_with(&ph, &geom, self.exec)),
            DataModel::Discrete => {
                let grid = self.grid()?;
                let coeffs = discrete_coefficients(&ph, &grid, self.cfg.data.supersample)?;
                let a = build_sparse_projection_with(&geom, &grid, self.exec)?;
                Sinogram::new(geom, a.forward(&coeffs, self.exec)?)
            }
        }
    }

    /// Data with the configured noise and presmoothing.
    pub fn sinogram(&self) -> Result<Sinogram> {
        let d = &self.cfg.data;
        let mut g = add_noise(&self.clean_sinogram()?, d.noise_level, d.seed)?;
        if let Some(nu) = &d.presmooth {
            g = presmooth_sinogram_with(&g, nu, self.exec)?;
        }
        Ok(g)
    }

    pub fn projection(&self) -> Result<ProjectionMatrix> {
        build_projection_matrix_with(&self.geometry()?, &self.grid()?, self.exec)
    }

    /// SVD of `A` for `grid`, by symmetry blocks when the grid and the
    /// lattice allow it.
    pub fn decompose(&self, grid: &InterpolationGrid) -> Result<Decomposition> {
        let geom = self.geometry()?;
        let lattice = self.lattice()?;
        if crate::kernel::symmetry::IndexAction::points(&lattice.points()).is_some() {
            match symmetric_svd_with(&geom, grid, self.exec) {
                Ok(s) => {
                    info!("SVD by symmetry blocks");
                    return Ok(Decomposition::Blocks(s));
                }
                Err(Error::InvalidParameter(why)) => info!("dense SVD: {why}"),
                Err(e) => return Err(e),
            }
        }
        let a = build_projection_matrix_with(&geom, grid, self.exec)?;
        Ok(Decomposition::Dense(svd_of_transpose(&a)?))
    }

    pub fn filter(&self, d: &Decomposition) -> FilterSpec {
        self.cfg
            .kernel
            .filter
            .unwrap_or_else(|| FilterSpec::default_for(d.sigma_min_positive()))
    }

    pub fn kernel_from(&self, grid: &InterpolationGrid, d: &Decomposition) -> Result<BuiltKernel> {
        let lattice = self.lattice()?;
        let gamma = self.cfg.kernel.gamma();
        let mode = self.cfg.kernel.mollifier;
        let f = self.filter(d);
        match d {
            Decomposition::Blocks(s) => {
                let moll = Mollifier::new(grid, gamma, mode)?;
                Ok(BuiltKernel::Blocks(compute_block_lark_with(s, &moll, &lattice, &f, self.exec)?))
            }
            Decomposition::Dense(s) => {
                let e = build_mollifier_matrix_with(grid, &lattice, gamma, mode, self.exec)?;
                Ok(BuiltKernel::Dense(compute_lark_with(s, &e, &f, self.exec)?))
            }
        }
    }

    pub fn kernel(&self) -> Result<(BuiltKernel, Vec<f64>)> {
        let grid = self.grid()?;
        let d = self.decompose(&grid)?;
        let k = self.kernel_from(&grid, &d)?;
        Ok((k, d.sigma()))
    }
}

/// Coefficients of the phantom in the grid's basis: cell averages for
/// pixels, interpolation at the centres for radial bases.
pub fn discrete_coefficients(ph: &Phantom, grid: &InterpolationGrid, supersample: usize) -> Result<Vec<f64>> {
    match grid.basis {
        BasisSpec::Pixel { side } => {
            let k = supersample.max(1);
            Ok(grid
                .centers
                .iter()
                .map(|c| {
                    let mut s = 0.0;
                    for i in 0..k {
                        for j in 0..k {
                            let ox = ((i as f64 + 0.5) / k as f64 - 0.5) * side;
                            let oy = ((j as f64 + 0.5) / k as f64 - 0.5) * side;
                            s += ph.density(c[0] + ox, c[1] + oy);
                        }
                    }
                    s / (k * k) as f64
                })
                .collect())
        }
        _ => {
            let samples: Vec<f64> = grid.centers.iter().map(|c| ph.density(c[0], c[1])).collect();
            interpolation_coefficients(&samples, grid)
        }
    }
}
