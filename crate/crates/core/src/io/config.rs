//! Run configuration read from TOML. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::digest::{hex, Digest, Fingerprint};
use crate::error::{Error, Result};
use crate::forward::ScanGeometry;
use crate::grid::GridSpec;
use crate::kernel::filter::FilterSpec;
use crate::kernel::mollifier::MollifierMode;
use crate::phantom::{Extent, Lattice, Phantom, SheppLoganContrast};
use crate::recon::ReconConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhantomSource {
    SheppLogan {
        #[serde(default)]
        contrast: SheppLoganContrast,
        /// Global rotation in degrees.
        #[serde(default)]
        rotation_deg: f64,
    },
    /// TOML file with `rotation` and an `[[ellipses]]` table array.
    File { path: PathBuf },
}

impl PhantomSource {
    /// Relative paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<Phantom> {
        match self {
            PhantomSource::SheppLogan { contrast, rotation_deg } => {
                Ok(Phantom::shepp_logan(*contrast).with_rotation(rotation_deg.to_radians()))
            }
            PhantomSource::File { path } => {
                let p = base.join(path);
                let text = std::fs::read_to_string(&p)?;
                let ph: Phantom = toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {}", p.display(), e.message())))?;
                ph.validate()?;
                Ok(ph)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Missing wedge `Φ` in degrees.
    pub phi_missing_deg: f64,
    pub n_angles: usize,
    pub n_detectors: usize,
}

impl GeometryConfig {
    pub fn build(&self) -> Result<ScanGeometry> {
        ScanGeometry::new(self.phi_missing_deg.to_radians(), self.n_angles, self.n_detectors)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub width: usize,
    pub height: usize,
    /// Defaults to the pixel centres of a `width × height` tiling of `[-1, 1]²`.
    #[serde(default)]
    pub extent: Option<Extent>,
}

impl LatticeConfig {
    pub fn build(&self) -> Result<Lattice> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("lattice needs at least one point per axis".into()));
        }
        let extent = self.extent.unwrap_or(Extent {
            x0: -1.0 + 1.0 / self.width as f64,
            x1: 1.0 - 1.0 / self.width as f64,
            y0: -1.0 + 1.0 / self.height as f64,
            y1: 1.0 - 1.0 / self.height as f64,
        });
        Lattice::new(self.width, self.height, extent)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// Mollifier variance; defaults to `1/N²` (width `1/N`) for an `N`-wide
    /// lattice.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Defaults to `Arctan` with `τ = 5σ_n`.
    #[serde(default)]
    pub filter: Option<FilterSpec>,
    #[serde(default)]
    pub mollifier: MollifierMode,
    pub lattice: LatticeConfig,
}

impl KernelConfig {
    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| {
            let n = self.lattice.width as f64;
            1.0 / (n * n)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataModel {
    /// Exact line integrals of the phantom (semi-discrete data).
    #[default]
    Analytic,
    /// `A f` with `f` the phantom sampled at the grid centres.
    Discrete,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub model: DataModel,
    /// Relative noise `‖g^δ − g‖/‖g‖`.
    pub noise_level: f64,
    pub seed: u64,
    /// Optional detector-domain presmoothing basis.
    pub presmooth: Option<BasisSpec>,
    /// Supersampling per axis when sampling the phantom on a lattice.
    pub supersample: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            model: DataModel::Analytic,
            noise_level: 0.0,
            seed: 0,
            presmooth: None,
            supersample: 4,
        }
    }
}

/// Grid refinements for the kernel-norm sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchHConfig {
    pub grids: Vec<GridSpec>,
    /// One basis per grid; a single entry is reused for every grid.
    pub bases: Vec<BasisSpec>,
    /// Exponent `2k + 1` in `‖Ψ‖·h^{2k+1}`; derived from the first Wendland
    /// basis when omitted.
    #[serde(default)]
    pub exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Highest Toeplitz level.
    pub m_max: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { m_max: 40 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub phantom: PhantomSource,
    pub geometry: GeometryConfig,
    pub grid: GridSpec,
    pub basis: BasisSpec,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub recon: ReconConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub bench_h: Option<BenchHConfig>,
    /// Output directory, relative to the config file.
    pub output: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.geometry.build().map_err(wrap)?;
        self.basis.validate().map_err(wrap)?;
        self.kernel.lattice.build().map_err(wrap)?;
        self.grid.centers().map_err(wrap)?;
        let g = self.kernel.gamma();
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {g}")));
        }
        if let Some(f) = &self.kernel.filter {
            f.validate(usize::MAX).map_err(wrap)?;
        }
        if !(self.data.noise_level >= 0.0 && self.data.noise_level.is_finite()) {
            return Err(Error::Config("noise_level must be non-negative".into()));
        }
        if let Some(b) = &self.data.presmooth {
            b.validate().map_err(wrap)?;
        }
        self.recon.validate().map_err(wrap)?;
        if self.spectrum.m_max == 0 {
            return Err(Error::Config("spectrum.m_max must be at least 1".into()));
        }
        if let Some(b) = &self.bench_h {
            if b.grids.is_empty() || !(b.bases.len() == 1 || b.bases.len() == b.grids.len()) {
                return Err(Error::Config("bench_h needs grids and one basis or one per grid".into()));
            }
        }
        Ok(())
    }

    /// Fingerprint of the canonical serialisation: equal for configs that
    /// parse to the same values, different as soon as any field differs.
    pub fn digest(&self) -> Digest {
        let canonical = toml::to_string(self).expect("config serialises");
        let mut f = Fingerprint::new("run-config");
        f.bytes(canonical.as_bytes());
        f.finish()
    }

    pub fn hash_hex(&self) -> String {
        hex(&self.digest())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"
output = "out"
phantom = { kind = "shepp-logan" }
grid = { kind = "rectangular", nx = 9, ny = 9, extent = { x0 = -0.8, x1 = 0.8, y0 = -0.8, y1 = 0.8 } }
basis = { kind = "pixel", side = 0.2 }

[geometry]
phi_missing_deg = 30.0
n_angles = 12
n_detectors = 15

[kernel]
lattice = { width = 9, height = 9 }
"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.data, DataConfig::default());
        assert_eq!(c.kernel.gamma(), 1.0 / 81.0);
        assert_eq!(c.kernel.mollifier, MollifierMode::Point);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let t = SAMPLE.replace("n_angles = 12", "n_angles = 12\nspeed = 3");
        assert!(matches!(RunConfig::parse(&t), Err(Error::Config(_))));
        let t = SAMPLE.replace("kind = \"pixel\", side", "kind = \"pixel\", width");
        assert!(matches!(RunConfig::parse(&t), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_ranges_are_config_errors() {
        let t = SAMPLE.replace("n_angles = 12", "n_angles = 0");
        assert!(matches!(RunConfig::parse(&t), Err(Error::Config(_))));
    }

    #[test]
    fn hash_tracks_fields() {
        let a = RunConfig::parse(SAMPLE).unwrap();
        let b = RunConfig::parse(&SAMPLE.replace("\n", "\n\n")).unwrap();
        assert_eq!(a.digest(), b.digest());
        let mut c = a.clone();
        c.data.seed = 1;
        assert_ne!(a.digest(), c.digest());
    }
}
