//! Typed artifacts on disk: a sealed container plus a TOML sidecar that
//! records what the payload was computed from.
//!
//! The sidecar `name.meta.toml` sits next to `name.bin`. Its canonical text is
//! hashed into the provenance digest that seals the container, so an edited
//! sidecar or payload fails to load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::digest::{hex, Digest, Fingerprint};
use crate::error::{Error, Result};
use crate::forward::{ProjectionMatrix, ScanGeometry, Sinogram};
use crate::kernel::lark::{KernelMatrix, KernelProvenance};
use crate::phantom::{Lattice, ReconImage};

use super::container::{Container, ContainerKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "artifact", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArtifactInfo {
    Sinogram { geometry: ScanGeometry },
    /// Projection matrix; `grid` is the hex digest of the interpolation grid.
    Matrix { geometry: ScanGeometry, grid: String },
    /// Stored as `Ψᵀ`: one row per reconstruction point.
    Kernel { provenance: KernelProvenance },
    Image { lattice: Lattice },
}

impl ArtifactInfo {
    pub fn digest(&self) -> Digest {
        let mut f = Fingerprint::new("artifact");
        f.bytes(toml::to_string(self).expect("metadata serialises").as_bytes());
        f.finish()
    }
}

/// `dir/name.bin` → `dir/name.meta.toml`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.toml")
}

pub fn write_artifact(path: &Path, info: &ArtifactInfo, c: &Container) -> Result<()> {
    let text = toml::to_string(info).expect("metadata serialises");
    std::fs::write(sidecar_path(path), text)?;
    c.write(path, &info.digest())
}

pub fn read_artifact(path: &Path) -> Result<(ArtifactInfo, Container)> {
    let meta = sidecar_path(path);
    let text = std::fs::read_to_string(&meta)?;
    let info: ArtifactInfo = toml::from_str(&text)
        .map_err(|e| Error::Container(format!("{}: {}", meta.display(), e.message())))?;
    let c = Container::read(path, &info.digest())?;
    Ok((info, c))
}

pub fn save_sinogram(path: &Path, g: &Sinogram) -> Result<()> {
    let c = Container::new(ContainerKind::Sinogram, g.values.len(), 1, g.values.clone())?;
    write_artifact(path, &ArtifactInfo::Sinogram { geometry: g.geometry.clone() }, &c)
}

pub fn load_sinogram(path: &Path) -> Result<Sinogram> {
    match read_artifact(path)? {
        (ArtifactInfo::Sinogram { geometry }, c) => {
            let c = c.expect(ContainerKind::Sinogram)?;
            Sinogram::new(geometry, c.payload)
        }
        (other, _) => Err(wrong_artifact("sinogram", &other)),
    }
}

pub fn save_matrix(path: &Path, a: &ProjectionMatrix) -> Result<()> {
    let c = Container::new(ContainerKind::Matrix, a.rows, a.cols, a.values.clone())?;
    let info = ArtifactInfo::Matrix {
        geometry: a.geometry.clone(),
        grid: hex(&a.grid_digest),
    };
    write_artifact(path, &info, &c)
}

pub fn load_matrix(path: &Path) -> Result<ProjectionMatrix> {
    match read_artifact(path)? {
        (ArtifactInfo::Matrix { geometry, grid }, c) => {
            let c = c.expect(ContainerKind::Matrix)?;
            if c.rows != geometry.m() {
                return Err(Error::Container(format!("matrix has {} rows, geometry needs {}", c.rows, geometry.m())));
            }
            Ok(ProjectionMatrix {
                rows: c.rows,
                cols: c.cols,
                values: c.payload,
                geometry,
                grid_digest: parse_hex(&grid)?,
            })
        }
        (other, _) => Err(wrong_artifact("matrix", &other)),
    }
}

pub fn save_kernel(path: &Path, k: &KernelMatrix) -> Result<()> {
    // Column-major Ψ is row-major Ψᵀ.
    let c = Container::new(ContainerKind::Kernel, k.cols, k.rows, k.values.clone())?;
    write_artifact(path, &ArtifactInfo::Kernel { provenance: k.provenance.clone() }, &c)
}

pub fn load_kernel(path: &Path) -> Result<KernelMatrix> {
    match read_artifact(path)? {
        (ArtifactInfo::Kernel { provenance }, c) => {
            let c = c.expect(ContainerKind::Kernel)?;
            if c.rows != provenance.lattice.len() || c.cols != provenance.geometry.m() {
                return Err(Error::Container("kernel shape does not match its provenance".into()));
            }
            if provenance.geometry.digest() != provenance.geometry_digest {
                return Err(Error::Provenance("kernel geometry digest is stale".into()));
            }
            Ok(KernelMatrix {
                rows: c.cols,
                cols: c.rows,
                values: c.payload,
                provenance,
            })
        }
        (other, _) => Err(wrong_artifact("kernel", &other)),
    }
}

pub fn save_image(path: &Path, img: &ReconImage) -> Result<()> {
    let c = Container::new(ContainerKind::Matrix, img.height, img.width, img.values.clone())?;
    write_artifact(path, &ArtifactInfo::Image { lattice: img.lattice() }, &c)
}

pub fn load_image(path: &Path) -> Result<ReconImage> {
    match read_artifact(path)? {
        (ArtifactInfo::Image { lattice }, c) => {
            let c = c.expect(ContainerKind::Matrix)?;
            lattice.image(c.payload)
        }
        (other, _) => Err(wrong_artifact("image", &other)),
    }
}

fn wrong_artifact(expected: &str, found: &ArtifactInfo) -> Error {
    let kind = match found {
        ArtifactInfo::Sinogram { .. } => "sinogram",
        ArtifactInfo::Matrix { .. } => "matrix",
        ArtifactInfo::Kernel { .. } => "kernel",
        ArtifactInfo::Image { .. } => "image",
    };
    Error::Container(format!("expected a {expected} artifact, found a {kind}"))
}

fn parse_hex(s: &str) -> Result<Digest> {
    let bad = || Error::Container(format!("malformed digest {s:?}"));
    if s.len() != 64 {
        return Err(bad());
    }
    let mut d = [0u8; 32];
    for (i, b) in d.iter_mut().enumerate() {
        *b = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
    }
    Ok(d)
}
