//! Binary container for matrices, kernels and sinograms.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 8 | magic `LARKBIN1` |
//! | 8 | 1 | kind tag |
//! | 9 | 8 | rows (`u64`) |
//! | 17 | 8 | cols (`u64`) |
//! | 25 | `8·rows·cols` | payload, row-major IEEE-754 `f64` |
//! | end − 32 | 32 | seal |
//!
//! The seal is a SHA-256 fingerprint of the provenance digest, the header
//! fields and the payload. A container only opens against the provenance it
//! was written with, so a changed payload or a stale artifact is rejected.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::digest::{Digest, Fingerprint};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"LARKBIN1";
const HEADER_LEN: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum ContainerKind {
    Matrix = 1,
    Kernel = 2,
    Sinogram = 3,
}

impl ContainerKind {
    fn from_tag(t: u8) -> Result<Self> {
        match t {
            1 => Ok(ContainerKind::Matrix),
            2 => Ok(ContainerKind::Kernel),
            3 => Ok(ContainerKind::Sinogram),
            _ => Err(Error::Container(format!("unknown kind tag {t}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub kind: ContainerKind,
    pub rows: usize,
    pub cols: usize,
    pub payload: Vec<f64>,
}

fn seal(kind: ContainerKind, rows: u64, cols: u64, payload: &[u8], provenance: &Digest) -> Digest {
    let mut f = Fingerprint::new("container");
    f.bytes(provenance).u64(kind as u64).u64(rows).u64(cols).bytes(payload);
    f.finish()
}

impl Container {
    pub fn new(kind: ContainerKind, rows: usize, cols: usize, payload: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(payload.len()) {
            return Err(Error::DimensionMismatch {
                what: "container payload",
                expected: rows.saturating_mul(cols),
                got: payload.len(),
            });
        }
        Ok(Container { kind, rows, cols, payload })
    }

    pub fn to_bytes(&self, provenance: &Digest) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.payload.len() + 32);
        out.extend_from_slice(MAGIC);
        out.push(self.kind as u8);
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for v in &self.payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let s = seal(self.kind, self.rows as u64, self.cols as u64, &out[HEADER_LEN..], provenance);
        out.extend_from_slice(&s);
        out
    }

    pub fn from_bytes(bytes: &[u8], provenance: &Digest) -> Result<Self> {
        if bytes.len() < HEADER_LEN + 32 || &bytes[..8] != MAGIC {
            return Err(Error::Container("missing LARKBIN1 header".into()));
        }
        let kind = ContainerKind::from_tag(bytes[8])?;
        let rows = u64::from_le_bytes(bytes[9..17].try_into().unwrap());
        let cols = u64::from_le_bytes(bytes[17..25].try_into().unwrap());
        let len = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Container("payload size overflows".into()))?;
        if (bytes.len() - HEADER_LEN - 32) as u64 != len {
            return Err(Error::Container(format!(
                "payload is {} bytes, header announces {rows} × {cols}",
                bytes.len() - HEADER_LEN - 32
            )));
        }
        let body = &bytes[HEADER_LEN..bytes.len() - 32];
        let stored: &[u8] = &bytes[bytes.len() - 32..];
        if seal(kind, rows, cols, body, provenance).as_slice() != stored {
            return Err(Error::Provenance("container seal does not match the expected provenance".into()));
        }
        let payload = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Container {
            kind,
            rows: rows as usize,
            cols: cols as usize,
            payload,
        })
    }

    pub fn write(&self, path: &Path, provenance: &Digest) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes(provenance))?;
        Ok(())
    }

    pub fn read(path: &Path, provenance: &Digest) -> Result<Self> {
        Container::from_bytes(&fs::read(path)?, provenance)
    }

    /// Fails unless the container holds `kind`.
    pub fn expect(self, kind: ContainerKind) -> Result<Self> {
        if self.kind != kind {
            return Err(Error::Container(format!("expected a {kind:?} container, found {:?}", self.kind)));
        }
        Ok(self)
    }
}
