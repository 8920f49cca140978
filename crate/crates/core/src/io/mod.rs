//! Configuration, binary containers, exporters and run manifests.

pub mod artifact;
pub mod config;
pub mod container;
pub mod export;
pub mod manifest;
pub mod pipeline;

pub use artifact::{load_image, load_kernel, load_matrix, load_sinogram, save_image, save_kernel, save_matrix, save_sinogram};
pub use config::RunConfig;
pub use container::{Container, ContainerKind};
pub use manifest::{append_manifest, ManifestEntry};
pub use pipeline::Pipeline;
