use proptest::prelude::*;

use lark_core::forward::{ScanGeometry, Sinogram};
use lark_core::io::{load_image, load_sinogram, save_image, save_sinogram, Container, ContainerKind, RunConfig};
use lark_core::phantom::{Extent, ReconImage};
use lark_core::Error;

const CONFIG: &str = r#"
output = "out"
phantom = { kind = "shepp-logan", contrast = "original" }
grid = { kind = "circular", n_rings = 3, spacing = 0.3 }
basis = { kind = "wendland", mu = 0.45, k = 2 }

[geometry]
phi_missing_deg = 40.0
n_angles = 10
n_detectors = 13

[kernel]
lattice = { width = 7, height = 7 }
"#;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sinogram_files_round_trip(p in 1usize..12, q in 1usize..12, phi in 0.0f64..3.0, seed in any::<u64>()) {
        let geom = ScanGeometry::new(phi, p, q).unwrap();
        let values: Vec<f64> = (0..p * q).map(|i| f64::from_bits(seed.rotate_left(i as u32) >> 2)).collect();
        let g = Sinogram::new(geom, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        save_sinogram(&path, &g).unwrap();
        let back = load_sinogram(&path).unwrap();
        prop_assert_eq!(back.geometry, g.geometry);
        prop_assert!(back.values.iter().zip(&g.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn containers_reject_any_flipped_byte(len in 1usize..16, at in any::<prop::sample::Index>(), bit in 0u8..8) {
        let payload: Vec<f64> = (0..len).map(|i| i as f64 * 0.25 - 1.0).collect();
        let prov = [7u8; 32];
        let bytes = Container::new(ContainerKind::Kernel, len, 1, payload).unwrap().to_bytes(&prov);
        let mut bad = bytes.clone();
        bad[at.index(bytes.len())] ^= 1 << bit;
        prop_assert!(Container::from_bytes(&bad, &prov).is_err());
    }
}

#[test]
fn image_round_trip_keeps_extent() {
    let img = ReconImage::from_values(3, 2, Extent::square(0.5), vec![1.0, -2.0, 3.5, 0.0, 1e-300, f64::MAX]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("img.bin");
    save_image(&path, &img).unwrap();
    assert_eq!(load_image(&path).unwrap(), img);
}

#[test]
fn edited_sidecar_breaks_the_seal() {
    let g = Sinogram::new(ScanGeometry::new(0.5, 2, 3).unwrap(), vec![1.0; 6]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.bin");
    save_sinogram(&path, &g).unwrap();
    let meta = path.with_extension("meta.toml");
    let text = std::fs::read_to_string(&meta).unwrap().replace("n_detectors = 3", "n_detectors = 4");
    std::fs::write(&meta, text).unwrap();
    assert!(matches!(load_sinogram(&path), Err(Error::Provenance(_))));
}

#[test]
fn config_digest_ignores_formatting() {
    let a = RunConfig::parse(CONFIG).unwrap();
    let b = RunConfig::parse(&CONFIG.replace("n_angles = 10", "n_angles   =   10 # spaced")).unwrap();
    assert_eq!(a.hash_hex(), b.hash_hex());
    let c = RunConfig::parse(&CONFIG.replace("n_angles = 10", "n_angles = 11")).unwrap();
    assert_ne!(a.hash_hex(), c.hash_hex());
}

#[test]
fn config_errors_are_reported() {
    for bad in [
        CONFIG.replace("n_angles = 10", "n_angles = 0"),
        CONFIG.replace("phi_missing_deg = 40.0", "phi_missing_deg = 190.0"),
        CONFIG.replace("k = 2", "k = 2, extra = 1"),
    ] {
        assert!(matches!(RunConfig::parse(&bad), Err(Error::Config(_))), "{bad}");
    }
}
