//! Filtered backprojection over the measured angles only.

use std::f64::consts::PI;

use crate::exec::Exec;
use crate::forward::Sinogram;
use crate::phantom::{Lattice, ReconImage};

/// Shepp-Logan band-limited ramp `h(j) = −2 / (π² d² (4j² − 1))`.
pub fn shepp_logan_filter(j: i64, d: f64) -> f64 {
    let j = j as f64;
    -2.0 / (PI * PI * d * d * (4.0 * j * j - 1.0))
}

/// Shepp-Logan FBP on `lattice`. Every detector row is convolved with the
/// filter, then backprojected with trapezoidal weights over the measured
/// range `π − Φ`. The missing wedge is not compensated.
pub fn fbp_reconstruct(g: &Sinogram, lattice: &Lattice) -> ReconImage {
    fbp_reconstruct_with(g, lattice, Exec::default())
}

pub fn fbp_reconstruct_with(g: &Sinogram, lattice: &Lattice, exec: Exec) -> ReconImage {
    let geom = &g.geometry;
    let (p, q) = (geom.n_angles, geom.n_detectors);
    let d = geom.detector_spacing();
    let kernel: Vec<f64> = (0..q as i64).map(|j| shepp_logan_filter(j, d)).collect();
    let mut filtered = vec![0.0; p * q];
    exec.fill(&mut filtered, |idx| {
        let (a, i) = (idx / q, idx % q);
        let row = g.row(a);
        d * row.iter().enumerate().map(|(k, v)| kernel[i.abs_diff(k)] * v).sum::<f64>()
    });

    let angles = geom.angles();
    let trig: Vec<(f64, f64)> = angles.iter().map(|t| t.sin_cos()).collect();
    let weights: Vec<f64> = if p == 1 {
        vec![PI - geom.phi_missing]
    } else {
        let step = geom.angle_step();
        (0..p).map(|a| if a == 0 || a + 1 == p { 0.5 * step } else { step }).collect()
    };
    // Detector centres sit at −1 + (j + ½) d.
    let interp = |row: &[f64], s: f64| -> f64 {
        let u = (s + 1.0) / d - 0.5;
        let j0 = u.floor();
        let t = u - j0;
        let at = |j: f64| -> f64 {
            if j < 0.0 || j >= q as f64 {
                0.0
            } else {
                row[j as usize]
            }
        };
        (1.0 - t) * at(j0) + t * at(j0 + 1.0)
    };
    let mut values = vec![0.0; lattice.len()];
    exec.fill(&mut values, |l| {
        let [x, y] = lattice.point(l);
        (0..p)
            .map(|a| {
                let (sn, cs) = trig[a];
                weights[a] * interp(&filtered[a * q..(a + 1) * q], x * cs + y * sn)
            })
            .sum()
    });
    ReconImage {
        width: lattice.width,
        height: lattice.height,
        extent: lattice.extent,
        values,
    }
}
