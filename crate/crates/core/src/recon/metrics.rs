//! Image-quality measures against a reference.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::phantom::ReconImage;

fn check_dims(img: &ReconImage, reference: &ReconImage) -> Result<()> {
    if (img.width, img.height) != (reference.width, reference.height) {
        return Err(Error::DimensionMismatch {
            what: "image size",
            expected: reference.values.len(),
            got: img.values.len(),
        });
    }
    Ok(())
}

/// `‖img − ref‖₂ / ‖ref‖₂`.
pub fn relative_error(img: &ReconImage, reference: &ReconImage) -> Result<f64> {
    check_dims(img, reference)?;
    let num: f64 = img.values.iter().zip(&reference.values).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = reference.values.iter().map(|b| b * b).sum();
    Ok((num / den).sqrt())
}

/// Peak signal-to-noise ratio in dB with peak `max ref`. Identical images
/// give `f64::INFINITY`.
pub fn psnr(img: &ReconImage, reference: &ReconImage) -> Result<f64> {
    check_dims(img, reference)?;
    let n = img.values.len() as f64;
    let mse = img.values.iter().zip(&reference.values).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = reference.max();
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Power spectrum `|F u|²` of an image with the mask of frequencies inside
/// the missing cone `|ξ_x| < tan(Φ/2) |ξ_y|` (zero frequency excluded).
fn spectrum_with_cone(values: &[f64], width: usize, height: usize, dx: f64, dy: f64, phi_missing: f64) -> (Vec<f64>, Vec<bool>) {
    let mut data: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft_forward(width);
    for row in data.chunks_mut(width) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(height);
    let mut col = vec![Complex::new(0.0, 0.0); height];
    for c in 0..width {
        for r in 0..height {
            col[r] = data[r * width + c];
        }
        col_fft.process(&mut col);
        for r in 0..height {
            data[r * width + c] = col[r];
        }
    }
    let signed = |k: usize, n: usize| if 2 * k > n { k as f64 - n as f64 } else { k as f64 };
    let t = (0.5 * phi_missing).tan();
    let mut mask = vec![false; width * height];
    for r in 0..height {
        let xi_y = signed(r, height) / (height as f64 * dy);
        for c in 0..width {
            let xi_x = signed(c, width) / (width as f64 * dx);
            mask[r * width + c] = xi_x.abs() < t * xi_y.abs();
        }
    }
    (data.iter().map(|z| z.norm_sqr()).collect(), mask)
}

fn spacing_of(img: &ReconImage) -> (f64, f64) {
    let (dx, dy) = img.spacing();
    (if dx > 0.0 { dx } else { 1.0 }, if dy > 0.0 { dy } else { 1.0 })
}

/// Spectral energy inside the missing cone divided by the energy outside it.
pub fn cone_energy_ratio(img: &ReconImage, phi_missing: f64) -> f64 {
    let (dx, dy) = spacing_of(img);
    let (power, mask) = spectrum_with_cone(&img.values, img.width, img.height, dx, dy, phi_missing);
    let mut inside = 0.0;
    let mut outside = 0.0;
    for (i, (p, m)) in power.iter().zip(&mask).enumerate() {
        if i == 0 {
            continue;
        }
        if *m {
            inside += p;
        } else {
            outside += p;
        }
    }
    inside / outside
}

/// Error energy inside the missing cone relative to the reference's energy
/// there: `‖M F(img − ref)‖² / ‖M F ref‖²`.
pub fn missing_cone_deficit(img: &ReconImage, reference: &ReconImage, phi_missing: f64) -> Result<f64> {
    check_dims(img, reference)?;
    let (dx, dy) = spacing_of(reference);
    let diff: Vec<f64> = img.values.iter().zip(&reference.values).map(|(a, b)| a - b).collect();
    let (pd, mask) = spectrum_with_cone(&diff, img.width, img.height, dx, dy, phi_missing);
    let (pr, _) = spectrum_with_cone(&reference.values, img.width, img.height, dx, dy, phi_missing);
    let sum = |p: &[f64]| p.iter().zip(&mask).filter(|(_, m)| **m).map(|(v, _)| v).sum::<f64>();
    Ok(sum(&pd) / sum(&pr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{rasterize, Phantom, SheppLoganContrast};

    fn sl() -> ReconImage {
        rasterize(&Phantom::shepp_logan(SheppLoganContrast::Original), 32, 32)
    }

    #[test]
    fn identical_and_doubled() {
        let r = sl();
        assert_eq!(relative_error(&r, &r).unwrap(), 0.0);
        assert_eq!(psnr(&r, &r).unwrap(), f64::INFINITY);
        let mut d = r.clone();
        d.values.iter_mut().for_each(|v| *v *= 2.0);
        assert!((relative_error(&d, &r).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_pixel_perturbation() {
        let r = sl();
        let mut d = r.clone();
        d.values[100] += 0.25;
        let nr = r.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((relative_error(&d, &r).unwrap() - 0.25 / nr).abs() < 1e-15);
    }

    #[test]
    fn size_mismatch() {
        assert!(relative_error(&sl(), &rasterize(&Phantom::shepp_logan(SheppLoganContrast::Original), 8, 8)).is_err());
    }

    #[test]
    fn vertical_stripes_live_outside_the_cone() {
        // Variation along x only: all energy sits on ξ_y = 0.
        let values: Vec<f64> = (0..16 * 16).map(|i| ((i % 16) as f64 * 0.7).sin()).collect();
        let img = ReconImage::from_values(16, 16, crate::phantom::Extent::UNIT, values).unwrap();
        assert!(cone_energy_ratio(&img, 0.5) < 1e-20);
    }
}
