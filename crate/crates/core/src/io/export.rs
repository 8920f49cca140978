//! CSV and 16-bit portable graymap writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::phantom::ReconImage;

/// CSV text with a header row. Values use Rust's shortest round-trip
/// formatting, so the decimal separator is always `.`.
pub fn csv_string(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format_value(*v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn format_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    fs::write(path, csv_string(header, rows))?;
    Ok(())
}

/// Image as CSV with columns `row, col, x, y, value`.
pub fn image_csv(img: &ReconImage) -> String {
    let mut s = String::from("row,col,x,y,value\n");
    for r in 0..img.height {
        for c in 0..img.width {
            let [x, y] = img.point(r, c);
            let _ = writeln!(
                s,
                "{r},{c},{},{},{}",
                format_value(x),
                format_value(y),
                format_value(img.get(r, c))
            );
        }
    }
    s
}

/// Binary graymap (`P5`) with 16-bit big-endian samples. The grey window
/// `[lo, hi]` maps linearly onto `0..=65535`; values outside are clipped.
/// `None` uses the image's own range.
pub fn pgm16(img: &ReconImage, window: Option<(f64, f64)>) -> Vec<u8> {
    let (lo, hi) = window.unwrap_or((img.min(), img.max()));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{} {}\n65535\n", img.width, img.height).into_bytes();
    for &v in &img.values {
        let t = ((v - lo) / span).clamp(0.0, 1.0);
        let q = (t * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

pub fn write_pgm(path: &Path, img: &ReconImage, window: Option<(f64, f64)>) -> Result<()> {
    fs::write(path, pgm16(img, window))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::Extent;

    #[test]
    fn graymap_header_and_samples() {
        let img = ReconImage::from_values(2, 1, Extent::UNIT, vec![0.0, 1.0]).unwrap();
        let b = pgm16(&img, None);
        let header = b"P5\n2 1\n65535\n";
        assert_eq!(&b[..header.len()], header);
        assert_eq!(&b[header.len()..], &[0, 0, 0xff, 0xff]);
    }

    #[test]
    fn csv_uses_dot_and_header() {
        let s = csv_string(&["i", "sigma"], &[vec![0.0, 0.5], vec![1.0, f64::INFINITY]]);
        assert_eq!(s, "i,sigma\n0.0,0.5\n1.0,inf\n");
    }
}
