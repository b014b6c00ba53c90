//! Runs the image preprocessing chain (grayscale resize to 28x28, then 7x7
//! patch normalization) on a synthetic high-resolution image and on a PNG
//! given on the command line.

use spikeplace::data::{preprocess_dynamic, preprocess_image, PreprocessConfig, RawImage};

fn summary(name: &str, pixels: &[f64]) {
    let min = pixels.iter().copied().fold(f64::INFINITY, f64::min);
    let max = pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = pixels.iter().sum::<f64>() / pixels.len() as f64;
    println!("{name}: {} pixels, min {min:.1}, max {max:.1}, mean {mean:.1}", pixels.len());
}

fn main() -> spikeplace::Result<()> {
    let config = PreprocessConfig::default();
    let (w, h) = (120, 90);
    let pixels: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            127.5 + 100.0 * (x / 9.0).sin() * (y / 13.0).cos()
        })
        .collect();
    let raw = RawImage::new(w, h, pixels)?;
    let out = preprocess_image(&raw, &config)?;
    summary("synthetic 120x90", &out);

    let again = preprocess_image(&RawImage::new(28, 28, out.clone())?, &config)?;
    let drift = out.iter().zip(&again).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("re-applying preprocessing moves pixels by at most {drift:.3}");

    if let Some(path) = std::env::args().nth(1) {
        let img = image::open(&path).map_err(|e| spikeplace::Error::Data(format!("{path}: {e}")))?;
        summary(&path, &preprocess_dynamic(&img, &config)?);
    }
    Ok(())
}
