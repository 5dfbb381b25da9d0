//! 2-D DFT magnitudes of images, and the zero-phase inverse used to show
//! frequency-domain modes as spatial images.
//!
//! Forward transforms are unnormalized (`X[k] = Σ x[n] e^{-2πi kn/N}` along
//! both axes). Bins are not shifted: bin (ky, kx) sits at row `ky * side + kx`.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::PatternDataset;
use crate::linalg::DenseMatrix;

fn transform_2d(buf: &mut [Complex<f64>], side: usize, fft: &Arc<dyn Fft<f64>>) {
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // rows, then columns via transpose
    fft.process_with_scratch(buf, &mut scratch);
    transpose_square(buf, side);
    fft.process_with_scratch(buf, &mut scratch);
    transpose_square(buf, side);
}

fn transpose_square<T>(buf: &mut [T], side: usize) {
    for y in 0..side {
        for x in y + 1..side {
            buf.swap(y * side + x, x * side + y);
        }
    }
}

/// `|DFT2(pixels)|`, flattened row-major.
pub fn fft_magnitude_image(pixels: &[f64], side: usize) -> Vec<f64> {
    let fft = FftPlanner::new().plan_fft_forward(side);
    magnitude_with(pixels, side, &fft)
}

fn magnitude_with(pixels: &[f64], side: usize, fft: &Arc<dyn Fft<f64>>) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = pixels.iter().map(|&p| Complex::new(p, 0.0)).collect();
    transform_2d(&mut buf, side, fft);
    buf.iter().map(|c| c.norm()).collect()
}

/// FFT-magnitude data matrix: one column per image, same layout as
/// [`super::to_data_matrix`].
pub fn fft_magnitude(ds: &PatternDataset) -> DenseMatrix {
    let side = ds.side();
    let fft = FftPlanner::new().plan_fft_forward(side);
    let columns: Vec<Vec<f64>> = ds
        .images()
        .par_iter()
        .map(|li| magnitude_with(li.image.pixels(), side, &fft))
        .collect();
    DenseMatrix::from_columns(&columns).expect("equal column lengths")
}

/// `|IDFT2(magnitude · e^{i0})|` with the `1/side²` inverse normalization.
pub fn inverse_fft_zero_phase(magnitude: &[f64], side: usize) -> Vec<f64> {
    let fft = FftPlanner::new().plan_fft_inverse(side);
    let mut buf: Vec<Complex<f64>> = magnitude.iter().map(|&m| Complex::new(m, 0.0)).collect();
    transform_2d(&mut buf, side, &fft);
    let scale = 1.0 / (side * side) as f64;
    buf.iter().map(|c| c.norm() * scale).collect()
}
