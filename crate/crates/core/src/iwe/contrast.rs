use super::Iwe;
use crate::error::{Error, Result};
use crate::real::Real;

/// Variance of an image of warped events and its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastValue<T> {
    pub f: T,
    pub mean: T,
}

/// Population variance and mean with Welford's single-pass update.
pub fn variance<T: Real>(values: &[T]) -> ContrastValue<T> {
    let mut mean = T::zero();
    let mut m2 = T::zero();
    for (i, &v) in values.iter().enumerate() {
        let n = T::from_usize_lossy(i + 1);
        let d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    let f = if values.is_empty() {
        T::zero()
    } else {
        (m2 / T::from_usize_lossy(values.len())).max(T::zero())
    };
    ContrastValue { f, mean }
}

/// Variance of `H` over every pixel of the grid, zeros included.
pub fn contrast<T: Real>(iwe: &Iwe<T>) -> ContrastValue<T> {
    variance(iwe.values())
}

/// Fixed 3x3 Gaussian weights, peak 1 at the centre, `sigma = 1 px`.
pub fn patch_weights<T: Real>() -> [[T; 3]; 3] {
    let e = |r2: f64| T::lit((-r2 / 2.0).exp());
    [
        [e(2.0), e(1.0), e(2.0)],
        [e(1.0), e(0.0), e(1.0)],
        [e(2.0), e(1.0), e(2.0)],
    ]
}

/// Variance of the nine values `w(x) H(x)` of the 3x3 patch centred on grid
/// pixel `(cx, cy)`.
pub fn weighted_patch_contrast<T: Real>(iwe: &Iwe<T>, cx: usize, cy: usize) -> Result<T> {
    if cx < 1 || cy < 1 || cx + 1 >= iwe.width() || cy + 1 >= iwe.height() {
        return Err(Error::InvalidParameter(format!(
            "patch centre ({cx}, {cy}) touches the border of a {}x{} grid",
            iwe.width(),
            iwe.height()
        )));
    }
    Ok(patch_contrast_at(iwe.values(), iwe.width(), cx, cy, &patch_weights()))
}

#[inline]
fn patch_contrast_at<T: Real>(values: &[T], width: usize, cx: usize, cy: usize, w: &[[T; 3]; 3]) -> T {
    let mut buf = [T::zero(); 9];
    for dy in 0..3 {
        let row = (cy + dy - 1) * width;
        for dx in 0..3 {
            buf[dy * 3 + dx] = w[dy][dx] * values[row + cx + dx - 1];
        }
    }
    let nine = T::lit(9.0);
    let mean = buf.iter().copied().sum::<T>() / nine;
    buf.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / nine
}

/// [`weighted_patch_contrast`] at every interior pixel; border pixels are 0.
pub fn patch_contrast_map<T: Real>(iwe: &Iwe<T>) -> Vec<T> {
    let (w, h) = (iwe.width(), iwe.height());
    let mut out = vec![T::zero(); w * h];
    if w < 3 || h < 3 {
        return out;
    }
    let weights = patch_weights();
    for cy in 1..h - 1 {
        for cx in 1..w - 1 {
            out[cy * w + cx] = patch_contrast_at(iwe.values(), w, cx, cy, &weights);
        }
    }
    out
}
