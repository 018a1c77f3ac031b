use crate::error::{Error, Result};
use crate::real::Real;

/// Equal-width histogram of pixel values over `[min, max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<T> {
    pub min: T,
    pub max: T,
    pub counts: Vec<usize>,
    /// Pixels exactly equal to zero (no events), reported apart from the bins.
    pub zero_count: usize,
}

impl<T: Real> Histogram<T> {
    pub fn bin_width(&self) -> T {
        (self.max - self.min) / T::from_usize_lossy(self.counts.len())
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|c| **c > 0).count()
    }
}

pub fn histogram<T: Real>(values: &[T], bins: usize) -> Result<Histogram<T>> {
    if bins < 2 {
        return Err(Error::InvalidParameter("histogram needs at least 2 bins".into()));
    }
    let mut counts = vec![0usize; bins];
    let zero_count = values.iter().filter(|v| **v == T::zero()).count();
    let (Some(min), Some(max)) = (
        values.iter().copied().reduce(|a, b| a.min(b)),
        values.iter().copied().reduce(|a, b| a.max(b)),
    ) else {
        return Ok(Histogram {
            min: T::zero(),
            max: T::zero(),
            counts,
            zero_count,
        });
    };
    let span = max - min;
    for &v in values {
        let idx = if span > T::zero() {
            ((v - min) / span * T::from_usize_lossy(bins))
                .floor()
                .to_usize()
                .unwrap_or(0)
                .min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Ok(Histogram {
        min,
        max,
        counts,
        zero_count,
    })
}
