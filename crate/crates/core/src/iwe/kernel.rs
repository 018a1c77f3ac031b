use crate::real::Real;

/// Isotropic Gaussian `N(0, eps^2 I)` truncated at `radius`, used as the
/// smooth stand-in for the Dirac delta when splatting warped events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel<T> {
    pub epsilon: T,
    pub radius: T,
}

impl<T: Real> GaussianKernel<T> {
    /// Truncation radius defaults to `3 eps`.
    pub fn new(epsilon: T) -> Self {
        Self {
            epsilon,
            radius: epsilon * T::lit(3.0),
        }
    }

    pub fn with_radius(epsilon: T, radius: T) -> Self {
        debug_assert!(radius >= epsilon * T::lit(2.0), "radius must be at least 2 eps");
        Self { epsilon, radius }
    }

    /// Unnormalized density `exp(-r^2 / (2 eps^2))`.
    #[inline]
    pub fn density(&self, r2: T) -> T {
        (-r2 / (T::lit(2.0) * self.epsilon * self.epsilon)).exp()
    }

    /// Density minus its value at the truncation radius, clipped at zero.
    /// Goes to zero continuously at the support boundary, so splatted
    /// contributions vary continuously with the landing position.
    #[inline]
    pub fn tapered(&self, r2: T) -> T {
        let r2max = self.radius * self.radius;
        if r2 >= r2max {
            T::zero()
        } else {
            self.density(r2) - self.density(r2max)
        }
    }

    /// Integer half-width of the pixel window that can receive weight.
    pub fn half_width(&self) -> i64 {
        self.radius.ceil().to_i64().unwrap_or(0).max(0)
    }

    /// Discrete stencil `(dx, dy, w)` over integer offsets within the
    /// radius, renormalized to sum to one.
    pub fn stencil(&self) -> Vec<(i64, i64, T)> {
        let hw = self.half_width();
        let r2max = self.radius * self.radius;
        let mut out = Vec::new();
        for dy in -hw..=hw {
            for dx in -hw..=hw {
                let r2 = T::lit((dx * dx + dy * dy) as f64);
                if r2 <= r2max {
                    out.push((dx, dy, self.density(r2)));
                }
            }
        }
        let total: T = out.iter().map(|s| s.2).sum();
        for s in &mut out {
            s.2 /= total;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_ratio_at_one_pixel() {
        let k = GaussianKernel::new(1.0f64);
        let ratio = k.density(1.0) / k.density(0.0);
        assert!((ratio - (-0.5f64).exp()).abs() < 1e-15);
        assert!((ratio - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn stencil_sums_to_one() {
        for eps in [0.5, 1.0, 1.7] {
            let s = GaussianKernel::new(eps).stencil();
            let total: f64 = s.iter().map(|x| x.2).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn narrow_kernel_concentrates_on_center() {
        let s = GaussianKernel::new(0.05f64).stencil();
        let center = s.iter().find(|x| x.0 == 0 && x.1 == 0).unwrap().2;
        assert!(center > 1.0 - 1e-12);
    }

    #[test]
    fn taper_vanishes_at_radius() {
        let k = GaussianKernel::new(1.0f64);
        assert_eq!(k.tapered(9.0), 0.0);
        assert!(k.tapered(9.0 - 1e-9) < 1e-10);
        assert!(k.tapered(0.0) > 0.98);
    }
}
