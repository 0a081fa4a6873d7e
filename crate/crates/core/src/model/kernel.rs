use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth compactly supported test function, used both for the volume
/// statistic `Y` that drives prices and for convergence functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Kernel {
    Zero,
    /// `amplitude · exp(-(x-c)²/2w²) · χ((x-c)/r)` with the standard bump
    /// cutoff `χ(s) = exp(1 - 1/(1-s²))` on `|s| < 1`.
    GaussianBump {
        center: f64,
        width: f64,
        radius: f64,
        amplitude: f64,
    },
    /// `amplitude · (1 - ((x-c)/r)²)³` on `|x-c| < r`.
    Polynomial { center: f64, radius: f64, amplitude: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Kernel::Zero => true,
            Kernel::GaussianBump { center, width, radius, amplitude } => {
                center.is_finite() && amplitude.is_finite() && width > 0.0 && radius > 0.0 && radius.is_finite()
            }
            Kernel::Polynomial { center, radius, amplitude } => {
                center.is_finite() && amplitude.is_finite() && radius > 0.0 && radius.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("malformed kernel {self:?}")))
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Kernel::Zero => 0.0,
            Kernel::GaussianBump { center, width, radius, amplitude } => {
                let d = x - center;
                let s = d / radius;
                if s.abs() >= 1.0 {
                    return 0.0;
                }
                amplitude * (-0.5 * (d / width).powi(2) + 1.0 - 1.0 / (1.0 - s * s)).exp()
            }
            Kernel::Polynomial { center, radius, amplitude } => {
                let s = (x - center) / radius;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - s * s).powi(3)
                }
            }
        }
    }

    /// Closed support; `None` for the zero kernel.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Kernel::Zero => None,
            Kernel::GaussianBump { center, radius, .. } | Kernel::Polynomial { center, radius, .. } => {
                Some((center - radius, center + radius))
            }
        }
    }

    /// Bound on `|φ'|`, from a fine finite-difference scan of the support.
    pub fn derivative_bound(&self) -> f64 {
        let Some((lo, hi)) = self.support() else { return 0.0 };
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        (0..steps)
            .map(|i| {
                let a = lo + i as f64 * h;
                (self.eval(a + h) - self.eval(a)).abs() / h
            })
            .fold(0.0, f64::max)
    }

    pub fn shifted(&self, by: f64) -> Kernel {
        match *self {
            Kernel::Zero => Kernel::Zero,
            Kernel::GaussianBump { center, width, radius, amplitude } => Kernel::GaussianBump {
                center: center + by,
                width,
                radius,
                amplitude,
            },
            Kernel::Polynomial { center, radius, amplitude } => Kernel::Polynomial {
                center: center + by,
                radius,
                amplitude,
            },
        }
    }

    /// `∫φ` by composite Simpson.
    pub fn integral(&self) -> f64 {
        let Some((lo, hi)) = self.support() else { return 0.0 };
        let panels = 4_000;
        let h = (hi - lo) / panels as f64;
        let mut s = self.eval(lo) + self.eval(hi);
        for i in 1..panels {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * self.eval(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    /// The same shape rescaled to unit integral.
    pub fn normalized(&self) -> Kernel {
        let total = self.integral();
        match *self {
            Kernel::Zero => Kernel::Zero,
            Kernel::GaussianBump { center, width, radius, amplitude } => Kernel::GaussianBump {
                center,
                width,
                radius,
                amplitude: amplitude / total,
            },
            Kernel::Polynomial { center, radius, amplitude } => Kernel::Polynomial {
                center,
                radius,
                amplitude: amplitude / total,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_support_and_peak() {
        let k = Kernel::GaussianBump { center: 0.3, width: 0.2, radius: 0.5, amplitude: 2.0 };
        assert_eq!(k.eval(0.3), 2.0);
        assert_eq!(k.eval(0.8), 0.0);
        assert_eq!(k.eval(-0.2), 0.0);
        assert!(k.eval(0.79) > 0.0);
        let p = Kernel::Polynomial { center: 0.0, radius: 1.0, amplitude: 1.0 };
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.eval(0.0), 1.0);
    }

    #[test]
    fn polynomial_derivative_bound_matches_closed_form() {
        // max |d/dx (1-s²)³| = 6 s (1-s²)² at s = 1/√5
        let p = Kernel::Polynomial { center: 0.0, radius: 0.5, amplitude: 1.0 };
        let s = 5f64.sqrt().recip();
        let exact = 6.0 * s * (1.0 - s * s).powi(2) / 0.5;
        assert!((p.derivative_bound() - exact).abs() < 1e-3);
    }

    #[test]
    fn normalization() {
        let k = Kernel::GaussianBump { center: 0.0, width: 0.3, radius: 0.6, amplitude: 1.0 }.normalized();
        assert!((k.integral() - 1.0).abs() < 1e-12);
        assert_eq!(Kernel::Zero.integral(), 0.0);
    }
}
