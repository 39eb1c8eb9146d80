/// A real amplitude stored as `sign · exp(ln_abs)`.
///
/// Boltzmann weights overflow `f64` at moderate couplings, so every amplitude
/// routine has a log-space variant returning this type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAmplitude {
    pub ln_abs: f64,
    /// `+1.0`, `-1.0`, or `0.0` for an exactly vanishing amplitude.
    pub sign: f64,
}

impl LogAmplitude {
    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self {
                ln_abs: f64::NEG_INFINITY,
                sign: 0.0,
            }
        } else {
            Self {
                ln_abs: v.abs().ln(),
                sign: v.signum(),
            }
        }
    }

    pub fn value(&self) -> f64 {
        self.sign * self.ln_abs.exp()
    }

    /// `|self / reference - 1|`, evaluated without leaving log space.
    pub fn relative_deviation(&self, reference: &LogAmplitude) -> f64 {
        if reference.sign == 0.0 {
            return if self.sign == 0.0 { 0.0 } else { f64::INFINITY };
        }
        let ratio = self.sign * reference.sign * (self.ln_abs - reference.ln_abs).exp();
        (ratio - 1.0).abs()
    }
}

/// `ln Σ exp(x_i)` for a non-empty sequence.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln(2 cosh x)` without overflow.
pub(crate) fn ln_two_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_helpers() {
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((ln_two_cosh(0.3) - (2.0 * 0.3f64.cosh()).ln()).abs() < 1e-15);
        assert!((ln_two_cosh(-800.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn deviation() {
        let a = LogAmplitude::from_value(-2.0);
        let b = LogAmplitude::from_value(-2.0 * (1.0 + 1e-9));
        assert!((a.relative_deviation(&b) - 1e-9).abs() < 1e-15);
        assert_eq!(a.value(), -2.0);
    }
}
