//! Sample statistics and delta-method standard errors.

/// Summary of a sample: running mean, unbiased variance and the fourth central
/// moment (for the standard error of the variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub fourth_central: f64,
}

impl SampleStats {
    /// Values are consumed in slice order; the running-mean update keeps a
    /// constant sample's mean bit-exact.
    pub fn from_slice(xs: &[f64]) -> Self {
        let count = xs.len();
        let mut mean = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            mean += (x - mean) / (i + 1) as f64;
        }
        let (mut m2, mut m4) = (0.0, 0.0);
        for &x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m4 += d2 * d2;
        }
        let variance = if count > 1 {
            m2 / (count - 1) as f64
        } else {
            0.0
        };
        let fourth_central = if count > 0 { m4 / count as f64 } else { 0.0 };
        Self {
            count,
            mean,
            variance,
            fourth_central,
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance / self.count as f64).sqrt()
    }

    /// Large-sample standard error of the unbiased variance,
    /// `sqrt((μ₄ − σ⁴) / M)`.
    pub fn variance_stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        ((self.fourth_central - self.variance * self.variance).max(0.0) / self.count as f64).sqrt()
    }
}

/// Standard error of `g²` given `ĝ` and its standard error.
pub fn square_stderr(mean: f64, se: f64) -> f64 {
    2.0 * mean.abs() * se
}

/// Standard error of `ln ĝ` given `ĝ > 0` and its standard error.
pub fn log_stderr(mean: f64, se: f64) -> f64 {
    se / mean
}

/// `sqrt(a² + b²)` for independent (or conservatively combined) errors.
pub fn combined_stderr(a: f64, b: f64) -> f64 {
    a.hypot(b)
}
