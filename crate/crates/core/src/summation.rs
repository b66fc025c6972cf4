//! Order-stable accumulation.

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

pub fn mean(values: &[f64]) -> f64 {
    sum(values.iter().copied()) / values.len() as f64
}

/// Sample mean and standard error of the mean. The standard error is NaN for
/// fewer than two values.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let m = mean(values);
    if n < 2 {
        return (m, f64::NAN);
    }
    let var = sum(values.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut values = vec![1.0e16, 1.0, -1.0e16];
        values.extend(std::iter::repeat(1.0).take(9));
        assert_eq!(sum(values), 10.0);
    }

    #[test]
    fn stderr_of_single_value_is_nan() {
        let (m, se) = mean_and_stderr(&[3.0]);
        assert_eq!(m, 3.0);
        assert!(se.is_nan());
    }

    #[test]
    fn stderr_matches_textbook() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        let var: f64 = (2.25 + 0.25 + 0.25 + 2.25) / 3.0;
        assert!((se - (var / 4.0).sqrt()).abs() < 1e-15);
    }
}
