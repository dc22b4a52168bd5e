use serde::{Deserialize, Serialize};

/// Least-squares line `value = slope * k + intercept` over absolute frame index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

impl LineFit {
    pub fn at(&self, k: f64) -> f64 {
        self.slope * k + self.intercept
    }
}

/// Fits a line to `values[i]` at frame index `start + i` and returns the fit
/// with the residuals `values[i] - line(start + i)`.
///
/// Fewer than two samples give a zero line and zero residuals. Residuals are
/// computed from centred sums, so they add up to zero to rounding.
pub fn detrend(start: usize, values: &[f64]) -> (LineFit, Vec<f64>) {
    let n = values.len();
    if n < 2 {
        return (LineFit::default(), vec![0.0; n]);
    }
    let nf = n as f64;
    // mean of start..start+n
    let k_mean = start as f64 + (nf - 1.0) / 2.0;
    let v_mean = values.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, v) in values.iter().enumerate() {
        let dk = (start + i) as f64 - k_mean;
        sxy += dk * (v - v_mean);
        sxx += dk * dk;
    }
    let slope = sxy / sxx;
    let fit = LineFit {
        slope,
        intercept: v_mean - slope * k_mean,
    };
    let residuals = values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - v_mean) - slope * ((start + i) as f64 - k_mean))
        .collect();
    (fit, residuals)
}
