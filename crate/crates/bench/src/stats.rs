use serde::Serialize;

/// Population mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        Self { mean, std: var.sqrt(), n }
    }
}

/// `√((s₁² + s₂²)/2)`, the spread two equal-sized groups share.
pub fn pooled_std(a: &MeanStd, b: &MeanStd) -> f64 {
    ((a.std * a.std + b.std * b.std) / 2.0).sqrt()
}
