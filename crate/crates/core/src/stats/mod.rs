//! Distributional comparisons and martingale-problem diagnostics.

mod characteristics;
mod dichotomy;
mod martingale;

pub use characteristics::{characteristics_estimate, Characteristics};
pub use characteristics::projected_jumps;
pub use dichotomy::{dichotomy_experiment, ComparisonReport, ComparisonRow, DichotomySpec, Functional, REPORT_HEADER};
pub use martingale::{martingale_residual, Conditioning, MartingaleAccumulator, MartingaleProbe, MartingaleResidual};

use crate::error::{Error, Result};

pub const DEFAULT_XI_GRID: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub noise: String,
    pub eps: Option<f64>,
    pub functional: String,
}

/// Finite observations of one functional.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::OutOfRange { what: format!("non-finite observation {v}") });
        }
        Ok(Self { values, provenance })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Provenance::default())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (self.values.len() as f64 - 1.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.values.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `Q_KS(λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2j²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov statistic with the asymptotic Kolmogorov p-value
/// (Stephens' small-sample correction of the argument).
pub fn ks_two_sample(a: &SampleSet, b: &SampleSet) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut x = a.values.clone();
    let mut y = b.values.clone();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let p = kolmogorov_survival((en + 0.12 + 0.11 / en) * d);
    Ok(KsResult { statistic: d, p_value: p })
}

/// `max_ξ |φ̂_a(ξ) − φ̂_b(ξ)|` for empirical characteristic functions.
pub fn ecf_distance(a: &SampleSet, b: &SampleSet, xi_grid: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() || xi_grid.is_empty() {
        return Err(Error::EmptySample);
    }
    let ecf = |v: &[f64], xi: f64| {
        let (c, s) = v.iter().fold((0.0, 0.0), |(c, s), x| (c + (xi * x).cos(), s + (xi * x).sin()));
        (c / v.len() as f64, s / v.len() as f64)
    };
    Ok(xi_grid
        .iter()
        .map(|&xi| {
            let (ca, sa) = ecf(&a.values, xi);
            let (cb, sb) = ecf(&b.values, xi);
            ((ca - cb).powi(2) + (sa - sb).powi(2)).sqrt()
        })
        .fold(0.0, f64::max))
}

/// Two-sided normal tail probability `P(|Z| > z)`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    libm::erfc(z.abs() / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests;
