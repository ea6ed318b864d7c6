//! Sampled dimension-spectrum curves shared by the estimator modules.

use serde::Serialize;

use crate::error::{DimlabError, Result};

/// Per-theta estimation diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaDiagnostics {
    /// Fit quality of the underlying slope regression, in [0, 1].
    pub fit_r2: f64,
    /// Number of anchor scales (or cover-scale pairs) behind the estimate.
    pub n_anchors: u32,
    /// Magnitude of any monotone post-processing applied to this value.
    pub adjustment: f64,
}

/// Sampled map theta -> dimension estimate.
#[derive(Debug, Clone)]
pub struct SpectrumCurve {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub diagnostics: Vec<ThetaDiagnostics>,
}

impl SpectrumCurve {
    pub fn new(
        thetas: Vec<f64>,
        values: Vec<f64>,
        diagnostics: Vec<ThetaDiagnostics>,
    ) -> Result<Self> {
        if thetas.len() != values.len() || thetas.len() != diagnostics.len() {
            return Err(DimlabError::invalid("curve field length mismatch"));
        }
        for w in thetas.windows(2) {
            if !(w[1] > w[0]) {
                return Err(DimlabError::invalid("thetas must be strictly increasing"));
            }
        }
        Ok(SpectrumCurve {
            thetas,
            values,
            diagnostics,
        })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn value_at(&self, theta: f64) -> Option<f64> {
        self.thetas
            .iter()
            .position(|t| (t - theta).abs() < 1e-12)
            .map(|i| self.values[i])
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV export: `theta,value,fit_r2,n_anchors`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,value,fit_r2,n_anchors\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.thetas[i], self.values[i], self.diagnostics[i].fit_r2, self.diagnostics[i].n_anchors
            ));
        }
        out
    }
}

/// Default theta grid: {0.05, 0.10, ..., 0.95, 1.0}.
pub fn default_theta_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.05).collect()
}

/// Pool-adjacent-violators projection onto non-decreasing sequences.
/// Returns the projected values and the largest pointwise adjustment.
pub fn isotonic_non_decreasing(values: &[f64]) -> (Vec<f64>, f64) {
    // blocks of (mean, weight)
    let mut blocks: Vec<(f64, f64)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1.0));
        while blocks.len() >= 2 {
            let n = blocks.len();
            if blocks[n - 2].0 > blocks[n - 1].0 {
                let (m1, w1) = blocks[n - 2];
                let (m2, w2) = blocks[n - 1];
                let w = w1 + w2;
                let m = (m1 * w1 + m2 * w2) / w;
                blocks.truncate(n - 2);
                blocks.push((m, w));
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for &(m, w) in &blocks {
        for _ in 0..(w as usize) {
            out.push(m);
        }
    }
    let adj = values
        .iter()
        .zip(&out)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    (out, adj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotonic_projects_running_violations() {
        let (v, adj) = isotonic_non_decreasing(&[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(v, vec![1.0, 2.5, 2.5, 4.0]);
        assert!((adj - 0.5).abs() < 1e-12);
    }

    #[test]
    fn isotonic_is_identity_on_monotone_input() {
        let input = vec![0.5, 0.5, 1.0, 1.5];
        let (v, adj) = isotonic_non_decreasing(&input);
        assert_eq!(v, input);
        assert_eq!(adj, 0.0);
    }

    #[test]
    fn default_grid_spans_unit_interval() {
        let g = default_theta_grid();
        assert_eq!(g.len(), 20);
        assert!((g[0] - 0.05).abs() < 1e-12);
        assert!((g[19] - 1.0).abs() < 1e-12);
    }
}
