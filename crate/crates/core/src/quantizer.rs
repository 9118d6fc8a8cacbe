//! Uniform-grid quantizer with a Euclidean dead zone, plus the zoom map
//! `q_μ(y) = μ q(y/μ)`.
//!
//! Each axis is rounded to a grid of step `2Δ/√p`, so the per-axis
//! half-step errors compose to a Euclidean error of at most `Δ`. Axes are
//! clamped to `±K·step` with `K·step ≥ M + Δ`; a clamped axis alone already
//! exceeds `M - Δ`, which gives the saturation signature for `|y| > M`.

use crate::numerics::Vector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantizerError {
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("dead-zone radius {dead_zone} must not exceed the error bound {error_bound}")]
    DeadZoneTooWide { dead_zone: f64, error_bound: f64 },
    #[error("output dimension must be at least 1")]
    ZeroDimension,
    #[error("expected a {expected}-vector, got length {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("input has non-finite entries")]
    NonFinite,
    #[error("zoom must be positive and finite, got {0}")]
    BadZoom(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    range: f64,
    error_bound: f64,
    dead_zone: f64,
    dim: usize,
}

impl QuantizerConfig {
    /// `range` is `M`, `error_bound` is `Δ`, `dead_zone` is `Δ0` (defaults
    /// to `Δ/5`). `M > 2Δ` is a design condition and is checked when the
    /// certificate is built, not here.
    pub fn new(
        range: f64,
        error_bound: f64,
        dead_zone: Option<f64>,
        dim: usize,
    ) -> Result<Self, QuantizerError> {
        let positive = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(QuantizerError::NotPositive { name, value })
            }
        };
        positive("M", range)?;
        positive("Delta", error_bound)?;
        let dead_zone = dead_zone.unwrap_or(error_bound / 5.0);
        positive("Delta0", dead_zone)?;
        if dead_zone > error_bound {
            return Err(QuantizerError::DeadZoneTooWide {
                dead_zone,
                error_bound,
            });
        }
        if dim == 0 {
            return Err(QuantizerError::ZeroDimension);
        }
        Ok(Self {
            range,
            error_bound,
            dead_zone,
            dim,
        })
    }

    pub fn range(&self) -> f64 {
        self.range
    }
    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }
    pub fn dead_zone(&self) -> f64 {
        self.dead_zone
    }
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        2.0 * self.error_bound / libm::sqrt(self.dim as f64)
    }

    /// Largest grid index per axis.
    pub fn max_index(&self) -> i64 {
        libm::ceil((self.range + self.error_bound) / self.step()) as i64
    }

    /// `(2K+1)^p`, or `None` on overflow.
    pub fn codebook_size(&self) -> Option<u128> {
        let per_axis = 2 * self.max_index() as u128 + 1;
        per_axis.checked_pow(self.dim as u32)
    }

    fn check(&self, y: &Vector) -> Result<(), QuantizerError> {
        if y.len() != self.dim {
            return Err(QuantizerError::WrongLength {
                expected: self.dim,
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(QuantizerError::NonFinite);
        }
        Ok(())
    }

    pub fn quantize(&self, y: &Vector) -> Result<Vector, QuantizerError> {
        self.check(y)?;
        if y.norm() <= self.dead_zone {
            return Ok(Vector::zeros(self.dim));
        }
        let step = self.step();
        let k = self.max_index() as f64;
        // floor(v + 1/2) sends ties toward +inf
        Ok(y.map(|v| libm::floor(v / step + 0.5).clamp(-k, k) * step))
    }

    pub fn zoomed_quantize(&self, y: &Vector, mu: f64) -> Result<Vector, QuantizerError> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(QuantizerError::BadZoom(mu));
        }
        self.check(y)?;
        Ok(self.quantize(&(y / mu))? * mu)
    }

    /// `|q| ≤ (M - Δ) μ`: the quantized output certifies the quantizer is
    /// not saturated.
    pub fn saturation_test(&self, qy: &Vector, mu: f64) -> bool {
        qy.norm() <= (self.range - self.error_bound) * mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::vec::Vec;

    fn scalar(v: f64) -> Vector {
        Vector::from_element(1, v)
    }

    #[test]
    fn zero_maps_to_zero() {
        let q = QuantizerConfig::new(10.0, 0.05, Some(0.01), 2).unwrap();
        assert_eq!(q.quantize(&Vector::zeros(2)).unwrap(), Vector::zeros(2));
        assert_eq!(q.zoomed_quantize(&Vector::zeros(2), 7.5).unwrap(), Vector::zeros(2));
    }

    #[test]
    fn scalar_grid_rounding() {
        let q = QuantizerConfig::new(10.0, 0.05, Some(0.01), 1).unwrap();
        assert!((q.step() - 0.1).abs() < 1e-15);
        let out = q.quantize(&scalar(0.337)).unwrap()[0];
        assert!((out - 0.3).abs() < 1e-12);
        assert!((out - 0.337).abs() <= 0.05);
    }

    #[test]
    fn ties_round_up() {
        let q = QuantizerConfig::new(10.0, 0.5, Some(0.1), 1).unwrap();
        // step 1.0, tie at 2.5 and -2.5
        assert_eq!(q.quantize(&scalar(2.5)).unwrap()[0], 3.0);
        assert_eq!(q.quantize(&scalar(-2.5)).unwrap()[0], -2.0);
    }

    #[test]
    fn saturation_boundary_is_inclusive() {
        let q = QuantizerConfig::new(10.0, 0.05, None, 1).unwrap();
        assert!(q.saturation_test(&scalar(0.0), 1.0));
        assert!(q.saturation_test(&scalar(10.0 - 0.05), 1.0));
        assert!(!q.saturation_test(&scalar(19.91), 2.0));
    }

    #[test]
    fn unit_zoom_is_plain_quantization() {
        let q = QuantizerConfig::new(3.0, 0.2, None, 2).unwrap();
        let y = Vector::from_column_slice(&[1.234, -0.77]);
        assert_eq!(q.zoomed_quantize(&y, 1.0).unwrap(), q.quantize(&y).unwrap());
    }

    #[test]
    fn dead_zone_default_and_validation() {
        let q = QuantizerConfig::new(10.0, 0.05, None, 1).unwrap();
        assert!((q.dead_zone() - 0.01).abs() < 1e-15);
        assert!(QuantizerConfig::new(10.0, 0.05, Some(0.06), 1).is_err());
        assert!(QuantizerConfig::new(10.0, 0.05, Some(0.0), 1).is_err());
        assert!(QuantizerConfig::new(10.0, 0.0, None, 1).is_err());
        assert!(q.zoomed_quantize(&scalar(1.0), 0.0).is_err());
        assert!(q.quantize(&scalar(f64::NAN)).is_err());
    }

    #[test]
    fn image_matches_codebook() {
        let q = QuantizerConfig::new(1.0, 0.3, None, 2).unwrap();
        let k = q.max_index();
        let mut seen = BTreeSet::new();
        let span = 3.0;
        let n = 241;
        for i in 0..n {
            for j in 0..n {
                let y = Vector::from_column_slice(&[
                    -span + 2.0 * span * i as f64 / (n - 1) as f64,
                    -span + 2.0 * span * j as f64 / (n - 1) as f64,
                ]);
                let out = q.quantize(&y).unwrap();
                let idx: Vec<i64> = out.iter().map(|v| libm::round(v / q.step()) as i64).collect();
                assert!(idx.iter().all(|i| i.abs() <= k));
                seen.insert(idx);
            }
        }
        // the sweep reaches every clamp level, so it sees the full grid
        assert_eq!(seen.len() as u128, q.codebook_size().unwrap());
    }
}
