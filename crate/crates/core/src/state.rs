use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("state has {found} amplitudes but the lattice has {expected} sites")]
    LengthMismatch { expected: usize, found: usize },
    #[error("amplitude at site {0} is not finite")]
    NonFinite(usize),
    #[error("site {site} is outside a lattice of {num_sites} sites")]
    SiteOutOfRange { site: usize, num_sites: usize },
}

/// Wave function on the lattice at one time slice.
///
/// Carries the lattice weight vector so the weighted norm and Born
/// probabilities need no extra context.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    time: i64,
    amplitudes: Vec<Complex64>,
    weights: Arc<[f64]>,
}

impl WaveState {
    pub fn new(time: i64, amplitudes: Vec<Complex64>, weights: Arc<[f64]>) -> Result<Self, StateError> {
        if amplitudes.len() != weights.len() {
            return Err(StateError::LengthMismatch {
                expected: weights.len(),
                found: amplitudes.len(),
            });
        }
        if let Some(i) = amplitudes.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(StateError::NonFinite(i));
        }
        Ok(Self {
            time,
            amplitudes,
            weights,
        })
    }

    /// State with unit weights.
    pub fn unweighted(time: i64, amplitudes: Vec<Complex64>) -> Result<Self, StateError> {
        let weights: Arc<[f64]> = vec![1.0; amplitudes.len()].into();
        Self::new(time, amplitudes, weights)
    }

    /// `|site>` at `time`: a point source.
    pub fn basis(site: usize, time: i64, weights: Arc<[f64]>) -> Result<Self, StateError> {
        if site >= weights.len() {
            return Err(StateError::SiteOutOfRange {
                site,
                num_sites: weights.len(),
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); weights.len()];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        Ok(Self {
            time,
            amplitudes,
            weights,
        })
    }

    pub fn zeros(time: i64, weights: Arc<[f64]>) -> Self {
        Self {
            time,
            amplitudes: vec![Complex64::new(0.0, 0.0); weights.len()],
            weights,
        }
    }

    pub fn time(&self) -> i64 {
        self.time
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn weights(&self) -> &Arc<[f64]> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitude(&self, site: usize) -> Complex64 {
        self.amplitudes[site]
    }

    /// Same weights and time, new amplitude vector of equal length.
    pub(crate) fn with_amplitudes(&self, time: i64, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), self.weights.len());
        Self {
            time,
            amplitudes,
            weights: Arc::clone(&self.weights),
        }
    }

    pub fn with_weights(&self, weights: Arc<[f64]>) -> Result<Self, StateError> {
        Self::new(self.time, self.amplitudes.clone(), weights)
    }

    /// Weighted squared norm `sum_i w_i |A_i|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes
            .iter()
            .zip(self.weights.iter())
            .map(|(a, w)| w * a.norm_sqr())
            .sum()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.with_amplitudes(self.time, self.amplitudes.iter().map(|a| a * factor).collect())
    }

    /// `self + other`; times and weights are taken from `self`.
    pub fn add(&self, other: &WaveState) -> Result<Self, StateError> {
        if other.len() != self.len() {
            return Err(StateError::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self.with_amplitudes(
            self.time,
            self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a + b).collect(),
        ))
    }

    /// Largest componentwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &WaveState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Unweighted Euclidean norm of `self - other`.
    pub fn euclidean_distance(&self, other: &WaveState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_length_and_nan() {
        let w: Arc<[f64]> = vec![1.0, 1.0].into();
        assert_eq!(
            WaveState::new(0, vec![Complex64::new(1.0, 0.0)], w.clone()),
            Err(StateError::LengthMismatch { expected: 2, found: 1 })
        );
        assert_eq!(
            WaveState::new(0, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, f64::INFINITY)], w.clone()),
            Err(StateError::NonFinite(1))
        );
        assert!(WaveState::basis(2, 0, w).is_err());
    }

    #[test]
    fn weighted_norm() {
        let w: Arc<[f64]> = vec![2.0, 1.0].into();
        let s = WaveState::new(0, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)], w).unwrap();
        assert_eq!(s.norm_sqr(), 3.0);
    }
}
