//! Filter projectors and the weighted inner product.
//!
//! Projectors are kept as sorted hole sets and act by zeroing every blocked
//! component, so idempotence and complementarity hold bit for bit.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::state::WaveState;

#[derive(Debug, Error, PartialEq)]
pub enum HilbertError {
    #[error("vectors of length {left} and {right} cannot be paired")]
    LengthMismatch { left: usize, right: usize },
    #[error("weight {index} must be positive and finite, got {value}")]
    BadWeight { index: usize, value: f64 },
}

/// Diagonal 0/1 operator that transmits the components at its holes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Projector {
    holes: Vec<usize>,
}

impl Projector {
    /// Holes are sorted and de-duplicated.
    pub fn new(mut holes: Vec<usize>) -> Self {
        holes.sort_unstable();
        holes.dedup();
        Self { holes }
    }

    /// Elementary projector `|site><site|`.
    pub fn elementary(site: usize) -> Self {
        Self { holes: vec![site] }
    }

    /// A filter full of holes; acts as the identity.
    pub fn transparent(num_sites: usize) -> Self {
        Self {
            holes: (0..num_sites).collect(),
        }
    }

    /// Obstacle at a single site: every other site is a hole.
    pub fn obstacle(site: usize, num_sites: usize) -> Self {
        Self {
            holes: (0..num_sites).filter(|&i| i != site).collect(),
        }
    }

    pub fn holes(&self) -> &[usize] {
        &self.holes
    }

    pub fn transmits(&self, site: usize) -> bool {
        self.holes.binary_search(&site).is_ok()
    }

    /// Applies the projector to a raw amplitude vector in place. Holes past
    /// the end of the vector select nothing.
    pub(crate) fn apply_in_place(&self, amplitudes: &mut [Complex64]) {
        let mut holes = self.holes.iter().peekable();
        for (site, a) in amplitudes.iter_mut().enumerate() {
            if holes.next_if_eq(&&site).is_none() {
                *a = Complex64::new(0.0, 0.0);
            }
        }
    }
}

pub fn apply_filter(p: &Projector, s: &WaveState) -> WaveState {
    let mut amps = s.amplitudes().to_vec();
    p.apply_in_place(&mut amps);
    s.with_amplitudes(s.time(), amps)
}

/// `<i|j> = w_i delta_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedInnerProduct {
    weights: Arc<[f64]>,
}

impl WeightedInnerProduct {
    pub fn new(weights: Arc<[f64]>) -> Result<Self, HilbertError> {
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(HilbertError::BadWeight { index, value });
        }
        Ok(Self { weights })
    }

    pub fn uniform(num_sites: usize) -> Self {
        Self {
            weights: vec![1.0; num_sites].into(),
        }
    }

    /// The inner product carried by a state's lattice.
    pub fn of_state(s: &WaveState) -> Self {
        Self {
            weights: Arc::clone(s.weights()),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `<phi|psi> = sum_i w_i conj(phi_i) psi_i`: antilinear in `phi`, linear in `psi`.
pub fn inner_product(ip: &WeightedInnerProduct, phi: &WaveState, psi: &WaveState) -> Result<Complex64, HilbertError> {
    inner_product_raw(&ip.weights, phi.amplitudes(), psi.amplitudes())
}

pub(crate) fn inner_product_raw(w: &[f64], phi: &[Complex64], psi: &[Complex64]) -> Result<Complex64, HilbertError> {
    if phi.len() != psi.len() || phi.len() != w.len() {
        return Err(HilbertError::LengthMismatch {
            left: phi.len(),
            right: psi.len(),
        });
    }
    Ok(w.iter()
        .zip(phi.iter().zip(psi))
        .map(|(w, (b, a))| b.conj() * a * w)
        .sum())
}

pub fn norm_sqr(ip: &WeightedInnerProduct, psi: &WaveState) -> Result<f64, HilbertError> {
    inner_product(ip, psi, psi).map(|z| z.re)
}

/// Splits `s` into the transmitted part `P s` and the blocked part `(1 - P) s`.
pub fn decompose(p: &Projector, s: &WaveState) -> (WaveState, WaveState) {
    let mut kept = s.amplitudes().to_vec();
    let mut blocked = s.amplitudes().to_vec();
    let zero = Complex64::new(0.0, 0.0);
    for (site, (k, b)) in kept.iter_mut().zip(blocked.iter_mut()).enumerate() {
        if p.transmits(site) {
            *b = zero;
        } else {
            *k = zero;
        }
    }
    (s.with_amplitudes(s.time(), kept), s.with_amplitudes(s.time(), blocked))
}

/// Coefficients `<i|psi> = w_i A_i` in the weighted site basis.
pub fn basis_coefficients(ip: &WeightedInnerProduct, psi: &WaveState) -> Vec<Complex64> {
    ip.weights.iter().zip(psi.amplitudes()).map(|(w, a)| a * w).collect()
}

/// Resums `sum_i w_i^{-1} c_i |i>`; inverse of [`basis_coefficients`].
pub fn resum_coefficients(ip: &WeightedInnerProduct, coefficients: &[Complex64], like: &WaveState) -> WaveState {
    let amps = ip.weights.iter().zip(coefficients).map(|(w, c)| c / w).collect();
    like.with_amplitudes(like.time(), amps)
}
