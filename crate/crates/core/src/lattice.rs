//! One-dimensional lattice geometry, the tight-binding generator and the
//! exact one-step propagator.
//!
//! Units are `hbar = m = 1`. The generator is
//!
//! ```text
//! H = (1 / (2 dx^2)) * (D - A) + diag(V)
//! ```
//!
//! where `A` counts the links between two sites and `D` is the vertex degree,
//! i.e. `-(1/(2 dx^2))` times the graph Laplacian of the lattice. With
//! reflecting ends the boundary sites have a single link (zero-flux), with
//! periodic ends an extra link joins the last and first site. For `M = 2`
//! periodic both links join the same pair and their couplings add, so the
//! off-diagonal element is `-1/dx^2`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest accepted site count. The generator and kernel are dense.
pub const MAX_SITES: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("lattice needs at least 2 sites, got {0}")]
    TooFewSites(usize),
    #[error("lattice has {0} sites, the limit is {MAX_SITES}")]
    TooManySites(usize),
    #[error("lattice spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("weight {index} must be positive and finite, got {value}")]
    BadWeight { index: usize, value: f64 },
    #[error("potential {index} is not finite ({value})")]
    NonFinitePotential { index: usize, value: f64 },
    #[error("{field} has {found} entries, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("generator is not a square Hermitian matrix")]
    NotHermitian,
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("invalid lattice document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read lattice file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Reflecting,
}

/// Validated lattice description.
///
/// Weights are the a priori cell volumes entering the inner product; they
/// are shared by every [`WaveState`](crate::state::WaveState) built on this
/// lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConfig {
    num_sites: usize,
    spacing: f64,
    boundary: Boundary,
    weights: Arc<[f64]>,
    potential: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    num_sites: usize,
    spacing: f64,
    boundary: Boundary,
    #[serde(default)]
    weights: Option<Vec<f64>>,
    #[serde(default)]
    potential: Option<Vec<f64>>,
}

impl LatticeConfig {
    pub fn new(
        num_sites: usize,
        spacing: f64,
        boundary: Boundary,
        weights: Option<Vec<f64>>,
        potential: Option<Vec<f64>>,
    ) -> Result<Self, LatticeError> {
        if num_sites < 2 {
            return Err(LatticeError::TooFewSites(num_sites));
        }
        if num_sites > MAX_SITES {
            return Err(LatticeError::TooManySites(num_sites));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(LatticeError::BadSpacing(spacing));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; num_sites]);
        let potential = potential.unwrap_or_else(|| vec![0.0; num_sites]);
        if weights.len() != num_sites {
            return Err(LatticeError::LengthMismatch {
                field: "weights",
                expected: num_sites,
                found: weights.len(),
            });
        }
        if potential.len() != num_sites {
            return Err(LatticeError::LengthMismatch {
                field: "potential",
                expected: num_sites,
                found: potential.len(),
            });
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(LatticeError::BadWeight { index, value });
        }
        if let Some((index, &value)) = potential.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(LatticeError::NonFinitePotential { index, value });
        }
        Ok(Self {
            num_sites,
            spacing,
            boundary,
            weights: weights.into(),
            potential,
        })
    }

    /// Uniform weights, zero potential.
    pub fn uniform(num_sites: usize, spacing: f64, boundary: Boundary) -> Result<Self, LatticeError> {
        Self::new(num_sites, spacing, boundary, None, None)
    }

    pub fn from_json(text: &str) -> Result<Self, LatticeError> {
        let raw: RawLattice = serde_json::from_str(text)?;
        Self::new(raw.num_sites, raw.spacing, raw.boundary, raw.weights, raw.potential)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LatticeError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "num_sites": self.num_sites,
            "spacing": self.spacing,
            "boundary": self.boundary,
            "weights": &self.weights[..],
            "potential": self.potential,
        })
        .to_string()
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn weights(&self) -> &Arc<[f64]> {
        &self.weights
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn has_uniform_weights(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// Returns a copy with a different potential.
    pub fn with_potential(&self, potential: Vec<f64>) -> Result<Self, LatticeError> {
        Self::new(
            self.num_sites,
            self.spacing,
            self.boundary,
            Some(self.weights.to_vec()),
            Some(potential),
        )
    }

    /// Nearest-neighbour links as (i, j) pairs. Periodic `M = 2` yields the
    /// pair twice.
    fn links(&self) -> Vec<(usize, usize)> {
        let m = self.num_sites;
        let mut links: Vec<_> = (0..m - 1).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic {
            links.push((m - 1, 0));
        }
        links
    }
}

/// Hermitian generator of the step kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: DMatrix<Complex64>,
}

impl Hamiltonian {
    /// Wraps an explicit matrix; it must be square and exactly Hermitian.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self, LatticeError> {
        if !matrix.is_square() || matrix.nrows() < 2 || matrix != matrix.adjoint() {
            return Err(LatticeError::NotHermitian);
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn num_sites(&self) -> usize {
        self.matrix.nrows()
    }

    /// Real eigenvalues (ascending) and the unitary matrix of eigenvectors.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.num_sites(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        (values, vectors)
    }
}

pub fn build_hamiltonian(cfg: &LatticeConfig) -> Hamiltonian {
    let m = cfg.num_sites();
    let hop = 1.0 / (2.0 * cfg.spacing() * cfg.spacing());
    let mut h = DMatrix::<Complex64>::zeros(m, m);
    for (i, j) in cfg.links() {
        h[(i, i)] += hop;
        h[(j, j)] += hop;
        h[(i, j)] -= hop;
        h[(j, i)] -= hop;
    }
    for (i, v) in cfg.potential().iter().enumerate() {
        h[(i, i)] += v;
    }
    Hamiltonian { matrix: h }
}

/// `K = exp(-i H dt)`, the amplitude for one discrete time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    dt: f64,
    matrix: DMatrix<Complex64>,
}

impl StepKernel {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn num_sites(&self) -> usize {
        self.matrix.nrows()
    }

    /// Elementary amplitude `<to| K |from>`.
    pub fn element(&self, to: usize, from: usize) -> Complex64 {
        self.matrix[(to, from)]
    }

    /// `max |K^dagger K - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.matrix.adjoint() * &self.matrix;
        max_abs_diff(&prod, &DMatrix::identity(self.num_sites(), self.num_sites()))
    }
}

/// `K = exp(-i H dt)`.
pub fn build_kernel(h: &Hamiltonian, dt: f64) -> Result<StepKernel, LatticeError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(LatticeError::BadTimeStep(dt));
    }
    Ok(StepKernel {
        dt,
        matrix: exp_i(h, -dt),
    })
}

/// `exp(i * s * H)` for real `s`.
pub(crate) fn exp_i(h: &Hamiltonian, s: f64) -> DMatrix<Complex64> {
    // Scaling and squaring with a Pade approximant. Unlike an eigenbasis
    // reconstruction it reproduces closed-form kernels such as i*swap exactly.
    (h.matrix() * Complex64::new(0.0, s)).exp()
}

pub(crate) fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
