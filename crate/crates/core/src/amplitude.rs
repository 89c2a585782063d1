//! Amplitudes of setups, wave-function evolution and superpositions.
//!
//! Every amplitude is built from the one-step kernel: AND multiplies, OR
//! adds. [`amplitude_chain`] evaluates a canonical setup by propagating a
//! point source through the filters; [`amplitude_pathsum`] sums the products
//! of elementary amplitudes over every hole tuple and serves as its
//! independent check.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::{exp_i, Hamiltonian, LatticeError, StepKernel};
use crate::setup::{canonicalize, CanonicalSetup, ExprKind, Filter, SetupError, SetupExpr, SpacetimePoint};
use crate::state::{StateError, WaveState};

/// Hole tuples [`amplitude_pathsum`] is willing to enumerate.
pub const MAX_PATHS: u128 = 1_000_000;

#[derive(Debug, Error)]
pub enum AmplitudeError {
    #[error("site {site} does not exist on a kernel over {num_sites} sites")]
    LatticeMismatch { site: usize, num_sites: usize },
    #[error("state has {state} sites but the kernel acts on {kernel}")]
    DimensionMismatch { state: usize, kernel: usize },
    #[error("{paths} paths exceed the brute-force limit of {MAX_PATHS}; use the chain evaluator")]
    PathExplosion { paths: u128 },
    #[error("filter at t={time} lies outside the evolution window [{start}, {end}]")]
    FilterOutsideWindow { time: i64, start: i64, end: i64 },
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Complex amplitude of a setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude(pub Complex64);

impl Amplitude {
    pub const ONE: Amplitude = Amplitude(Complex64::new(1.0, 0.0));

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn norm(self) -> f64 {
        self.0.norm()
    }
}

impl Mul for Amplitude {
    type Output = Amplitude;
    fn mul(self, rhs: Amplitude) -> Amplitude {
        Amplitude(self.0 * rhs.0)
    }
}

impl Add for Amplitude {
    type Output = Amplitude;
    fn add(self, rhs: Amplitude) -> Amplitude {
        Amplitude(self.0 + rhs.0)
    }
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_setup_sites(s: &CanonicalSetup, k: &StepKernel) -> Result<(), AmplitudeError> {
    let site = s.max_site();
    if site >= k.num_sites() {
        return Err(AmplitudeError::LatticeMismatch {
            site,
            num_sites: k.num_sites(),
        });
    }
    Ok(())
}

fn uniform_weights(num_sites: usize) -> Arc<[f64]> {
    vec![1.0; num_sites].into()
}

/// `out = K v`.
fn step(k: &DMatrix<Complex64>, v: &[Complex64], out: &mut [Complex64]) {
    let m = v.len();
    out.fill(Complex64::new(0.0, 0.0));
    for (j, vj) in v.iter().enumerate() {
        let column = &k.as_slice()[j * m..(j + 1) * m];
        for (o, kij) in out.iter_mut().zip(column) {
            *o += kij * vj;
        }
    }
}

/// Advances `state` by `steps` kernel applications, applying each filter's
/// projector once the evolution reaches the filter's time slice. Filters at
/// the start time act on the input before the first step.
pub fn evolve(state: &WaveState, k: &StepKernel, steps: u64, filters: &[Filter]) -> Result<WaveState, AmplitudeError> {
    if state.len() != k.num_sites() {
        return Err(AmplitudeError::DimensionMismatch {
            state: state.len(),
            kernel: k.num_sites(),
        });
    }
    let start = state.time();
    let end = start
        .checked_add(i64::try_from(steps).unwrap_or(i64::MAX))
        .unwrap_or(i64::MAX);
    if let Some(f) = filters.iter().find(|f| f.time() < start || f.time() > end) {
        return Err(AmplitudeError::FilterOutsideWindow {
            time: f.time(),
            start,
            end,
        });
    }
    let mut order: Vec<&Filter> = filters.iter().collect();
    order.sort_by_key(|f| f.time());
    let mut pending = order.into_iter().peekable();

    let mut current = state.amplitudes().to_vec();
    let mut next = vec![Complex64::new(0.0, 0.0); current.len()];
    let mut time = start;
    loop {
        while let Some(f) = pending.next_if(|f| f.time() == time) {
            f.projector().apply_in_place(&mut current);
        }
        if time == end {
            break;
        }
        step(k.matrix(), &current, &mut next);
        std::mem::swap(&mut current, &mut next);
        time += 1;
    }
    Ok(state.with_amplitudes(end, current))
}

/// `<dst| K^d_n P_n ... P_1 K^d_0 |src>` by propagating the point source.
pub fn amplitude_chain(s: &CanonicalSetup, k: &StepKernel) -> Result<Amplitude, AmplitudeError> {
    check_setup_sites(s, k)?;
    if s.is_zero_step() {
        return Ok(Amplitude::ONE);
    }
    let source = WaveState::basis(s.src().site, s.src().time, uniform_weights(k.num_sites()))?;
    let steps = (s.dst().time - s.src().time) as u64;
    let out = evolve(&source, k, steps, s.filters())?;
    Ok(Amplitude(out.amplitude(s.dst().site)))
}

/// Brute-force sum over every hole tuple of the product of elementary
/// amplitudes `<x_{j+1}| K^{d_j} |x_j>`, with kernel powers formed by
/// repeated matrix multiplication.
pub fn amplitude_pathsum(s: &CanonicalSetup, k: &StepKernel) -> Result<Amplitude, AmplitudeError> {
    check_setup_sites(s, k)?;
    let paths = s.path_count();
    if paths > MAX_PATHS {
        return Err(AmplitudeError::PathExplosion { paths });
    }
    if s.is_zero_step() {
        return Ok(Amplitude::ONE);
    }

    let mut times = vec![s.src().time];
    times.extend(s.filters().iter().map(Filter::time));
    times.push(s.dst().time);
    let gaps: Vec<u64> = times.windows(2).map(|w| (w[1] - w[0]) as u64).collect();
    let mut powers: HashMap<u64, DMatrix<Complex64>> = HashMap::new();
    for &g in &gaps {
        powers.entry(g).or_insert_with(|| matrix_power(k.matrix(), g));
    }

    let filters = s.filters();
    let mut choice = vec![0usize; filters.len()];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut from = s.src().site;
        let mut product = Complex64::new(1.0, 0.0);
        for (j, g) in gaps.iter().enumerate() {
            let to = if j < filters.len() {
                filters[j].holes()[choice[j]]
            } else {
                s.dst().site
            };
            product *= powers[g][(to, from)];
            from = to;
        }
        total += product;

        // Odometer over hole tuples.
        let mut j = 0;
        loop {
            if j == filters.len() {
                return Ok(Amplitude(total));
            }
            choice[j] += 1;
            if choice[j] < filters[j].holes().len() {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
    }
}

fn matrix_power(k: &DMatrix<Complex64>, n: u64) -> DMatrix<Complex64> {
    let mut out = DMatrix::identity(k.nrows(), k.ncols());
    for _ in 0..n {
        out = k * out;
    }
    out
}

/// Evaluates an expression tree through the sum and product rules:
/// leaves by [`amplitude_chain`], AND as a product, OR as a sum.
///
/// The whole tree is canonicalized first so disallowed compositions are
/// rejected rather than silently evaluated.
pub fn amplitude_expr(e: &SetupExpr, k: &StepKernel) -> Result<Amplitude, AmplitudeError> {
    canonicalize(e)?;
    amplitude_rules(e, k)
}

fn amplitude_rules(e: &SetupExpr, k: &StepKernel) -> Result<Amplitude, AmplitudeError> {
    match &e.kind {
        ExprKind::Leaf { .. } => amplitude_chain(&canonicalize(e)?, k),
        ExprKind::And { later, earlier } => Ok(amplitude_rules(later, k)? * amplitude_rules(earlier, k)?),
        ExprKind::Or { left, right } => Ok(amplitude_rules(left, k)? + amplitude_rules(right, k)?),
    }
}

/// `|| i (Psi(t+dt) - Psi(t-dt)) / (2 dt) - H Psi(t) ||` with both
/// neighbours propagated by the exact kernel. Euclidean norm.
pub fn schrodinger_residual(state: &WaveState, h: &Hamiltonian, dt: f64) -> Result<f64, AmplitudeError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(LatticeError::BadTimeStep(dt).into());
    }
    if state.len() != h.num_sites() {
        return Err(AmplitudeError::DimensionMismatch {
            state: state.len(),
            kernel: h.num_sites(),
        });
    }
    let psi = nalgebra::DVector::from_column_slice(state.amplitudes());
    let forward = exp_i(h, -dt) * &psi;
    let backward = exp_i(h, dt) * &psi;
    let derivative = (forward - backward) * Complex64::new(0.0, 1.0 / (2.0 * dt));
    Ok((derivative - h.matrix() * psi).norm())
}

/// Two-hole filter preparation and its decomposition into point-sourced
/// states.
#[derive(Debug, Clone)]
pub struct Superposition {
    /// State at `t` behind the filter.
    pub state: WaveState,
    /// `<x'| K^(t0 - ti) |x_i>`.
    pub alpha: Complex64,
    /// `<x''| K^(t0 - ti) |x_i>`.
    pub beta: Complex64,
    /// State at `t` sourced at `(x', t0)`.
    pub psi_prime: WaveState,
    /// State at `t` sourced at `(x'', t0)`.
    pub psi_double_prime: WaveState,
}

impl Superposition {
    /// `alpha Psi' + beta Psi''`, evaluated independently of `state`.
    pub fn combination(&self) -> WaveState {
        self.psi_prime
            .scale(self.alpha)
            .add(&self.psi_double_prime.scale(self.beta))
            .expect("same lattice")
    }
}

/// State at `t` of a particle sourced at `src` and passed through a filter
/// with the given holes at `t0`. Uses unit weights.
pub fn prepare_through_filter(
    src: SpacetimePoint,
    holes: &[usize],
    t0: i64,
    t: i64,
    k: &StepKernel,
) -> Result<WaveState, AmplitudeError> {
    let filter = Filter::new(t0, holes.to_vec())?;
    let setup = CanonicalSetup::new(src, SpacetimePoint::new(src.site, t), vec![filter.clone()])?;
    check_setup_sites(&setup, k)?;
    let source = WaveState::basis(src.site, src.time, uniform_weights(k.num_sites()))?;
    evolve(&source, k, (t - src.time) as u64, &[filter])
}

/// Prepares the superposition behind a two-hole filter at `t0` and returns
/// it with `alpha`, `beta` and the two point-sourced states.
pub fn build_superposition(
    src: SpacetimePoint,
    holes: (usize, usize),
    t0: i64,
    t: i64,
    k: &StepKernel,
) -> Result<Superposition, AmplitudeError> {
    let (x1, x2) = holes;
    let state = prepare_through_filter(src, &[x1, x2], t0, t, k)?;
    let weights = uniform_weights(k.num_sites());
    let hole_amplitude = |x: usize| -> Result<Complex64, AmplitudeError> {
        let link = CanonicalSetup::elementary(src, SpacetimePoint::new(x, t0))?;
        Ok(amplitude_chain(&link, k)?.value())
    };
    let sourced_at = |x: usize| -> Result<WaveState, AmplitudeError> {
        evolve(&WaveState::basis(x, t0, weights.clone())?, k, (t - t0) as u64, &[])
    };
    Ok(Superposition {
        alpha: hole_amplitude(x1)?,
        beta: hole_amplitude(x2)?,
        psi_prime: sourced_at(x1)?,
        psi_double_prime: sourced_at(x2)?,
        state,
    })
}
