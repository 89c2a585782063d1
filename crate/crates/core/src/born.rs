//! Detection probabilities.
//!
//! Covers the weighted Born probabilities, the null-detection rule for
//! blocked nodes, and the `N`-replica fraction filter whose Hilbert distance
//! from the unfiltered ensemble state is computed both in closed form (a
//! binomial tail) and by materializing the tensor-product state.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::amplitude::{evolve, AmplitudeError};
use crate::format::sig17;
use crate::hilbert::{apply_filter, Projector};
use crate::lattice::StepKernel;
use crate::state::WaveState;

/// Largest tensor-product dimension `M^N` the brute-force oracle builds.
pub const MAX_ENSEMBLE_DIM: u64 = 200_000;

/// Largest replica count the closed form accepts (memory for the pmf).
pub const MAX_REPLICAS: u64 = 50_000_000;

/// Inputs whose squared norm is within this of one count as normalized.
pub const NORMALIZED_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BornError {
    #[error("state has zero norm")]
    ZeroState,
    #[error("invalid fraction filter: {0}")]
    InvalidSpec(String),
    #[error("site {site} is outside a lattice of {num_sites} sites")]
    SiteOutOfRange { site: usize, num_sites: usize },
    #[error("ensemble dimension {num_sites}^{replicas} exceeds {MAX_ENSEMBLE_DIM}")]
    EnsembleTooLarge { num_sites: usize, replicas: u64 },
    #[error("replica counts must be strictly ascending ({prev} then {next})")]
    NotAscending { prev: u64, next: u64 },
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
}

/// The `N`-replica projector keeping components whose fraction of replicas
/// at `site` lies in `[f - eps, f + eps]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionFilterSpec {
    site: usize,
    fraction: f64,
    half_width: f64,
    replicas: u64,
}

impl FractionFilterSpec {
    pub fn new(site: usize, fraction: f64, half_width: f64, replicas: u64) -> Result<Self, BornError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(BornError::InvalidSpec(format!("fraction {fraction} is not in [0, 1]")));
        }
        if !(half_width > 0.0) || half_width.is_nan() {
            return Err(BornError::InvalidSpec(format!("half-width {half_width} must be positive")));
        }
        if replicas == 0 || replicas > MAX_REPLICAS {
            return Err(BornError::InvalidSpec(format!(
                "replica count {replicas} must be in [1, {MAX_REPLICAS}]"
            )));
        }
        Ok(Self {
            site,
            fraction,
            half_width,
            replicas,
        })
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn replicas(&self) -> u64 {
        self.replicas
    }

    /// Inclusive window test `|n/N - f| <= eps`.
    pub fn keeps(&self, count: u64) -> bool {
        in_window(count, self.replicas, self.fraction, self.half_width)
    }
}

/// `|n/N - f| <= eps`, inclusive at both ends.
pub fn in_window(count: u64, replicas: u64, fraction: f64, half_width: f64) -> bool {
    (count as f64 / replicas as f64 - fraction).abs() <= half_width
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityReport {
    /// `Pr(i) = w_i |A_i|^2 / <Psi|Psi>`.
    pub probabilities: Vec<f64>,
    /// `Pr(i) / w_i`, computed first so `density * weight` reproduces the
    /// probability exactly.
    pub densities: Vec<f64>,
    pub weights: Vec<f64>,
    pub total: f64,
    /// Whether the input already had unit weighted norm.
    pub normalized_input: bool,
    pub input_norm_sqr: f64,
}

impl ProbabilityReport {
    pub fn region(&self, sites: impl IntoIterator<Item = usize>) -> f64 {
        sites.into_iter().map(|i| self.probabilities[i]).sum()
    }

    /// `site,probability,density,weight` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("site,probability,density,weight\n");
        for (i, ((p, d), w)) in self
            .probabilities
            .iter()
            .zip(&self.densities)
            .zip(&self.weights)
            .enumerate()
        {
            let _ = writeln!(out, "{i},{},{},{}", sig17(*p), sig17(*d), sig17(*w));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "probabilities": self.probabilities,
            "densities": self.densities,
            "weights": self.weights,
            "total": self.total,
            "normalized_input": self.normalized_input,
            "input_norm_sqr": self.input_norm_sqr,
        })
    }
}

/// Weighted Born probabilities; unnormalized input is normalized and flagged.
pub fn born(state: &WaveState) -> Result<ProbabilityReport, BornError> {
    let norm = state.norm_sqr();
    if norm == 0.0 {
        return Err(BornError::ZeroState);
    }
    let densities: Vec<f64> = state.amplitudes().iter().map(|a| a.norm_sqr() / norm).collect();
    let probabilities: Vec<f64> = densities.iter().zip(state.weights().iter()).map(|(d, w)| d * w).collect();
    Ok(ProbabilityReport {
        total: probabilities.iter().sum(),
        probabilities,
        densities,
        weights: state.weights().to_vec(),
        normalized_input: (norm - 1.0).abs() <= NORMALIZED_TOL,
        input_norm_sqr: norm,
    })
}

fn site_probability(state: &WaveState, site: usize) -> Result<f64, BornError> {
    if site >= state.len() {
        return Err(BornError::SiteOutOfRange {
            site,
            num_sites: state.len(),
        });
    }
    Ok(born(state)?.probabilities[site])
}

/// Distribution of the number of replicas found at one site.
#[derive(Debug, Clone)]
pub struct BinomialEnsemble {
    replicas: u64,
    p: f64,
    pmf: Vec<f64>,
}

/// Below this replica count the pmf uses exact integer coefficients.
const DIRECT_PMF_LIMIT: u64 = 60;

impl BinomialEnsemble {
    pub fn new(replicas: u64, p: f64) -> Self {
        let n = replicas as usize;
        let mut pmf = vec![0.0; n + 1];
        if p <= 0.0 {
            pmf[0] = 1.0;
        } else if p >= 1.0 {
            pmf[n] = 1.0;
        } else if replicas <= DIRECT_PMF_LIMIT {
            let q = 1.0 - p;
            let mut coeff: u128 = 1;
            for (k, slot) in pmf.iter_mut().enumerate() {
                if k > 0 {
                    coeff = coeff * (n - k + 1) as u128 / k as u128;
                }
                *slot = coeff as f64 * p.powi(k as i32) * q.powi((n - k) as i32);
            }
        } else {
            // Ratio recurrence outward from the mode, then normalize.
            let odds = p / (1.0 - p);
            let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
            pmf[mode] = 1.0;
            for k in mode..n {
                pmf[k + 1] = pmf[k] * ((n - k) as f64 / (k + 1) as f64) * odds;
            }
            for k in (0..mode).rev() {
                pmf[k] = pmf[k + 1] * ((k + 1) as f64 / (n - k) as f64) / odds;
            }
            let total: f64 = pmf.iter().sum();
            pmf.iter_mut().for_each(|m| *m /= total);
        }
        Self { replicas, p, pmf }
    }

    pub fn replicas(&self) -> u64 {
        self.replicas
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// `||P Psi_N - Psi_N||^2`: the binomial mass outside the window, i.e.
    /// `1 - sum_{n in window} C(N,n) p^n (1-p)^(N-n)` summed directly.
    pub fn distance_sq(&self, fraction: f64, half_width: f64) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .filter(|(n, _)| !in_window(*n as u64, self.replicas, fraction, half_width))
            .map(|(_, m)| m)
            .sum()
    }

    /// Binomial mass inside the window.
    pub fn retained(&self, fraction: f64, half_width: f64) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .filter(|(n, _)| in_window(*n as u64, self.replicas, fraction, half_width))
            .map(|(_, m)| m)
            .sum()
    }
}

/// Squared relative Hilbert distance between the filtered and unfiltered
/// `N`-replica product state, with `p` the weighted Born probability of the
/// filter's site.
pub fn ensemble_distance_exact(state: &WaveState, spec: &FractionFilterSpec) -> Result<f64, BornError> {
    let p = site_probability(state, spec.site)?;
    Ok(BinomialEnsemble::new(spec.replicas, p).distance_sq(spec.fraction, spec.half_width))
}

/// Same quantity computed by building the `M^N` tensor-product state,
/// applying the fraction projector component by component and measuring
/// the weighted distance directly.
pub fn ensemble_distance_oracle(state: &WaveState, spec: &FractionFilterSpec) -> Result<f64, BornError> {
    let m = state.len();
    if spec.site >= m {
        return Err(BornError::SiteOutOfRange {
            site: spec.site,
            num_sites: m,
        });
    }
    let too_large = BornError::EnsembleTooLarge {
        num_sites: m,
        replicas: spec.replicas,
    };
    let dim = u32::try_from(spec.replicas)
        .ok()
        .and_then(|n| (m as u64).checked_pow(n))
        .filter(|&d| d <= MAX_ENSEMBLE_DIM)
        .ok_or(too_large)?;
    let norm = state.norm_sqr();
    if norm == 0.0 {
        return Err(BornError::ZeroState);
    }
    let scale = 1.0 / norm.sqrt();
    let single: Vec<Complex64> = state.amplitudes().iter().map(|a| a * scale).collect();
    let weights = state.weights();

    let dim = dim as usize;
    let mut amps = Vec::with_capacity(dim);
    let mut metric = Vec::with_capacity(dim);
    let mut counts = Vec::with_capacity(dim);
    amps.push(Complex64::new(1.0, 0.0));
    metric.push(1.0f64);
    counts.push(0u64);
    for _ in 0..spec.replicas {
        let (prev_amps, prev_metric, prev_counts) = (
            std::mem::take(&mut amps),
            std::mem::take(&mut metric),
            std::mem::take(&mut counts),
        );
        for ((a, w), c) in prev_amps.iter().zip(&prev_metric).zip(&prev_counts) {
            for i in 0..m {
                amps.push(a * single[i]);
                metric.push(w * weights[i]);
                counts.push(c + u64::from(i == spec.site));
            }
        }
    }

    let mut diff_sq = Compensated::default();
    let mut total = Compensated::default();
    for ((a, w), c) in amps.iter().zip(&metric).zip(&counts) {
        let filtered = if spec.keeps(*c) { *a } else { Complex64::new(0.0, 0.0) };
        diff_sq.add(w * (filtered - a).norm_sqr());
        total.add(w * a.norm_sqr());
    }
    Ok(diff_sq.value() / total.value())
}

/// Neumaier summation; the tensor sums run over up to `MAX_ENSEMBLE_DIM`
/// terms, where plain accumulation drifts past 1e-12.
#[derive(Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub const ENVELOPE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub replicas: u64,
    pub distance_sq: f64,
    /// `2 exp(-2N (eps - |f - p|)^2)` capped at one when `|f - p| < eps`,
    /// otherwise one.
    pub hoeffding_bound: f64,
    /// `1 - 2 exp(-2N (|f - p| - eps)^2)` floored at zero when
    /// `|f - p| > eps`, otherwise zero.
    pub lower_bound: f64,
}

impl SweepRow {
    /// Both bounds hold, allowing `ENVELOPE_SLACK` for rounding in the tail sums.
    pub fn within_envelope(&self) -> bool {
        self.lower_bound - ENVELOPE_SLACK <= self.distance_sq && self.distance_sq <= self.hoeffding_bound + ENVELOPE_SLACK
    }
}

/// Exact distances for each replica count, with the concentration envelope.
pub fn convergence_sweep(
    state: &WaveState,
    site: usize,
    fraction: f64,
    half_width: f64,
    replica_counts: &[u64],
) -> Result<Vec<SweepRow>, BornError> {
    if let Some(w) = replica_counts.windows(2).find(|w| w[0] >= w[1]) {
        return Err(BornError::NotAscending { prev: w[0], next: w[1] });
    }
    let p = site_probability(state, site)?;
    replica_counts
        .iter()
        .map(|&n| {
            let spec = FractionFilterSpec::new(site, fraction, half_width, n)?;
            let distance_sq = BinomialEnsemble::new(n, p).distance_sq(spec.fraction, spec.half_width);
            let margin = half_width - (fraction - p).abs();
            let tail = 2.0 * (-2.0 * n as f64 * margin * margin).exp();
            let (hoeffding_bound, lower_bound) = if margin > 0.0 {
                (tail.min(1.0), 0.0)
            } else if margin < 0.0 {
                (1.0, (1.0 - tail).max(0.0))
            } else {
                (1.0, 0.0)
            };
            Ok(SweepRow {
                replicas: n,
                distance_sq,
                hoeffding_bound,
                lower_bound,
            })
        })
        .collect()
}

/// `N,distance_sq,hoeffding_bound` with 17 significant digits.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("N,distance_sq,hoeffding_bound\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.replicas, sig17(r.distance_sq), sig17(r.hoeffding_bound));
    }
    out
}

/// Grid point `f = j * step` whose window of half-width `step / 2` retains
/// the most ensemble weight; ties go to the smaller `f`.
pub fn born_argmax(state: &WaveState, site: usize, replicas: u64, grid_step: f64) -> Result<f64, BornError> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(BornError::InvalidSpec(format!("grid step {grid_step} must be in (0, 1]")));
    }
    FractionFilterSpec::new(site, 0.0, grid_step / 2.0, replicas)?;
    let p = site_probability(state, site)?;
    let ensemble = BinomialEnsemble::new(replicas, p);
    let points = (1.0 / grid_step).round() as u64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for j in 0..=points {
        let f = (j as f64 * grid_step).min(1.0);
        let kept = ensemble.retained(f, grid_step / 2.0);
        if kept > best.1 {
            best = (f, kept);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NullCheckMode {
    /// Both evolutions must agree component for component.
    Exact,
    /// The weighted norm of their difference must not exceed the tolerance.
    Tolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullDetection {
    /// Blocking the site had no effect on the subsequent evolution.
    pub holds: bool,
    /// Weighted norm of the difference between the two evolved states.
    pub deviation: f64,
    /// `|Psi(site)|` before blocking.
    pub node_modulus: f64,
}

/// Places an obstacle at `site` and compares the evolution of the blocked
/// and unblocked states over `steps` kernel applications.
pub fn null_detection_check(
    state: &WaveState,
    site: usize,
    k: &StepKernel,
    steps: u64,
    mode: NullCheckMode,
) -> Result<NullDetection, BornError> {
    if site >= state.len() {
        return Err(BornError::SiteOutOfRange {
            site,
            num_sites: state.len(),
        });
    }
    let blocked = apply_filter(&Projector::obstacle(site, state.len()), state);
    let free = evolve(state, k, steps, &[])?;
    let obstructed = evolve(&blocked, k, steps, &[])?;
    let deviation = free
        .amplitudes()
        .iter()
        .zip(obstructed.amplitudes())
        .zip(state.weights().iter())
        .map(|((a, b), w)| w * (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let holds = match mode {
        NullCheckMode::Exact => free.amplitudes() == obstructed.amplitudes(),
        NullCheckMode::Tolerance(tol) => deviation <= tol,
    };
    Ok(NullDetection {
        holds,
        deviation,
        node_modulus: state.amplitude(site).norm(),
    })
}

/// Splits cell `cell` into two cells of half its weight carrying the same
/// density (amplitude). Sites after `cell` shift up by one.
pub fn refine_cell(state: &WaveState, cell: usize) -> Result<WaveState, BornError> {
    if cell >= state.len() {
        return Err(BornError::SiteOutOfRange {
            site: cell,
            num_sites: state.len(),
        });
    }
    let mut amps = state.amplitudes().to_vec();
    amps.insert(cell + 1, amps[cell]);
    let mut weights = state.weights().to_vec();
    weights[cell] /= 2.0;
    weights.insert(cell + 1, weights[cell]);
    let weights: Arc<[f64]> = weights.into();
    WaveState::new(state.time(), amps, weights).map_err(|e| BornError::InvalidSpec(e.to_string()))
}
