//! JSON descriptions of wavefunctions.
//!
//! Three shapes are accepted:
//!
//! ```text
//! [[re, im], ...]                                   amplitudes at time 0
//! {"amplitudes": [[re, im], ...], "time": t}        amplitudes at time t
//! {"source": [site, time], "time": t,
//!  "filters": [{"time": s, "holes": [..]}, ...]}    a basis state evolved to t
//! ```

use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

use crate::amplitude::{evolve, AmplitudeError};
use crate::lattice::{LatticeConfig, StepKernel};
use crate::setup::{Filter, SetupError, SpacetimePoint};
use crate::state::{StateError, WaveState};

#[derive(Debug, Error)]
pub enum StateSpecError {
    #[error("invalid state JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid state: {0}")]
    Invalid(String),
    #[error("state has {found} amplitudes but the lattice has {expected} sites")]
    LengthMismatch { expected: usize, found: usize },
    #[error("source site {site} is outside a lattice of {num_sites} sites")]
    SiteOutOfRange { site: usize, num_sites: usize },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Amplitudes {
        time: i64,
        amplitudes: Vec<Complex64>,
    },
    Prepared {
        source: SpacetimePoint,
        time: i64,
        filters: Vec<Filter>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Raw {
    Bare(Vec<[f64; 2]>),
    Amplitudes(RawAmplitudes),
    Prepared(RawPrepared),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAmplitudes {
    amplitudes: Vec<[f64; 2]>,
    #[serde(default)]
    time: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrepared {
    source: (usize, i64),
    time: i64,
    #[serde(default)]
    filters: Vec<RawFilter>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    time: i64,
    holes: Vec<usize>,
}

fn complexes(pairs: Vec<[f64; 2]>) -> Result<Vec<Complex64>, StateSpecError> {
    if pairs.is_empty() {
        return Err(StateSpecError::Invalid("no amplitudes".into()));
    }
    Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
}

impl StateSpec {
    pub fn from_json(text: &str) -> Result<Self, StateSpecError> {
        Ok(match serde_json::from_str::<Raw>(text)? {
            Raw::Bare(pairs) => StateSpec::Amplitudes {
                time: 0,
                amplitudes: complexes(pairs)?,
            },
            Raw::Amplitudes(raw) => StateSpec::Amplitudes {
                time: raw.time,
                amplitudes: complexes(raw.amplitudes)?,
            },
            Raw::Prepared(raw) => {
                let source = SpacetimePoint::new(raw.source.0, raw.source.1);
                if raw.time < source.time || raw.time.checked_sub(source.time).is_none() {
                    return Err(StateSpecError::Invalid(format!(
                        "target time {} precedes source time {}",
                        raw.time, source.time
                    )));
                }
                let filters = raw
                    .filters
                    .into_iter()
                    .map(|f| {
                        if f.time < source.time || f.time > raw.time {
                            return Err(StateSpecError::Invalid(format!(
                                "filter time {} is outside [{}, {}]",
                                f.time, source.time, raw.time
                            )));
                        }
                        Filter::new(f.time, f.holes).map_err(|e| match e {
                            SetupError::InvalidSetup { reason, .. } => StateSpecError::Invalid(reason),
                            other => StateSpecError::Invalid(other.to_string()),
                        })
                    })
                    .collect::<Result<_, _>>()?;
                StateSpec::Prepared {
                    source,
                    time: raw.time,
                    filters,
                }
            }
        })
    }

    /// Whether [`realize`](Self::realize) needs a kernel.
    pub fn needs_kernel(&self) -> bool {
        matches!(self, StateSpec::Prepared { .. })
    }

    /// Builds the state on `cfg`, evolving with `k` when the spec is prepared
    /// from a source point.
    pub fn realize(&self, cfg: &LatticeConfig, k: Option<&StepKernel>) -> Result<WaveState, StateSpecError> {
        match self {
            StateSpec::Amplitudes { time, amplitudes } => {
                if amplitudes.len() != cfg.num_sites() {
                    return Err(StateSpecError::LengthMismatch {
                        expected: cfg.num_sites(),
                        found: amplitudes.len(),
                    });
                }
                Ok(WaveState::new(*time, amplitudes.clone(), cfg.weights().clone())?)
            }
            StateSpec::Prepared { source, time, filters } => {
                let num_sites = cfg.num_sites();
                if source.site >= num_sites {
                    return Err(StateSpecError::SiteOutOfRange {
                        site: source.site,
                        num_sites,
                    });
                }
                let k = k.ok_or_else(|| StateSpecError::Invalid("a prepared state needs a time step".into()))?;
                let start = WaveState::basis(source.site, source.time, cfg.weights().clone())?;
                let steps = time.abs_diff(source.time);
                Ok(evolve(&start, k, steps, filters)?)
            }
        }
    }
}
