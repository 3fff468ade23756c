//! Parametric task-delay model: a deterministic shift plus an exponential
//! tail, both affine in the chunk size.
//!
//! A task reading or writing a chunk of `B` MB takes
//! `shift(B) + Exp(tail_mean(B))` seconds, where
//! `shift(B) = fixed_shift + shift_slope * B` and
//! `tail_mean(B) = fixed_tail + tail_slope * B`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Chunk size in megabytes. Always strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkSize(f64);

impl ChunkSize {
    pub fn new(megabytes: f64) -> Result<Self> {
        if !(megabytes.is_finite() && megabytes > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "chunk size must be a positive number of MB, got {megabytes}"
            )));
        }
        Ok(Self(megabytes))
    }

    pub fn megabytes(self) -> f64 {
        self.0
    }
}

/// The four coefficients of the shifted-exponential task-delay model for one
/// request type. Constructed only through [`DelayParams::new`], which rejects
/// negative coefficients and the all-zero degenerate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDelayParams", into = "RawDelayParams")]
pub struct DelayParams {
    fixed_shift_s: f64,
    shift_slope_s_per_mb: f64,
    fixed_tail_s: f64,
    tail_slope_s_per_mb: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelayParams {
    fixed_shift_s: f64,
    shift_slope_s_per_mb: f64,
    fixed_tail_s: f64,
    tail_slope_s_per_mb: f64,
}

impl TryFrom<RawDelayParams> for DelayParams {
    type Error = Error;

    fn try_from(raw: RawDelayParams) -> Result<Self> {
        DelayParams::new(
            raw.fixed_shift_s,
            raw.shift_slope_s_per_mb,
            raw.fixed_tail_s,
            raw.tail_slope_s_per_mb,
        )
    }
}

impl From<DelayParams> for RawDelayParams {
    fn from(p: DelayParams) -> Self {
        RawDelayParams {
            fixed_shift_s: p.fixed_shift_s,
            shift_slope_s_per_mb: p.shift_slope_s_per_mb,
            fixed_tail_s: p.fixed_tail_s,
            tail_slope_s_per_mb: p.tail_slope_s_per_mb,
        }
    }
}

impl DelayParams {
    pub fn new(
        fixed_shift_s: f64,
        shift_slope_s_per_mb: f64,
        fixed_tail_s: f64,
        tail_slope_s_per_mb: f64,
    ) -> Result<Self> {
        let coeffs = [
            ("fixed_shift_s", fixed_shift_s),
            ("shift_slope_s_per_mb", shift_slope_s_per_mb),
            ("fixed_tail_s", fixed_tail_s),
            ("tail_slope_s_per_mb", tail_slope_s_per_mb),
        ];
        for (name, v) in coeffs {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "delay coefficient {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if fixed_shift_s + fixed_tail_s <= 0.0 {
            return Err(Error::InvalidParameter(
                "zero-delay model rejected: fixed_shift_s + fixed_tail_s must be > 0".into(),
            ));
        }
        Ok(Self {
            fixed_shift_s,
            shift_slope_s_per_mb,
            fixed_tail_s,
            tail_slope_s_per_mb,
        })
    }

    pub fn fixed_shift_s(&self) -> f64 {
        self.fixed_shift_s
    }

    pub fn shift_slope_s_per_mb(&self) -> f64 {
        self.shift_slope_s_per_mb
    }

    pub fn fixed_tail_s(&self) -> f64 {
        self.fixed_tail_s
    }

    pub fn tail_slope_s_per_mb(&self) -> f64 {
        self.tail_slope_s_per_mb
    }

    /// Deterministic lower bound of the task delay for the given chunk size.
    pub fn shift(&self, chunk: ChunkSize) -> f64 {
        self.fixed_shift_s + self.shift_slope_s_per_mb * chunk.megabytes()
    }

    /// Mean (and standard deviation) of the exponential tail.
    pub fn tail_mean(&self, chunk: ChunkSize) -> f64 {
        self.fixed_tail_s + self.tail_slope_s_per_mb * chunk.megabytes()
    }

    /// One i.i.d. task-delay sample; consumes exactly one uniform draw.
    pub fn sample_task_delay(&self, chunk: ChunkSize, rng: &mut RandomStream) -> f64 {
        self.shift(chunk) + rng.exponential(self.tail_mean(chunk))
    }
}
