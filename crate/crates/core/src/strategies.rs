//! Code-selection policies consulted once per request arrival: a fixed
//! static code, a threshold-driven adaptive policy on the smoothed backlog,
//! and a greedy heuristic driven by the idle-thread count.

use serde::{Deserialize, Serialize};

use crate::analysis::{ClassSpec, CodeChoice};
use crate::error::{Error, Result};
use crate::solver::{threshold_band, ThresholdTable};

/// What the arriving request observes: the request-queue length (excluding
/// itself), the number of idle threads, and its class.
#[derive(Debug, Clone, Copy)]
pub struct ArrivalContext {
    pub queue_length: u64,
    pub idle_threads: u32,
    pub class_index: usize,
}

/// Mutable state of the backlog-adaptive policy: the exponentially smoothed
/// queue length and its memory factor. The newest sample is weighted by
/// `alpha`; `alpha = 1` tracks the instantaneous queue length exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacklogSmoother {
    qbar: f64,
    alpha: f64,
}

impl BacklogSmoother {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "memory factor alpha must be in (0, 1], got {alpha}"
            )));
        }
        Ok(Self { qbar: 0.0, alpha })
    }

    pub fn smoothed(&self) -> f64 {
        self.qbar
    }

    /// Fold in the queue length observed by a new arrival.
    pub fn observe(&mut self, queue_length: u64) -> f64 {
        self.qbar = self.alpha * queue_length as f64 + (1.0 - self.alpha) * self.qbar;
        self.qbar
    }
}

/// Backlog-adaptive choice: update the smoothed queue length, look up the
/// dimension and length bands, then clamp by the class redundancy cap and
/// restore n >= k.
pub fn tofec_choose(
    smoother: &mut BacklogSmoother,
    ctx: ArrivalContext,
    table: &ThresholdTable,
    cls: &ClassSpec,
) -> CodeChoice {
    let qbar = smoother.observe(ctx.queue_length);
    let k = threshold_band(&table.kappa, qbar).min(cls.k_max);
    let n = threshold_band(&table.zeta, qbar).min(cls.n_max);
    let n = n.min((cls.r_max * k as f64).floor() as u32);
    let n = n.max(k);
    CodeChoice::new(n, k).expect("band selection keeps n >= k >= 1")
}

/// Greedy choice from the idle-thread count l: chunk as much as the idle
/// threads allow, then spend any remaining idle threads on redundancy.
pub fn greedy_choose(ctx: ArrivalContext, cls: &ClassSpec) -> CodeChoice {
    let l = ctx.idle_threads;
    let (n, k) = if l == 0 {
        (1, 1)
    } else {
        let k = cls.k_max.min(l);
        let n = ((cls.r_max * k as f64).floor() as u32).min(l);
        (n.max(k), k)
    };
    CodeChoice::new(n, k).expect("greedy selection keeps n >= k >= 1")
}

/// Static policy: the configured code, unconditionally.
pub fn static_choose(fixed: CodeChoice) -> CodeChoice {
    fixed
}

/// Strategy selection as it appears in scenario configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Tofec,
    Greedy,
    Static,
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrategyKind::Tofec => write!(f, "tofec"),
            StrategyKind::Greedy => write!(f, "greedy"),
            StrategyKind::Static => write!(f, "static"),
        }
    }
}
