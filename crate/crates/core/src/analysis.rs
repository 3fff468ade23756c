//! Closed-form performance of static code choices: expected service delay,
//! expected system usage, and the M/M/1-style queueing approximation that
//! links normalized load to the expected request-queue length.

use serde::{Deserialize, Serialize};

use crate::delay_model::{ChunkSize, DelayParams};
use crate::error::{Error, Result};

/// Storage operation type. Each type carries its own delay coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpType {
    Read,
    Write,
}

impl std::fmt::Display for OpType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OpType::Read => write!(f, "read"),
            OpType::Write => write!(f, "write"),
        }
    }
}

impl std::str::FromStr for OpType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "read" => Ok(OpType::Read),
            "write" => Ok(OpType::Write),
            other => Err(Error::InvalidParameter(format!(
                "unknown op_type {other:?} (expected \"read\" or \"write\")"
            ))),
        }
    }
}

/// An (n, k) code: a request forks into n tasks and completes at the k-th
/// finished task. Always n >= k >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "(u32, u32)", into = "(u32, u32)")]
pub struct CodeChoice {
    n: u32,
    k: u32,
}

impl CodeChoice {
    pub fn new(n: u32, k: u32) -> Result<Self> {
        if k == 0 || n < k {
            return Err(Error::InvalidParameter(format!(
                "code (n={n}, k={k}) violates n >= k >= 1"
            )));
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Redundancy ratio r = n / k.
    pub fn redundancy(&self) -> f64 {
        self.n as f64 / self.k as f64
    }
}

impl TryFrom<(u32, u32)> for CodeChoice {
    type Error = Error;

    fn try_from((n, k): (u32, u32)) -> Result<Self> {
        CodeChoice::new(n, k)
    }
}

impl From<CodeChoice> for (u32, u32) {
    fn from(c: CodeChoice) -> Self {
        (c.n, c.k)
    }
}

impl std::fmt::Display for CodeChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.n, self.k)
    }
}

/// One request class: operation type and file size, its share of the traffic
/// mix, the adaptation limits, and the delay coefficients for its type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawClassSpec")]
pub struct ClassSpec {
    pub op_type: OpType,
    pub file_size_mb: f64,
    pub mix_fraction: f64,
    pub k_max: u32,
    pub n_max: u32,
    pub r_max: f64,
    pub params: DelayParams,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClassSpec {
    op_type: OpType,
    file_size_mb: f64,
    mix_fraction: f64,
    k_max: u32,
    n_max: u32,
    r_max: f64,
    params: DelayParams,
}

impl TryFrom<RawClassSpec> for ClassSpec {
    type Error = Error;

    fn try_from(raw: RawClassSpec) -> Result<Self> {
        ClassSpec::new(
            raw.op_type,
            raw.file_size_mb,
            raw.mix_fraction,
            raw.k_max,
            raw.n_max,
            raw.r_max,
            raw.params,
        )
    }
}

impl ClassSpec {
    pub fn new(
        op_type: OpType,
        file_size_mb: f64,
        mix_fraction: f64,
        k_max: u32,
        n_max: u32,
        r_max: f64,
        params: DelayParams,
    ) -> Result<Self> {
        if !(file_size_mb.is_finite() && file_size_mb > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "file_size_mb must be > 0, got {file_size_mb}"
            )));
        }
        if !(0.0..=1.0).contains(&mix_fraction) || !mix_fraction.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mix_fraction must be in [0, 1], got {mix_fraction}"
            )));
        }
        if k_max == 0 || n_max < k_max {
            return Err(Error::InvalidParameter(format!(
                "class limits need n_max >= k_max >= 1, got n_max={n_max}, k_max={k_max}"
            )));
        }
        if !(r_max.is_finite() && r_max >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "r_max must be >= 1, got {r_max}"
            )));
        }
        Ok(Self {
            op_type,
            file_size_mb,
            mix_fraction,
            k_max,
            n_max,
            r_max,
            params,
        })
    }

    /// Chunk size for this class when the file is split into k chunks.
    pub fn chunk_size(&self, k: u32) -> ChunkSize {
        ChunkSize::new(self.file_size_mb / k as f64).expect("positive file size / positive k")
    }
}

/// Offered load: total arrival rate and thread count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadPoint {
    pub lambda: f64,
    pub threads: u32,
}

impl LoadPoint {
    pub fn new(lambda: f64, threads: u32) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "arrival rate must be >= 0, got {lambda}"
            )));
        }
        if threads == 0 {
            return Err(Error::InvalidParameter("thread count must be >= 1".into()));
        }
        Ok(Self { lambda, threads })
    }
}

/// Expected service delay when all n tasks start together: the shift plus the
/// tail mean scaled by the partial harmonic sum `sum_{j=0}^{k-1} 1/(n-j)`.
pub fn expected_service_delay_exact(cls: &ClassSpec, code: CodeChoice) -> f64 {
    let chunk = cls.chunk_size(code.k());
    let harmonic: f64 = (0..code.k()).map(|j| 1.0 / (code.n() - j) as f64).sum();
    cls.params.shift(chunk) + cls.params.tail_mean(chunk) * harmonic
}

/// Log approximation of the service delay, `shift + tail_mean * ln(r/(r-1))`.
/// Undefined at r = 1 (n = k); callers needing that corner use the exact form.
pub fn expected_service_delay_approx(cls: &ClassSpec, code: CodeChoice) -> Result<f64> {
    if code.n() == code.k() {
        return Err(Error::ApproxUndefinedAtUnitRedundancy);
    }
    let chunk = cls.chunk_size(code.k());
    let r = code.redundancy();
    Ok(cls.params.shift(chunk) + cls.params.tail_mean(chunk) * (r / (r - 1.0)).ln())
}

/// Expected thread-seconds one request consumes: `n * shift + k * tail_mean`,
/// counting preempted partial service.
pub fn expected_usage(cls: &ClassSpec, code: CodeChoice) -> f64 {
    let chunk = cls.chunk_size(code.k());
    code.n() as f64 * cls.params.shift(chunk) + code.k() as f64 * cls.params.tail_mean(chunk)
}

/// Normalized load: arrival rate times the mix-weighted mean usage, in
/// thread-seconds of demand per second. Stability requires this below the
/// thread count.
pub fn normalized_load(load: LoadPoint, assignments: &[(&ClassSpec, CodeChoice)]) -> f64 {
    let mean_usage: f64 = assignments
        .iter()
        .map(|(cls, code)| cls.mix_fraction * expected_usage(cls, *code))
        .sum();
    load.lambda * mean_usage
}

/// Expected request-queue length `rho^2 / (L (L - rho))` for normalized load
/// rho and L threads. The companion queueing delay is this divided by lambda.
pub fn expected_queue_length(rho: f64, threads: u32) -> Result<f64> {
    let l = threads as f64;
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalized load must be >= 0, got {rho}"
        )));
    }
    if rho >= l {
        return Err(Error::UnstableLoad { rho, threads });
    }
    Ok(rho * rho / (l * (l - rho)))
}

/// Exact inverse of [`expected_queue_length`]:
/// `rho = L (sqrt(Q^2 + 4Q) - Q) / 2`.
pub fn load_from_queue_length(q: f64, threads: u32) -> f64 {
    debug_assert!(q >= 0.0);
    let l = threads as f64;
    l * ((q * q + 4.0 * q).sqrt() - q) / 2.0
}
