//! Numerical solution of the optimality conditions for static code choices,
//! and construction of the queue-length threshold tables that drive the
//! adaptive strategy.
//!
//! The optimality system couples two equations. The first ties the relaxed
//! (real-valued) code dimension k to the redundancy ratio r independently of
//! load; the second ties the pair to the normalized load, and therefore to
//! the expected queue length Q. Both sides are monotone, so every root is
//! found by bracketed bisection.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::analysis::{load_from_queue_length, ClassSpec};
use crate::error::{Error, Result};

const MAX_BISECT_ITERS: usize = 200;
const R_BRACKET_CAP: f64 = 1e6;
const K_BRACKET_CAP: f64 = 1e3;
const K_BRACKET_FLOOR: f64 = 1e-9;
const Q_BRACKET_LO: f64 = 1e-9;
const Q_BRACKET_HI: f64 = 1e9;

/// Bisect `f` on [lo, hi] assuming `f(lo) <= 0 <= f(hi)` or the reverse.
/// Runs to floating-point fixed point, capped at 200 iterations.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    for _ in 0..MAX_BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-13 * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Left-hand side of the code-optimality equation at dimension k:
/// `k (e k + es J) / (d k + ds J)`. Strictly increasing in k.
pub fn opt_code_lhs(cls: &ClassSpec, k: f64) -> f64 {
    let p = &cls.params;
    let j = cls.file_size_mb;
    k * (p.fixed_tail_s() * k + p.tail_slope_s_per_mb() * j)
        / (p.fixed_shift_s() * k + p.shift_slope_s_per_mb() * j)
}

/// Right-hand side at redundancy ratio r:
/// `J r (r-1) / (d r + e) * (ds + es ln(r/(r-1)))`. Strictly increasing in r
/// for r > 1.
pub fn opt_code_rhs(cls: &ClassSpec, r: f64) -> f64 {
    let p = &cls.params;
    let j = cls.file_size_mb;
    j * r * (r - 1.0) / (p.fixed_shift_s() * r + p.fixed_tail_s())
        * (p.shift_slope_s_per_mb() + p.tail_slope_s_per_mb() * (r / (r - 1.0)).ln())
}

/// The unique r > 1 pairing with dimension k on the optimal-code curve.
pub fn solve_r_given_k(cls: &ClassSpec, k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "code dimension must be > 0, got {k}"
        )));
    }
    let p = &cls.params;
    if p.shift_slope_s_per_mb() <= 0.0 && p.tail_slope_s_per_mb() <= 0.0 {
        return Err(Error::InvalidParameter(
            "optimal-code curve needs a positive shift or tail slope".into(),
        ));
    }
    let target = opt_code_lhs(cls, k);
    let lo = 1.0 + 1e-9;
    if opt_code_rhs(cls, lo) >= target {
        return Ok(lo);
    }
    let mut hi = 2.0;
    while opt_code_rhs(cls, hi) < target {
        hi *= 2.0;
        if hi > R_BRACKET_CAP {
            return Err(Error::NoRoot);
        }
    }
    Ok(bisect(lo, hi, |r| opt_code_rhs(cls, r) - target))
}

/// Per-class load-matching function, with the `2 L` factor removed so the
/// value depends only on the class. Strictly decreasing in k.
pub fn pi(cls: &ClassSpec, k: f64) -> Result<f64> {
    let r = solve_r_given_k(cls, k)?;
    let p = &cls.params;
    let j = cls.file_size_mb;
    Ok((p.fixed_tail_s() * k + p.tail_slope_s_per_mb() * j)
        / (k * r * (r - 1.0) * (p.fixed_shift_s() * k + p.shift_slope_s_per_mb() * j)))
}

/// Relaxed optimal code for one class at expected queue length q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxedCode {
    pub k: f64,
    pub r: f64,
    pub n: f64,
}

/// Solve the load-matching condition at queue length q with L threads,
/// returning the relaxed (k, r, n = k r). All three are strictly decreasing
/// functions of q.
pub fn optimal_code_for_q(cls: &ClassSpec, q: f64, threads: u32) -> Result<RelaxedCode> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::QueueBelowSolvableRange(q));
    }
    let l = threads as f64;
    let rho = load_from_queue_length(q, threads);
    let ratio = l / (l - rho);
    let target = (ratio * ratio - 1.0) / (2.0 * l);

    // pi is strictly decreasing: expand the bracket until it straddles target.
    let mut lo = 1e-3;
    let mut hi = 1.0;
    while pi(cls, hi)? > target {
        hi *= 2.0;
        if hi > K_BRACKET_CAP {
            return Err(Error::QueueBelowSolvableRange(q));
        }
    }
    while pi(cls, lo)? < target {
        lo *= 0.5;
        if lo < K_BRACKET_FLOOR {
            return Err(Error::QueueAboveSolvableRange(q));
        }
    }
    let k = bisect(lo, hi, |k| {
        // inside the bracket both nested solves succeed
        target - pi(cls, k).expect("pi defined inside bracket")
    });
    let r = solve_r_given_k(cls, k)?;
    Ok(RelaxedCode { k, r, n: k * r })
}

/// Queue-length thresholds for one class: crossing a threshold from below
/// steps the code length (zeta) or dimension (kappa) down by one.
///
/// `zeta[0]` is the (infinite) upper bound for index 1 and the final entry is
/// 0, so the bands cover all of [0, inf). `q_n[i]` / `q_k[i]` are the queue
/// lengths at which the relaxed optimum equals i+1 exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    pub zeta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub q_n: Vec<f64>,
    pub q_k: Vec<f64>,
    pub threads: u32,
    /// Set when some target index had no solution in the search range and the
    /// table stops early.
    pub n_truncated: bool,
    pub k_truncated: bool,
}

impl ThresholdTable {
    /// Largest code length the table can select.
    pub fn n_limit(&self) -> u32 {
        (self.zeta.len() - 1) as u32
    }

    /// Largest code dimension the table can select.
    pub fn k_limit(&self) -> u32 {
        (self.kappa.len() - 1) as u32
    }
}

/// Pick the band index for a smoothed queue length: the unique j >= 1 with
/// `thresholds[j] <= qbar < thresholds[j-1]` (`thresholds[0]` = inf).
pub fn threshold_band(thresholds: &[f64], qbar: f64) -> u32 {
    debug_assert!(thresholds.len() >= 2);
    for (j, &bound) in thresholds.iter().enumerate().skip(1) {
        if qbar >= bound {
            return j as u32;
        }
    }
    (thresholds.len() - 1) as u32
}

/// Queue length at which the relaxed optimum for `select` (a projection of
/// the relaxed code) equals `level`. The projection is strictly decreasing in
/// q, so bisection applies; `None` means no solution in the search range.
fn anchor_for_level(
    cls: &ClassSpec,
    threads: u32,
    level: f64,
    select: impl Fn(&RelaxedCode) -> f64,
) -> Result<Option<f64>> {
    let eval = |q: f64| -> Result<f64> {
        match optimal_code_for_q(cls, q, threads) {
            Ok(code) => Ok(select(&code)),
            // below the solvable range the relaxed code is effectively huge,
            // above it effectively zero
            Err(Error::QueueBelowSolvableRange(_)) => Ok(f64::INFINITY),
            Err(Error::QueueAboveSolvableRange(_)) => Ok(0.0),
            Err(e) => Err(e),
        }
    };
    let at_lo = eval(Q_BRACKET_LO)?;
    let at_hi = eval(Q_BRACKET_HI)?;
    if at_lo < level || at_hi > level {
        return Ok(None);
    }
    let q = bisect(Q_BRACKET_LO, Q_BRACKET_HI, |q| {
        level - eval(q).expect("solvable inside bracket")
    });
    Ok(Some(q))
}

/// Midpoint thresholds from a strictly decreasing anchor sequence.
fn midpoint_thresholds(anchors: &[f64]) -> Vec<f64> {
    let mut t = Vec::with_capacity(anchors.len() + 1);
    t.push(f64::INFINITY);
    for w in anchors.windows(2) {
        t.push(0.5 * (w[0] + w[1]));
    }
    t.push(0.0);
    t
}

/// Build the threshold table for one class with L threads. Anchors are found
/// for every integer level up to the class limits; if a level has no solution
/// in the search range the table truncates there.
pub fn build_thresholds(cls: &ClassSpec, threads: u32) -> Result<ThresholdTable> {
    if threads == 0 {
        return Err(Error::InvalidParameter("thread count must be >= 1".into()));
    }
    let mut q_n = Vec::new();
    let mut n_truncated = false;
    for n in 1..=cls.n_max {
        match anchor_for_level(cls, threads, n as f64, |c| c.n)? {
            Some(q) => q_n.push(q),
            None => {
                n_truncated = true;
                log::warn!(
                    "threshold table for {} {} MB truncated at n={} (no anchor in range)",
                    cls.op_type,
                    cls.file_size_mb,
                    n
                );
                break;
            }
        }
    }
    let mut q_k = Vec::new();
    let mut k_truncated = false;
    for k in 1..=cls.k_max {
        match anchor_for_level(cls, threads, k as f64, |c| c.k)? {
            Some(q) => q_k.push(q),
            None => {
                k_truncated = true;
                log::warn!(
                    "threshold table for {} {} MB truncated at k={} (no anchor in range)",
                    cls.op_type,
                    cls.file_size_mb,
                    k
                );
                break;
            }
        }
    }
    if q_n.is_empty() || q_k.is_empty() {
        return Err(Error::Numeric(
            "no threshold anchors solvable in the search range".into(),
        ));
    }
    for (name, anchors) in [("n", &q_n), ("k", &q_k)] {
        for w in anchors.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::Numeric(format!(
                    "{name}-anchors are not strictly decreasing ({} then {}); \
                     parameter set violates the expected monotonicity",
                    w[0], w[1]
                )));
            }
        }
    }
    Ok(ThresholdTable {
        zeta: midpoint_thresholds(&q_n),
        kappa: midpoint_thresholds(&q_k),
        q_n,
        q_k,
        threads,
        n_truncated,
        k_truncated,
    })
}

/// The (k, r) locus satisfying the code-optimality equation, with samples
/// cached over a dimension grid.
#[derive(Debug, Clone)]
pub struct OptimalCodeCurve {
    samples: Vec<(f64, f64)>,
}

impl OptimalCodeCurve {
    pub fn build(cls: &ClassSpec, k_grid: &[f64]) -> Result<Self> {
        let mut samples = Vec::with_capacity(k_grid.len());
        for &k in k_grid {
            samples.push((k, solve_r_given_k(cls, k)?));
        }
        for w in samples.windows(2) {
            if w[0].0 < w[1].0 && w[0].1 >= w[1].1 {
                return Err(Error::Numeric(format!(
                    "optimal-code curve not strictly increasing between k={} and k={}",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }
}

// JSON encoding: thresholds are plain number arrays except that the leading
// infinite entry is the string "inf".
fn serialize_thresholds<S: Serializer>(
    values: &[f64],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for &v in values {
        if v.is_infinite() {
            seq.serialize_element("inf")?;
        } else {
            seq.serialize_element(&v)?;
        }
    }
    seq.end()
}

impl Serialize for ThresholdTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Thresholds<'a>(&'a [f64]);
        impl Serialize for Thresholds<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                serialize_thresholds(self.0, s)
            }
        }
        let mut st = s.serialize_struct("ThresholdTable", 7)?;
        st.serialize_field("zeta", &Thresholds(&self.zeta))?;
        st.serialize_field("kappa", &Thresholds(&self.kappa))?;
        st.serialize_field("q_n", &self.q_n)?;
        st.serialize_field("q_k", &self.q_k)?;
        st.serialize_field("threads", &self.threads)?;
        st.serialize_field("n_truncated", &self.n_truncated)?;
        st.serialize_field("k_truncated", &self.k_truncated)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::OpType;
    use crate::delay_model::DelayParams;
    use crate::rng::RandomStream;

    fn class(d: f64, ds: f64, e: f64, es: f64, j: f64) -> ClassSpec {
        ClassSpec::new(
            OpType::Read,
            j,
            1.0,
            6,
            12,
            2.0,
            DelayParams::new(d, ds, e, es).unwrap(),
        )
        .unwrap()
    }

    fn paper_setup_class() -> ClassSpec {
        class(0.04, 0.02, 0.02, 0.01, 3.0)
    }

    fn random_positive_classes(count: usize, seed: u64) -> Vec<ClassSpec> {
        let mut rng = RandomStream::seeded(seed);
        (0..count)
            .map(|_| {
                // log-uniform spread over two decades keeps everything positive
                let draw =
                    |rng: &mut RandomStream, lo: f64, hi: f64| lo * (hi / lo).powf(rng.uniform());
                class(
                    draw(&mut rng, 0.005, 0.2),
                    draw(&mut rng, 0.005, 0.2),
                    draw(&mut rng, 0.002, 0.1),
                    draw(&mut rng, 0.002, 0.1),
                    draw(&mut rng, 0.5, 8.0),
                )
            })
            .collect()
    }

    #[test]
    fn code_equation_residual_small_on_grid() {
        for cls in random_positive_classes(20, 101) {
            for k10 in 1..=12u32 {
                let k = k10 as f64 / 2.0;
                let r = solve_r_given_k(&cls, k).unwrap();
                let lhs = opt_code_lhs(&cls, k);
                let rhs = opt_code_rhs(&cls, r);
                assert!(
                    (lhs - rhs).abs() / lhs < 1e-9,
                    "residual too large at k={k}: lhs {lhs} rhs {rhs}"
                );
            }
        }
    }

    #[test]
    fn redundancy_increases_with_dimension() {
        for cls in random_positive_classes(20, 202) {
            let mut prev = 0.0;
            for k in [0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0] {
                let r = solve_r_given_k(&cls, k).unwrap();
                assert!(r > prev, "r(k) not increasing at k={k}");
                prev = r;
            }
        }
    }

    #[test]
    fn redundancy_approaches_one_for_tiny_dimension() {
        let r = solve_r_given_k(&paper_setup_class(), 1e-6).unwrap();
        assert!(r < 1.01, "r = {r}");
        assert!(r > 1.0);
    }

    #[test]
    fn both_equation_sides_monotone() {
        for cls in random_positive_classes(10, 303) {
            let mut prev = -1.0;
            for i in 1..=40 {
                let k = i as f64 * 0.25;
                let v = opt_code_lhs(&cls, k);
                assert!(v > prev, "lhs not increasing at k={k}");
                prev = v;
            }
            let mut prev = -1.0;
            for i in 1..=40 {
                let r = 1.0 + i as f64 * 0.2;
                let v = opt_code_rhs(&cls, r);
                assert!(v > prev, "rhs not increasing at r={r}");
                prev = v;
            }
        }
    }

    #[test]
    fn pi_strictly_decreasing_and_positive() {
        for cls in random_positive_classes(20, 404) {
            let mut prev = f64::INFINITY;
            let mut k = 0.1;
            while k <= 10.0 {
                let v = pi(&cls, k).unwrap();
                assert!(v > 0.0);
                assert!(v < prev, "pi not decreasing at k={k}");
                prev = v;
                k += 0.1;
            }
        }
    }

    #[test]
    fn pi_decrease_survives_file_size_doubling() {
        let base = paper_setup_class();
        let doubled = class(0.04, 0.02, 0.02, 0.01, 6.0);
        let mut prev = f64::INFINITY;
        for i in 1..=100 {
            let k = i as f64 * 0.1;
            let v = pi(&doubled, k).unwrap();
            assert!(v < prev);
            prev = v;
        }
        // the two curves disagree pointwise but both decrease
        assert!(pi(&base, 1.0).unwrap() != pi(&doubled, 1.0).unwrap());
    }

    #[test]
    fn optimal_code_monotone_in_queue_length() {
        for cls in random_positive_classes(10, 505) {
            let mut prev: Option<RelaxedCode> = None;
            for i in 0..50 {
                // log-spaced queue lengths over several decades
                let q = 1e-3 * (1e6f64).powf(i as f64 / 49.0);
                let code = optimal_code_for_q(&cls, q, 16).unwrap();
                if let Some(p) = prev {
                    assert!(code.k < p.k, "K not decreasing at q={q}");
                    assert!(code.n < p.n, "N not decreasing at q={q}");
                    assert!(code.r < p.r, "R not decreasing at q={q}");
                }
                prev = Some(code);
            }
        }
    }

    #[test]
    fn optimal_code_satisfies_load_matching() {
        for cls in random_positive_classes(10, 606) {
            for q in [0.01, 0.1, 1.0, 10.0, 100.0] {
                let code = optimal_code_for_q(&cls, q, 16).unwrap();
                let l = 16.0;
                let rho = load_from_queue_length(q, 16);
                let lhs = (l / (l - rho)).powi(2) - 1.0;
                let p = &cls.params;
                let j = cls.file_size_mb;
                let rhs = 2.0 * l * (p.fixed_tail_s() * code.k + p.tail_slope_s_per_mb() * j)
                    / (code.k
                        * code.r
                        * (code.r - 1.0)
                        * (p.fixed_shift_s() * code.k + p.shift_slope_s_per_mb() * j));
                assert!(
                    (lhs - rhs).abs() / lhs < 1e-6,
                    "load-matching residual at q={q}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn dense_scan_finds_single_sign_change() {
        for cls in random_positive_classes(5, 707) {
            for q in [0.05, 0.5, 5.0] {
                let l = 16.0;
                let rho = load_from_queue_length(q, 16);
                let target = ((l / (l - rho)).powi(2) - 1.0) / (2.0 * l);
                let mut changes = 0;
                let mut prev_sign = None;
                for i in 0..=2000 {
                    let k = 1e-3 * (1e6f64).powf(i as f64 / 2000.0);
                    let sign = (pi(&cls, k).unwrap() - target) > 0.0;
                    if let Some(p) = prev_sign {
                        if p != sign {
                            changes += 1;
                        }
                    }
                    prev_sign = Some(sign);
                }
                assert_eq!(changes, 1, "expected unique crossing at q={q}");
            }
        }
    }

    #[test]
    fn queue_extremes_error() {
        let cls = paper_setup_class();
        assert!(matches!(
            optimal_code_for_q(&cls, 0.0, 16),
            Err(Error::QueueBelowSolvableRange(_))
        ));
        assert!(matches!(
            optimal_code_for_q(&cls, 1e-30, 16),
            Err(Error::QueueBelowSolvableRange(_))
        ));
    }

    #[test]
    fn threshold_chain_interleaves_exactly() {
        let cls = paper_setup_class();
        let t = build_thresholds(&cls, 16).unwrap();
        assert_eq!(t.zeta.len(), t.q_n.len() + 1);
        // zeta[0] = inf > q_n[0] > zeta[1] > q_n[1] > ... > last zeta = 0
        assert!(t.zeta[0].is_infinite());
        for i in 0..t.q_n.len() {
            assert!(t.zeta[i] > t.q_n[i], "zeta[{i}] !> q_n[{i}]");
            assert!(t.q_n[i] > t.zeta[i + 1], "q_n[{i}] !> zeta[{}]", i + 1);
        }
        assert_eq!(*t.zeta.last().unwrap(), 0.0);
        for i in 0..t.q_k.len() {
            assert!(t.kappa[i] > t.q_k[i]);
            assert!(t.q_k[i] > t.kappa[i + 1]);
        }
        assert_eq!(*t.kappa.last().unwrap(), 0.0);
    }

    #[test]
    fn anchors_invert_the_relaxed_optimum() {
        let cls = paper_setup_class();
        let t = build_thresholds(&cls, 16).unwrap();
        for (i, &q) in t.q_n.iter().enumerate() {
            let code = optimal_code_for_q(&cls, q, 16).unwrap();
            assert!(
                (code.n - (i as f64 + 1.0)).abs() < 1e-6,
                "N({q}) = {} != {}",
                code.n,
                i + 1
            );
        }
        for (i, &q) in t.q_k.iter().enumerate() {
            let code = optimal_code_for_q(&cls, q, 16).unwrap();
            assert!((code.k - (i as f64 + 1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_single_length_table() {
        let cls = ClassSpec::new(
            OpType::Read,
            3.0,
            1.0,
            1,
            1,
            1.0,
            DelayParams::new(0.04, 0.02, 0.02, 0.01).unwrap(),
        )
        .unwrap();
        let t = build_thresholds(&cls, 16).unwrap();
        assert_eq!(t.zeta.len(), 2);
        assert!(t.zeta[0].is_infinite());
        assert_eq!(t.zeta[1], 0.0);
        assert_eq!(threshold_band(&t.zeta, 0.0), 1);
        assert_eq!(threshold_band(&t.zeta, 1e9), 1);
    }

    #[test]
    fn shared_target_aligns_classes() {
        // distinct classes solved at the same q produce pi_i(k_i) = pi_j(k_j)
        let a = class(0.04, 0.02, 0.02, 0.01, 3.0);
        let b = class(0.02, 0.05, 0.01, 0.03, 1.0);
        for q in [0.1, 1.0, 10.0] {
            let ka = optimal_code_for_q(&a, q, 16).unwrap().k;
            let kb = optimal_code_for_q(&b, q, 16).unwrap().k;
            let pa = pi(&a, ka).unwrap();
            let pb = pi(&b, kb).unwrap();
            assert!((pa - pb).abs() / pa < 1e-6, "pi mismatch at q={q}");
        }
    }

    #[test]
    fn curve_caches_monotone_samples() {
        let cls = paper_setup_class();
        let grid: Vec<f64> = (1..=12).map(|i| i as f64 * 0.5).collect();
        let curve = OptimalCodeCurve::build(&cls, &grid).unwrap();
        assert_eq!(curve.samples().len(), 12);
        for w in curve.samples().windows(2) {
            assert!(w[1].1 > w[0].1);
        }
    }

    #[test]
    fn threshold_json_uses_inf_string() {
        let cls = paper_setup_class();
        let t = build_thresholds(&cls, 16).unwrap();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["zeta"][0], serde_json::json!("inf"));
        assert!(v["zeta"][1].is_number());
        assert_eq!(v["kappa"][0], serde_json::json!("inf"));
        assert_eq!(v["zeta"][t.zeta.len() - 1], serde_json::json!(0.0));
    }
}
