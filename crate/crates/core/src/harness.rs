//! Reproducible experiment orchestration: seed derivation, replication runs,
//! summary statistics, and a two-sample Kolmogorov-Smirnov test.
//!
//! Everything here is deterministic by construction. A master seed expands
//! into per-trial seeds through a fixed published mix, trial results land in
//! index order no matter how many workers ran them, and the same inputs give
//! byte-identical outputs at any parallelism level.

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("cannot summarize an empty slice")]
    EmptyInput,
    #[error("sample contains a NaN value")]
    NanInput,
}

/// Per-trial seed derived from a master seed and a trial index.
///
/// This is the SplitMix64 output function applied to
/// `master + (index + 1) * 0x9E3779B97F4A7C15` (wrapping). The increment is
/// odd, so distinct indices map to distinct states and the finalizer is a
/// bijection; trial seeds never collide under a fixed master. The mix is part
/// of the reproducibility contract and must not change.
pub fn derive_trial_seed(master: u64, index: u64) -> u64 {
    let z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `n` independent trials of `task`, handing trial `i` the seed
/// `derive_trial_seed(master, i)`, and returns the results in trial order.
///
/// `parallelism` is the worker count (values below 1 are treated as 1).
/// Results are slotted by index, so the output is identical for any degree of
/// parallelism; a failing trial occupies its own slot when `T` is a `Result`
/// and never disturbs the others.
pub fn run_replications<T, F>(task: F, n: usize, master: u64, parallelism: usize) -> Vec<T>
where
    F: Fn(u64) -> T + Sync,
    T: Send,
{
    if parallelism <= 1 {
        return (0..n)
            .map(|i| task(derive_trial_seed(master, i as u64)))
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .expect("failed to build worker pool");
    pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| task(derive_trial_seed(master, i as u64)))
            .collect()
    })
}

/// Summary of a sample: count, mean, unbiased variance, standard error of the
/// mean, and range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance; zero by convention for a single observation.
    pub variance: f64,
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(HarnessError::NanInput);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = if n == 1 {
        0.0
    } else {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    };
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    Ok(SummaryStats {
        n,
        mean,
        variance,
        std_err: (variance / n as f64).sqrt(),
        min,
        max,
    })
}

/// Result of a two-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// Supremum distance between the two empirical CDFs.
    pub statistic: f64,
    /// Asymptotic p-value at effective size `n_a * n_b / (n_a + n_b)`.
    pub p_value: f64,
}

/// Two-sample KS test. Works on ties (discrete samples such as event counts
/// are fine); the asymptotic p-value is conservative there.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, HarnessError> {
    if a.is_empty() || b.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(HarnessError::NanInput);
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let na = xa.len();
    let nb = xb.len();

    // Walk both sorted samples, consuming every copy of the current smallest
    // value from each side before comparing the empirical CDFs.
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let v = xa[i].min(xb[j]);
        while i < na && xa[i] == v {
            i += 1;
        }
        while j < nb && xb[j] == v {
            j += 1;
        }
        let diff = (i as f64 / na as f64 - j as f64 / nb as f64).abs();
        d = d.max(diff);
    }

    let n_eff = (na as f64 * nb as f64) / (na + nb) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(n_eff.sqrt() * d),
    })
}

/// Complement of the Kolmogorov distribution, `P(K > z)`. Uses the standard
/// pair of series, switching at z = 1.18 where both are accurate.
fn kolmogorov_survival(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    let p = if z < 1.18 {
        let t = (-std::f64::consts::PI * std::f64::consts::PI / (8.0 * z * z)).exp();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / z
            * (t + t.powi(9) + t.powi(25) + t.powi(49));
        1.0 - cdf
    } else {
        let t = (-2.0 * z * z).exp();
        2.0 * (t - t.powi(4) + t.powi(9))
    };
    p.clamp(0.0, 1.0)
}
