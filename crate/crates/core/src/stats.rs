//! Coincidence counting statistics.
//!
//! A run tallies, over `n` coincident pairs, how many gave equal outcomes
//! ("yes", `n_same`) and how many gave opposite outcomes (`n_diff`). The
//! sample mean `S = n_same / n` estimates the probability of "yes" and the
//! correlation estimate is `C = 2S - 1`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geom::UnitVec;
use crate::models::MeasurementModel;

/// Same/different outcome tallies. `n` is always `n_same + n_diff`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountData {
    pub n_same: u64,
    pub n_diff: u64,
    pub n: u64,
}

impl CountData {
    pub fn new(n_same: u64, n_diff: u64) -> Self {
        CountData {
            n_same,
            n_diff,
            n: n_same + n_diff,
        }
    }

    /// Exact, order-independent combination of two tallies.
    pub fn merge(self, other: CountData) -> CountData {
        CountData::new(self.n_same + other.n_same, self.n_diff + other.n_diff)
    }

    pub fn record(&mut self, same: bool) {
        if same {
            self.n_same += 1;
        } else {
            self.n_diff += 1;
        }
        self.n += 1;
    }
}

/// Divisor used in the variance of the sample mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceConvention {
    /// `S(1-S)/n`.
    #[default]
    #[serde(rename = "n")]
    N,
    /// `S(1-S)/(n-1)`, the unbiased variance estimator.
    #[serde(rename = "n-1")]
    NMinusOne,
}

impl std::str::FromStr for VarianceConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(VarianceConvention::N),
            "n-1" => Ok(VarianceConvention::NMinusOne),
            other => Err(Error::InvalidParameter(format!(
                "variance convention must be 'n' or 'n-1', got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
    pub sample_mean: f64,
}

/// Standard error of `C = 2S - 1` given the sample mean directly.
pub fn correlation_stderr(sample_mean: f64, divisor: f64) -> f64 {
    2.0 * (sample_mean * (1.0 - sample_mean) / divisor).max(0.0).sqrt()
}

pub fn estimate_correlation(
    counts: &CountData,
    convention: VarianceConvention,
) -> Result<CorrelationEstimate> {
    if counts.n == 0 {
        return Err(Error::EmptySample);
    }
    let divisor = match convention {
        VarianceConvention::N => counts.n,
        VarianceConvention::NMinusOne => counts.n - 1,
    };
    if divisor == 0 {
        return Err(Error::DegenerateVarianceDivisor);
    }
    let s = counts.n_same as f64 / counts.n as f64;
    Ok(CorrelationEstimate {
        value: 2.0 * s - 1.0,
        stderr: correlation_stderr(s, divisor as f64),
        n: counts.n,
        sample_mean: s,
    })
}

/// Standard error of `C = (n_same - n_diff)/(n_same + n_diff)` when both
/// tallies are independent Poisson counts, by first-order propagation:
/// `2·sqrt(n_same·n_diff) / n^{3/2}`.
pub fn stderr_poisson_propagation(n_same: u64, n_diff: u64) -> Result<f64> {
    let n = n_same + n_diff;
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let (s, d, n) = (n_same as f64, n_diff as f64, n as f64);
    Ok(2.0 * (s * d).sqrt() / (n * n.sqrt()))
}

/// Number of pairs needed for the correlation estimate at `correlation`
/// to have standard error `target_stderr` (ceiling).
pub fn required_pairs(correlation: f64, target_stderr: f64) -> Result<u64> {
    if !(target_stderr > 0.0) || !target_stderr.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "target standard error must be positive, got {target_stderr}"
        )));
    }
    if !correlation.is_finite() || correlation.abs() > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "correlation must lie in [-1, 1], got {correlation}"
        )));
    }
    if correlation.abs() == 1.0 {
        return Err(Error::DegenerateSampleMean);
    }
    let s = sample_mean_of(correlation);
    let se_s = target_stderr / 2.0;
    Ok((s * (1.0 - s) / (se_s * se_s)).ceil() as u64)
}

/// `S = (C + 1)/2`.
pub fn sample_mean_of(correlation: f64) -> f64 {
    (correlation + 1.0) / 2.0
}

/// How many pairs a run collects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Schedule {
    Fixed { n: u64 },
    /// Pair count drawn from Poisson(rate · seconds).
    Duration { seconds: f64, rate: f64 },
}

impl Schedule {
    fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Fixed { n: 0 } => Err(Error::InvalidParameter(
                "fixed schedule needs n >= 1".into(),
            )),
            Schedule::Duration { seconds, rate }
                if !(seconds * rate > 0.0) || !(seconds * rate).is_finite() =>
            {
                Err(Error::InvalidParameter(format!(
                    "duration x rate must be positive, got {seconds} s x {rate}/s"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Resolves the number of pairs; duration mode draws from its own stream.
    pub fn pair_count(&self, seed: u64) -> Result<u64> {
        self.validate()?;
        match *self {
            Schedule::Fixed { n } => Ok(n),
            Schedule::Duration { seconds, rate } => {
                let poisson = Poisson::new(seconds * rate)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                let mut rng = exec::stream_rng(exec::derive_seed(seed, u64::MAX));
                Ok(poisson.sample(&mut rng) as u64)
            }
        }
    }
}

/// Simulates a run at settings `(a, b)` and tallies coincidences.
///
/// Events are generated in fixed chunks, chunk `i` from the stream
/// `derive_seed(seed, i)`, so the tally depends only on `seed`.
pub fn run_experiment<M: MeasurementModel>(
    model: &M,
    a: &UnitVec,
    b: &UnitVec,
    schedule: Schedule,
    seed: u64,
    exec: Execution,
) -> Result<CountData> {
    let n = schedule.pair_count(seed)?;
    Ok(tally(model, a, b, n, seed, exec))
}

pub(crate) fn tally<M: MeasurementModel>(
    model: &M,
    a: &UnitVec,
    b: &UnitVec,
    n: u64,
    seed: u64,
    exec: Execution,
) -> CountData {
    let size = exec::chunk_sizes(n);
    exec::map_indexed(exec, exec::chunk_count(n), |i| {
        let mut rng = exec::stream_rng(exec::derive_seed(seed, i));
        tally_chunk(model, a, b, size(i), &mut rng)
    })
    .into_iter()
    .fold(CountData::default(), CountData::merge)
}

fn tally_chunk<M: MeasurementModel, R: Rng + ?Sized>(
    model: &M,
    a: &UnitVec,
    b: &UnitVec,
    n: u64,
    rng: &mut R,
) -> CountData {
    let mut same = 0u64;
    for _ in 0..n {
        if model.sample_event(a, b, rng).same() {
            same += 1;
        }
    }
    CountData::new(same, n - same)
}
