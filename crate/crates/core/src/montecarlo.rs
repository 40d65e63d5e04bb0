//! Reproducible sampling and experiment orchestration.
//!
//! Every trial draws from its own ChaCha8 stream, keyed by the run seed and
//! by `(purpose, n, member, trial)`. Trials may run in parallel; results are
//! collected in trial order before aggregation, so curves are bit-identical
//! for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{CoverMode, DistributionFamily};
use crate::error::{check_dims, Error, Result};
use crate::losses::FunctionClass;
use crate::measures::{empirical, f_norm_values, JointPmf};
use crate::type1::{type1_trial, EpsilonSchedule, TrialRecord, Type1Scheme};
use crate::type2::{
    greedy_quantizer, mean_and_std_err, optimal_quantizer, type2_trial, DhatResult, SearchBudget,
};

const TAG_GC: u64 = 1;
const TAG_TYPE1: u64 = 2;
const TAG_TYPE2: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random stream for `key` under `seed`.
pub fn stream_rng(seed: u64, key: &[u64]) -> ChaCha8Rng {
    let stream = key.iter().fold(0u64, |h, &k| splitmix64(h ^ splitmix64(k)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Inverse-CDF sampler over the flattened cells of a pmf.
#[derive(Debug, Clone)]
pub struct PairSampler {
    y_size: usize,
    cdf: Vec<f64>,
    last_positive: usize,
}

impl PairSampler {
    pub fn new(p: &JointPmf) -> Self {
        let mut acc = 0.0;
        let cdf = p
            .probs()
            .iter()
            .map(|q| {
                acc += q;
                acc
            })
            .collect();
        let last_positive = p.probs().iter().rposition(|&q| q > 0.0).unwrap_or(0);
        Self {
            y_size: p.y_size(),
            cdf,
            last_positive,
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> (usize, usize) {
        let u: f64 = rng.gen();
        let cell = self
            .cdf
            .partition_point(|&c| c <= u)
            .min(self.last_positive);
        (cell / self.y_size, cell % self.y_size)
    }
}

/// `n` i.i.d. pairs from `p`.
pub fn sample_training<R: Rng>(p: &JointPmf, n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let sampler = PairSampler::new(p);
    (0..n).map(|_| sampler.draw(rng)).collect()
}

/// Mean of `‖P_{Z^n} − P‖_F` at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcPoint {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
}

/// Monte Carlo estimate of `E‖P_{Z^n} − P‖_F` along `n_grid`.
pub fn gc_decay(
    p: &JointPmf,
    class: &FunctionClass,
    n_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<GcPoint>> {
    check_dims(class.dims(), p.dims())?;
    check_grid(n_grid, trials)?;
    let (xs, ys) = p.dims();
    let sampler = PairSampler::new(p);
    n_grid
        .iter()
        .map(|&n| {
            let draws: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream_rng(seed, &[TAG_GC, n as u64, t as u64]);
                    let sample: Vec<_> = (0..n).map(|_| sampler.draw(&mut rng)).collect();
                    let emp = empirical(xs, ys, &sample)?;
                    Ok(f_norm_values(emp.minus(p)?.values(), class))
                })
                .collect::<Result<_>>()?;
            let (mean, std_err) = mean_and_std_err(&draws);
            Ok(GcPoint { n, mean, std_err })
        })
        .collect()
}

fn check_grid(n_grid: &[usize], trials: usize) -> Result<()> {
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "n_grid must be nonempty, positive and strictly increasing".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    Ok(())
}

/// How the Type II quantizer is obtained at each `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QuantizerMode {
    Exact,
    Greedy { restarts: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SchemeSpec {
    TypeI {
        schedule: EpsilonSchedule,
        cover_mode: CoverMode,
    },
    TypeII {
        quantizer: QuantizerMode,
        budget: SearchBudget,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: DistributionFamily,
    pub class: FunctionClass,
    pub scheme: SchemeSpec,
    /// Declared rate in bits per training pair.
    pub rate: f64,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub pac_epsilon: Option<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_dims(self.class.dims(), self.family.dims())?;
        check_grid(&self.n_grid, self.trials)?;
        if !(self.rate >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rate {} is negative",
                self.rate
            )));
        }
        if let Some(e) = self.pac_epsilon {
            if !(e > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "pac_epsilon {e} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Aggregate over the trials at one `(n, true distribution)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub true_p_index: usize,
    pub mean_excess: f64,
    pub std_err: f64,
    pub mean_bound: f64,
    /// Fraction of trials with excess above `pac_epsilon`, when configured.
    pub exceedance_prob: Option<f64>,
    /// Trials where the per-realization inequality failed.
    pub violations: usize,
}

fn aggregate(n: usize, member: usize, records: &[TrialRecord], pac: Option<f64>) -> CurvePoint {
    let excess: Vec<f64> = records.iter().map(|r| r.excess).collect();
    let (mean_excess, std_err) = mean_and_std_err(&excess);
    let mean_bound = records.iter().map(|r| r.bound).sum::<f64>() / records.len() as f64;
    CurvePoint {
        n,
        true_p_index: member,
        mean_excess,
        std_err,
        mean_bound,
        exceedance_prob: pac.map(|eps| {
            records.iter().filter(|r| r.excess > eps).count() as f64 / records.len() as f64
        }),
        violations: records.iter().filter(|r| !r.holds).count(),
    }
}

/// Per-member curves, ordered by `n` then member index.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub points: Vec<CurvePoint>,
    /// Quantizer used at each `n` (Type II only).
    pub quantizers: Vec<DhatResult>,
    /// Net size at each `n` (Type I only).
    pub net_sizes: Vec<usize>,
}

impl ExperimentOutcome {
    /// For each `n`, the member with the largest mean excess (lowest index on
    /// ties).
    pub fn worst_case(&self) -> Vec<CurvePoint> {
        let mut out: Vec<CurvePoint> = Vec::new();
        for p in &self.points {
            match out.last_mut() {
                Some(last) if last.n == p.n => {
                    if p.mean_excess > last.mean_excess {
                        *last = *p;
                    }
                }
                _ => out.push(*p),
            }
        }
        out
    }
}

/// Runs the configured scheme for every `n` and every family member as the
/// true distribution.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let mut outcome = ExperimentOutcome {
        points: Vec::new(),
        quantizers: Vec::new(),
        net_sizes: Vec::new(),
    };
    let family = &config.family;
    let with_n = |n: usize, e: Error| match e {
        Error::GuardExceeded(msg) => Error::GuardExceeded(format!("n={n}: {msg}")),
        other => other,
    };
    for &n in &config.n_grid {
        match &config.scheme {
            SchemeSpec::TypeI {
                schedule,
                cover_mode,
            } => {
                let scheme = Type1Scheme::new(
                    family.clone(),
                    config.class.clone(),
                    schedule.epsilon(n),
                    *cover_mode,
                )
                .map_err(|e| with_n(n, e))?;
                outcome.net_sizes.push(scheme.net().len());
                for (m, p) in family.members().iter().enumerate() {
                    let sampler = PairSampler::new(p);
                    let records: Vec<TrialRecord> = (0..config.trials)
                        .into_par_iter()
                        .map(|t| {
                            let mut rng =
                                stream_rng(config.seed, &[TAG_TYPE1, n as u64, m as u64, t as u64]);
                            let sample: Vec<_> = (0..n).map(|_| sampler.draw(&mut rng)).collect();
                            type1_trial(&sample, &scheme, p)
                        })
                        .collect::<Result<_>>()?;
                    outcome
                        .points
                        .push(aggregate(n, m, &records, config.pac_epsilon));
                }
            }
            SchemeSpec::TypeII { quantizer, budget } => {
                let dhat = match quantizer {
                    QuantizerMode::Exact => {
                        optimal_quantizer(n, config.rate, family, &config.class, budget)
                    }
                    QuantizerMode::Greedy { restarts } => greedy_quantizer(
                        n,
                        config.rate,
                        family,
                        &config.class,
                        *restarts,
                        config.seed,
                        budget,
                    ),
                }
                .map_err(|e| with_n(n, e))?;
                let q = &dhat.quantizer;
                for (m, p) in family.members().iter().enumerate() {
                    let sampler = PairSampler::new(p);
                    let records: Vec<TrialRecord> = (0..config.trials)
                        .into_par_iter()
                        .map(|t| {
                            let mut rng =
                                stream_rng(config.seed, &[TAG_TYPE2, n as u64, m as u64, t as u64]);
                            let sample: Vec<_> = (0..n).map(|_| sampler.draw(&mut rng)).collect();
                            type2_trial(&sample, q, family, &config.class, p)
                        })
                        .collect::<Result<_>>()?;
                    outcome
                        .points
                        .push(aggregate(n, m, &records, config.pac_epsilon));
                }
                outcome.quantizers.push(dhat);
            }
        }
    }
    Ok(outcome)
}

/// Exceedance probabilities `P(excess > pac_epsilon)` as
/// `(n, member, probability)`.
pub fn pac_exceedance(config: &ExperimentConfig) -> Result<Vec<(usize, usize, f64)>> {
    if config.pac_epsilon.is_none() {
        return Err(Error::InvalidArgument("pac_epsilon is required".into()));
    }
    Ok(run_experiment(config)?
        .points
        .iter()
        .map(|p| (p.n, p.true_p_index, p.exceedance_prob.unwrap_or(0.0)))
        .collect())
}
