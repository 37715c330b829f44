//! Monte Carlo logical error rate of a memory experiment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{Decoder, DecoderConfig, SyndromeHistory};
use crate::noise::{measure_syndromes, true_syndrome, ErrorState, NoiseModel};
use crate::QecError;

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalErrorEstimate {
    pub d: usize,
    pub p: f64,
    pub q: f64,
    pub rounds: usize,
    pub trials: u64,
    pub seed: u64,
    pub failures: u64,
    /// Trials whose decode errored; these are also counted in `failures`.
    pub decode_errors: u64,
    /// Trials decoded with the greedy fallback.
    pub fallback_trials: u64,
    pub logical_error_rate: f64,
    /// Wilson score interval at 95%.
    pub ci: (f64, f64),
}

impl LogicalErrorEstimate {
    pub fn ci_disjoint_below(&self, other: &LogicalErrorEstimate) -> bool {
        self.ci.1 < other.ci.0
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Default, Clone, Copy)]
struct Tally {
    failures: u64,
    decode_errors: u64,
    fallbacks: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally {
            failures: self.failures + o.failures,
            decode_errors: self.decode_errors + o.decode_errors,
            fallbacks: self.fallbacks + o.fallbacks,
        }
    }
}

/// Runs `trials` memory experiments of `rounds` noisy rounds plus a closing
/// noiseless round. Trial `i` draws from ChaCha stream `i` of `seed`, so the
/// result does not depend on thread scheduling.
pub fn logical_error_rate(
    d: usize,
    model: NoiseModel,
    rounds: usize,
    trials: u64,
    seed: u64,
) -> Result<LogicalErrorEstimate, QecError> {
    logical_error_rate_with(DecoderConfig::for_distance(d)?, model, rounds, trials, seed)
}

pub fn logical_error_rate_with(
    config: DecoderConfig,
    model: NoiseModel,
    rounds: usize,
    trials: u64,
    seed: u64,
) -> Result<LogicalErrorEstimate, QecError> {
    model.validate()?;
    if trials == 0 || rounds == 0 {
        return Err(QecError::InvalidConfig("trials and rounds must be at least 1".into()));
    }
    let d = config.layout.distance;
    let decoder = Decoder::new(config)?;

    let tally = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            run_trial(&decoder, &model, rounds, &mut rng)
        })
        .reduce(Tally::default, |a, b| a + b);

    let rate = tally.failures as f64 / trials as f64;
    Ok(LogicalErrorEstimate {
        d,
        p: model.p,
        q: model.q,
        rounds,
        trials,
        seed,
        failures: tally.failures,
        decode_errors: tally.decode_errors,
        fallback_trials: tally.fallbacks,
        logical_error_rate: rate,
        ci: wilson_interval(tally.failures, trials, Z_95),
    })
}

fn run_trial(decoder: &Decoder, model: &NoiseModel, rounds: usize, rng: &mut ChaCha8Rng) -> Tally {
    let layout = &decoder.config().layout;
    let mut error = ErrorState::clean(layout.num_data_qubits());
    let mut outcomes = Vec::with_capacity(rounds + 1);
    for _ in 0..rounds {
        error.depolarize(model.p, rng);
        outcomes.push(measure_syndromes(&error, layout, model.q, rng));
    }
    outcomes.push(true_syndrome(&error, layout));
    let history = SyndromeHistory::new(outcomes).expect("at least one round");
    match decoder.decode(&history) {
        Ok(c) => {
            error.compose(&c.x_corrections, &c.z_corrections);
            Tally {
                failures: error.is_logical_error(layout) as u64,
                decode_errors: 0,
                fallbacks: c.fallback_used as u64,
            }
        }
        Err(_) => Tally {
            failures: 1,
            decode_errors: 1,
            fallbacks: 0,
        },
    }
}
