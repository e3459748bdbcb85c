//! Teacher-student trials and the grids that repeat them.

use rand::Rng;
use rayon::prelude::*;
use temsnn::metrics::{permutation_aligned_errors, relative_frobenius_error};
use temsnn::signals::random_bandlimited;
use temsnn::single_layer::{forward_single_layer, learn_single_layer, Example};
use temsnn::tem::perturb_spike_times;
use temsnn::two_layer::{
    forward_hidden_layer, forward_output_layer, learn_two_layer, RecoveryOptions, TwoLayerExample,
    COINCIDENCE_THRESHOLD,
};
use temsnn::{AliasCancellingFilter64, PeriodicSignal64, WeightMatrix64};

use crate::config::{ExperimentConfig, SingleLayerConfig, TwoLayerConfig};
use crate::error::Result;
use crate::results::{ResultRecord, ResultTable, Status, SINGLE_GRID, SINGLE_NOISE, TWO_SWEEP};
use crate::seeds::{derive_seed, rng};

const STREAM_SINGLE_TEACHER: u64 = 1;
const STREAM_SPIKE_NOISE: u64 = 2;
const STREAM_TWO_LAYER: u64 = 3;
const STREAM_KMEANS: u64 = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `0` lets the pool pick.
    pub parallelism: usize,
}

/// Evaluates `jobs` on a dedicated pool and returns results in job order.
fn run_jobs<J: Sync, F>(jobs: &[J], options: &RunOptions, f: F) -> Result<Vec<ResultRecord>>
where
    F: Fn(&J) -> ResultRecord + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism)
        .build()?;
    Ok(pool.install(|| jobs.par_iter().map(&f).collect()))
}

fn uniform_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> WeightMatrix64 {
    WeightMatrix64::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0))
}

fn random_inputs(
    count: usize,
    bandwidth: usize,
    period: f64,
    scale: f64,
    rng: &mut impl Rng,
) -> temsnn::Result<Vec<PeriodicSignal64>> {
    (0..count)
        .map(|_| random_bandlimited(bandwidth, period, scale, rng))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub w1_error: Option<f64>,
    pub w2_error: Option<f64>,
    pub status: Status,
}

impl TrialOutcome {
    fn failed() -> Self {
        Self {
            w1_error: None,
            w2_error: None,
            status: Status::Failed,
        }
    }
}

/// Seed of the one-layer teacher, inputs and targets for a cell and trial.
/// The noise grid reuses it, so its `inf` column repeats the noiseless runs.
pub fn single_layer_seed(master: u64, examples: usize, exposure: f64, trial: usize) -> u64 {
    derive_seed(
        master,
        STREAM_SINGLE_TEACHER,
        &[examples as u64, exposure.to_bits()],
        trial as u64,
    )
}

/// One one-layer teacher-student trial. `snr` of `None` or `+inf` is noiseless.
pub fn single_layer_trial(
    cfg: &SingleLayerConfig,
    period: f64,
    examples: usize,
    exposure: f64,
    snr: Option<(f64, u64)>,
    seed: u64,
) -> TrialOutcome {
    let run = || -> temsnn::Result<TrialOutcome> {
        let mut rng = rng(seed);
        let params = vec![cfg.tem.params()?; cfg.n1];
        let w = uniform_matrix(cfg.n1, cfg.n0, &mut rng);
        let mut data = Vec::with_capacity(examples);
        for _ in 0..examples {
            let inputs = random_inputs(
                cfg.n0,
                cfg.input_bandwidth,
                period,
                cfg.coefficient_scale,
                &mut rng,
            )?;
            let trains = forward_single_layer(&w, &inputs, &params, exposure)?;
            data.push(Example::new(inputs, trains)?);
        }
        if let Some((snr_db, noise_seed)) = snr {
            let mut noise = crate::seeds::rng(noise_seed);
            for ex in &mut data {
                for train in &mut ex.target_trains {
                    if train.len() >= 2 {
                        *train = perturb_spike_times(train, snr_db, &mut noise)?;
                    }
                }
            }
        }
        let fit = learn_single_layer(&data, &params)?;
        let underdetermined = fit.diagnostics.iter().any(|d| d.underdetermined);
        Ok(TrialOutcome {
            w1_error: Some(relative_frobenius_error(&fit.weights, &w)?),
            w2_error: None,
            status: if underdetermined {
                Status::Underdetermined
            } else {
                Status::Ok
            },
        })
    };
    run().unwrap_or_else(|_| TrialOutcome::failed())
}

/// Exposure × examples grid, noiseless.
pub fn run_single_layer_grid(cfg: &ExperimentConfig, options: &RunOptions) -> Result<ResultTable> {
    cfg.validate()?;
    let s = &cfg.single_layer;
    let jobs: Vec<(usize, f64, usize)> = s
        .examples
        .iter()
        .flat_map(|&e| {
            s.exposures
                .iter()
                .flat_map(move |&x| (0..cfg.trials).map(move |t| (e, x, t)))
        })
        .collect();
    let records = run_jobs(&jobs, options, |&(examples, exposure, trial)| {
        let seed = single_layer_seed(cfg.master_seed, examples, exposure, trial);
        let out = single_layer_trial(s, cfg.period, examples, exposure, None, seed);
        ResultRecord {
            experiment: SINGLE_GRID.into(),
            examples,
            exposure,
            snr_db: None,
            trial,
            seed,
            w1_error: out.w1_error,
            w2_error: None,
            status: out.status,
        }
    })?;
    Ok(ResultTable::new(records))
}

/// SNR × examples grid at a fixed exposure.
pub fn run_single_layer_noise_grid(
    cfg: &ExperimentConfig,
    options: &RunOptions,
) -> Result<ResultTable> {
    cfg.validate()?;
    let n = &cfg.noise;
    let jobs: Vec<(usize, f64, usize)> = n
        .examples
        .iter()
        .flat_map(|&e| {
            n.snr_db
                .iter()
                .flat_map(move |&snr| (0..cfg.trials).map(move |t| (e, snr, t)))
        })
        .collect();
    let records = run_jobs(&jobs, options, |&(examples, snr_db, trial)| {
        let seed = single_layer_seed(cfg.master_seed, examples, n.exposure, trial);
        let noise_seed = derive_seed(
            cfg.master_seed,
            STREAM_SPIKE_NOISE,
            &[examples as u64, n.exposure.to_bits(), snr_db.to_bits()],
            trial as u64,
        );
        let out = single_layer_trial(
            &cfg.single_layer,
            cfg.period,
            examples,
            n.exposure,
            Some((snr_db, noise_seed)),
            seed,
        );
        ResultRecord {
            experiment: SINGLE_NOISE.into(),
            examples,
            exposure: n.exposure,
            snr_db: Some(snr_db),
            trial,
            seed,
            w1_error: out.w1_error,
            w2_error: None,
            status: out.status,
        }
    })?;
    Ok(ResultTable::new(records))
}

/// A two-layer teacher and its periodized hidden activity.
#[derive(Debug, Clone)]
pub struct TwoLayerTeacher {
    pub w1: WeightMatrix64,
    pub w2: WeightMatrix64,
    pub inputs: Vec<Vec<PeriodicSignal64>>,
    pub hidden: Vec<Vec<temsnn::SpikeTrain64>>,
    pub filter: AliasCancellingFilter64,
}

impl TwoLayerTeacher {
    /// Draws weights and inputs, simulates the hidden layer and sizes the filter.
    pub fn draw(cfg: &TwoLayerConfig, period: f64, seed: u64) -> temsnn::Result<Self> {
        let mut rng = rng(seed);
        let params1 = cfg.hidden_tem.params()?;
        let w1 = uniform_matrix(cfg.n1, cfg.n0, &mut rng);
        let w2 = uniform_matrix(cfg.n2, cfg.n1, &mut rng);
        let inputs = (0..cfg.examples)
            .map(|_| {
                random_inputs(
                    cfg.n0,
                    cfg.input_bandwidth,
                    period,
                    cfg.coefficient_scale,
                    &mut rng,
                )
            })
            .collect::<temsnn::Result<Vec<_>>>()?;
        let hidden = inputs
            .iter()
            .map(|x| forward_hidden_layer(&w1, x, &params1))
            .collect::<temsnn::Result<Vec<_>>>()?;
        let passband = cfg
            .filter_passband
            .unwrap_or_else(|| Self::counts_of(&hidden).into_iter().max().unwrap_or(0));
        let filter = AliasCancellingFilter64::dirichlet(passband, period)?;
        Ok(Self {
            w1,
            w2,
            inputs,
            hidden,
            filter,
        })
    }

    fn counts_of(hidden: &[Vec<temsnn::SpikeTrain64>]) -> Vec<usize> {
        hidden
            .iter()
            .map(|h| h.iter().map(|t| t.len()).sum())
            .collect()
    }

    /// Hidden spikes per period in each example.
    pub fn dirac_counts(&self) -> Vec<usize> {
        Self::counts_of(&self.hidden)
    }

    /// Smallest circular gap between hidden spikes within any example.
    pub fn min_hidden_separation(&self) -> f64 {
        let period = self.filter.period();
        self.hidden
            .iter()
            .map(|h| {
                let all: Vec<f64> = h.iter().flat_map(|t| t.times().iter().copied()).collect();
                temsnn::fri::min_separation(&all, period)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn examples(
        &self,
        cfg: &TwoLayerConfig,
        periods: u32,
    ) -> temsnn::Result<Vec<TwoLayerExample<f64>>> {
        let params2 = cfg.output_tem.params()?;
        self.inputs
            .iter()
            .zip(&self.hidden)
            .map(|(x, h)| {
                let out =
                    forward_output_layer(&self.w2, h, &self.filter, &params2, f64::from(periods))?;
                Ok(TwoLayerExample {
                    inputs: x.clone(),
                    target_trains: out.output_trains,
                })
            })
            .collect()
    }
}

/// Seed of a two-layer trial. It does not depend on the exposure, so every
/// exposure point of a trial sees the same network and inputs.
pub fn two_layer_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, STREAM_TWO_LAYER, &[], trial as u64)
}

/// Learns a two-layer network from `examples` and scores it against the teacher.
pub fn score_two_layer(
    cfg: &TwoLayerConfig,
    teacher: &TwoLayerTeacher,
    examples: &[TwoLayerExample<f64>],
    kmeans_seed: u64,
) -> TrialOutcome {
    let run = || -> temsnn::Result<TrialOutcome> {
        let p1 = cfg.hidden_tem.params()?;
        let p2 = cfg.output_tem.params()?;
        let options = RecoveryOptions {
            restarts: cfg.kmeans_restarts,
            ..RecoveryOptions::default()
        };
        let fit = learn_two_layer(
            examples,
            &teacher.filter,
            &p1,
            &p2,
            cfg.n1,
            &teacher.dirac_counts(),
            &options,
            &mut rng(kmeans_seed),
        )?;
        let a = permutation_aligned_errors(&fit.w1_hat, &fit.w2_hat, &teacher.w1, &teacher.w2)?;
        let underdetermined = fit.w1_diagnostics.iter().any(|d| d.underdetermined);
        Ok(TrialOutcome {
            w1_error: Some(a.w1_relative),
            w2_error: Some(a.w2_relative),
            status: if underdetermined {
                Status::Underdetermined
            } else {
                Status::Ok
            },
        })
    };
    match run() {
        Ok(o) => o,
        Err(e) if e.is_degenerate() => TrialOutcome {
            status: Status::Degenerate,
            ..TrialOutcome::failed()
        },
        Err(_) => TrialOutcome::failed(),
    }
}

/// One two-layer trial at one exposure (in periods).
pub fn two_layer_trial(cfg: &TwoLayerConfig, period: f64, periods: u32, seed: u64) -> TrialOutcome {
    let teacher = match TwoLayerTeacher::draw(cfg, period, seed) {
        Ok(t) => t,
        Err(_) => return TrialOutcome::failed(),
    };
    if teacher.min_hidden_separation() < COINCIDENCE_THRESHOLD * period {
        return TrialOutcome {
            status: Status::Degenerate,
            ..TrialOutcome::failed()
        };
    }
    match teacher.examples(cfg, periods) {
        Ok(ex) => score_two_layer(cfg, &teacher, &ex, derive_seed(seed, STREAM_KMEANS, &[], 0)),
        Err(_) => TrialOutcome::failed(),
    }
}

/// Exposure sweep of the two-layer pipeline.
pub fn run_two_layer_sweep(cfg: &ExperimentConfig, options: &RunOptions) -> Result<ResultTable> {
    cfg.validate()?;
    let t = &cfg.two_layer;
    let jobs: Vec<(u32, usize)> = t
        .exposures
        .iter()
        .flat_map(|&p| (0..cfg.trials).map(move |trial| (p, trial)))
        .collect();
    let records = run_jobs(&jobs, options, |&(periods, trial)| {
        let seed = two_layer_seed(cfg.master_seed, trial);
        let out = two_layer_trial(t, cfg.period, periods, seed);
        ResultRecord {
            experiment: TWO_SWEEP.into(),
            examples: t.examples,
            exposure: f64::from(periods),
            snr_db: None,
            trial,
            seed,
            w1_error: out.w1_error,
            w2_error: out.w2_error,
            status: out.status,
        }
    })?;
    Ok(ResultTable::new(records))
}
