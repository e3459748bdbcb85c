//! Integrate-and-fire time encoding machines.
//!
//! A TEM adds its bias `β` to the input, integrates the sum scaled by `1/κ`,
//! and fires when the integrator reaches `δ`, resetting to `−δ`. Between two
//! consecutive spikes this pins the input integral:
//! `∫_{t_ℓ}^{t_{ℓ+1}} y = 2κδ − β(t_{ℓ+1} − t_ℓ)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::signals::PeriodicSignal;

/// Integrator constant `κ`, threshold `δ` and bias `β` of one machine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemParams<T> {
    pub kappa: T,
    pub delta: T,
    pub beta: T,
}

impl<T: Real> TemParams<T> {
    pub fn new(kappa: T, delta: T, beta: T) -> Result<Self> {
        if !(kappa > T::zero()) || !(delta > T::zero()) || !(beta > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "kappa, delta and beta must be positive (kappa = {kappa}, delta = {delta}, beta = {beta})"
            )));
        }
        Ok(Self { kappa, delta, beta })
    }

    /// Inter-spike interval under zero input, `2κδ/β`.
    pub fn idle_interval(&self) -> T {
        T::lit(2.0) * self.kappa * self.delta / self.beta
    }

    /// Post-reset integrator state `−δ`.
    pub fn reset_state(&self) -> T {
        -self.delta
    }
}

/// Strictly increasing spike times observed over `[t_start, t_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain<T> {
    times: Vec<T>,
    t_start: T,
    t_end: T,
}

impl<T: Real> SpikeTrain<T> {
    pub fn new(times: Vec<T>, t_start: T, t_end: T) -> Result<Self> {
        if t_end < t_start {
            return Err(Error::ReversedInterval {
                a: t_start.to_f64_lossy(),
                b: t_end.to_f64_lossy(),
            });
        }
        if let Some(i) = times.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::NotIncreasing { index: i + 1 });
        }
        if let (Some(&first), Some(&last)) = (times.first(), times.last()) {
            if first < t_start || last > t_end {
                return Err(Error::InvalidArgument(format!(
                    "spike times [{first}, {last}] fall outside the window [{t_start}, {t_end}]"
                )));
            }
        }
        Ok(Self {
            times,
            t_start,
            t_end,
        })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn window(&self) -> (T, T) {
        (self.t_start, self.t_end)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Consecutive spike pairs `(t_ℓ, t_{ℓ+1})`.
    pub fn intervals(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.times.windows(2).map(|w| (w[0], w[1]))
    }

    /// Keeps only the first `n` spikes.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            times: self.times[..n.min(self.times.len())].to_vec(),
            ..self.clone()
        }
    }
}

/// Right-hand side of the spike-to-integral identity, `2κδ − β(t_b − t_a)`.
pub fn isi_rhs<T: Real>(params: &TemParams<T>, t_a: T, t_b: T) -> Result<T> {
    if !(t_b > t_a) {
        return Err(Error::NotIncreasing { index: 1 });
    }
    Ok(T::lit(2.0) * params.kappa * params.delta - params.beta * (t_b - t_a))
}

/// Input seen by a TEM receiving `Σ_j w_j x_j(t)`.
pub fn weighted_input<T: Real>(
    weights: &[T],
    inputs: &[PeriodicSignal<T>],
) -> Result<PeriodicSignal<T>> {
    let refs: Vec<&PeriodicSignal<T>> = inputs.iter().collect();
    PeriodicSignal::linear_combination(weights, &refs)
}

const BISECTION_MAX_ITER: usize = 200;
const NEWTON_POLISH_STEPS: usize = 3;

/// Simulates a TEM driven by `input` over `[t_start, t_end]`.
///
/// Each spike is located by bisection on the strictly increasing
/// `F(t) = ζ + (1/κ)∫_{t_prev}^{t}(y + β) − δ` using closed-form integrals,
/// down to `1e−12·T`, then polished by a few bracketed Newton steps.
/// Requires `β > Σ_k |c_k|` so that `y + β > 0` everywhere.
pub fn encode<T: Real>(
    input: &PeriodicSignal<T>,
    params: &TemParams<T>,
    t_start: T,
    t_end: T,
    initial_state: T,
) -> Result<SpikeTrain<T>> {
    if t_end < t_start {
        return Err(Error::ReversedInterval {
            a: t_start.to_f64_lossy(),
            b: t_end.to_f64_lossy(),
        });
    }
    if initial_state.abs() > params.delta {
        return Err(Error::InvalidInitialState {
            state: initial_state.to_f64_lossy(),
            delta: params.delta.to_f64_lossy(),
        });
    }
    let bound = input.sup_bound();
    if !(params.beta > bound) {
        return Err(Error::BiasTooSmall {
            beta: params.beta.to_f64_lossy(),
            bound: bound.to_f64_lossy(),
        });
    }
    let rate_min = params.beta - bound;
    let rate_max = params.beta + bound;
    let period = input.period();
    let tol = (T::lit(1e-12) * period).max(T::eps() * T::lit(4.0) * t_end.abs().max(period));

    let mut times = Vec::new();
    let mut t_prev = t_start;
    let mut state = initial_state;
    loop {
        // Required growth of ∫(y+β) before the threshold is hit.
        let target = params.kappa * (params.delta - state);
        let excess = |t: T| -> T {
            input.integrate_real(t_prev, t).expect("t >= t_prev") + params.beta * (t - t_prev)
                - target
        };
        let mut lo = t_prev + target / rate_max;
        let mut hi = t_prev + target / rate_min;
        if lo > t_end {
            break;
        }
        if target <= T::zero() {
            lo = t_prev;
            hi = t_prev;
        }
        let mut iter = 0;
        while hi - lo > tol && iter < BISECTION_MAX_ITER {
            let mid = (lo + hi) / T::lit(2.0);
            if excess(mid) < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            iter += 1;
        }
        let mut t = (lo + hi) / T::lit(2.0);
        for _ in 0..NEWTON_POLISH_STEPS {
            let slope = input.value(t) + params.beta;
            let next = t - excess(t) / slope;
            if !(next >= lo && next <= hi) || next == t {
                break;
            }
            t = next;
        }
        if t > t_end {
            break;
        }
        if let Some(&last) = times.last() {
            if !(t > last) {
                // Zero-length interval; only reachable when the state starts at δ twice.
                break;
            }
        }
        times.push(t);
        t_prev = t;
        state = params.reset_state();
    }
    SpikeTrain::new(times, t_start, t_end)
}

/// Adds i.i.d. uniform jitter on `[−a, a]` to every spike, with `a` set so that
/// `20·log10(rms(ISI) / rms(noise)) = snr_db`. An infinite SNR returns the
/// train unchanged. Jitter that swaps any two spikes is rejected.
pub fn perturb_spike_times<T: Real, R: Rng + ?Sized>(
    train: &SpikeTrain<T>,
    snr_db: f64,
    rng: &mut R,
) -> Result<SpikeTrain<T>> {
    if train.len() < 2 {
        return Err(Error::InvalidArgument(
            "spike-time perturbation needs at least two spikes".into(),
        ));
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidArgument("SNR is NaN".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(train.clone());
    }
    let half_width = noise_half_width(train, snr_db);
    let times: Vec<T> = train
        .times
        .iter()
        .map(|&t| t + T::lit(rng.random_range(-half_width..=half_width)))
        .collect();
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::OrderingCollapsed { snr_db });
    }
    let t_start = train.t_start.min(times[0]);
    let t_end = train.t_end.max(*times.last().expect("nonempty"));
    SpikeTrain::new(times, t_start, t_end)
}

/// Half-width `a` of the uniform jitter for a given SNR; its rms is `a/√3`.
pub fn noise_half_width<T: Real>(train: &SpikeTrain<T>, snr_db: f64) -> f64 {
    let isi: Vec<f64> = train
        .intervals()
        .map(|(a, b)| (b - a).to_f64_lossy())
        .collect();
    let rms_isi = (isi.iter().map(|d| d * d).sum::<f64>() / isi.len() as f64).sqrt();
    let rms_noise = rms_isi / 10f64.powf(snr_db / 20.0);
    3f64.sqrt() * rms_noise
}
