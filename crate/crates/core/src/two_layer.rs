//! Two-layer networks, recovered layer by layer.
//!
//! Hidden TEMs emit unit Diracs, so each output TEM sees a filtered Dirac
//! stream whose times are the hidden spikes and whose amplitudes are one row
//! of `W2`. Per example, the output spikes give the Fourier coefficients of
//! every output input; one joint annihilating filter across the outputs gives
//! the hidden spike times; per-time amplitude vectors are columns of `W2`.
//! Pooling those vectors over examples and clustering them with k-means
//! recovers `W2` (up to a permutation of hidden units) and labels every hidden
//! spike. `W1` then follows from the one-layer solver.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::fri::{min_separation, recover_fs_from_spikes, recover_joint_diracs};
use crate::num::Real;
use crate::signals::{AliasCancellingFilter, DiracStream, PeriodicSignal};
use crate::single_layer::{learn_single_layer, Example, SingleLayerFit, SolveDiagnostics};
use crate::tem::{encode, weighted_input, SpikeTrain, TemParams};
use crate::WeightMatrix;

/// Relative gap (fraction of the period) under which two hidden spikes are
/// treated as coincident.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-6;
pub const KMEANS_MAX_ITER: usize = 500;
pub const KMEANS_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_RESTARTS: usize = 10;

/// Output spikes needed per output TEM when each of `n1` hidden TEMs fires `l`
/// spikes per period: `(2L+2)·n1`.
pub fn required_output_spikes(l: usize, n1: usize) -> Result<usize> {
    if l == 0 || n1 == 0 {
        return Err(Error::InvalidArgument(format!(
            "need at least one hidden neuron firing at least once (L = {l}, n1 = {n1})"
        )));
    }
    Ok((2 * l + 2) * n1)
}

/// Spike count each output train must reach for an example with `dirac_count`
/// hidden spikes per period and a filter of passband `passband`.
///
/// This is `2M + 2·n1`, i.e. `(2L+2)·n1` when `M = n1·L`, raised where needed
/// to the `2K+3` spikes that pin down `2K+1` Fourier coefficients.
pub fn spike_budget(dirac_count: usize, n1: usize, passband: usize) -> usize {
    (2 * dirac_count + 2 * n1).max(2 * passband + 3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerExample<T> {
    pub inputs: Vec<PeriodicSignal<T>>,
    pub target_trains: Vec<SpikeTrain<T>>,
}

/// Everything the teacher network produces for one input.
#[derive(Debug, Clone)]
pub struct TwoLayerForward<T: Real> {
    /// Hidden spikes over one period `[0, T)`.
    pub hidden_trains: Vec<SpikeTrain<T>>,
    /// Periodized unit Dirac streams built from `hidden_trains`.
    pub hidden_streams: Vec<DiracStream<T>>,
    /// Filtered, weighted input of each output TEM.
    pub layer2_inputs: Vec<PeriodicSignal<T>>,
    pub output_trains: Vec<SpikeTrain<T>>,
}

impl<T: Real> TwoLayerForward<T> {
    /// Total hidden spikes per period, `M`.
    pub fn hidden_dirac_count(&self) -> usize {
        self.hidden_trains.iter().map(|t| t.len()).sum()
    }

    /// Largest per-neuron hidden spike count, `L`.
    pub fn max_hidden_spikes(&self) -> usize {
        self.hidden_trains
            .iter()
            .map(|t| t.len())
            .max()
            .unwrap_or(0)
    }

    /// Smallest circular gap between any two hidden spikes (any neurons).
    pub fn min_hidden_separation(&self, period: T) -> T {
        let all: Vec<T> = self
            .hidden_trains
            .iter()
            .flat_map(|t| t.times().iter().copied())
            .collect();
        min_separation(&all, period)
    }

    pub fn example(&self, inputs: Vec<PeriodicSignal<T>>) -> TwoLayerExample<T> {
        TwoLayerExample {
            inputs,
            target_trains: self.output_trains.clone(),
        }
    }
}

/// Hidden layer over exactly one period from its reset state; spikes at or
/// after `T` are dropped so the trains can be periodized.
pub fn forward_hidden_layer<T: Real>(
    w1: &WeightMatrix<T>,
    inputs: &[PeriodicSignal<T>],
    params1: &TemParams<T>,
) -> Result<Vec<SpikeTrain<T>>> {
    if w1.ncols() != inputs.len() || inputs.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "W1 {:?} with {} inputs",
            w1.shape(),
            inputs.len()
        )));
    }
    let period = inputs[0].period();
    (0..w1.nrows())
        .map(|i| {
            let row: Vec<T> = w1.row(i).iter().copied().collect();
            let drive = weighted_input(&row, inputs)?;
            let raw = encode(&drive, params1, T::zero(), period, params1.reset_state())?;
            let times: Vec<T> = raw
                .times()
                .iter()
                .copied()
                .filter(|&t| t < period)
                .collect();
            SpikeTrain::new(times, T::zero(), period)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct OutputActivity<T: Real> {
    pub layer2_inputs: Vec<PeriodicSignal<T>>,
    pub output_trains: Vec<SpikeTrain<T>>,
}

/// Output layer driven by the filtered unit Dirac streams of `hidden_trains`,
/// simulated over `periods_of_exposure · T`.
pub fn forward_output_layer<T: Real>(
    w2: &WeightMatrix<T>,
    hidden_trains: &[SpikeTrain<T>],
    filter: &AliasCancellingFilter<T>,
    params2: &TemParams<T>,
    periods_of_exposure: T,
) -> Result<OutputActivity<T>> {
    if w2.ncols() != hidden_trains.len() {
        return Err(Error::DimensionMismatch(format!(
            "W2 {:?} with {} hidden trains",
            w2.shape(),
            hidden_trains.len()
        )));
    }
    let period = filter.period();
    let filtered = hidden_trains
        .iter()
        .map(|t| filter.filter_diracs(&DiracStream::unit(period, t.times().to_vec())?))
        .collect::<Result<Vec<_>>>()?;
    let t_end = periods_of_exposure * period;
    let mut layer2_inputs = Vec::with_capacity(w2.nrows());
    let mut output_trains = Vec::with_capacity(w2.nrows());
    for i in 0..w2.nrows() {
        let row: Vec<T> = w2.row(i).iter().copied().collect();
        let drive = weighted_input(&row, &filtered)?;
        output_trains.push(encode(
            &drive,
            params2,
            T::zero(),
            t_end,
            params2.reset_state(),
        )?);
        layer2_inputs.push(drive);
    }
    Ok(OutputActivity {
        layer2_inputs,
        output_trains,
    })
}

/// Teacher forward pass: [`forward_hidden_layer`] then [`forward_output_layer`].
pub fn forward_two_layer<T: Real>(
    w1: &WeightMatrix<T>,
    w2: &WeightMatrix<T>,
    inputs: &[PeriodicSignal<T>],
    filter: &AliasCancellingFilter<T>,
    params1: &TemParams<T>,
    params2: &TemParams<T>,
    periods_of_exposure: T,
) -> Result<TwoLayerForward<T>> {
    let period = filter.period();
    if let Some(x) = inputs.iter().find(|x| x.period() != period) {
        return Err(Error::PeriodMismatch {
            left: period.to_f64_lossy(),
            right: x.period().to_f64_lossy(),
        });
    }
    let hidden_trains = forward_hidden_layer(w1, inputs, params1)?;
    let hidden_streams = hidden_trains
        .iter()
        .map(|t| DiracStream::unit(period, t.times().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let OutputActivity {
        layer2_inputs,
        output_trains,
    } = forward_output_layer(w2, &hidden_trains, filter, params2, periods_of_exposure)?;
    Ok(TwoLayerForward {
        hidden_trains,
        hidden_streams,
        layer2_inputs,
        output_trains,
    })
}

/// Result of [`kmeans`].
#[derive(Debug, Clone)]
pub struct KMeansFit<T: Real> {
    pub centers: Vec<DVector<T>>,
    pub labels: Vec<usize>,
    pub inertia: T,
}

fn sq_dist<T: Real>(a: &DVector<T>, b: &DVector<T>) -> T {
    (a - b).norm_squared()
}

fn nearest<T: Real>(p: &DVector<T>, centers: &[DVector<T>]) -> (usize, T) {
    centers
        .iter()
        .enumerate()
        .map(|(c, center)| (c, sq_dist(p, center)))
        .fold((0, T::max_value().unwrap_or(T::one())), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        })
}

/// k-means++ seeding: first center uniform, the rest drawn with probability
/// proportional to the squared distance to the nearest chosen center.
fn seed_centers<T: Real, R: Rng + ?Sized>(
    points: &[DVector<T>],
    k: usize,
    rng: &mut R,
) -> Vec<DVector<T>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    while centers.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| nearest(p, &centers).1.to_f64_lossy())
            .collect();
        let total: f64 = weights.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[idx].clone());
    }
    centers
}

fn lloyd<T: Real>(points: &[DVector<T>], mut centers: Vec<DVector<T>>) -> KMeansFit<T> {
    let k = centers.len();
    let dim = points[0].len();
    let mut labels = vec![0usize; points.len()];
    let mut prev = T::max_value().unwrap_or(T::one());
    let mut inertia = prev;
    for _ in 0..KMEANS_MAX_ITER {
        let mut dists = vec![T::zero(); points.len()];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centers);
            labels[i] = c;
            dists[i] = d;
        }
        // Empty clusters take the worst-fitted point from a cluster that can spare one.
        for c in 0..k {
            let mut counts = vec![0usize; k];
            labels.iter().for_each(|&l| counts[l] += 1);
            if counts[c] > 0 {
                continue;
            }
            let donor = (0..points.len()).filter(|&i| counts[labels[i]] > 1).fold(
                None::<usize>,
                |best, i| match best {
                    Some(b) if dists[b] >= dists[i] => Some(b),
                    _ => Some(i),
                },
            );
            if let Some(i) = donor {
                labels[i] = c;
                dists[i] = T::zero();
            }
        }
        let mut sums = vec![DVector::<T>::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l] += p;
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = &sums[c] / T::from_usize_lossy(counts[c]);
            }
        }
        inertia = points
            .iter()
            .zip(&labels)
            .fold(T::zero(), |s, (p, &l)| s + sq_dist(p, &centers[l]));
        if prev - inertia <= T::lit(KMEANS_TOLERANCE) * prev || inertia == T::zero() {
            break;
        }
        prev = inertia;
    }
    KMeansFit {
        centers,
        labels,
        inertia,
    }
}

/// Lloyd's algorithm, best of `restarts` k-means++ seedings. Iterates until
/// the relative inertia change drops below `1e−12` or 500 iterations.
/// Deterministic for a given `rng` state.
pub fn kmeans<T: Real, R: Rng + ?Sized>(
    points: &[DVector<T>],
    k: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<KMeansFit<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            k,
            points: points.len(),
        });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch(
            "points differ in dimension".into(),
        ));
    }
    let mut best: Option<KMeansFit<T>> = None;
    for _ in 0..restarts.max(1) {
        let fit = lloyd(points, seed_centers(points, k, rng));
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    pub restarts: usize,
    /// Fraction of the period below which two hidden spikes count as coincident.
    pub coincidence_threshold: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            coincidence_threshold: COINCIDENCE_THRESHOLD,
        }
    }
}

/// Diagnostics of the annihilation and clustering stages.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResiduals<T> {
    /// Per example, smallest over largest singular value of the joint Toeplitz matrix.
    pub annihilation: Vec<T>,
    /// Largest imaginary part discarded from any amplitude fit.
    pub amplitude_imag: T,
    pub inertia: T,
    pub min_center_distance: T,
    /// Set when the rms distance of points to their center exceeds a tenth
    /// of the smallest distance between centers.
    pub clustering_warning: bool,
}

/// Hidden-layer activity and `W2` recovered from output spikes.
#[derive(Debug, Clone)]
pub struct HiddenRecovery<T: Real> {
    /// `n2 × n1`; column `c` is the center of cluster `c`.
    pub w2_hat: WeightMatrix<T>,
    /// `hidden_trains[example][neuron]`: sorted spike times in `[0, T)`.
    pub hidden_trains: Vec<Vec<Vec<T>>>,
    /// `dirac_times[example]`: every recovered hidden spike, sorted.
    pub dirac_times: Vec<Vec<T>>,
    /// `assignment_labels[example][m]` is the hidden neuron of `dirac_times[example][m]`.
    pub assignment_labels: Vec<Vec<usize>>,
    pub residuals: RecoveryResiduals<T>,
}

/// Recovers `W2` and the periodized hidden spike trains.
///
/// `dirac_counts[e]` is the number of hidden spikes per period in example `e`
/// (`n1·L` when every hidden neuron fires `L` times).
pub fn recover_hidden_and_w2<T: Real, R: Rng + ?Sized>(
    examples: &[TwoLayerExample<T>],
    filter: &AliasCancellingFilter<T>,
    params2: &TemParams<T>,
    n1: usize,
    dirac_counts: &[usize],
    options: &RecoveryOptions,
    rng: &mut R,
) -> Result<HiddenRecovery<T>> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one example is required".into(),
        ));
    }
    if dirac_counts.len() != examples.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} Dirac counts for {} examples",
            dirac_counts.len(),
            examples.len()
        )));
    }
    if n1 == 0 {
        return Err(Error::InvalidArgument("n1 must be positive".into()));
    }
    let n2 = examples[0].target_trains.len();
    if n2 == 0 || examples.iter().any(|e| e.target_trains.len() != n2) {
        return Err(Error::DimensionMismatch(
            "every example needs the same nonzero number of output trains".into(),
        ));
    }
    let period = filter.period();
    let passband = filter.passband();

    for (e, (ex, &m)) in examples.iter().zip(dirac_counts).enumerate() {
        if m > passband {
            return Err(Error::InvalidArgument(format!(
                "example {e}: {m} hidden Diracs exceed the filter passband {passband}"
            )));
        }
        let need = spike_budget(m, n1, passband);
        if let Some((i, t)) = ex
            .target_trains
            .iter()
            .enumerate()
            .find(|(_, t)| t.len() < need)
        {
            return Err(Error::SpikeBudget {
                example: e,
                neuron: i,
                have: t.len(),
                need,
            });
        }
    }

    let mut dirac_times = Vec::with_capacity(examples.len());
    let mut points = Vec::new();
    let mut owners = Vec::new();
    let mut annihilation = Vec::with_capacity(examples.len());
    let mut amplitude_imag = T::zero();
    for (e, (ex, &m)) in examples.iter().zip(dirac_counts).enumerate() {
        if m == 0 {
            dirac_times.push(Vec::new());
            annihilation.push(T::zero());
            continue;
        }
        let channels = ex
            .target_trains
            .iter()
            .map(|t| recover_fs_from_spikes(t, params2, passband, period))
            .collect::<Result<Vec<_>>>()?;
        let joint = recover_joint_diracs(&channels, filter, m)?;
        if joint.filter.ambiguous {
            return Err(Error::UnresolvedDiracs { expected: m });
        }
        let sep = min_separation(&joint.times, period);
        let threshold = T::lit(options.coincidence_threshold) * period;
        if m > 1 && sep < threshold {
            return Err(Error::CoincidentSpikes {
                separation: sep.to_f64_lossy(),
                threshold: threshold.to_f64_lossy(),
            });
        }
        let sv = &joint.filter.singular_values;
        annihilation.push(sv[sv.len() - 1] / sv[0]);
        amplitude_imag = amplitude_imag.max(joint.imag_residual);
        for (idx, _) in joint.times.iter().enumerate() {
            points.push(DVector::from_fn(n2, |i, _| joint.amplitudes[i][idx]));
            owners.push((e, idx));
        }
        dirac_times.push(joint.times);
    }

    let fit = kmeans(&points, n1, options.restarts, rng)?;
    let mut counts = vec![0usize; n1];
    fit.labels.iter().for_each(|&l| counts[l] += 1);
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::ClusterCollapse(format!("cluster {c} is empty")));
    }
    let scale = fit
        .centers
        .iter()
        .fold(T::zero(), |s, c| s.max(c.norm()))
        .max(T::one());
    let mut min_center_distance = T::max_value().unwrap_or(T::one());
    for a in 0..n1 {
        for b in (a + 1)..n1 {
            min_center_distance =
                min_center_distance.min(sq_dist(&fit.centers[a], &fit.centers[b]).sqrt());
        }
    }
    if n1 > 1 && min_center_distance <= T::lit(1e3) * T::eps() * scale {
        return Err(Error::ClusterCollapse(format!(
            "cluster centers coincide (distance {min_center_distance})"
        )));
    }
    let rms = (fit.inertia / T::from_usize_lossy(points.len())).sqrt();
    let clustering_warning = n1 > 1 && rms > T::lit(0.1) * min_center_distance;

    let w2_hat = DMatrix::from_fn(n2, n1, |i, c| fit.centers[c][i]);
    let mut hidden_trains = vec![vec![Vec::new(); n1]; examples.len()];
    let mut assignment_labels: Vec<Vec<usize>> =
        dirac_times.iter().map(|t| vec![0; t.len()]).collect();
    for (&(e, idx), &label) in owners.iter().zip(&fit.labels) {
        hidden_trains[e][label].push(dirac_times[e][idx]);
        assignment_labels[e][idx] = label;
    }
    Ok(HiddenRecovery {
        w2_hat,
        hidden_trains,
        dirac_times,
        assignment_labels,
        residuals: RecoveryResiduals {
            annihilation,
            amplitude_imag,
            inertia: fit.inertia,
            min_center_distance: if n1 > 1 {
                min_center_distance
            } else {
                T::zero()
            },
            clustering_warning,
        },
    })
}

/// Learns `W1` with the recovered hidden trains as one-layer targets. Row `c`
/// of the result belongs to hidden neuron `c` of the recovery, so `Ŵ1` rows and
/// `Ŵ2` columns share one labelling.
pub fn recover_w1<T: Real>(
    examples: &[TwoLayerExample<T>],
    hidden_trains: &[Vec<Vec<T>>],
    params1: &TemParams<T>,
) -> Result<SingleLayerFit<T>> {
    if hidden_trains.len() != examples.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} hidden train sets for {} examples",
            hidden_trains.len(),
            examples.len()
        )));
    }
    let n1 = hidden_trains.first().map_or(0, |h| h.len());
    if n1 == 0 {
        return Err(Error::InvalidArgument("no hidden neurons".into()));
    }
    for neuron in 0..n1 {
        if hidden_trains.iter().all(|h| h[neuron].is_empty()) {
            return Err(Error::NoIntervals { neuron });
        }
    }
    let single = examples
        .iter()
        .zip(hidden_trains)
        .map(|(ex, trains)| {
            let period = ex
                .inputs
                .first()
                .ok_or_else(|| Error::InvalidArgument("example without inputs".into()))?
                .period();
            let targets = trains
                .iter()
                .map(|t| SpikeTrain::new(t.clone(), T::zero(), period))
                .collect::<Result<Vec<_>>>()?;
            Example::new(ex.inputs.clone(), targets)
        })
        .collect::<Result<Vec<_>>>()?;
    learn_single_layer(&single, &vec![*params1; n1])
}

#[derive(Debug, Clone)]
pub struct TwoLayerFit<T: Real> {
    pub w1_hat: WeightMatrix<T>,
    pub w2_hat: WeightMatrix<T>,
    pub recovery: HiddenRecovery<T>,
    pub w1_diagnostics: Vec<SolveDiagnostics<T>>,
}

/// Full layer-by-layer pipeline: hidden activity and `W2` first, then `W1`.
#[allow(clippy::too_many_arguments)]
pub fn learn_two_layer<T: Real, R: Rng + ?Sized>(
    examples: &[TwoLayerExample<T>],
    filter: &AliasCancellingFilter<T>,
    params1: &TemParams<T>,
    params2: &TemParams<T>,
    n1: usize,
    dirac_counts: &[usize],
    options: &RecoveryOptions,
    rng: &mut R,
) -> Result<TwoLayerFit<T>> {
    let recovery =
        recover_hidden_and_w2(examples, filter, params2, n1, dirac_counts, options, rng)?;
    let fit = recover_w1(examples, &recovery.hidden_trains, params1)?;
    Ok(TwoLayerFit {
        w1_hat: fit.weights,
        w2_hat: recovery.w2_hat.clone(),
        recovery,
        w1_diagnostics: fit.diagnostics,
    })
}
