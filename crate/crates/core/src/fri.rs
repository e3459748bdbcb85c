//! Finite-rate-of-innovation recovery from TEM spikes.
//!
//! Pipeline: spike times → Fourier coefficients of the TEM input (linear least
//! squares) → annihilating filter (Toeplitz nullspace via SVD) → Dirac times
//! (companion-matrix roots projected to the unit circle) → Dirac amplitudes
//! (Vandermonde least squares).

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{lstsq, smallest_right_singular_vector};
use crate::num::{argument, circular_distance, cis, modulus, wrap_time, Real};
use crate::signals::{harmonic_integral, AliasCancellingFilter, PeriodicSignal};
use crate::tem::{isi_rhs, SpikeTrain, TemParams};

/// Conditioning limit for the spike-to-coefficient system.
const MAX_COEFF_CONDITION: f64 = 1e12;
/// Conditioning limit for the amplitude (Vandermonde) system.
const MAX_VANDERMONDE_CONDITION: f64 = 1e10;
/// Relative gap between the two smallest singular values below which the
/// annihilating filter is reported as ambiguous.
const AMBIGUITY_GAP: f64 = 1e-10;
/// Relative singular-value threshold used by [`estimate_dirac_count`].
pub const RANK_THRESHOLD: f64 = 1e-7;

/// Smallest spike count that determines `2K+1` Fourier coefficients.
pub fn min_spikes_for_bandwidth(bandwidth: usize) -> usize {
    2 * bandwidth + 3
}

/// Recovers the `2K+1` Fourier coefficients of a real, `period`-periodic input
/// from the spikes it produced.
///
/// Each inter-spike interval gives one real equation
/// `c_0·Δt + Σ_{k≥1} 2·Re(c_k ∫e^{jkω₀t}) = 2κδ − βΔt` in the Hermitian
/// unknowns `(c_0, Re c_1, Im c_1, …, Re c_K, Im c_K)`.
pub fn recover_fs_from_spikes<T: Real>(
    train: &SpikeTrain<T>,
    params: &TemParams<T>,
    bandwidth: usize,
    period: T,
) -> Result<PeriodicSignal<T>> {
    let need = min_spikes_for_bandwidth(bandwidth);
    if train.len() < need {
        return Err(Error::TooFewSpikes {
            have: train.len(),
            need,
            bandwidth,
        });
    }
    let unknowns = 2 * bandwidth + 1;
    let rows = train.len() - 1;
    let omega0 = T::two_pi() / period;
    let two = T::lit(2.0);
    let mut a = DMatrix::<T>::zeros(rows, unknowns);
    let mut b = DVector::<T>::zeros(rows);
    for (r, (t0, t1)) in train.intervals().enumerate() {
        a[(r, 0)] = t1 - t0;
        for k in 1..=bandwidth {
            let e = harmonic_integral(k as isize, omega0, t0, t1);
            a[(r, 2 * k - 1)] = two * e.re;
            a[(r, 2 * k)] = -two * e.im;
        }
        b[r] = isi_rhs(params, t0, t1)?;
    }
    let sol = lstsq(&a, &b);
    if sol.rank < unknowns || sol.condition > T::lit(MAX_COEFF_CONDITION) {
        return Err(Error::RankDeficient {
            condition: sol.condition.to_f64_lossy(),
        });
    }
    let x = sol.solution;
    let mut half = Vec::with_capacity(bandwidth + 1);
    half.push(Complex::new(x[0], T::zero()));
    for k in 1..=bandwidth {
        half.push(Complex::new(x[2 * k - 1], x[2 * k]));
    }
    PeriodicSignal::from_half_spectrum(period, &half)
}

/// Unit-norm filter `h` of order `M` with `Σ_l h_l X_{k−l} ≈ 0`.
///
/// Its polynomial `h_0 u^M + h_1 u^{M−1} + … + h_M` vanishes at
/// `u_m = e^{−jω₀t_m}` for every Dirac time `t_m`.
#[derive(Debug, Clone)]
pub struct AnnihilatingFilter<T> {
    taps: Vec<Complex<T>>,
    /// Singular values of the stacked Toeplitz matrix, descending.
    pub singular_values: Vec<T>,
    /// Set when the two smallest singular values are within `1e−10·σ_max`,
    /// i.e. the nullspace is not one-dimensional.
    pub ambiguous: bool,
}

impl<T: Real> AnnihilatingFilter<T> {
    /// Normalises arbitrary taps to unit norm.
    pub fn from_taps(taps: Vec<Complex<T>>) -> Result<Self> {
        let norm = taps.iter().fold(T::zero(), |s, t| s + t.norm_sqr()).sqrt();
        if taps.len() < 2 || !(norm > T::zero()) {
            return Err(Error::InvalidArgument(
                "annihilating filter needs at least two taps, not all zero".into(),
            ));
        }
        Ok(Self {
            taps: taps.into_iter().map(|t| t.unscale(norm)).collect(),
            singular_values: Vec::new(),
            ambiguous: false,
        })
    }

    pub fn taps(&self) -> &[Complex<T>] {
        &self.taps
    }

    /// Number of Diracs `M` the filter annihilates.
    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    /// Norm of the valid part of `taps ∗ sequence`.
    pub fn residual_norm(&self, sequence: &[Complex<T>]) -> T {
        let m = self.order();
        (m..sequence.len())
            .map(|k| {
                self.taps
                    .iter()
                    .enumerate()
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (l, h)| {
                        acc + *h * sequence[k - l]
                    })
                    .norm_sqr()
            })
            .fold(T::zero(), |s, v| s + v)
            .sqrt()
    }
}

/// Joint annihilating filter of order `dirac_count` for sequences that share
/// Dirac times: stacks one Toeplitz block per sequence and takes the right
/// singular vector of the smallest singular value.
pub fn annihilating_filter<T: Real>(
    sequences: &[&[Complex<T>]],
    dirac_count: usize,
) -> Result<AnnihilatingFilter<T>> {
    let m = dirac_count;
    if m == 0 {
        return Err(Error::InvalidArgument(
            "annihilating filter needs at least one Dirac".into(),
        ));
    }
    if let Some(short) = sequences.iter().find(|s| s.len() < m + 1) {
        return Err(Error::InsufficientRows {
            have: short.len(),
            need: m + 1,
        });
    }
    let rows: usize = sequences.iter().map(|s| s.len() - m).sum();
    if rows < m {
        return Err(Error::InsufficientRows {
            have: rows,
            need: m,
        });
    }
    let mut toeplitz = DMatrix::<Complex<T>>::zeros(rows, m + 1);
    let mut r = 0;
    for seq in sequences {
        for k in m..seq.len() {
            for l in 0..=m {
                toeplitz[(r, l)] = seq[k - l];
            }
            r += 1;
        }
    }
    let (v, sv) = smallest_right_singular_vector(&toeplitz);
    let sigma_max = sv[0];
    let mut sorted: Vec<T> = sv.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    let n = sorted.len();
    let ambiguous = n >= 2
        && m + 1 >= 2
        && sorted[n - 2] - sorted[n - 1] <= T::lit(AMBIGUITY_GAP) * sigma_max.max(sorted[0]);
    Ok(AnnihilatingFilter {
        taps: v.iter().copied().collect(),
        singular_values: sorted,
        ambiguous,
    })
}

/// Counts singular values of the square-ish Toeplitz matrix above
/// `RANK_THRESHOLD·σ_max`; an estimate of the number of Diracs.
pub fn estimate_dirac_count<T: Real>(sequences: &[&[Complex<T>]]) -> Result<usize> {
    let len = sequences
        .iter()
        .map(|s| s.len())
        .min()
        .ok_or_else(|| Error::InvalidArgument("no sequences".into()))?;
    let cols = len.div_ceil(2);
    let rows: usize = sequences.iter().map(|s| s.len() + 1 - cols).sum();
    let mut toeplitz = DMatrix::<Complex<T>>::zeros(rows, cols);
    let mut r = 0;
    for seq in sequences {
        for k in (cols - 1)..seq.len() {
            for l in 0..cols {
                toeplitz[(r, l)] = seq[k - l];
            }
            r += 1;
        }
    }
    let sv = toeplitz.singular_values();
    let sigma_max = sv.iter().copied().fold(T::zero(), |m, s| m.max(s));
    Ok(sv
        .iter()
        .filter(|&&s| s > T::lit(RANK_THRESHOLD) * sigma_max)
        .count())
}

fn horner<T: Real>(coeffs: &[Complex<T>], u: Complex<T>) -> (Complex<T>, Complex<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    coeffs
        .iter()
        .fold((zero, zero), |(p, dp), c| (p * u + *c, dp * u + p))
}

/// Roots of `h_0 u^M + … + h_M` via eigenvalues of the companion matrix,
/// each refined by up to two Newton steps.
pub fn polynomial_roots<T: Real>(coeffs: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let m = coeffs.len().saturating_sub(1);
    if m == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[0];
    let scale = coeffs.iter().fold(T::zero(), |s, c| s.max(modulus(*c)));
    if modulus(lead) <= T::eps() * scale {
        return Err(Error::RootFinding(
            "leading coefficient vanishes (root at infinity)".into(),
        ));
    }
    let mut companion = DMatrix::<Complex<T>>::zeros(m, m);
    for j in 0..m {
        companion[(0, j)] = -coeffs[j + 1] / lead;
    }
    for i in 1..m {
        companion[(i, i - 1)] = Complex::new(T::one(), T::zero());
    }
    let schur = Schur::try_new(companion, T::eps(), 10_000)
        .ok_or_else(|| Error::RootFinding("Schur iteration did not converge".into()))?;
    let eig = schur
        .eigenvalues()
        .ok_or_else(|| Error::RootFinding("Schur form not triangular".into()))?;
    Ok(eig
        .iter()
        .map(|&u0| {
            let mut u = u0;
            for _ in 0..2 {
                let (p, dp) = horner(coeffs, u);
                if modulus(dp) == T::zero() {
                    break;
                }
                let next = u - p / dp;
                if modulus(horner(coeffs, next).0) < modulus(p) {
                    u = next;
                } else {
                    break;
                }
            }
            u
        })
        .collect())
}

/// Dirac times `t = (−T·arg(u)/2π) mod T` from the annihilating-filter roots,
/// sorted ascending. Root magnitudes are discarded.
pub fn dirac_times<T: Real>(filter: &AnnihilatingFilter<T>, period: T) -> Result<Vec<T>> {
    let roots = polynomial_roots(filter.taps())?;
    let mut times: Vec<T> = roots
        .into_iter()
        .map(|u| wrap_time(-period * argument(u) / T::two_pi(), period))
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    Ok(times)
}

/// Least-squares Dirac amplitudes and the largest discarded imaginary part.
#[derive(Debug, Clone)]
pub struct AmplitudeFit<T> {
    pub amplitudes: Vec<T>,
    pub imag_residual: T,
}

/// Smallest circular gap between any two times.
pub fn min_separation<T: Real>(times: &[T], period: T) -> T {
    let mut best = period;
    for i in 0..times.len() {
        for j in (i + 1)..times.len() {
            best = best.min(circular_distance(times[i], times[j], period));
        }
    }
    best
}

/// Solves `(1/T)·Σ_m c_m e^{−jkω₀t_m} = Y_k / H_k`, `k = −K..K`, for real `c_m`.
pub fn dirac_amplitudes<T: Real>(
    times: &[T],
    coeffs: &PeriodicSignal<T>,
    filter: &AliasCancellingFilter<T>,
) -> Result<AmplitudeFit<T>> {
    let period = coeffs.period();
    if filter.period() != period {
        return Err(Error::PeriodMismatch {
            left: filter.period().to_f64_lossy(),
            right: period.to_f64_lossy(),
        });
    }
    let bandwidth = coeffs.bandwidth();
    if bandwidth < times.len() {
        return Err(Error::DimensionMismatch(format!(
            "bandwidth {bandwidth} is smaller than the Dirac count {}",
            times.len()
        )));
    }
    if filter.passband() < bandwidth {
        return Err(Error::DimensionMismatch(format!(
            "filter passband {} narrower than coefficient bandwidth {bandwidth}",
            filter.passband()
        )));
    }
    if let Some(t) = times.iter().find(|&&t| t < T::zero() || t >= period) {
        return Err(Error::InvalidArgument(format!(
            "Dirac time {t} outside [0, {period})"
        )));
    }
    if times.is_empty() {
        return Ok(AmplitudeFit {
            amplitudes: Vec::new(),
            imag_residual: T::zero(),
        });
    }
    let omega0 = T::two_pi() / period;
    let inv_t = T::one() / period;
    let k_max = bandwidth as isize;
    let n_rows = 2 * bandwidth + 1;
    let mut a = DMatrix::<Complex<T>>::zeros(n_rows, times.len());
    let mut b = DVector::<Complex<T>>::zeros(n_rows);
    for (r, k) in (-k_max..=k_max).enumerate() {
        let kw = T::from_isize(k).unwrap() * omega0;
        for (m, &t) in times.iter().enumerate() {
            a[(r, m)] = cis(-kw * t).scale(inv_t);
        }
        b[r] = coeffs.coeff(k) / filter.gain(k);
    }
    let sol = lstsq(&a, &b);
    if sol.rank < times.len() || sol.condition > T::lit(MAX_VANDERMONDE_CONDITION) {
        return Err(Error::IllConditioned {
            condition: sol.condition.to_f64_lossy(),
            min_separation: min_separation(times, period).to_f64_lossy(),
        });
    }
    let imag_residual = sol
        .solution
        .iter()
        .fold(T::zero(), |m, c| m.max(c.im.abs()));
    Ok(AmplitudeFit {
        amplitudes: sol.solution.iter().map(|c| c.re).collect(),
        imag_residual,
    })
}

/// Times and amplitudes of the Diracs behind a set of recovered coefficient
/// sequences (one per channel).
#[derive(Debug, Clone)]
pub struct JointDiracs<T> {
    pub times: Vec<T>,
    /// `amplitudes[channel][m]` belongs to `times[m]`.
    pub amplitudes: Vec<Vec<T>>,
    pub filter: AnnihilatingFilter<T>,
    pub imag_residual: T,
}

/// Joint annihilation across channels followed by per-channel amplitude fits.
pub fn recover_joint_diracs<T: Real>(
    channels: &[PeriodicSignal<T>],
    filter: &AliasCancellingFilter<T>,
    dirac_count: usize,
) -> Result<JointDiracs<T>> {
    let first = channels
        .first()
        .ok_or_else(|| Error::InvalidArgument("no channels".into()))?;
    let period = first.period();
    let equalised: Vec<Vec<Complex<T>>> = channels
        .iter()
        .map(|y| {
            let k_max = y.bandwidth() as isize;
            (-k_max..=k_max)
                .map(|k| y.coeff(k) / filter.gain(k))
                .collect()
        })
        .collect();
    let refs: Vec<&[Complex<T>]> = equalised.iter().map(|v| v.as_slice()).collect();
    let annihilator = annihilating_filter(&refs, dirac_count)?;
    let times = dirac_times(&annihilator, period)?;
    let mut amplitudes = Vec::with_capacity(channels.len());
    let mut imag_residual = T::zero();
    for y in channels {
        let fit = dirac_amplitudes(&times, y, filter)?;
        imag_residual = imag_residual.max(fit.imag_residual);
        amplitudes.push(fit.amplitudes);
    }
    Ok(JointDiracs {
        times,
        amplitudes,
        filter: annihilator,
        imag_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{DiracStream, PeriodicSignal};
    use crate::tem::encode;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    /// Fourier coefficients of a Dirac stream, written out independently of `signals`.
    fn analytic_coeffs(times: &[f64], amps: &[f64], k_max: i64, period: f64) -> Vec<Complex<f64>> {
        (-k_max..=k_max)
            .map(|k| {
                times.iter().zip(amps).fold(c(0.0, 0.0), |acc, (&t, &a)| {
                    let ph = -2.0 * PI * k as f64 * t / period;
                    acc + c(a * ph.cos() / period, a * ph.sin() / period)
                })
            })
            .collect()
    }

    fn params_for(y: &PeriodicSignal<f64>, spikes_per_period: f64) -> TemParams<f64> {
        let beta = 1.5 * y.sup_bound() + 0.1;
        let kappa_delta = beta * y.period() / (2.0 * spikes_per_period);
        TemParams::new(1.0, kappa_delta, beta).unwrap()
    }

    #[test]
    fn constant_input_recovered() {
        let y = PeriodicSignal::<f64>::constant(0.7, 0, 1.0).unwrap();
        let p = TemParams::new(1.0, 0.5, 2.0).unwrap();
        let train = encode(&y, &p, 0.0, 2.0, -0.5).unwrap();
        assert!(train.len() >= 3);
        let rec = recover_fs_from_spikes(&train, &p, 0, 1.0).unwrap();
        assert!((rec.coeff(0).re - 0.7).abs() < 1e-10);
    }

    #[test]
    fn round_trip_through_encoder() {
        let period = 1.0;
        let filter = AliasCancellingFilter::dirichlet(4, period).unwrap();
        let stream =
            DiracStream::new(period, vec![0.13, 0.58, 0.81], vec![1.0, -0.6, 0.9]).unwrap();
        let y = filter.filter_diracs(&stream).unwrap();
        let p = params_for(&y, 12.0);
        let train = encode(&y, &p, 0.0, 2.0 * period, -p.delta).unwrap();
        let rec = recover_fs_from_spikes(&train, &p, 4, period).unwrap();
        let scale = y.coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, b) in rec.coeffs().iter().zip(y.coeffs()) {
            assert!((a - b).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn spike_count_boundary() {
        let period = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = crate::signals::random_bandlimited(3, period, 0.5, &mut rng).unwrap();
        let p = params_for(&y, 6.0);
        let train = encode(&y, &p, 0.0, 4.0, -p.delta).unwrap();
        let need = min_spikes_for_bandwidth(3);
        assert_eq!(need, 9);
        assert!(recover_fs_from_spikes(&train.truncated(need), &p, 3, period).is_ok());
        assert!(matches!(
            recover_fs_from_spikes(&train.truncated(need - 1), &p, 3, period),
            Err(Error::TooFewSpikes {
                have: 8,
                need: 9,
                ..
            })
        ));
    }

    #[test]
    fn first_order_annihilator() {
        let tau = 0.3;
        let seq = analytic_coeffs(&[tau], &[1.0], 1, 1.0);
        let f = annihilating_filter(&[&seq], 1).unwrap();
        let h = f.taps();
        let expected = -c((-2.0 * PI * tau).cos(), (-2.0 * PI * tau).sin());
        assert!((h[1] / h[0] - expected).norm() < 1e-12);
    }

    #[test]
    fn three_diracs_annihilated() {
        let seq = analytic_coeffs(&[0.1, 0.45, 0.7], &[1.0, 2.0, -0.5], 4, 1.0);
        let f = annihilating_filter(&[&seq], 3).unwrap();
        let norm: f64 = seq.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(f.residual_norm(&seq) <= 1e-10 * norm);
        assert!(!f.ambiguous);
    }

    #[test]
    fn joint_filter_matches_single_channel() {
        let times = [0.05, 0.33, 0.62, 0.9];
        let amps = [
            [1.0, 1.2, 0.8, 1.1],
            [0.01, -0.02, 0.03, 0.01],
            [-2.0, 0.5, 0.3, 1.0],
            [0.2, 0.2, -0.7, 0.4],
        ];
        let seqs: Vec<Vec<Complex<f64>>> = amps
            .iter()
            .map(|a| analytic_coeffs(&times, a, 5, 1.0))
            .collect();
        let refs: Vec<&[Complex<f64>]> = seqs.iter().map(|s| s.as_slice()).collect();
        let joint = dirac_times(&annihilating_filter(&refs, 4).unwrap(), 1.0).unwrap();
        let single = dirac_times(&annihilating_filter(&[&seqs[0]], 4).unwrap(), 1.0).unwrap();
        for (a, b) in joint.iter().zip(&single) {
            assert!((a - b).abs() < 1e-8);
        }
        let mut reversed = refs.clone();
        reversed.reverse();
        let rev = dirac_times(&annihilating_filter(&reversed, 4).unwrap(), 1.0).unwrap();
        for (a, b) in joint.iter().zip(&rev) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ambiguity_flagged_when_order_too_high() {
        let seq = analytic_coeffs(&[0.2], &[1.0], 3, 1.0);
        let f = annihilating_filter(&[&seq], 2).unwrap();
        assert!(f.ambiguous);
    }

    #[test]
    fn insufficient_rows_rejected() {
        let seq = analytic_coeffs(&[0.2], &[1.0], 1, 1.0);
        assert!(matches!(
            annihilating_filter(&[&seq], 3),
            Err(Error::InsufficientRows { .. })
        ));
        assert!(matches!(
            annihilating_filter(&[&seq[..]], 2),
            Err(Error::InsufficientRows { have: 1, need: 2 })
        ));
    }

    #[test]
    fn root_at_one_gives_time_zero() {
        let s = 1.0 / 2f64.sqrt();
        let f = AnnihilatingFilter::from_taps(vec![c(s, 0.0), c(-s, 0.0)]).unwrap();
        let t = dirac_times(&f, 1.0).unwrap();
        assert!(t[0].abs() < 1e-15 || (1.0 - t[0]).abs() < 1e-15);
    }

    #[test]
    fn quarter_period_root() {
        let u = c((-PI / 2.0).cos(), (-PI / 2.0).sin());
        let f = AnnihilatingFilter::from_taps(vec![c(1.0, 0.0), -u]).unwrap();
        let t = dirac_times(&f, 1.0).unwrap();
        assert!((t[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn four_random_times_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let period = 2.0;
        let mut truth: Vec<f64> = (0..4)
            .map(|i| period * (i as f64 + rng.random_range(0.1..0.9)) / 4.0)
            .collect();
        truth.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let seq = analytic_coeffs(&truth, &[1.0, -0.4, 0.7, 1.3], 4, period);
        let f = annihilating_filter(&[&seq], 4).unwrap();
        let got = dirac_times(&f, period).unwrap();
        for (a, b) in got.iter().zip(&truth) {
            assert!((a - b).abs() <= 1e-9 * period);
        }
        let scaled =
            AnnihilatingFilter::from_taps(f.taps().iter().map(|h| h * c(0.0, 3.0)).collect())
                .unwrap();
        assert_eq!(dirac_times(&scaled, period).unwrap().len(), 4);
        for (a, b) in dirac_times(&scaled, period).unwrap().iter().zip(&got) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitudes_recovered() {
        let filter = AliasCancellingFilter::<f64>::dirichlet(2, 1.0).unwrap();
        let one = DiracStream::new(1.0, vec![0.4], vec![1.0]).unwrap();
        let y = filter.filter_diracs(&one).unwrap();
        let fit = dirac_amplitudes(&[0.4], &y, &filter).unwrap();
        assert!((fit.amplitudes[0] - 1.0).abs() < 1e-12);

        let two = DiracStream::new(1.0, vec![0.2, 0.7], vec![2.0, -3.0]).unwrap();
        let y = filter.filter_diracs(&two).unwrap();
        let fit = dirac_amplitudes(&[0.2, 0.7], &y, &filter).unwrap();
        assert!((fit.amplitudes[0] - 2.0).abs() < 1e-10);
        assert!((fit.amplitudes[1] + 3.0).abs() < 1e-10);

        let scaled = PeriodicSignal::linear_combination(&[2.5], &[&y]).unwrap();
        let fit2 = dirac_amplitudes(&[0.2, 0.7], &scaled, &filter).unwrap();
        for (a, b) in fit2.amplitudes.iter().zip(&fit.amplitudes) {
            assert!((a - 2.5 * b).abs() < 1e-10);
        }
    }

    #[test]
    fn nearly_coincident_times_are_ill_conditioned() {
        let filter = AliasCancellingFilter::dirichlet(2, 1.0).unwrap();
        let y = filter
            .filter_diracs(&DiracStream::new(1.0, vec![0.3], vec![1.0]).unwrap())
            .unwrap();
        let r = dirac_amplitudes(&[0.3, 0.3 + 1e-13], &y, &filter);
        assert!(matches!(r, Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn gains_are_divided_out() {
        let gains = vec![
            c(0.5, 0.2),
            c(2.0, -1.0),
            c(1.0, 0.0),
            c(2.0, 1.0),
            c(0.5, -0.2),
        ];
        let filter = AliasCancellingFilter::new(1.0, gains).unwrap();
        let stream = DiracStream::new(1.0, vec![0.15, 0.6], vec![0.8, -1.1]).unwrap();
        let y = filter.filter_diracs(&stream).unwrap();
        let joint = recover_joint_diracs(&[y], &filter, 2).unwrap();
        assert!((joint.times[0] - 0.15).abs() < 1e-12 && (joint.times[1] - 0.6).abs() < 1e-12);
        assert!((joint.amplitudes[0][0] - 0.8).abs() < 1e-12);
        assert!((joint.amplitudes[0][1] + 1.1).abs() < 1e-12);
    }

    #[test]
    fn dirac_count_estimate() {
        let seq = analytic_coeffs(&[0.1, 0.5, 0.8], &[1.0, 0.5, -0.7], 5, 1.0);
        assert_eq!(estimate_dirac_count(&[&seq]).unwrap(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn end_to_end_exact(seed in any::<u64>(), m in 1usize..=5, extra_k in 0usize..2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let period = 1.0;
            let k = m + extra_k;
            // jittered grid keeps the Diracs apart
            let times: Vec<f64> = (0..m).map(|i| period * (i as f64 + rng.random_range(0.15..0.85)) / m as f64).collect();
            let amps: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..1.5) * if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let filter = AliasCancellingFilter::dirichlet(k, period).unwrap();
            let y = filter.filter_diracs(&DiracStream::new(period, times.clone(), amps.clone()).unwrap()).unwrap();
            let p = params_for(&y, (2 * k + 4) as f64);
            let train = encode(&y, &p, 0.0, 2.0 * period, -p.delta).unwrap();
            prop_assert!(train.len() > 2 * k + 2);
            let rec = recover_fs_from_spikes(&train, &p, k, period).unwrap();
            let joint = recover_joint_diracs(&[rec], &filter, m).unwrap();
            let amax = amps.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for i in 0..m {
                prop_assert!((joint.times[i] - times[i]).abs() <= 1e-9 * period);
                prop_assert!((joint.amplitudes[0][i] - amps[i]).abs() <= 1e-8 * amax);
            }
        }
    }
}
