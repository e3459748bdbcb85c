//! Periodic bandlimited signals held in the Fourier domain, periodized Dirac
//! streams, and alias-cancelling filters.
//!
//! Coefficient storage is symmetric: harmonic `k ∈ −K..=K` lives at index
//! `k + K`. Every routine in the crate goes through [`PeriodicSignal::coeff`]
//! or [`harmonic_index`] rather than computing offsets by hand.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::num::{cis, modulus, sinc, wrap_time, Real};

/// Storage index of harmonic `k` for bandwidth `bandwidth`.
#[inline]
pub fn harmonic_index(k: isize, bandwidth: usize) -> usize {
    debug_assert!(k.unsigned_abs() <= bandwidth);
    (k + bandwidth as isize) as usize
}

fn hermitian_defect<T: Real>(coeffs: &[Complex<T>]) -> T {
    let n = coeffs.len();
    (0..n)
        .map(|i| modulus(coeffs[i] - coeffs[n - 1 - i].conj()))
        .fold(T::zero(), |m, d| m.max(d))
}

/// A `T`-periodic signal with harmonics `−K..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSignal<T> {
    period: T,
    bandwidth: usize,
    coeffs: Vec<Complex<T>>,
    real_valued: bool,
}

impl<T: Real> PeriodicSignal<T> {
    /// Builds a signal from coefficients in symmetric storage order.
    ///
    /// With `real_valued`, `c[−k] = conj(c[k])` must hold to `1e−12` (scaled by
    /// the largest coefficient magnitude when that exceeds one).
    pub fn new(period: T, coeffs: Vec<Complex<T>>, real_valued: bool) -> Result<Self> {
        if !(period > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "period must be positive, got {period}"
            )));
        }
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector must have odd length 2K+1, got {}",
                coeffs.len()
            )));
        }
        if real_valued {
            let scale = coeffs
                .iter()
                .map(|c| modulus(*c))
                .fold(T::one(), |m, a| m.max(a));
            let tol = T::lit(1e-12).max(T::eps() * T::lit(16.0)) * scale;
            let defect = hermitian_defect(&coeffs);
            if defect > tol {
                return Err(Error::InvalidArgument(format!(
                    "coefficients are not Hermitian symmetric (defect {defect})"
                )));
            }
        }
        let bandwidth = coeffs.len() / 2;
        Ok(Self {
            period,
            bandwidth,
            coeffs,
            real_valued,
        })
    }

    /// Real signal from the non-negative harmonics `c[0..=K]`; `c[0]`'s imaginary part is dropped.
    pub fn from_half_spectrum(period: T, half: &[Complex<T>]) -> Result<Self> {
        if half.is_empty() {
            return Err(Error::DimensionMismatch("empty half spectrum".into()));
        }
        let k = half.len() - 1;
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); 2 * k + 1];
        coeffs[k] = Complex::new(half[0].re, T::zero());
        for (m, c) in half.iter().enumerate().skip(1) {
            coeffs[k + m] = *c;
            coeffs[k - m] = c.conj();
        }
        Self::new(period, coeffs, true)
    }

    pub fn zero(bandwidth: usize, period: T) -> Result<Self> {
        Self::new(
            period,
            vec![Complex::new(T::zero(), T::zero()); 2 * bandwidth + 1],
            true,
        )
    }

    pub fn constant(value: T, bandwidth: usize, period: T) -> Result<Self> {
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); 2 * bandwidth + 1];
        coeffs[bandwidth] = Complex::new(value, T::zero());
        Self::new(period, coeffs, true)
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn is_real(&self) -> bool {
        self.real_valued
    }

    /// Fundamental angular frequency `2π/T`.
    pub fn omega0(&self) -> T {
        T::two_pi() / self.period
    }

    /// All coefficients in symmetric storage order.
    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Coefficient of harmonic `k`; zero outside the band.
    pub fn coeff(&self, k: isize) -> Complex<T> {
        if k.unsigned_abs() > self.bandwidth {
            Complex::new(T::zero(), T::zero())
        } else {
            self.coeffs[harmonic_index(k, self.bandwidth)]
        }
    }

    /// `Σ_k |c_k|`, an upper bound on `sup_t |y(t)|`.
    pub fn sup_bound(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |s, c| s + modulus(*c))
    }

    /// Fourier synthesis `Σ_k c_k e^{jkω₀t}`; the imaginary part is zeroed for real signals.
    pub fn eval(&self, t: T) -> Complex<T> {
        let w0 = self.omega0();
        let k_max = self.bandwidth as isize;
        if self.real_valued {
            let mut acc = self.coeff(0).re;
            for k in 1..=k_max {
                let e = cis(T::from_isize(k).unwrap() * w0 * t);
                acc += T::lit(2.0) * (self.coeff(k) * e).re;
            }
            Complex::new(acc, T::zero())
        } else {
            (-k_max..=k_max).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                acc + self.coeff(k) * cis(T::from_isize(k).unwrap() * w0 * t)
            })
        }
    }

    /// Real part of [`eval`](Self::eval).
    pub fn value(&self, t: T) -> T {
        self.eval(t).re
    }

    /// Closed-form `∫_a^b y(t) dt`.
    pub fn integrate(&self, a: T, b: T) -> Result<Complex<T>> {
        if b < a {
            return Err(Error::ReversedInterval {
                a: a.to_f64_lossy(),
                b: b.to_f64_lossy(),
            });
        }
        let k_max = self.bandwidth as isize;
        let dt = b - a;
        let base = self.coeff(0) * dt;
        if self.real_valued {
            let mut acc = base.re;
            for k in 1..=k_max {
                acc += T::lit(2.0) * (self.coeff(k) * harmonic_integral(k, self.omega0(), a, b)).re;
            }
            Ok(Complex::new(acc, T::zero()))
        } else {
            Ok((-k_max..=k_max).filter(|&k| k != 0).fold(base, |acc, k| {
                acc + self.coeff(k) * harmonic_integral(k, self.omega0(), a, b)
            }))
        }
    }

    /// Real part of [`integrate`](Self::integrate).
    pub fn integrate_real(&self, a: T, b: T) -> Result<T> {
        self.integrate(a, b).map(|z| z.re)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.bandwidth == other.bandwidth && self.period == other.period
    }

    /// `Σ_i w_i · s_i` over signals sharing period and bandwidth.
    pub fn linear_combination(weights: &[T], signals: &[&Self]) -> Result<Self> {
        if weights.len() != signals.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} signals",
                weights.len(),
                signals.len()
            )));
        }
        let first = signals
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no signals to combine".into()))?;
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); first.coeffs.len()];
        let mut real = true;
        for (&w, s) in weights.iter().zip(signals) {
            if s.period != first.period {
                return Err(Error::PeriodMismatch {
                    left: first.period.to_f64_lossy(),
                    right: s.period.to_f64_lossy(),
                });
            }
            if s.bandwidth != first.bandwidth {
                return Err(Error::DimensionMismatch(format!(
                    "bandwidth {} vs {}",
                    first.bandwidth, s.bandwidth
                )));
            }
            real &= s.real_valued;
            for (acc, c) in coeffs.iter_mut().zip(&s.coeffs) {
                *acc += c.scale(w);
            }
        }
        Self::new(first.period, coeffs, real)
    }

    /// The same signal delayed by `tau`: `y(t − tau)`.
    pub fn delayed(&self, tau: T) -> Self {
        let w0 = self.omega0();
        let k_max = self.bandwidth as isize;
        let coeffs = (-k_max..=k_max)
            .map(|k| self.coeff(k) * cis(-T::from_isize(k).unwrap() * w0 * tau))
            .collect();
        Self {
            coeffs,
            ..self.clone()
        }
    }
}

/// `∫_a^b e^{jkω₀t} dt`, written as `e^{jkω₀(a+b)/2} · (b−a) · sinc(kω₀(b−a)/2)`
/// to avoid cancellation on short intervals.
pub fn harmonic_integral<T: Real>(k: isize, omega0: T, a: T, b: T) -> Complex<T> {
    let dt = b - a;
    if k == 0 {
        return Complex::new(dt, T::zero());
    }
    let kw = T::from_isize(k).unwrap() * omega0;
    let mid = (a + b) / T::lit(2.0);
    cis(kw * mid).scale(dt * sinc(kw * dt / T::lit(2.0)))
}

/// Random real signal: `Re c_k, Im c_k ~ U[−scale, scale]` for `k ≥ 1`,
/// `c_0 ~ U[−scale, scale]`, negative harmonics by conjugation.
pub fn random_bandlimited<T: Real, R: Rng + ?Sized>(
    bandwidth: usize,
    period: T,
    scale: T,
    rng: &mut R,
) -> Result<PeriodicSignal<T>> {
    if !(scale > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let s = scale.to_f64_lossy();
    let draw = |rng: &mut R| T::lit(rng.random_range(-s..=s));
    let mut half = Vec::with_capacity(bandwidth + 1);
    half.push(Complex::new(draw(rng), T::zero()));
    for _ in 0..bandwidth {
        let re = draw(rng);
        let im = draw(rng);
        half.push(Complex::new(re, im));
    }
    PeriodicSignal::from_half_spectrum(period, &half)
}

/// `T`-periodized stream of weighted Diracs, times canonicalised into `[0, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracStream<T> {
    period: T,
    times: Vec<T>,
    amplitudes: Vec<T>,
}

impl<T: Real> DiracStream<T> {
    /// Times are reduced modulo `period` and sorted (amplitudes follow their times).
    /// Two Diracs landing on the same representative is an error.
    pub fn new(period: T, times: Vec<T>, amplitudes: Vec<T>) -> Result<Self> {
        if !(period > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "period must be positive, got {period}"
            )));
        }
        if times.len() != amplitudes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} times vs {} amplitudes",
                times.len(),
                amplitudes.len()
            )));
        }
        let mut pairs: Vec<(T, T)> = times
            .into_iter()
            .map(|t| wrap_time(t, period))
            .zip(amplitudes)
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite Dirac times"));
        if let Some(i) = pairs.windows(2).position(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::NotIncreasing { index: i + 1 });
        }
        let (times, amplitudes) = pairs.into_iter().unzip();
        Ok(Self {
            period,
            times,
            amplitudes,
        })
    }

    /// Unit-amplitude stream, the form emitted by a spiking layer.
    pub fn unit(period: T, times: Vec<T>) -> Result<Self> {
        let n = times.len();
        Self::new(period, times, vec![T::one(); n])
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Filter whose response is nonzero exactly on harmonics `−K..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasCancellingFilter<T> {
    period: T,
    passband: usize,
    gains: Vec<Complex<T>>,
}

impl<T: Real> AliasCancellingFilter<T> {
    pub fn new(period: T, gains: Vec<Complex<T>>) -> Result<Self> {
        if !(period > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "period must be positive, got {period}"
            )));
        }
        if gains.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "gain vector must have odd length 2K+1, got {}",
                gains.len()
            )));
        }
        if let Some(i) = gains.iter().position(|g| !(modulus(*g) > T::zero())) {
            return Err(Error::InvalidArgument(format!(
                "gain at harmonic {} is zero",
                i as isize - (gains.len() / 2) as isize
            )));
        }
        let passband = gains.len() / 2;
        Ok(Self {
            period,
            passband,
            gains,
        })
    }

    /// Dirichlet kernel: unit gain on every passband harmonic.
    pub fn dirichlet(passband: usize, period: T) -> Result<Self> {
        Self::new(
            period,
            vec![Complex::new(T::one(), T::zero()); 2 * passband + 1],
        )
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn passband(&self) -> usize {
        self.passband
    }

    pub fn gains(&self) -> &[Complex<T>] {
        &self.gains
    }

    pub fn gain(&self, k: isize) -> Complex<T> {
        self.gains[harmonic_index(k, self.passband)]
    }

    /// Whether `H(−k) = conj(H(k))`, i.e. real input maps to real output.
    pub fn is_hermitian(&self) -> bool {
        hermitian_defect(&self.gains) == T::zero()
    }

    /// Fourier coefficients of the filter output for a Dirac stream input:
    /// `Y_k = H_k · (1/T) · Σ_m a_m e^{−jkω₀t_m}`.
    pub fn filter_diracs(&self, stream: &DiracStream<T>) -> Result<PeriodicSignal<T>> {
        if self.period != stream.period {
            return Err(Error::PeriodMismatch {
                left: self.period.to_f64_lossy(),
                right: stream.period.to_f64_lossy(),
            });
        }
        let w0 = T::two_pi() / self.period;
        let inv_t = T::one() / self.period;
        let k_max = self.passband as isize;
        let coeffs = (-k_max..=k_max)
            .map(|k| {
                let kw = T::from_isize(k).unwrap() * w0;
                let sum = stream
                    .times
                    .iter()
                    .zip(&stream.amplitudes)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (&t, &a)| {
                        acc + cis(-kw * t).scale(a)
                    });
                self.gain(k) * sum.scale(inv_t)
            })
            .collect();
        PeriodicSignal::new(self.period, coeffs, self.is_hermitian())
    }
}

/// Free-function form of [`AliasCancellingFilter::filter_diracs`].
pub fn fs_of_filtered_diracs<T: Real>(
    filter: &AliasCancellingFilter<T>,
    stream: &DiracStream<T>,
) -> Result<PeriodicSignal<T>> {
    filter.filter_diracs(stream)
}
