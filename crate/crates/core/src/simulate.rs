//! Monte Carlo paths of Gaussian stationary sources and empirical
//! counterparts of the sampling and PCM distortion formulas.
//!
//! Paths are synthesized on a dense time grid of `N = T * dense_rate`
//! points: the DFT coefficient at `f_k = k / T` is complex Gaussian with
//! variance `S(f_k) / T`, conjugate-symmetric so the path is real. Paths are
//! periodic with period `T`, so frequency-domain filtering is exact.
//!
//! Trial `i` draws from a ChaCha8 stream seeded with
//! `master_seed ^ (i * 0x9E3779B97F4A7C15)` (wrapping), independent of
//! scheduling order.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};

use crate::error::{AdxError, Result};
use crate::quantize::{quantize_sequence, uniform_quantizer, uniform_quantizer_for_entropy, InputDensity};
use crate::sampling::{FilterSpec, SamplerConfig};
use crate::scalar::{compensated_sum, Real};
use crate::spectra::Psd;

/// Odd multiplier of the per-trial seed split.
pub const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;
/// Loading factor of the fixed-length quantizer, in standard deviations.
pub const LOADING_SIGMAS: f64 = 4.0;

/// Scalars supported by the FFT backend.
pub trait SimReal: Real + FftNum {}
impl<T: Real + FftNum> SimReal for T {}

pub fn child_seed(master_seed: u64, trial: usize) -> u64 {
    master_seed ^ (trial as u64).wrapping_mul(SEED_STRIDE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisConfig<T> {
    /// Path duration in seconds.
    pub duration: T,
    /// Samples per second of the dense grid.
    pub dense_rate: T,
    pub trials: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble<T> {
    pub dense_rate: T,
    pub duration: T,
    pub trials: usize,
    pub master_seed: u64,
    /// `trials` paths of `samples()` amplitudes each.
    pub paths: Vec<Vec<T>>,
}

impl<T: Real> PathEnsemble<T> {
    pub fn samples(&self) -> usize {
        self.paths.first().map_or(0, Vec::len)
    }

    /// Pooled sample variance over all paths and times, with the standard
    /// error of the per-path variances.
    pub fn variance(&self) -> Estimate<T> {
        Estimate::from_trials(
            self.paths
                .iter()
                .map(|p| compensated_sum(p.iter().map(|&x| x * x)) / T::from_usize_lossy(p.len()))
                .collect(),
        )
    }

    /// Time-averaged autocovariance at `lag` dense samples, circular.
    pub fn autocovariance(&self, lag: usize) -> Estimate<T> {
        Estimate::from_trials(
            self.paths
                .iter()
                .map(|p| {
                    let n = p.len();
                    compensated_sum((0..n).map(|i| p[i] * p[(i + lag) % n])) / T::from_usize_lossy(n)
                })
                .collect(),
        )
    }
}

/// Trial average with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub std_error: T,
    pub trials: usize,
}

impl<T: Real> Estimate<T> {
    pub fn from_trials(values: Vec<T>) -> Self {
        let n = values.len();
        let nf = T::from_usize_lossy(n.max(1));
        let mean = compensated_sum(values.iter().copied()) / nf;
        let var = if n > 1 {
            compensated_sum(values.iter().map(|&v| (v - mean) * (v - mean))) / T::from_usize_lossy(n - 1)
        } else {
            T::zero()
        };
        Self { mean, std_error: (var / nf).sqrt(), trials: n }
    }
}

fn grid_size<T: Real>(duration: T, dense_rate: T) -> Result<usize> {
    let n = (duration * dense_rate).round();
    let size = n.to_usize().unwrap_or(0);
    if !(duration > T::zero()) || (duration * dense_rate - n).abs() > T::lit(1e-9) * n || size < 2 || !size.is_power_of_two() {
        return Err(AdxError::InvalidParameter(format!(
            "duration {duration} x dense rate {dense_rate} must be a power of two >= 2"
        )));
    }
    Ok(size)
}

/// Signed frequency of DFT bin `k` on an `n`-point grid of duration `t`.
fn bin_frequency<T: Real>(k: usize, n: usize, duration: T) -> T {
    let signed = if k <= n / 2 { T::from_usize_lossy(k) } else { -T::from_usize_lossy(n - k) };
    signed / duration
}

struct Transforms<T: SimReal> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: SimReal> Transforms<T> {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn spectrum(&self, x: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Real part of the normalized inverse transform.
    fn signal(&self, mut spec: Vec<Complex<T>>) -> Vec<T> {
        self.inverse.process(&mut spec);
        let n = T::from_usize_lossy(spec.len());
        spec.into_iter().map(|c| c.re / n).collect()
    }
}

/// Draws `trials` independent paths of the source with spectrum `psd`.
pub fn synthesize<T: SimReal>(psd: &Psd<T>, config: SynthesisConfig<T>) -> Result<PathEnsemble<T>> {
    let SynthesisConfig { duration, dense_rate, trials, master_seed } = config;
    let n = grid_size(duration, dense_rate)?;
    if let Some(f_nyq) = psd.f_nyq() {
        if dense_rate < f_nyq {
            return Err(AdxError::InvalidParameter(format!(
                "dense rate {dense_rate} is below the Nyquist rate {f_nyq}"
            )));
        }
    }
    if trials == 0 {
        return Err(AdxError::InvalidParameter("at least one trial is required".into()));
    }
    // DFT coefficient standard deviations on the nonnegative bins
    let scale: Vec<T> = (0..=n / 2)
        .map(|k| (psd.truncated_density(bin_frequency(k, n, duration)) / duration).sqrt())
        .collect();
    let transforms = Transforms::<T>::new(n);
    let half = T::lit(0.5).sqrt();
    let paths = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(child_seed(master_seed, trial));
            let mut normal = || T::lit(rng.sample::<f64, _>(StandardNormal));
            let mut spec = vec![Complex::new(T::zero(), T::zero()); n];
            for k in 0..=n / 2 {
                if k == 0 || k == n / 2 {
                    spec[k] = Complex::new(scale[k] * normal(), T::zero());
                } else {
                    let c = Complex::new(normal(), normal()) * (scale[k] * half);
                    spec[k] = c;
                    spec[n - k] = c.conj();
                }
            }
            // the inverse transform is unnormalized; undo the 1/N in `signal`
            let nf = T::from_usize_lossy(n);
            transforms.signal(spec).into_iter().map(|v| v * nf).collect()
        })
        .collect();
    Ok(PathEnsemble { dense_rate, duration, trials, master_seed, paths })
}

/// Quantizer used inside the simulated PCM chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantizerMode {
    /// Samples pass unquantized.
    Disabled,
    /// `2^ceil(bits per sample)` uniform levels spanning four standard
    /// deviations of the filtered signal on each side.
    FixedLength,
    /// Uniform quantizer whose output entropy equals the bits per sample.
    EntropyCoded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalPcm<T> {
    pub f_s: T,
    pub rate: T,
    pub bits_per_sample: T,
    /// Trial-averaged squared error over the middle half of each path.
    pub distortion: Estimate<T>,
}

fn decimation<T: Real>(dense_rate: T, f_s: T) -> Result<usize> {
    let m = (dense_rate / f_s).round();
    if !(f_s > T::zero()) || m < T::one() || (dense_rate / f_s - m).abs() > T::lit(1e-9) * m {
        return Err(AdxError::DecimationMismatch { f_s: f_s.to_f64_lossy(), dense_rate: dense_rate.to_f64_lossy() });
    }
    Ok(m.to_usize().unwrap_or(1))
}

/// Mean squared difference over the middle half of the path.
fn middle_error<T: Real>(x: &[T], y: &[T]) -> T {
    let n = x.len();
    let (a, b) = (n / 4, n - n / 4);
    compensated_sum((a..b).map(|i| (x[i] - y[i]) * (x[i] - y[i]))) / T::from_usize_lossy(b - a)
}

fn keep_below<T: Real>(spec: &mut [Complex<T>], duration: T, cutoff: T) {
    let n = spec.len();
    for (k, c) in spec.iter_mut().enumerate() {
        if bin_frequency(k, n, duration).abs() >= cutoff {
            *c = Complex::new(T::zero(), T::zero());
        }
    }
}

/// Runs every path through anti-aliasing low-pass filtering at
/// `min(f_s, f_Nyq)/2`, sampling at `f_s`, scalar quantization at
/// `rate / f_s` bits per sample and ideal low-pass reconstruction.
pub fn run_pcm_pipeline<T: SimReal>(
    ensemble: &PathEnsemble<T>,
    psd: &Psd<T>,
    f_s: T,
    rate: T,
    mode: QuantizerMode,
) -> Result<EmpiricalPcm<T>> {
    let m = decimation(ensemble.dense_rate, f_s)?;
    let n = ensemble.samples();
    if !n.is_multiple_of(m) {
        return Err(AdxError::DecimationMismatch { f_s: f_s.to_f64_lossy(), dense_rate: ensemble.dense_rate.to_f64_lossy() });
    }
    let bits = rate / f_s;
    if mode != QuantizerMode::Disabled && bits < T::one() {
        return Err(AdxError::InvalidParameter(format!("{bits} bits per sample; at least 1 required")));
    }
    let cutoff = psd.f_nyq().map_or(f_s, |nyq| f_s.min(nyq)) / T::lit(2.0);
    let duration = ensemble.duration;
    let sigma_y = psd
        .integrate_band(&crate::spectra::BandSet::symmetric(cutoff.min(psd.f_max())))?
        .sqrt();
    let quantizer = match mode {
        QuantizerMode::Disabled => None,
        QuantizerMode::FixedLength => {
            let k = 1usize << bits.ceil().to_usize().unwrap_or(1);
            let step = T::lit(2.0 * LOADING_SIGMAS) * sigma_y / T::from_usize_lossy(k);
            Some(uniform_quantizer(step, k, &InputDensity::normal(T::zero(), sigma_y)?)?)
        }
        QuantizerMode::EntropyCoded => {
            Some(uniform_quantizer_for_entropy(&InputDensity::normal(T::zero(), sigma_y)?, bits)?)
        }
    };
    let transforms = Transforms::<T>::new(n);
    let mf = T::from_usize_lossy(m);
    let errors: Vec<T> = ensemble
        .paths
        .par_iter()
        .map(|x| {
            let mut spec = transforms.spectrum(x);
            keep_below(&mut spec, duration, cutoff);
            let filtered = transforms.signal(spec);
            let samples: Vec<T> = filtered.iter().step_by(m).copied().collect();
            let coded = match &quantizer {
                None => samples,
                Some(q) => quantize_sequence(q, &samples).1,
            };
            let mut train = vec![T::zero(); n];
            for (i, v) in coded.into_iter().enumerate() {
                train[i * m] = v * mf;
            }
            let mut spec = transforms.spectrum(&train);
            keep_below(&mut spec, duration, cutoff);
            middle_error(x, &transforms.signal(spec))
        })
        .collect();
    Ok(EmpiricalPcm { f_s, rate, bits_per_sample: bits, distortion: Estimate::from_trials(errors) })
}

/// Magnitude response `H(f)` of a filter, from its power gain.
fn amplitude<T: Real>(filter: &FilterSpec<T>, f: T) -> T {
    filter.power_gain(f).sqrt()
}

/// Empirical error of the linear MMSE estimator that reconstructs each path
/// from the samples of a filter bank. Branch `b` samples the output of
/// `filters[b]` at `branch_rate`; disjoint passbands make the per-branch
/// Wiener estimates additive.
pub fn empirical_mmse_filter_bank<T: SimReal>(
    ensemble: &PathEnsemble<T>,
    psd: &Psd<T>,
    filters: &[FilterSpec<T>],
    branch_rate: T,
) -> Result<Estimate<T>> {
    let m = decimation(ensemble.dense_rate, branch_rate)?;
    let n = ensemble.samples();
    if !n.is_multiple_of(m) {
        return Err(AdxError::DecimationMismatch {
            f_s: branch_rate.to_f64_lossy(),
            dense_rate: ensemble.dense_rate.to_f64_lossy(),
        });
    }
    let duration = ensemble.duration;
    let density: Vec<T> = (0..n).map(|k| psd.truncated_density(bin_frequency(k, n, duration))).collect();
    let stride = n / m;
    let mf = T::from_usize_lossy(m);
    let mut responses = Vec::with_capacity(filters.len());
    let mut gains = Vec::with_capacity(filters.len());
    for filter in filters {
        let h: Vec<T> = (0..n).map(|k| amplitude(filter, bin_frequency(k, n, duration))).collect();
        // cyclic alias sum over the m bins that fold together at this rate
        let g: Vec<T> = (0..n)
            .map(|k| {
                let den = compensated_sum((0..m).map(|j| {
                    let i = (k + j * stride) % n;
                    density[i] * h[i] * h[i]
                }));
                if den > T::zero() {
                    mf * density[k] * h[k] / den
                } else {
                    T::zero()
                }
            })
            .collect();
        responses.push(h);
        gains.push(g);
    }
    if responses.iter().all(|h| h.iter().all(|&v| v == T::zero())) {
        return Err(AdxError::InvalidParameter("filter bank passes no frequency of the grid".into()));
    }
    let transforms = Transforms::<T>::new(n);
    let errors: Vec<T> = ensemble
        .paths
        .par_iter()
        .map(|x| {
            let spec = transforms.spectrum(x);
            let mut estimate = vec![Complex::new(T::zero(), T::zero()); n];
            for (h, g) in responses.iter().zip(&gains) {
                let filtered = transforms.signal(spec.iter().zip(h).map(|(&c, &hk)| c * hk).collect());
                let mut train = vec![T::zero(); n];
                for i in (0..n).step_by(m) {
                    train[i] = filtered[i];
                }
                let z = transforms.spectrum(&train);
                for k in 0..n {
                    estimate[k] = estimate[k] + z[k] * g[k];
                }
            }
            middle_error(x, &transforms.signal(estimate))
        })
        .collect();
    Ok(Estimate::from_trials(errors))
}

/// Empirical estimation error from uniform samples at `f_s` of the output of
/// a single pre-sampling filter.
pub fn empirical_mmse_si<T: SimReal>(
    ensemble: &PathEnsemble<T>,
    psd: &Psd<T>,
    filter: &FilterSpec<T>,
    f_s: T,
) -> Result<Estimate<T>> {
    empirical_mmse_filter_bank(ensemble, psd, std::slice::from_ref(filter), f_s)
}

/// Empirical estimation error of a multi-branch sampler configuration.
pub fn empirical_mmse_config<T: SimReal>(
    ensemble: &PathEnsemble<T>,
    psd: &Psd<T>,
    config: &SamplerConfig<T>,
) -> Result<Estimate<T>> {
    empirical_mmse_filter_bank(ensemble, psd, &config.filters(), config.branch_rate())
}

const MAGIC: &[u8; 8] = b"ADXPATHS";
const FORMAT_VERSION: u32 = 1;

/// Writes the ensemble as: magic `ADXPATHS`, version (u32), trials (u64),
/// samples per path (u64), dense rate (f64), then every amplitude as
/// little-endian f64, path by path.
pub fn write_ensemble<T: Real, W: Write>(ensemble: &PathEnsemble<T>, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(ensemble.trials as u64).to_le_bytes())?;
    out.write_all(&(ensemble.samples() as u64).to_le_bytes())?;
    out.write_all(&ensemble.dense_rate.to_f64_lossy().to_le_bytes())?;
    for path in &ensemble.paths {
        for &v in path {
            out.write_all(&v.to_f64_lossy().to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads an ensemble written by [`write_ensemble`]. Seed metadata is not
/// stored and reads back as 0.
pub fn read_ensemble<T: Real, R: Read>(mut input: R) -> Result<PathEnsemble<T>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(AdxError::Parse("not an ensemble file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != FORMAT_VERSION {
        return Err(AdxError::Parse(format!("unsupported ensemble version {version}")));
    }
    input.read_exact(&mut b8)?;
    let trials = u64::from_le_bytes(b8) as usize;
    input.read_exact(&mut b8)?;
    let samples = u64::from_le_bytes(b8) as usize;
    input.read_exact(&mut b8)?;
    let rate = f64::from_le_bytes(b8);
    let mut paths = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut path = Vec::with_capacity(samples);
        for _ in 0..samples {
            input.read_exact(&mut b8)?;
            path.push(T::lit(f64::from_le_bytes(b8)));
        }
        paths.push(path);
    }
    let dense_rate = T::lit(rate);
    Ok(PathEnsemble {
        dense_rate,
        duration: T::from_usize_lossy(samples) / dense_rate,
        trials,
        master_seed: 0,
        paths,
    })
}
