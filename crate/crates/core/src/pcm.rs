//! Pulse-code modulation under the white quantization-noise model:
//! anti-aliasing low-pass filter, uniform sampling, scalar quantization and
//! low-pass reconstruction.

use crate::error::{AdxError, Result};
use crate::scalar::{compensated_sum, Real};
use crate::spectra::{BandSet, Psd};

/// Scalar-quantizer constant of entropy-coded uniform quantization, `pi e / 6`.
pub fn c_q_entropy_coded<T: Real>() -> T {
    T::PI() * T::E() / T::lit(6.0)
}

/// Scalar-quantizer constant of the optimal fixed-length quantizer, `sqrt(3) pi / 2`.
pub fn c_q_fixed_length<T: Real>() -> T {
    T::lit(3.0).sqrt() * T::PI() / T::lit(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcmPoint<T> {
    pub f_s: T,
    pub rate: T,
    pub bits_per_sample: T,
    /// Energy removed by the anti-aliasing filter.
    pub d_smp: T,
    /// Quantization noise passed by the reconstruction filter.
    pub d_qnt: T,
    pub total: T,
}

/// PCM distortion at sampling rate `f_s` and `rate` bits per unit time,
/// i.e. `rate / f_s` bits per sample, with quantizer constant `c_q`.
pub fn pcm_distortion<T: Real>(psd: &Psd<T>, f_s: T, rate: T, c_q: T) -> Result<PcmPoint<T>> {
    if !(f_s > T::zero()) || !f_s.is_finite() {
        return Err(AdxError::InvalidParameter(format!("f_s = {f_s} must be positive")));
    }
    if !(rate >= T::zero()) || !(c_q > T::zero()) {
        return Err(AdxError::InvalidParameter(format!("rate = {rate}, c_Q = {c_q} out of range")));
    }
    let half = f_s / T::lit(2.0);
    let passed = if half >= psd.f_max() {
        psd.total_variance()
    } else {
        // same quadrature nodes as the sampling lower bound, so the two compare exactly
        let (cells, _) = psd.restricted_cells(&BandSet::symmetric(half))?;
        compensated_sum(cells.iter().map(|c| c.value * c.width))
    };
    let above_nyquist = psd.f_nyq().is_some_and(|n| f_s >= n);
    let d_smp = if above_nyquist { T::zero() } else { (psd.total_variance() - passed).max(T::zero()) };
    let occupancy = psd.f_nyq().map_or(T::one(), |n| f_s.min(n) / f_s);
    let bits_per_sample = rate / f_s;
    let d_qnt = c_q * occupancy * passed * (-(bits_per_sample + bits_per_sample)).exp2();
    Ok(PcmPoint { f_s, rate, bits_per_sample, d_smp, d_qnt, total: d_smp + d_qnt })
}

/// Search settings for [`pcm_optimal_rate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcmSearch<T> {
    /// Upper end of the search for spectra without a Nyquist rate; defaults
    /// to `4 f0 R` for the Ornstein-Uhlenbeck kind and `2 f_max` otherwise.
    pub f_cap: Option<T>,
    /// Points of the certificate grid over `(0, upper]`.
    pub grid_points: usize,
    pub c_q: T,
}

impl<T: Real> Default for PcmSearch<T> {
    fn default() -> Self {
        Self { f_cap: None, grid_points: 500, c_q: c_q_entropy_coded() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcmOptimum<T> {
    pub f_s: T,
    pub point: PcmPoint<T>,
    /// Best point of the certificate grid.
    pub grid_f_s: T,
    pub grid_step: T,
    /// Golden-section and grid optima agree within one grid step.
    pub grid_agrees: bool,
    /// Optimum within one grid step of the search cap (non-bandlimited only).
    pub hit_cap: bool,
}

fn golden_section<T: Real, F: Fn(T) -> Result<T>>(f: F, mut a: T, mut b: T, tol: T) -> Result<T> {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    // the bracket ends are candidates too: optima often sit on the boundary
    let mid = (a + b) / T::lit(2.0);
    let best = [a, mid, b]
        .into_iter()
        .map(|x| Ok((x, f(x)?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((mid, T::infinity()), |acc, p| if p.1 < acc.1 { p } else { acc });
    Ok(best.0)
}

/// Sampling rate minimizing the PCM distortion at `rate`, by golden-section
/// search over `(0, f_Nyq]` (or `(0, f_cap]`) certified by a dense grid scan.
/// The returned point is the better of the two.
pub fn pcm_optimal_rate<T: Real>(psd: &Psd<T>, rate: T, search: PcmSearch<T>) -> Result<PcmOptimum<T>> {
    if !(rate > T::zero()) {
        return Err(AdxError::InvalidParameter(format!("rate = {rate} must be positive")));
    }
    if search.grid_points < 2 {
        return Err(AdxError::InvalidParameter("grid_points must be at least 2".into()));
    }
    let (upper, capped) = match (psd.f_nyq(), search.f_cap) {
        (Some(n), _) => (n, false),
        (None, Some(cap)) => (cap, true),
        (None, None) => {
            let cap = match psd.kind() {
                crate::spectra::PsdKind::OrnsteinUhlenbeck { f0 } => T::lit(4.0) * *f0 * rate,
                _ => psd.f_max() + psd.f_max(),
            };
            (cap, true)
        }
    };
    let total = |f_s: T| pcm_distortion(psd, f_s, rate, search.c_q).map(|p| p.total);
    let n = search.grid_points;
    let step = upper / T::from_usize_lossy(n);
    let mut grid_best = (step, T::infinity());
    for k in 1..=n {
        let f_s = step * T::from_usize_lossy(k);
        let d = total(f_s)?;
        if d < grid_best.1 {
            grid_best = (f_s, d);
        }
    }
    let golden = golden_section(total, step * T::lit(1e-3), upper, step * T::lit(1e-4))?;
    let golden_total = total(golden)?;
    let grid_agrees = (golden - grid_best.0).abs() <= step;
    let f_s = if golden_total <= grid_best.1 {
        golden
    } else {
        // refine inside the grid cell pair around the certificate optimum
        let lo = (grid_best.0 - step).max(step * T::lit(1e-3));
        let hi = (grid_best.0 + step).min(upper);
        let local = golden_section(total, lo, hi, step * T::lit(1e-4))?;
        if total(local)? <= grid_best.1 {
            local
        } else {
            grid_best.0
        }
    };
    let point = pcm_distortion(psd, f_s, rate, search.c_q)?;
    Ok(PcmOptimum {
        f_s,
        point,
        grid_f_s: grid_best.0,
        grid_step: step,
        grid_agrees,
        hit_cap: capped && f_s >= upper - step,
    })
}
