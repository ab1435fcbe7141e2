//! Sub-Nyquist sampling: aliasing, estimation error and the combined
//! sampling/lossy-compression distortion.

mod branches;
mod support;

use std::fmt;
use std::sync::Arc;

pub use branches::{allocate_branches, verify_achievability, SamplerConfig};
pub use support::{
    adx_lower_bound, critical_rate, is_aliasing_free, mmse_lower_bound, optimal_single_branch_filter,
    optimal_support, ou_critical_rate_closed_form, ou_critical_rate_exact,
};

use crate::error::{AdxError, Result};
use crate::scalar::{compensated_sum, Real};
use crate::spectra::{BandSet, Cell, Psd};
use crate::waterfill::{SolveStatus, WaterTable};

/// Pre-sampling filter passband.
#[derive(Debug, Clone, PartialEq)]
pub enum Passband<T> {
    All,
    Bands(BandSet<T>),
}

type MagnitudeFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Linear time-invariant filter applied before sampling: a passband and a
/// magnitude response on it (1 unless given).
#[derive(Clone)]
pub struct FilterSpec<T> {
    passband: Passband<T>,
    magnitude: Option<MagnitudeFn<T>>,
}

impl<T: Real> fmt::Debug for FilterSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FilterSpec")
            .field("passband", &self.passband)
            .field("custom_magnitude", &self.magnitude.is_some())
            .finish()
    }
}

impl<T: Real> FilterSpec<T> {
    pub fn all_pass() -> Self {
        Self { passband: Passband::All, magnitude: None }
    }

    /// Ideal low-pass filter with passband `[-cutoff, cutoff)`.
    pub fn low_pass(cutoff: T) -> Self {
        Self::bands(BandSet::symmetric(cutoff))
    }

    pub fn bands(support: BandSet<T>) -> Self {
        Self { passband: Passband::Bands(support), magnitude: None }
    }

    /// Replaces the unit magnitude on the passband by `|H(f)|`.
    pub fn with_magnitude<F: Fn(T) -> T + Send + Sync + 'static>(mut self, magnitude: F) -> Self {
        self.magnitude = Some(Arc::new(magnitude));
        self
    }

    pub fn passband(&self) -> &Passband<T> {
        &self.passband
    }

    pub fn support(&self) -> Option<&BandSet<T>> {
        match &self.passband {
            Passband::All => None,
            Passband::Bands(b) => Some(b),
        }
    }

    /// `|H(f)|^2`.
    pub fn power_gain(&self, f: T) -> T {
        let inside = match &self.passband {
            Passband::All => true,
            Passband::Bands(b) => b.contains(f),
        };
        if !inside {
            return T::zero();
        }
        match &self.magnitude {
            None => T::one(),
            Some(m) => {
                let h = m(f);
                h * h
            }
        }
    }

    fn edges(&self) -> Vec<T> {
        match &self.passband {
            Passband::All => Vec::new(),
            Passband::Bands(b) => b.intervals().iter().flat_map(|&(lo, hi)| [lo, hi]).collect(),
        }
    }
}

/// One point of the sampling/lossy-compression tradeoff: the estimation
/// error from the samples plus the water-filled lossy part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdxPoint<T> {
    pub f_s: T,
    pub rate: T,
    pub mmse_part: T,
    pub lossy_part: T,
    pub total: T,
    pub theta: T,
    pub status: SolveStatus,
}

impl<T: Real> AdxPoint<T> {
    fn from_parts(f_s: T, rate: T, mmse: T, table: &WaterTable<T>) -> Self {
        let level = table.solve_rate(rate);
        Self {
            f_s,
            rate,
            mmse_part: mmse,
            lossy_part: level.distortion,
            total: mmse + level.distortion,
            theta: level.theta,
            status: level.status,
        }
    }
}

pub(crate) fn check_rate<T: Real>(name: &str, value: T, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { value >= T::zero() } else { value > T::zero() };
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(AdxError::InvalidParameter(format!("{name} = {value} out of range")))
    }
}

/// Number of alias terms needed on each side of the baseband.
pub fn alias_count<T: Real>(f_max: T, f_s: T) -> usize {
    ((f_max + f_s / T::lit(2.0)) / f_s).ceil().to_usize().unwrap_or(0) + 1
}

/// Folds `f` into `[-f_s/2, f_s/2)`.
pub fn fold<T: Real>(f: T, f_s: T) -> T {
    let q = f - f_s * (f / f_s + T::lit(0.5)).floor();
    if q >= f_s / T::lit(2.0) {
        q - f_s
    } else {
        q
    }
}

pub(crate) struct Aliaser<'a, T: Real> {
    psd: &'a Psd<T>,
    filter: &'a FilterSpec<T>,
    noise: Option<&'a Psd<T>>,
    f_s: T,
    terms: i64,
}

impl<'a, T: Real> Aliaser<'a, T> {
    pub(crate) fn new(psd: &'a Psd<T>, filter: &'a FilterSpec<T>, f_s: T, noise: Option<&'a Psd<T>>) -> Self {
        let reach = noise.map_or(psd.f_max(), |n| n.f_max().max(psd.f_max()));
        Self { psd, filter, noise, f_s, terms: alias_count(reach, f_s) as i64 }
    }

    fn value(&self, f: T) -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        for n in -self.terms..=self.terms {
            let g = f - T::lit(n as f64) * self.f_s;
            let s = self.psd.truncated_density(g);
            let eta = self.noise.map_or(T::zero(), |p| p.truncated_density(g));
            if s == T::zero() && eta == T::zero() {
                continue;
            }
            let h2 = self.filter.power_gain(g);
            if h2 == T::zero() {
                continue;
            }
            num = num + s * s * h2;
            den = den + (s + eta) * h2;
        }
        if den > T::zero() {
            num / den
        } else {
            T::zero()
        }
    }

    /// Partition of the baseband at grid lines and at every folded
    /// discontinuity of the integrand.
    pub(crate) fn partition(&self) -> Vec<(T, T)> {
        let half = self.f_s / T::lit(2.0);
        let reach = self.noise.map_or(self.psd.f_max(), |n| n.f_max().max(self.psd.f_max()));
        let b = half.min(reach);
        let step = self.psd.grid_step();
        let n_lines = (b / step).floor().to_usize().unwrap_or(0);
        let mut cuts: Vec<T> = Vec::with_capacity(2 * n_lines + 8);
        for k in 0..=n_lines {
            let x = T::from_usize_lossy(k) * step;
            cuts.push(x);
            cuts.push(-x);
        }
        cuts.push(b);
        cuts.push(-b);
        let mut singular = vec![self.psd.f_max()];
        singular.extend(self.psd.breakpoints());
        if let Some(n) = self.noise {
            singular.push(n.f_max());
            singular.extend(n.breakpoints());
        }
        let mut folded: Vec<T> = singular.into_iter().flat_map(|p| [p, -p]).collect();
        folded.extend(self.filter.edges());
        for p in folded {
            let q = fold(p, self.f_s);
            if q.abs() <= b {
                cuts.push(q);
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite cut points"));
        let tol = step * T::lit(1e-9);
        cuts.dedup_by(|x, y| (*x - *y).abs() <= tol);
        cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
    }

    /// Midpoint cells of the conditional spectrum on the baseband.
    pub(crate) fn cells(&self) -> Vec<Cell<T>> {
        self.partition()
            .into_iter()
            .map(|(lo, hi)| {
                let c = (lo + hi) / T::lit(2.0);
                Cell { center: c, width: hi - lo, value: self.value(c) }
            })
            .collect()
    }
}

/// Conditional spectrum of the source given its filtered, noisy samples at
/// rate `f_s`, evaluated at a baseband frequency `f`.
///
/// `sum_n S(f - n f_s)^2 |H|^2 / sum_n (S + S_noise)(f - n f_s) |H|^2`, with
/// `0/0 = 0`.
pub fn aliased_spectrum<T: Real>(
    psd: &Psd<T>,
    filter: &FilterSpec<T>,
    f_s: T,
    f: T,
    noise: Option<&Psd<T>>,
) -> Result<T> {
    check_rate("f_s", f_s, false)?;
    let half = f_s / T::lit(2.0);
    if f.abs() > half {
        return Err(AdxError::OutsideBaseband { frequency: f.to_f64_lossy(), half_rate: half.to_f64_lossy() });
    }
    Ok(Aliaser::new(psd, filter, f_s, noise).value(f))
}

/// Baseband quadrature cells of [`aliased_spectrum`].
pub fn aliased_cells<T: Real>(psd: &Psd<T>, filter: &FilterSpec<T>, f_s: T, noise: Option<&Psd<T>>) -> Result<Vec<Cell<T>>> {
    check_rate("f_s", f_s, false)?;
    Ok(Aliaser::new(psd, filter, f_s, noise).cells())
}

fn mmse_from_cells<T: Real>(psd: &Psd<T>, cells: &[Cell<T>]) -> T {
    let captured = compensated_sum(cells.iter().map(|c| c.value * c.width));
    (psd.total_variance() - captured).max(T::zero())
}

/// Minimal mean squared error in estimating the source from its filtered
/// (and optionally noisy) uniform samples at rate `f_s`.
pub fn mmse_si<T: Real>(psd: &Psd<T>, filter: &FilterSpec<T>, f_s: T, noise: Option<&Psd<T>>) -> Result<T> {
    let cells = aliased_cells(psd, filter, f_s, noise)?;
    Ok(mmse_from_cells(psd, &cells))
}

/// Minimal distortion of a shift-invariant sampler at rate `f_s` followed by
/// an optimal encoder at `rate` bits per unit time.
pub fn d_si<T: Real>(
    psd: &Psd<T>,
    filter: &FilterSpec<T>,
    f_s: T,
    rate: T,
    noise: Option<&Psd<T>>,
) -> Result<AdxPoint<T>> {
    check_rate("rate", rate, true)?;
    let cells = aliased_cells(psd, filter, f_s, noise)?;
    let mmse = mmse_from_cells(psd, &cells);
    Ok(AdxPoint::from_parts(f_s, rate, mmse, &WaterTable::from_cells(&cells)))
}
