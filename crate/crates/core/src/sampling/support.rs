use crate::error::Result;
use crate::scalar::Real;
use crate::spectra::{BandSet, Psd};
use crate::waterfill::{shannon_drf, WaterTable};

use super::{check_rate, AdxPoint, Aliaser, FilterSpec};

const BISECTION_STEPS: usize = 200;

/// True when no two points of `support` differ by a nonzero multiple of
/// `rate`, i.e. uniform sampling at `rate` folds no two parts of it together.
/// Overlaps below `1e-9 * rate` are ignored.
pub fn is_aliasing_free<T: Real>(support: &BandSet<T>, rate: T) -> bool {
    let (Some(lo), Some(hi)) = (support.lowest(), support.highest()) else {
        return true;
    };
    let tol = T::lit(1e-9) * rate;
    if support.measure() > rate + tol {
        return false;
    }
    let k_max = ((hi - lo) / rate).ceil().to_usize().unwrap_or(0);
    (1..=k_max).all(|k| support.overlap(&support.shifted(T::from_usize_lossy(k) * rate)) <= tol)
}

/// Symmetric part of `plateau` closest to the origin with measure `need`.
fn trim_plateau<T: Real>(plateau: &BandSet<T>, need: T, reach: T) -> BandSet<T> {
    if need <= T::zero() || plateau.is_empty() {
        return BandSet::empty();
    }
    let (mut lo, mut hi) = (T::zero(), reach);
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / T::lit(2.0);
        if plateau.overlap(&BandSet::symmetric(mid)) < need {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * reach {
            break;
        }
    }
    plateau.intersection(&BandSet::symmetric(hi))
}

/// Set of measure `f_s` carrying the most spectral energy: a superlevel set
/// of the PSD. Among equally energetic choices on a plateau the symmetric
/// part nearest the origin is kept. Returns the occupied support once `f_s`
/// reaches its measure.
pub fn optimal_support<T: Real>(psd: &Psd<T>, f_s: T) -> Result<BandSet<T>> {
    check_rate("f_s", f_s, false)?;
    let occupied = psd.occupied_set();
    if f_s >= occupied.measure() {
        return Ok(occupied);
    }
    let peak = psd.peak_density();
    let (mut lo, mut hi) = (T::zero(), peak * (T::one() + T::lit(1e-12)) + T::min_positive_value());
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / T::lit(2.0);
        if psd.superlevel_set(mid).measure() >= f_s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * peak {
            break;
        }
    }
    let strict = psd.superlevel_set(hi);
    let plateau = psd.superlevel_set(lo).difference(&strict);
    let extra = trim_plateau(&plateau, f_s - strict.measure(), psd.f_max());
    Ok(strict.union(&extra))
}

/// Estimation error from the best support of measure `f_s`.
pub fn mmse_lower_bound<T: Real>(psd: &Psd<T>, f_s: T) -> Result<T> {
    let support = optimal_support(psd, f_s)?;
    Ok(psd.restricted_cells(&support)?.1)
}

/// Smallest distortion of any sampler at rate `f_s` combined with any encoder
/// at `rate` bits per unit time: the energy outside the optimal support plus
/// water-filling over it.
pub fn adx_lower_bound<T: Real>(psd: &Psd<T>, f_s: T, rate: T) -> Result<AdxPoint<T>> {
    check_rate("rate", rate, true)?;
    let support = optimal_support(psd, f_s)?;
    let (inside, outside) = psd.restricted_cells(&support)?;
    Ok(AdxPoint::from_parts(f_s, rate, outside, &WaterTable::from_cells(&inside)))
}

/// Single-branch filter whose passband picks, for every baseband frequency,
/// the alias carrying the most energy. The result is aliasing-free at `f_s`.
pub fn optimal_single_branch_filter<T: Real>(psd: &Psd<T>, f_s: T) -> Result<FilterSpec<T>> {
    check_rate("f_s", f_s, false)?;
    let all = FilterSpec::all_pass();
    let aliaser = Aliaser::new(psd, &all, f_s, None);
    let mut pieces = Vec::new();
    for (lo, hi) in aliaser.partition() {
        let c = (lo + hi) / T::lit(2.0);
        let mut best: Option<(T, T)> = None;
        for n in -aliaser.terms..=aliaser.terms {
            let shift = T::lit(n as f64) * f_s;
            let s = psd.truncated_density(c - shift);
            // ties go to the alias nearest the origin
            let better = match best {
                None => s > T::zero(),
                Some((b, sh)) => s > b || (s == b && (c - shift).abs() < (c - sh).abs()),
            };
            if better {
                best = Some((s, shift));
            }
        }
        if let Some((_, shift)) = best {
            pieces.push((lo - shift, hi - shift));
        }
    }
    Ok(FilterSpec::bands(BandSet::new(pieces)))
}

/// Measure of the spectrum preserved by water-filling at `rate`: the
/// smallest sampling rate at which the distortion-rate function is attained.
pub fn critical_rate<T: Real>(psd: &Psd<T>, rate: T) -> Result<T> {
    Ok(shannon_drf(psd, rate)?.active.measure())
}

fn increasing_root<T: Real, G: Fn(T) -> T>(g: G, target: T, upper: T) -> T {
    let (mut lo, mut hi) = (T::zero(), upper);
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / T::lit(2.0);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// Root `f_R` of `R ln2 = f_R - f0 arctan(pi f_R / f0) / (pi/2)`, the
/// published closed form for the Ornstein-Uhlenbeck critical rate.
///
/// This expression does not agree with water-filling over
/// `S(f) = (1/f0) / ((pi f/f0)^2 + 1)` at finite `R`; see
/// [`ou_critical_rate_exact`]. Both share the asymptote `f_R ~ R ln2 + f0`.
pub fn ou_critical_rate_closed_form<T: Real>(f0: T, rate: T) -> Result<T> {
    check_rate("f0", f0, false)?;
    check_rate("rate", rate, true)?;
    if rate == T::zero() {
        return Ok(T::zero());
    }
    let g = |x: T| x - f0 * (T::PI() * x / f0).atan() / T::FRAC_PI_2();
    let upper = rate * T::LN_2() * T::lit(10.0) + T::lit(10.0) * f0;
    Ok(increasing_root(g, rate * T::LN_2(), upper))
}

/// Critical rate of the Ornstein-Uhlenbeck spectrum obtained by integrating
/// the water-filling rate in closed form:
/// `R ln2 = f_R - f0 arctan(pi f_R / (2 f0)) / (pi/2)`.
pub fn ou_critical_rate_exact<T: Real>(f0: T, rate: T) -> Result<T> {
    check_rate("f0", f0, false)?;
    check_rate("rate", rate, true)?;
    if rate == T::zero() {
        return Ok(T::zero());
    }
    let g = |x: T| x - f0 * (T::PI() * x / (f0 + f0)).atan() / T::FRAC_PI_2();
    let upper = rate * T::LN_2() * T::lit(10.0) + T::lit(10.0) * f0;
    Ok(increasing_root(g, rate * T::LN_2(), upper))
}
