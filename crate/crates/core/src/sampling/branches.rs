use std::cmp::Ordering;

use crate::error::{AdxError, Result};
use crate::scalar::{compensated_sum, Real};
use crate::spectra::{BandSet, Psd};
use crate::waterfill::WaterTable;

use super::{check_rate, is_aliasing_free, optimal_support, AdxPoint, Aliaser, FilterSpec};

/// Filter bank of `L` branches, each with a unit-magnitude passband and
/// sampled uniformly at `f_s / L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig<T> {
    pub f_s: T,
    pub branches: Vec<BandSet<T>>,
}

impl<T: Real> SamplerConfig<T> {
    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn branch_rate(&self) -> T {
        self.f_s / T::from_usize_lossy(self.branches.len().max(1))
    }

    pub fn union(&self) -> BandSet<T> {
        self.branches.iter().fold(BandSet::empty(), |acc, b| acc.union(b))
    }

    pub fn filters(&self) -> Vec<FilterSpec<T>> {
        self.branches.iter().cloned().map(FilterSpec::bands).collect()
    }
}

/// Splits every interval of `set` into pieces of length at most `width`,
/// measured from its left edge. Remnants narrower than `1e-6 width` are
/// rounding dust from the support search and are dropped.
fn split_intervals<T: Real>(set: &BandSet<T>, width: T) -> Vec<(T, T)> {
    let mut out = Vec::new();
    for &(lo, hi) in set.intervals() {
        let mut a = lo;
        while hi - a > width * (T::one() + T::lit(1e-12)) {
            out.push((a, a + width));
            a = a + width;
        }
        if hi - a > width * T::lit(1e-6) || out.last().is_none_or(|p: &(T, T)| p.1 < lo) {
            out.push((a, hi));
        }
    }
    out
}

/// First-fit assignment of `pieces` to at most `l` branches, each aliasing-free
/// at `rate`. Returns the branches or the measure left unassigned.
fn first_fit<T: Real>(pieces: &[(T, T)], l: usize, rate: T) -> std::result::Result<Vec<BandSet<T>>, T> {
    let mut branches: Vec<BandSet<T>> = Vec::with_capacity(l);
    let mut unassigned = T::zero();
    for &(lo, hi) in pieces {
        let piece = BandSet::interval(lo, hi);
        let slot = branches.iter().position(|b| is_aliasing_free(&b.union(&piece), rate));
        match slot {
            Some(i) => branches[i] = branches[i].union(&piece),
            None if branches.len() < l => branches.push(piece),
            None => unassigned = unassigned + (hi - lo),
        }
    }
    if unassigned > T::zero() {
        Err(unassigned)
    } else {
        Ok(branches)
    }
}

/// Smallest filter bank (up to `l_max` branches) whose passbands partition
/// the optimal support at total rate `f_s`, each branch aliasing-free at
/// `f_s / L`. Pieces are assigned greedily in order of decreasing energy.
pub fn allocate_branches<T: Real>(psd: &Psd<T>, f_s: T, l_max: usize) -> Result<SamplerConfig<T>> {
    check_rate("f_s", f_s, false)?;
    if l_max == 0 {
        return Err(AdxError::InvalidParameter("l_max must be at least 1".into()));
    }
    let support = optimal_support(psd, f_s)?;
    if support.is_empty() {
        return Err(AdxError::InvalidParameter("optimal support is empty".into()));
    }
    let mut unassigned = T::zero();
    for l in 1..=l_max {
        let rate = f_s / T::from_usize_lossy(l);
        let mut pieces: Vec<((T, T), T)> = split_intervals(&support, rate)
            .into_iter()
            .map(|(lo, hi)| {
                let energy = psd.integrate_band(&BandSet::interval(lo, hi))?;
                Ok(((lo, hi), energy))
            })
            .collect::<Result<_>>()?;
        pieces.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal));
        let order: Vec<(T, T)> = pieces.into_iter().map(|(p, _)| p).collect();
        match first_fit(&order, l, rate) {
            Ok(branches) => return Ok(SamplerConfig { f_s, branches }),
            Err(left) => unassigned = left,
        }
    }
    Err(AdxError::InsufficientBranches { l_max, unassigned: unassigned.to_f64_lossy() })
}

/// Distortion of the filter bank `config` followed by an optimal encoder at
/// `rate`. Disjoint branch passbands make the branch outputs uncorrelated, so
/// each branch contributes its own conditional spectrum and the lossy part
/// water-fills over all of them jointly.
pub fn verify_achievability<T: Real>(psd: &Psd<T>, config: &SamplerConfig<T>, rate: T) -> Result<AdxPoint<T>> {
    check_rate("rate", rate, true)?;
    check_rate("f_s", config.f_s, false)?;
    let branch_rate = config.branch_rate();
    let mut cells = Vec::new();
    for (i, support) in config.branches.iter().enumerate() {
        if !is_aliasing_free(support, branch_rate) {
            return Err(AdxError::NotAliasingFree { branch: i, rate: branch_rate.to_f64_lossy() });
        }
        let filter = FilterSpec::bands(support.clone());
        cells.extend(Aliaser::new(psd, &filter, branch_rate, None).cells());
    }
    let captured = compensated_sum(cells.iter().map(|c| c.value * c.width));
    let mmse = (psd.total_variance() - captured).max(T::zero());
    Ok(AdxPoint::from_parts(config.f_s, rate, mmse, &WaterTable::from_cells(&cells)))
}
