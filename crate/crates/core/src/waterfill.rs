//! Reverse water-filling.
//!
//! Every solver here reduces to the same primitive: a finite collection of
//! components, each with a variance density `value` and a `width` (bandwidth
//! for spectral cells, 1 for discrete components). For a water level `theta`
//!
//! ```text
//! R(theta) = 1/2 * sum width * log2+(value / theta)
//! D(theta) =       sum width * min(value, theta)
//! ```
//!
//! `R` is continuous and non-increasing in `theta`, `D` continuous and
//! non-decreasing, so both inverse problems are solved by bisection.

use crate::error::{AdxError, Result};
use crate::scalar::{compensated_sum, log2_plus, Real};
use crate::spectra::{BandSet, Cell, Psd};

/// Largest rate residual, in bits, accepted as converged. Bisection itself runs
/// until the bracket collapses.
pub const RATE_TOLERANCE: f64 = 1e-9;
pub const MAX_BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveStatus {
    /// Bisection met the residual tolerance.
    Converged,
    /// Every positive component is active; the level has a closed form.
    ClosedForm,
    /// Zero rate requested: nothing preserved.
    ZeroRate,
    /// All components have zero variance; the level is undefined and reported as 0.
    Degenerate,
    /// Target distortion at or above the total variance; no rate needed.
    Saturated,
    /// Iteration cap reached with the given residual.
    NotConverged { residual: f64 },
}

impl SolveStatus {
    pub fn is_ok(&self) -> bool {
        !matches!(self, SolveStatus::NotConverged { .. })
    }
}

/// Preserved components of a water-filling solution.
#[derive(Debug, Clone, PartialEq)]
pub enum ActiveSet<T> {
    Bands(BandSet<T>),
    Components(Vec<usize>),
}

impl<T: Real> ActiveSet<T> {
    pub fn measure(&self) -> T {
        match self {
            ActiveSet::Bands(b) => b.measure(),
            ActiveSet::Components(c) => T::from_usize_lossy(c.len()),
        }
    }

    pub fn bands(&self) -> Option<&BandSet<T>> {
        match self {
            ActiveSet::Bands(b) => Some(b),
            ActiveSet::Components(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterLevelSolution<T> {
    pub theta: T,
    /// Achieved rate: bits per unit time (spectral) or bits per vector (discrete).
    pub rate: T,
    pub distortion: T,
    pub active: ActiveSet<T>,
    pub status: SolveStatus,
}

/// Level, rate and distortion without an active-set description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterLevel<T> {
    pub theta: T,
    pub rate: T,
    pub distortion: T,
    /// Total width of components strictly above the level.
    pub preserved_measure: T,
    pub status: SolveStatus,
}

/// Components sorted by decreasing value with prefix sums, so that `R` and
/// `D` evaluate in `O(log n)` for any level.
#[derive(Debug, Clone)]
pub struct WaterTable<T> {
    values: Vec<T>,
    cum_width: Vec<T>,
    cum_log: Vec<T>,
    cum_mass: Vec<T>,
    total_mass: T,
    positive: usize,
}

impl<T: Real> WaterTable<T> {
    /// `components` are `(value, width)` pairs; nonpositive values are inert.
    pub fn new<I: IntoIterator<Item = (T, T)>>(components: I) -> Self {
        let mut items: Vec<(T, T)> = components.into_iter().collect();
        let total_mass = compensated_sum(items.iter().map(|&(v, w)| v.max(T::zero()) * w));
        items.retain(|&(v, w)| v > T::zero() && w > T::zero());
        items.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite component values"));
        let n = items.len();
        let mut cum_width = Vec::with_capacity(n + 1);
        let mut cum_log = Vec::with_capacity(n + 1);
        let mut cum_mass = Vec::with_capacity(n + 1);
        let (mut w_acc, mut l_acc, mut m_acc) = (T::zero(), T::zero(), T::zero());
        cum_width.push(w_acc);
        cum_log.push(l_acc);
        cum_mass.push(m_acc);
        for &(v, w) in &items {
            w_acc = w_acc + w;
            l_acc = l_acc + w * v.log2();
            m_acc = m_acc + w * v;
            cum_width.push(w_acc);
            cum_log.push(l_acc);
            cum_mass.push(m_acc);
        }
        Self {
            values: items.into_iter().map(|(v, _)| v).collect(),
            cum_width,
            cum_log,
            cum_mass,
            total_mass,
            positive: n,
        }
    }

    pub fn from_cells(cells: &[Cell<T>]) -> Self {
        Self::new(cells.iter().map(|c| (c.value, c.width)))
    }

    pub fn total_mass(&self) -> T {
        self.total_mass
    }

    pub fn max_value(&self) -> T {
        self.values.first().copied().unwrap_or(T::zero())
    }

    fn above(&self, theta: T) -> usize {
        self.values.partition_point(|&v| v > theta)
    }

    pub fn rate_at(&self, theta: T) -> T {
        let k = self.above(theta);
        if k == 0 {
            return T::zero();
        }
        let r = (self.cum_log[k] - theta.log2() * self.cum_width[k]) / T::lit(2.0);
        r.max(T::zero())
    }

    pub fn distortion_at(&self, theta: T) -> T {
        let k = self.above(theta);
        (self.total_mass - self.cum_mass[k] + theta * self.cum_width[k]).max(T::zero())
    }

    fn level(&self, theta: T, status: SolveStatus) -> WaterLevel<T> {
        WaterLevel {
            theta,
            rate: self.rate_at(theta),
            distortion: self.distortion_at(theta),
            preserved_measure: self.cum_width[self.above(theta)],
            status,
        }
    }

    /// Water level spending `rate` bits.
    pub fn solve_rate(&self, rate: T) -> WaterLevel<T> {
        if self.positive == 0 {
            let status = if rate > T::zero() { SolveStatus::Degenerate } else { SolveStatus::ZeroRate };
            return WaterLevel {
                theta: T::zero(),
                rate: T::zero(),
                distortion: T::zero(),
                preserved_measure: T::zero(),
                status,
            };
        }
        if rate <= T::zero() {
            return self.level(self.max_value(), SolveStatus::ZeroRate);
        }
        let n = self.positive;
        let min_value = self.values[n - 1];
        // all positive components active: 1/2 (L - W log2 theta) = rate
        let all_active = ((self.cum_log[n] - T::lit(2.0) * rate) / self.cum_width[n]).exp2();
        if all_active <= min_value {
            return self.level(all_active, SolveStatus::ClosedForm);
        }
        let tol = T::lit(RATE_TOLERANCE);
        let mut lo = min_value.log2();
        let mut hi = self.max_value().log2();
        let mut theta = (lo + hi) / T::lit(2.0);
        let mut residual = T::infinity();
        for _ in 0..MAX_BISECTION_STEPS {
            theta = (lo + hi) / T::lit(2.0);
            let r = self.rate_at(theta.exp2());
            residual = r - rate;
            if residual == T::zero() {
                break;
            }
            if residual > T::zero() {
                lo = theta;
            } else {
                hi = theta;
            }
            if hi - lo <= T::epsilon() * hi.abs().max(T::one()) {
                break;
            }
        }
        let status = if residual.abs() <= tol {
            SolveStatus::Converged
        } else {
            // R(theta) is continuous, so a collapsed bracket means the residual
            // is limited by floating-point resolution of theta
            SolveStatus::NotConverged { residual: residual.to_f64_lossy() }
        };
        self.level(theta.exp2(), status)
    }

    /// Water level at which the distortion equals `target`.
    pub fn solve_distortion(&self, target: T) -> WaterLevel<T> {
        if target >= self.total_mass {
            return self.level(self.max_value(), SolveStatus::Saturated);
        }
        let tol = T::lit(1e-13) * self.total_mass.max(T::min_positive_value());
        let mut lo = T::zero();
        let mut hi = self.max_value();
        let mut theta = hi;
        let mut residual = T::infinity();
        for _ in 0..MAX_BISECTION_STEPS {
            theta = (lo + hi) / T::lit(2.0);
            residual = self.distortion_at(theta) - target;
            if residual.abs() <= tol {
                break;
            }
            if residual > T::zero() {
                hi = theta;
            } else {
                lo = theta;
            }
        }
        let status = if residual.abs() <= tol {
            SolveStatus::Converged
        } else {
            SolveStatus::NotConverged { residual: residual.to_f64_lossy() }
        };
        self.level(theta, status)
    }
}

/// Water-fills arbitrary quadrature cells at `rate` bits per unit time.
pub fn waterfill_cells<T: Real>(cells: &[Cell<T>], rate: T) -> WaterLevel<T> {
    WaterTable::from_cells(cells).solve_rate(rate)
}

/// Optimal split of a bit budget over independent Gaussian components.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteAllocation<T> {
    pub solution: WaterLevelSolution<T>,
    /// Per-component rates `1/2 log2+(sigma_i^2 / theta)`.
    pub rates: Vec<T>,
}

/// Allocates `total_rate` bits over components with the given variances,
/// minimizing the summed distortion `sum sigma_i^2 2^(-2 R_i)`.
pub fn discrete_waterfill<T: Real>(variances: &[T], total_rate: T) -> Result<DiscreteAllocation<T>> {
    if let Some(v) = variances.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
        return Err(AdxError::InvalidParameter(format!("variance {v} must be finite and >= 0")));
    }
    if !(total_rate >= T::zero()) {
        return Err(AdxError::InvalidParameter(format!("rate {total_rate} must be >= 0")));
    }
    let table = WaterTable::new(variances.iter().map(|&v| (v, T::one())));
    let level = table.solve_rate(total_rate);
    let rates: Vec<T> = variances
        .iter()
        .map(|&v| {
            if level.theta > T::zero() {
                log2_plus(v / level.theta) / T::lit(2.0)
            } else {
                T::zero()
            }
        })
        .collect();
    let active = rates.iter().enumerate().filter(|(_, r)| **r > T::zero()).map(|(i, _)| i).collect();
    Ok(DiscreteAllocation {
        solution: WaterLevelSolution {
            theta: level.theta,
            rate: level.rate,
            distortion: level.distortion,
            active: ActiveSet::Components(active),
            status: level.status,
        },
        rates,
    })
}

/// Largest violation of the water-filling optimality conditions: active
/// components must satisfy `sigma_i^2 2^(-2 R_i) = theta`, inactive ones
/// `sigma_i^2 <= theta`.
pub fn kkt_violation<T: Real>(variances: &[T], alloc: &DiscreteAllocation<T>) -> T {
    let theta = alloc.solution.theta;
    variances
        .iter()
        .zip(&alloc.rates)
        .map(|(&v, &r)| {
            if r > T::zero() {
                (v * (-(r + r)).exp2() - theta).abs()
            } else {
                (v - theta).max(T::zero())
            }
        })
        .fold(T::zero(), T::max)
}

fn spectral_solution<T: Real>(psd: &Psd<T>, level: WaterLevel<T>) -> WaterLevelSolution<T> {
    let active = if level.preserved_measure > T::zero() {
        psd.superlevel_set(level.theta)
    } else {
        BandSet::empty()
    };
    WaterLevelSolution {
        theta: level.theta,
        rate: level.rate,
        distortion: level.distortion,
        active: ActiveSet::Bands(active),
        status: level.status,
    }
}

/// Distortion-rate function of a Gaussian stationary source at `rate` bits
/// per unit time, by water-filling over its PSD.
pub fn shannon_drf<T: Real>(psd: &Psd<T>, rate: T) -> Result<WaterLevelSolution<T>> {
    if !(rate >= T::zero()) {
        return Err(AdxError::InvalidParameter(format!("rate {rate} must be >= 0")));
    }
    let table = WaterTable::from_cells(&psd.cells());
    Ok(spectral_solution(psd, table.solve_rate(rate)))
}

/// Minimal rate reaching distortion `target`; the inverse of [`shannon_drf`].
pub fn rate_for_distortion<T: Real>(psd: &Psd<T>, target: T) -> Result<WaterLevelSolution<T>> {
    if !(target > T::zero()) {
        return Err(AdxError::InvalidParameter(format!("target distortion {target} must be > 0")));
    }
    let table = WaterTable::from_cells(&psd.cells());
    Ok(spectral_solution(psd, table.solve_distortion(target)))
}

/// Units of the distortion reported by [`weighted_drf`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistortionUnits {
    /// `integral min(W S, theta)`.
    #[default]
    Weighted,
    /// Per-frequency error mapped back through `1/W`; bands with zero weight
    /// are left unencoded and count in full.
    Unweighted,
}

/// Distortion-rate function under the spectral weighting `weight(f) >= 0`:
/// water-filling over the product `weight(f) * S(f)`.
pub fn weighted_drf<T: Real, W: Fn(T) -> T>(
    psd: &Psd<T>,
    weight: W,
    rate: T,
    units: DistortionUnits,
) -> Result<WaterLevelSolution<T>> {
    if !(rate >= T::zero()) {
        return Err(AdxError::InvalidParameter(format!("rate {rate} must be >= 0")));
    }
    let cells = psd.cells();
    let mut weighted = Vec::with_capacity(cells.len());
    for c in &cells {
        let w = weight(c.center);
        if !(w >= T::zero()) || !w.is_finite() {
            return Err(AdxError::InvalidParameter(format!(
                "weight {w} at f = {} must be finite and >= 0",
                c.center
            )));
        }
        weighted.push(Cell { value: w * c.value, ..*c });
    }
    let level = WaterTable::from_cells(&weighted).solve_rate(rate);
    let distortion = match units {
        DistortionUnits::Weighted => level.distortion,
        DistortionUnits::Unweighted => compensated_sum(weighted.iter().zip(&cells).map(|(wc, c)| {
            if wc.value > T::zero() {
                wc.value.min(level.theta) * c.value / wc.value * c.width
            } else {
                c.value * c.width
            }
        })),
    };
    let active = if level.preserved_measure > T::zero() {
        BandSet::new(
            weighted
                .iter()
                .filter(|c| c.value > level.theta)
                .map(|c| (c.center - c.width / T::lit(2.0), c.center + c.width / T::lit(2.0))),
        )
    } else {
        BandSet::empty()
    };
    Ok(WaterLevelSolution {
        theta: level.theta,
        rate: level.rate,
        distortion,
        active: ActiveSet::Bands(active),
        status: level.status,
    })
}
