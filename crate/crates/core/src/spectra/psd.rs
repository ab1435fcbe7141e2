use std::cmp::Ordering;

use crate::error::{AdxError, Result};
use crate::scalar::{compensated_sum, Real};

use super::BandSet;

/// One raised-cosine lobe `weight * (1 + cos(pi (f - center) / half_width)) / 2`
/// on `|f - center| < half_width`, mirrored to `-center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lobe<T> {
    pub center: T,
    pub half_width: T,
    pub weight: T,
}

impl<T: Real> Lobe<T> {
    pub fn new(center: T, half_width: T, weight: T) -> Self {
        Self { center, half_width, weight }
    }

    fn value(&self, f: T) -> T {
        let d = (f - self.center).abs();
        if d >= self.half_width {
            return T::zero();
        }
        self.weight * (T::one() + (T::PI() * d / self.half_width).cos()) / T::lit(2.0)
    }

    /// Integral over the real line of this lobe and its mirror image.
    fn mass(&self) -> T {
        let single = self.weight * self.half_width;
        if self.center == T::zero() {
            single
        } else {
            single + single
        }
    }
}

/// Spectral family of a [`Psd`].
#[derive(Debug, Clone, PartialEq)]
pub enum PsdKind<T> {
    /// `1/(2W)` on `|f| < W`.
    Flat { half_width: T },
    /// `(1 - |f|/W)/W` on `|f| < W`.
    Triangular { half_width: T },
    /// Normalized sum of symmetric raised-cosine lobes.
    Multimodal { lobes: Vec<Lobe<T>> },
    /// Lorentzian spectrum `(1/f0) / ((pi f / f0)^2 + 1)` of the Ornstein-Uhlenbeck process.
    OrnsteinUhlenbeck { f0: T },
    /// Linear interpolation through `(f, density)` points given for `f >= 0`,
    /// mirrored to negative frequencies and zero beyond the last point.
    PiecewiseLinear { points: Vec<(T, T)> },
}

impl<T: Real> PsdKind<T> {
    /// Two-lobe fixture used throughout the tests: a central lobe and a pair
    /// of side lobes at `+-0.5`.
    pub fn bimodal_fixture() -> Self {
        PsdKind::Multimodal {
            lobes: vec![
                Lobe::new(T::zero(), T::lit(0.2), T::one()),
                Lobe::new(T::lit(0.5), T::lit(0.1), T::one()),
            ],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PsdKind::Flat { .. } => "flat",
            PsdKind::Triangular { .. } => "triangular",
            PsdKind::Multimodal { .. } => "multimodal",
            PsdKind::OrnsteinUhlenbeck { .. } => "ou",
            PsdKind::PiecewiseLinear { .. } => "piecewise",
        }
    }
}

/// Construction options. `None` selects the kind-dependent default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions<T> {
    pub f_max: Option<T>,
    pub grid_step: Option<T>,
    /// Largest admissible analytic tail mass beyond `f_max` (unbounded kinds).
    pub tail_tolerance: T,
}

impl<T: Real> Default for GridOptions<T> {
    fn default() -> Self {
        Self { f_max: None, grid_step: None, tail_tolerance: T::lit(5e-3) }
    }
}

/// Integration segment `[lo, hi)` with one-sided limits at both ends and the
/// density at its midpoint.
#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    lo: T,
    hi: T,
    left: T,
    mid: T,
    right: T,
}

/// A quadrature node: density `value` representing the band `center +- width/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<T> {
    pub center: T,
    pub width: T,
    pub value: T,
}

/// Symmetric power spectral density with an integration grid.
///
/// Densities are evaluated analytically. Integrals use the composite
/// midpoint rule on the partition of `[-f_max, f_max]` formed by the grid
/// lines `k * grid_step` and the kind's breakpoints (jumps and kinks), so
/// piecewise-constant spectra with edges on that partition integrate exactly
/// under any pointwise nonlinearity.
#[derive(Debug, Clone)]
pub struct Psd<T> {
    kind: PsdKind<T>,
    f_max: T,
    grid_step: T,
    normalization: T,
    segments: Vec<Segment<T>>,
}

impl<T: Real> Psd<T> {
    /// PSD with default grid parameters.
    pub fn new(kind: PsdKind<T>) -> Result<Self> {
        Self::with_options(kind, GridOptions::default())
    }

    pub fn with_grid(kind: PsdKind<T>, f_max: T, grid_step: T) -> Result<Self> {
        Self::with_options(
            kind,
            GridOptions { f_max: Some(f_max), grid_step: Some(grid_step), ..GridOptions::default() },
        )
    }

    pub fn flat(half_width: T) -> Result<Self> {
        Self::new(PsdKind::Flat { half_width })
    }

    pub fn triangular(half_width: T) -> Result<Self> {
        Self::new(PsdKind::Triangular { half_width })
    }

    pub fn ornstein_uhlenbeck(f0: T) -> Result<Self> {
        Self::new(PsdKind::OrnsteinUhlenbeck { f0 })
    }

    pub fn bimodal() -> Result<Self> {
        Self::new(PsdKind::bimodal_fixture())
    }

    pub fn with_options(kind: PsdKind<T>, opts: GridOptions<T>) -> Result<Self> {
        validate_kind(&kind)?;
        let normalization = match &kind {
            PsdKind::Multimodal { lobes } => {
                let mass: T = lobes.iter().map(Lobe::mass).sum();
                if mass <= T::zero() {
                    return Err(AdxError::InvalidParameter("multimodal PSD has zero mass".into()));
                }
                T::one() / mass
            }
            _ => T::one(),
        };
        let bandwidth = support_half_width(&kind);
        let (default_f_max, default_step) = match (&kind, bandwidth) {
            (PsdKind::OrnsteinUhlenbeck { f0 }, _) => (T::lit(200.0) * *f0, T::lit(1e-3) * *f0),
            (_, Some(b)) => (b + b, (b + b) / T::lit(2048.0)),
            (_, None) => unreachable!("only the OU kind is unbounded"),
        };
        let f_max = opts.f_max.unwrap_or(default_f_max);
        let grid_step = opts.grid_step.unwrap_or(default_step);
        if !(f_max > T::zero()) || !f_max.is_finite() {
            return Err(AdxError::InvalidParameter(format!("f_max must be positive, got {f_max}")));
        }
        if !(grid_step > T::zero()) || grid_step > f_max {
            return Err(AdxError::InvalidParameter(format!(
                "grid_step must lie in (0, f_max], got {grid_step}"
            )));
        }
        if let PsdKind::OrnsteinUhlenbeck { f0 } = &kind {
            let tail = ou_tail_mass(*f0, f_max);
            if tail > opts.tail_tolerance {
                return Err(AdxError::TailTooHeavy {
                    f_max: f_max.to_f64_lossy(),
                    tail: tail.to_f64_lossy(),
                    tolerance: opts.tail_tolerance.to_f64_lossy(),
                });
            }
        }
        let mut psd = Self { kind, f_max, grid_step, normalization, segments: Vec::new() };
        psd.segments = psd.build_segments();
        Ok(psd)
    }

    pub fn kind(&self) -> &PsdKind<T> {
        &self.kind
    }

    pub fn f_max(&self) -> T {
        self.f_max
    }

    pub fn grid_step(&self) -> T {
        self.grid_step
    }

    /// Nyquist rate, twice the support half-width; `None` if not bandlimited.
    pub fn f_nyq(&self) -> Option<T> {
        support_half_width(&self.kind).map(|b| b + b)
    }

    /// Analytic mass beyond `+-f_max` (zero for bandlimited kinds inside the grid).
    pub fn tail_mass(&self) -> T {
        match &self.kind {
            PsdKind::OrnsteinUhlenbeck { f0 } => ou_tail_mass(*f0, self.f_max),
            _ => T::zero(),
        }
    }

    /// Jump and kink locations at `f >= 0`, excluding the origin.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut pts = match &self.kind {
            PsdKind::Flat { half_width } | PsdKind::Triangular { half_width } => vec![*half_width],
            PsdKind::Multimodal { lobes } => lobes
                .iter()
                .flat_map(|l| [l.center, l.center + l.half_width, (l.center - l.half_width).abs()])
                .collect(),
            PsdKind::OrnsteinUhlenbeck { .. } => Vec::new(),
            PsdKind::PiecewiseLinear { points } => points.iter().map(|p| p.0).collect(),
        };
        pts.retain(|&p| p > T::zero());
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        pts.dedup();
        pts
    }

    /// Spectral density at `f`; symmetric by construction.
    pub fn density(&self, f: T) -> T {
        self.density_abs(f.abs(), None)
    }

    /// One-sided limit of the density at `f` (from above when `from_above`).
    pub fn density_limit(&self, f: T, from_above: bool) -> T {
        if f > T::zero() {
            self.density_abs(f, Some(from_above))
        } else if f < T::zero() {
            self.density_abs(-f, Some(!from_above))
        } else {
            self.density_abs(T::zero(), Some(true))
        }
    }

    /// Density at `f` restricted to the integration range `[-f_max, f_max]`.
    pub fn truncated_density(&self, f: T) -> T {
        if f.abs() > self.f_max {
            T::zero()
        } else {
            self.density(f)
        }
    }

    fn density_abs(&self, g: T, side: Option<bool>) -> T {
        match &self.kind {
            PsdKind::Flat { half_width } => {
                let inside = match side {
                    Some(true) => g < *half_width,
                    Some(false) => g <= *half_width,
                    None => g < *half_width,
                };
                if inside {
                    T::one() / (*half_width + *half_width)
                } else {
                    T::zero()
                }
            }
            PsdKind::Triangular { half_width } => {
                if g < *half_width {
                    (T::one() - g / *half_width) / *half_width
                } else {
                    T::zero()
                }
            }
            PsdKind::Multimodal { lobes } => {
                let raw: T = lobes
                    .iter()
                    .map(|l| if l.center == T::zero() { l.value(g) } else { l.value(g) + l.value(-g) })
                    .sum();
                raw * self.normalization
            }
            PsdKind::OrnsteinUhlenbeck { f0 } => {
                let x = T::PI() * g / *f0;
                (T::one() / *f0) / (x * x + T::one())
            }
            PsdKind::PiecewiseLinear { points } => piecewise_value(points, g, side),
        }
    }

    fn build_segments(&self) -> Vec<Segment<T>> {
        let n_lines = (self.f_max / self.grid_step).floor().to_usize().unwrap_or(0);
        let mut cuts: Vec<T> = (0..=n_lines).map(|k| T::from_usize_lossy(k) * self.grid_step).collect();
        cuts.push(self.f_max);
        cuts.extend(self.breakpoints().into_iter().filter(|&p| p < self.f_max));
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let merge_tol = self.grid_step * T::lit(1e-9);
        cuts.dedup_by(|b, a| (*b - *a).abs() <= merge_tol);
        if let Some(last) = cuts.last_mut() {
            *last = self.f_max;
        }

        let positive: Vec<Segment<T>> = cuts
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                Segment {
                    lo,
                    hi,
                    left: self.density_limit(lo, true),
                    mid: self.density((lo + hi) / T::lit(2.0)),
                    right: self.density_limit(hi, false),
                }
            })
            .collect();
        let mut all: Vec<Segment<T>> = positive
            .iter()
            .rev()
            .map(|s| Segment { lo: -s.hi, hi: -s.lo, left: s.right, mid: s.mid, right: s.left })
            .collect();
        all.extend(positive);
        all
    }

    /// Index range of segments overlapping `[lo, hi)`.
    fn segment_range(&self, lo: T, hi: T) -> std::ops::Range<usize> {
        let start = self.segments.partition_point(|s| s.hi <= lo);
        let end = self.segments.partition_point(|s| s.lo < hi);
        start..end.max(start)
    }

    /// Quadrature cells covering the whole grid.
    pub fn cells(&self) -> Vec<Cell<T>> {
        self.segments
            .iter()
            .map(|s| Cell { center: (s.lo + s.hi) / T::lit(2.0), width: s.hi - s.lo, value: s.mid })
            .collect()
    }

    /// Quadrature cells covering `bands`, refining the grid at band edges.
    pub fn cells_in(&self, bands: &BandSet<T>) -> Result<Vec<Cell<T>>> {
        self.check_in_range(bands)?;
        let mut out = Vec::new();
        for &(lo, hi) in bands.intervals() {
            let lo = lo.max(-self.f_max);
            let hi = hi.min(self.f_max);
            for s in &self.segments[self.segment_range(lo, hi)] {
                let a = s.lo.max(lo);
                let b = s.hi.min(hi);
                if b <= a {
                    continue;
                }
                if a == s.lo && b == s.hi {
                    out.push(Cell { center: (a + b) / T::lit(2.0), width: b - a, value: s.mid });
                } else {
                    let c = (a + b) / T::lit(2.0);
                    out.push(Cell { center: c, width: b - a, value: self.density(c) });
                }
            }
        }
        Ok(out)
    }

    /// Restriction of the grid cells to `bands` without refining: each
    /// segment keeps its midpoint density and its width shrinks to the
    /// overlap with `bands`. Also returns the mass left outside, so that the
    /// two parts add up to [`Psd::total_variance`] on identical nodes.
    pub fn restricted_cells(&self, bands: &BandSet<T>) -> Result<(Vec<Cell<T>>, T)> {
        self.check_in_range(bands)?;
        let mut inside = Vec::new();
        let mut outside = Vec::with_capacity(self.segments.len());
        let iv = bands.intervals();
        let mut j = 0;
        for s in &self.segments {
            while j < iv.len() && iv[j].1 <= s.lo {
                j += 1;
            }
            let mut overlap = T::zero();
            let mut k = j;
            while k < iv.len() && iv[k].0 < s.hi {
                let a = iv[k].0.max(s.lo);
                let b = iv[k].1.min(s.hi);
                if b > a {
                    overlap = overlap + (b - a);
                }
                k += 1;
            }
            let width = s.hi - s.lo;
            let overlap = overlap.min(width);
            if overlap > T::zero() {
                inside.push(Cell { center: (s.lo + s.hi) / T::lit(2.0), width: overlap, value: s.mid });
            }
            outside.push(s.mid * (width - overlap));
        }
        Ok((inside, compensated_sum(outside)))
    }

    fn check_in_range(&self, bands: &BandSet<T>) -> Result<()> {
        let slack = self.grid_step * T::lit(1e-9);
        if let (Some(lo), Some(hi)) = (bands.lowest(), bands.highest()) {
            if lo < -self.f_max - slack || hi > self.f_max + slack {
                return Err(AdxError::BandOutOfRange {
                    low: lo.to_f64_lossy(),
                    high: hi.to_f64_lossy(),
                    f_max: self.f_max.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    /// Variance: midpoint-rule integral of the density over `[-f_max, f_max]`.
    pub fn total_variance(&self) -> T {
        compensated_sum(self.segments.iter().map(|s| s.mid * (s.hi - s.lo)))
    }

    /// Power inside `bands`. Additive over disjoint band sets.
    pub fn integrate_band(&self, bands: &BandSet<T>) -> Result<T> {
        Ok(compensated_sum(self.cells_in(bands)?.into_iter().map(|c| c.value * c.width)))
    }

    pub fn peak_density(&self) -> T {
        self.segments
            .iter()
            .flat_map(|s| [s.left, s.mid, s.right])
            .fold(T::zero(), T::max)
    }

    /// Grid-resolved superlevel set `{f : S(f) >= tau}`.
    ///
    /// Each segment is in or out according to its one-sided end values; a
    /// segment whose ends straddle `tau` contributes the part on the high
    /// side of the linear interpolant's crossing.
    pub fn superlevel_set(&self, tau: T) -> BandSet<T> {
        self.level_set_by(|s| {
            let left_in = s.left >= tau;
            let right_in = s.right >= tau;
            match (left_in, right_in) {
                (true, true) => Some((s.lo, s.hi)),
                (false, false) => None,
                (true, false) => {
                    let x = s.lo + (s.left - tau) / (s.left - s.right) * (s.hi - s.lo);
                    Some((s.lo, x))
                }
                (false, true) => {
                    let x = s.lo + (tau - s.left) / (s.right - s.left) * (s.hi - s.lo);
                    Some((x, s.hi))
                }
            }
        })
    }

    /// Grid-resolved support `{f : S(f) > 0}`.
    pub fn occupied_set(&self) -> BandSet<T> {
        self.level_set_by(|s| {
            if s.left > T::zero() || s.mid > T::zero() || s.right > T::zero() {
                Some((s.lo, s.hi))
            } else {
                None
            }
        })
    }

    fn level_set_by<F: Fn(&Segment<T>) -> Option<(T, T)>>(&self, pick: F) -> BandSet<T> {
        BandSet::new(self.segments.iter().filter_map(pick))
    }

    /// Full grid range `[-f_max, f_max)`.
    pub fn grid_band(&self) -> BandSet<T> {
        BandSet::symmetric(self.f_max)
    }
}

/// Analytic mass of the OU spectrum outside `[-f_max, f_max]`.
pub fn ou_tail_mass<T: Real>(f0: T, f_max: T) -> T {
    T::one() - T::lit(2.0) / T::PI() * (T::PI() * f_max / f0).atan()
}

/// Analytic OU power inside `[-f, f]`.
pub fn ou_band_power<T: Real>(f0: T, f: T) -> T {
    T::lit(2.0) / T::PI() * (T::PI() * f / f0).atan()
}

fn support_half_width<T: Real>(kind: &PsdKind<T>) -> Option<T> {
    match kind {
        PsdKind::Flat { half_width } | PsdKind::Triangular { half_width } => Some(*half_width),
        PsdKind::Multimodal { lobes } => {
            Some(lobes.iter().map(|l| l.center + l.half_width).fold(T::zero(), T::max))
        }
        PsdKind::OrnsteinUhlenbeck { .. } => None,
        PsdKind::PiecewiseLinear { points } => {
            let last_pos = points.iter().rposition(|p| p.1 > T::zero())?;
            Some(if last_pos + 1 < points.len() { points[last_pos + 1].0 } else { points[last_pos].0 })
        }
    }
}

fn piecewise_value<T: Real>(points: &[(T, T)], g: T, side: Option<bool>) -> T {
    let last = points[points.len() - 1];
    if g > last.0 || (g == last.0 && side == Some(true)) {
        return T::zero();
    }
    if g <= points[0].0 {
        return points[0].1;
    }
    let idx = points.partition_point(|p| p.0 < g);
    let (f1, d1) = points[idx];
    let (f0, d0) = points[idx - 1];
    d0 + (d1 - d0) * (g - f0) / (f1 - f0)
}

fn validate_kind<T: Real>(kind: &PsdKind<T>) -> Result<()> {
    let positive = |name: &str, v: T| {
        if v > T::zero() && v.is_finite() {
            Ok(())
        } else {
            Err(AdxError::InvalidParameter(format!("{name} must be positive, got {v}")))
        }
    };
    match kind {
        PsdKind::Flat { half_width } | PsdKind::Triangular { half_width } => positive("W", *half_width),
        PsdKind::OrnsteinUhlenbeck { f0 } => positive("f0", *f0),
        PsdKind::Multimodal { lobes } => {
            if lobes.is_empty() {
                return Err(AdxError::InvalidParameter("multimodal PSD needs at least one lobe".into()));
            }
            for l in lobes {
                positive("lobe half-width", l.half_width)?;
                if l.center < T::zero() || l.weight < T::zero() {
                    return Err(AdxError::InvalidParameter(
                        "lobe center and weight must be nonnegative".into(),
                    ));
                }
            }
            Ok(())
        }
        PsdKind::PiecewiseLinear { points } => {
            if points.is_empty() {
                return Err(AdxError::InvalidParameter("piecewise PSD needs at least one point".into()));
            }
            for (i, &(f, d)) in points.iter().enumerate() {
                if f < T::zero() || !f.is_finite() {
                    return Err(AdxError::InvalidParameter(format!("frequency {f} must be finite and >= 0")));
                }
                if d < T::zero() || !d.is_finite() {
                    return Err(AdxError::NegativeDensity { frequency: f.to_f64_lossy(), density: d.to_f64_lossy() });
                }
                if i > 0 && f <= points[i - 1].0 {
                    return Err(AdxError::UnsortedBreakpoints { index: i });
                }
            }
            if points.iter().all(|p| p.1 == T::zero()) {
                return Err(AdxError::InvalidParameter("piecewise PSD is identically zero".into()));
            }
            Ok(())
        }
    }
}
