//! Scalar quantizers: uniform and Lloyd designs, output entropy and
//! distortion under a given input density.

use std::fmt;
use std::sync::Arc;

use crate::error::{AdxError, Result};
use crate::scalar::{compensated_sum, Real};

/// Nodes and weights of 8-point Gauss-Legendre quadrature on `[-1, 1]`.
const GL_NODES: [f64; 8] = [
    -0.9602898564975362,
    -0.7966664774136267,
    -0.525532409916329,
    -0.18343464249564978,
    0.18343464249564978,
    0.525532409916329,
    0.7966664774136267,
    0.9602898564975362,
];
const GL_WEIGHTS: [f64; 8] = [
    0.10122853629037669,
    0.22238103445337434,
    0.31370664587788705,
    0.36268378337836177,
    0.36268378337836177,
    0.31370664587788705,
    0.22238103445337434,
    0.10122853629037669,
];

/// Working range half-width in standard deviations.
pub const RANGE_SIGMAS: f64 = 8.0;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;
const INIT_TABLE_POINTS: usize = 1 << 16;

type PdfFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Probability density of the quantizer input, supported (for all numerical
/// purposes) on `[low, high]`.
#[derive(Clone)]
pub struct InputDensity<T> {
    pdf: PdfFn<T>,
    low: T,
    high: T,
    scale: T,
}

impl<T: Real> fmt::Debug for InputDensity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InputDensity").field("low", &self.low).field("high", &self.high).finish()
    }
}

impl<T: Real> InputDensity<T> {
    /// Arbitrary density on `[low, high]`; `scale` sets the quadrature
    /// resolution (pieces no wider than `scale / 4`).
    pub fn new<F: Fn(T) -> T + Send + Sync + 'static>(pdf: F, low: T, high: T, scale: T) -> Result<Self> {
        if !(high > low) || !(scale > T::zero()) {
            return Err(AdxError::InvalidParameter(format!("density range [{low}, {high}] with scale {scale}")));
        }
        Ok(Self { pdf: Arc::new(pdf), low, high, scale })
    }

    pub fn normal(mean: T, std: T) -> Result<Self> {
        if !(std > T::zero()) {
            return Err(AdxError::InvalidParameter(format!("standard deviation {std} must be positive")));
        }
        let norm = T::one() / (std * (T::lit(2.0) * T::PI()).sqrt());
        let reach = T::lit(RANGE_SIGMAS) * std;
        Self::new(
            move |x: T| {
                let z = (x - mean) / std;
                norm * (-(z * z) / T::lit(2.0)).exp()
            },
            mean - reach,
            mean + reach,
            std,
        )
    }

    pub fn standard_normal() -> Self {
        Self::normal(T::zero(), T::one()).expect("unit normal")
    }

    pub fn uniform(low: T, high: T) -> Result<Self> {
        let h = T::one() / (high - low);
        Self::new(move |x: T| if x >= low && x <= high { h } else { T::zero() }, low, high, high - low)
    }

    pub fn pdf(&self, x: T) -> T {
        (self.pdf)(x)
    }

    pub fn range(&self) -> (T, T) {
        (self.low, self.high)
    }

    /// `integral_a^b g(x) p(x) dx` over the working range.
    pub fn integrate<G: Fn(T) -> T>(&self, a: T, b: T, g: G) -> T {
        let a = a.max(self.low);
        let b = b.min(self.high);
        if b <= a {
            return T::zero();
        }
        let piece = self.scale / T::lit(4.0);
        let n = ((b - a) / piece).ceil().to_usize().unwrap_or(1).max(1);
        let h = (b - a) / T::from_usize_lossy(n);
        let half = h / T::lit(2.0);
        compensated_sum((0..n).map(|i| {
            let c = a + (T::from_usize_lossy(i) + T::lit(0.5)) * h;
            let s: T = GL_NODES
                .iter()
                .zip(GL_WEIGHTS.iter())
                .map(|(&x, &w)| {
                    let t = c + half * T::lit(x);
                    T::lit(w) * g(t) * self.pdf(t)
                })
                .sum();
            s * half
        }))
    }

    pub fn mass(&self) -> T {
        self.integrate(self.low, self.high, |_| T::one())
    }

    pub fn mean(&self) -> T {
        self.integrate(self.low, self.high, |x| x)
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.integrate(self.low, self.high, |x| (x - m) * (x - m))
    }

    fn check_normalized(&self) -> Result<()> {
        let mass = self.mass();
        if (mass - T::one()).abs() > T::lit(NORMALIZATION_TOLERANCE) {
            return Err(AdxError::DensityNotNormalized {
                mass: mass.to_f64_lossy(),
                tolerance: NORMALIZATION_TOLERANCE,
            });
        }
        Ok(())
    }
}

/// Reconstruction levels and decision thresholds of a scalar quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSpec<T> {
    /// Strictly increasing reconstruction values.
    pub levels: Vec<T>,
    /// `levels.len() - 1` interior thresholds; level `i` covers
    /// `(boundaries[i-1], boundaries[i]]`.
    pub boundaries: Vec<T>,
    /// Probability of each level under the design density.
    pub probabilities: Vec<T>,
    pub codeword_lengths: Option<Vec<T>>,
}

impl<T: Real> QuantizerSpec<T> {
    /// Nearest-level quantizer for the given levels (midpoint thresholds).
    pub fn from_levels(levels: Vec<T>, density: &InputDensity<T>) -> Result<Self> {
        if levels.is_empty() {
            return Err(AdxError::InvalidParameter("a quantizer needs at least one level".into()));
        }
        if levels.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(AdxError::InvalidParameter("levels must be strictly increasing".into()));
        }
        let boundaries = midpoints(&levels);
        let probabilities = cell_probabilities(&boundaries, density);
        Ok(Self { levels, boundaries, probabilities, codeword_lengths: None })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Cell `i` as `(low, high)` within the density's working range.
    fn cell(&self, i: usize, density: &InputDensity<T>) -> (T, T) {
        let (lo, hi) = density.range();
        let a = if i == 0 { lo } else { self.boundaries[i - 1] };
        let b = if i + 1 == self.levels.len() { hi } else { self.boundaries[i] };
        (a, b)
    }

    /// Index of the level representing `x`: ties at a threshold go to the
    /// lower level, values beyond the outer thresholds saturate.
    pub fn index_of(&self, x: T) -> usize {
        self.boundaries.partition_point(|&b| b < x)
    }
}

fn midpoints<T: Real>(levels: &[T]) -> Vec<T> {
    levels.windows(2).map(|w| (w[0] + w[1]) / T::lit(2.0)).collect()
}

fn cell_probabilities<T: Real>(boundaries: &[T], density: &InputDensity<T>) -> Vec<T> {
    let (lo, hi) = density.range();
    let mut edges = Vec::with_capacity(boundaries.len() + 2);
    edges.push(lo);
    edges.extend_from_slice(boundaries);
    edges.push(hi);
    edges.windows(2).map(|w| density.integrate(w[0], w[1], |_| T::one())).collect()
}

/// Mean squared error of `spec` under `density`.
pub fn mse<T: Real>(spec: &QuantizerSpec<T>, density: &InputDensity<T>) -> T {
    compensated_sum((0..spec.len()).map(|i| {
        let (a, b) = spec.cell(i, density);
        let l = spec.levels[i];
        density.integrate(a, b, |x| (x - l) * (x - l))
    }))
}

/// Shannon entropy of the quantizer output in bits: the smallest average
/// codeword length of a variable-length code for its indices.
pub fn entropy_rate<T: Real>(spec: &QuantizerSpec<T>, density: &InputDensity<T>) -> T {
    let probs = cell_probabilities(&spec.boundaries, density);
    let total = compensated_sum(probs.iter().copied());
    compensated_sum(probs.into_iter().filter(|&p| p > T::zero()).map(|p| {
        let q = p / total;
        -q * q.log2()
    }))
}

/// `k` levels centered on zero with spacing `step`.
pub fn uniform_quantizer<T: Real>(step: T, k: usize, density: &InputDensity<T>) -> Result<QuantizerSpec<T>> {
    if !(step > T::zero()) || k == 0 {
        return Err(AdxError::InvalidParameter(format!("step {step} and level count {k} must be positive")));
    }
    density.check_normalized()?;
    let offset = T::from_usize_lossy(k - 1) / T::lit(2.0);
    let levels = (0..k).map(|i| (T::from_usize_lossy(i) - offset) * step).collect();
    QuantizerSpec::from_levels(levels, density)
}

/// Uniform quantizer whose output entropy equals `bits`, with enough levels
/// to cover the working range of `density`. The step is found by bisection.
pub fn uniform_quantizer_for_entropy<T: Real>(density: &InputDensity<T>, bits: T) -> Result<QuantizerSpec<T>> {
    if !(bits > T::zero()) {
        return Err(AdxError::InvalidParameter(format!("target entropy {bits} must be positive")));
    }
    density.check_normalized()?;
    let (lo, hi) = density.range();
    let reach = hi.abs().max(lo.abs());
    let build = |step: T| {
        let k = 2 * (reach / step).ceil().to_usize().unwrap_or(1) + 1;
        uniform_quantizer(step, k, density)
    };
    // entropy falls as the step grows
    let (mut a, mut b) = ((reach * T::lit(1e-7)).ln(), (reach * T::lit(4.0)).ln());
    for _ in 0..100 {
        let mid = (a + b) / T::lit(2.0);
        let h = entropy_rate(&build(mid.exp())?, density);
        if h > bits {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= T::lit(1e-13) {
            break;
        }
    }
    build(((a + b) / T::lit(2.0)).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydResult<T> {
    pub spec: QuantizerSpec<T>,
    pub mse: T,
    pub iterations: usize,
    pub converged: bool,
    /// MSE never increased between iterations (up to rounding).
    pub monotone: bool,
}

/// Initial levels at the quantiles of `p^(1/3)`, the asymptotically optimal
/// level density.
fn compander_levels<T: Real>(density: &InputDensity<T>, k: usize) -> Vec<T> {
    let (lo, hi) = density.range();
    let n = INIT_TABLE_POINTS;
    let h = (hi - lo) / T::from_usize_lossy(n - 1);
    let w: Vec<T> = (0..n).map(|i| density.pdf(lo + T::from_usize_lossy(i) * h).max(T::zero()).cbrt()).collect();
    let mut cum = Vec::with_capacity(n);
    let mut acc = T::zero();
    cum.push(acc);
    for i in 1..n {
        acc = acc + (w[i - 1] + w[i]) * h / T::lit(2.0);
        cum.push(acc);
    }
    (0..k)
        .map(|j| {
            let target = acc * (T::from_usize_lossy(j) + T::lit(0.5)) / T::from_usize_lossy(k);
            let i = cum.partition_point(|&c| c < target).clamp(1, n - 1);
            let span = cum[i] - cum[i - 1];
            let frac = if span > T::zero() { (target - cum[i - 1]) / span } else { T::lit(0.5) };
            lo + (T::from_usize_lossy(i - 1) + frac) * h
        })
        .collect()
}

/// Lloyd iteration for a `k`-level quantizer: alternate centroid and
/// midpoint updates until no level moves by more than `tol`.
pub fn lloyd<T: Real>(density: &InputDensity<T>, k: usize, tol: T, max_iter: usize) -> Result<LloydResult<T>> {
    if k == 0 {
        return Err(AdxError::InvalidParameter("level count must be positive".into()));
    }
    density.check_normalized()?;
    let mut levels = compander_levels(density, k);
    let mut spec = QuantizerSpec::from_levels(levels.clone(), density)?;
    let mut best_mse = mse(&spec, density);
    let mut monotone = true;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut moved = T::zero();
        let mut next = Vec::with_capacity(k);
        for (i, &level) in levels.iter().enumerate() {
            let (a, b) = spec.cell(i, density);
            let p0 = density.integrate(a, b, |_| T::one());
            let c = if p0 > T::zero() { density.integrate(a, b, |x| x) / p0 } else { level };
            moved = moved.max((c - level).abs());
            next.push(c);
        }
        // an empty cell may leave its level out of order; restore order
        next.sort_by(|x, y| x.partial_cmp(y).expect("finite levels"));
        next.dedup();
        if next.len() != k {
            break;
        }
        levels = next;
        spec = QuantizerSpec::from_levels(levels.clone(), density)?;
        let m = mse(&spec, density);
        if m > best_mse * (T::one() + T::lit(1e-10)) + T::min_positive_value() {
            monotone = false;
        }
        best_mse = m;
        if moved < tol {
            converged = true;
            break;
        }
    }
    Ok(LloydResult { mse: best_mse, spec, iterations, converged, monotone })
}

/// Maps each sample to its level index and reconstruction value.
pub fn quantize_sequence<T: Real>(spec: &QuantizerSpec<T>, samples: &[T]) -> (Vec<usize>, Vec<T>) {
    samples
        .iter()
        .map(|&x| {
            let i = spec.index_of(x);
            (i, spec.levels[i])
        })
        .unzip()
}
