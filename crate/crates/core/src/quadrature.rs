//! Adaptive Gauss–Kronrod quadrature with geometric panel ladders for
//! integrands that are singular at the origin or decay slowly at infinity.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Maximum number of bisections inside one panel.
    pub max_subdivisions: usize,
    /// Maximum number of geometric panels on an unbounded or singular ladder.
    pub max_panels: usize,
}

impl<T: Real> Default for QuadratureConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-10),
            abs_tol: T::min_positive_value(),
            max_subdivisions: 200,
            max_panels: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
    pub converged: bool,
}

/// Outcome of a geometric ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ladder<T> {
    Converged(T),
    /// Panel contributions failed to shrink over three successive doublings.
    Divergent,
    /// Ran out of panels without a verdict.
    Undecided(T),
}

impl<T: Real> Ladder<T> {
    /// Finite value, `+∞` for a divergent ladder, `None` when undecided.
    pub fn extended(self) -> Option<T> {
        match self {
            Ladder::Converged(v) => Some(v),
            Ladder::Divergent => Some(T::infinity()),
            Ladder::Undecided(_) => None,
        }
    }
}

/// Single Gauss–Kronrod 15-point panel; returns (Kronrod value, |Kronrod - Gauss|).
pub fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    (kronrod * radius, ((kronrod - gauss) * radius).abs())
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// Adaptive bisection on `[a, b]`, always splitting the panel with the largest error.
pub fn adaptive<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, cfg: &QuadratureConfig<T>) -> Estimate<T> {
    if a == b {
        return Estimate { value: T::zero(), error: T::zero(), evaluations: 0, converged: true };
    }
    let (value, error) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = 15;
    let tol = |v: T| cfg.abs_tol.max(cfg.rel_tol * v.abs());
    let mut splits = 0;
    while total_err > tol(total) && splits < cfg.max_subdivisions {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = T::lit(0.5) * (worst.a + worst.b);
        let (lv, le) = gk15(f, worst.a, mid);
        let (rv, re) = gk15(f, mid, worst.b);
        evaluations += 30;
        total = total - worst.value + lv + rv;
        total_err = total_err - worst.error + le + re;
        heap.push(Panel { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, error: re });
        splits += 1;
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let (value, error) = heap
        .iter()
        .fold((T::zero(), T::zero()), |(v, e), p| (v + p.value, e + p.error));
    Estimate { value, error, evaluations, converged: error <= tol(value) }
}

/// Composite GK15 with `panels` equal sub-intervals (non-adaptive).
pub fn composite<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, panels: usize) -> T {
    let n = panels.max(1);
    let h = (b - a) / T::from_usize_lossy(n);
    (0..n).fold(T::zero(), |acc, i| {
        let lo = a + h * T::from_usize_lossy(i);
        acc + gk15(f, lo, lo + h).0
    })
}

fn ladder<T: Real, F: Fn(T) -> T, P: Fn(usize) -> (T, T)>(
    f: &F,
    panel: P,
    cfg: &QuadratureConfig<T>,
) -> Ladder<T> {
    let mut sum = T::zero();
    let mut prev: Option<T> = None;
    let mut growth = 0;
    let slack = T::one() - T::lit(1e-9);
    for j in 0..cfg.max_panels {
        let (lo, hi) = panel(j);
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Ladder::Undecided(sum);
        }
        let est = adaptive(f, lo, hi, cfg);
        let v = est.value;
        if !v.is_finite() {
            return Ladder::Divergent;
        }
        sum = sum + v;
        let mag = v.abs();
        if let Some(p) = prev {
            if p > T::zero() && mag >= p * slack {
                growth += 1;
                if growth >= 3 {
                    return Ladder::Divergent;
                }
            } else {
                growth = 0;
            }
            if mag <= cfg.rel_tol * sum.abs() || (mag == T::zero() && p == T::zero()) {
                let ratio = if p > T::zero() { mag / p } else { T::zero() };
                if ratio < T::lit(0.95) {
                    sum = sum + v * ratio / (T::one() - ratio);
                }
                return Ladder::Converged(sum);
            }
        }
        prev = Some(mag);
    }
    Ladder::Undecided(sum)
}

/// `∫_0^b f` for integrands singular at the origin, with panels `[b 2^{-(j+1)}, b 2^{-j}]`.
pub fn toward_zero<T: Real, F: Fn(T) -> T>(f: &F, b: T, cfg: &QuadratureConfig<T>) -> Ladder<T> {
    let two = T::lit(2.0);
    ladder(f, |j| {
        let hi = b / two.powi(j as i32);
        (hi / two, hi)
    }, cfg)
}

/// `∫_a^∞ f` with panels `[a 2^j, a 2^{j+1}]`; `a` must be positive.
pub fn toward_infinity<T: Real, F: Fn(T) -> T>(f: &F, a: T, cfg: &QuadratureConfig<T>) -> Ladder<T> {
    let two = T::lit(2.0);
    ladder(f, |j| {
        let lo = a * two.powi(j as i32);
        (lo, lo * two)
    }, cfg)
}

/// `∫_a^b f` for `0 ≤ a < b ≤ ∞`, with geometric panels accumulating toward 0 and ∞.
pub fn log_panels<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, cfg: &QuadratureConfig<T>) -> Ladder<T> {
    if !(a < b) {
        return Ladder::Converged(T::zero());
    }
    let two = T::lit(2.0);
    match (a == T::zero(), b.is_infinite()) {
        (true, true) => {
            let head = toward_zero(f, T::one(), cfg);
            let tail = toward_infinity(f, T::one(), cfg);
            combine(head, tail)
        }
        (true, false) => toward_zero(f, b, cfg),
        (false, true) => toward_infinity(f, a, cfg),
        (false, false) => {
            // finite ladder from b down to a
            let mut sum = T::zero();
            let mut hi = b;
            while hi > a {
                let lo = (hi / two).max(a);
                let lo = if lo < a * two && lo > a { a } else { lo };
                sum = sum + adaptive(f, lo, hi, cfg).value;
                hi = lo;
            }
            Ladder::Converged(sum)
        }
    }
}

fn combine<T: Real>(x: Ladder<T>, y: Ladder<T>) -> Ladder<T> {
    match (x, y) {
        (Ladder::Divergent, _) | (_, Ladder::Divergent) => Ladder::Divergent,
        (Ladder::Converged(a), Ladder::Converged(b)) => Ladder::Converged(a + b),
        (Ladder::Undecided(a), Ladder::Converged(b))
        | (Ladder::Converged(a), Ladder::Undecided(b))
        | (Ladder::Undecided(a), Ladder::Undecided(b)) => Ladder::Undecided(a + b),
    }
}
