//! Lévy measures, small-jump truncations and their moment statistics.

mod sampler;
mod scan;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{self, Ladder, QuadratureConfig};
use crate::special::{gamma, lower_gamma};

pub use sampler::MarkSampler;
pub use scan::{ar_scan, ArCell, ArReport};

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied Lévy density on a support interval.
#[derive(Clone)]
pub struct CustomDensity {
    pub name: String,
    pub density: DensityFn,
    /// Support `(lo, hi)` of the density; may straddle the origin.
    pub support: (f64, f64),
}

impl fmt::Debug for CustomDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDensity")
            .field("name", &self.name)
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum LevyBase {
    /// Finite measure `Σ w δ_z` given as `(z, w)` pairs.
    CompoundPoisson(Vec<(f64, f64)>),
    /// Density `e^{-z}/z` on `z > 0`.
    GammaSubordinator,
    /// Density `|z|^{-1-α}`.
    SymmetricStable { alpha: f64 },
    /// The counterexample family indexed directly by ε.
    RemarkDensityFamily,
    CustomDensity(CustomDensity),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationScheme {
    /// Restrict the base measure to `|z| ≤ ε`.
    OuterCutoff,
    /// The whole measure is a function of ε.
    FamilyIndex,
}

/// Selects closed forms where available or forces quadrature everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    #[default]
    Auto,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Pos,
    Neg,
    Both,
}

#[derive(Clone)]
pub(crate) enum Shape {
    /// `coef · y^exp`
    Power { coef: f64, exp: f64 },
    /// `e^{-y} / y`
    Gamma,
    /// `coef / (y³ log(1+y)²)`
    RemarkTail { coef: f64 },
    /// `d(sign · y)`
    Custom { density: DensityFn, sign: f64 },
}

/// A radial density on `lo < |z| ≤ hi`, placed on one or both half-lines.
#[derive(Clone)]
pub(crate) struct Piece {
    pub side: Side,
    pub lo: f64,
    pub hi: f64,
    pub shape: Shape,
}

impl Piece {
    pub fn radial_density(&self, y: f64) -> f64 {
        match &self.shape {
            Shape::Power { coef, exp } => coef * y.powf(*exp),
            Shape::Gamma => (-y).exp() / y,
            Shape::RemarkTail { coef } => coef / (y * y * y * (1.0 + y).ln().powi(2)),
            Shape::Custom { density, sign } => density(sign * y),
        }
    }

    pub fn multiplicity(&self) -> f64 {
        if self.side == Side::Both {
            2.0
        } else {
            1.0
        }
    }

    pub fn orientation(&self) -> f64 {
        match self.side {
            Side::Pos => 1.0,
            Side::Neg => -1.0,
            Side::Both => 0.0,
        }
    }

    /// `∫_{a<y≤b} y^p r(y) dy` over the piece; `+∞` when divergent.
    fn radial_moment(&self, p: f64, a: f64, b: f64, route: Route, q: &QuadratureConfig<f64>) -> Result<f64> {
        let lo = self.lo.max(a);
        let hi = self.hi.min(b);
        if !(lo < hi) {
            return Ok(0.0);
        }
        if route == Route::Auto {
            if let Some(v) = self.closed_form(p, lo, hi) {
                return Ok(v);
            }
        }
        self.quadrature(p, lo, hi, q)
    }

    fn closed_form(&self, p: f64, lo: f64, hi: f64) -> Option<f64> {
        match &self.shape {
            Shape::Power { coef, exp } => {
                let s = p + exp + 1.0;
                if (lo == 0.0 && s <= 0.0) || (hi.is_infinite() && s >= 0.0) {
                    return Some(f64::INFINITY);
                }
                if s == 0.0 {
                    return Some(coef * (hi / lo).ln());
                }
                Some(coef * (hi.powf(s) - lo.powf(s)) / s)
            }
            Shape::Gamma => {
                if p <= 0.0 {
                    return if lo == 0.0 { Some(f64::INFINITY) } else { None };
                }
                let upper = if hi.is_infinite() { gamma(p) } else { lower_gamma(p, hi) };
                Some(upper - lower_gamma(p, lo))
            }
            Shape::RemarkTail { coef } => {
                if p == 2.0 && lo <= 1.0 && hi.is_infinite() {
                    Some(coef * remark_constant())
                } else {
                    None
                }
            }
            Shape::Custom { .. } => None,
        }
    }

    fn quadrature(&self, p: f64, lo: f64, hi: f64, q: &QuadratureConfig<f64>) -> Result<f64> {
        let ladder = match &self.shape {
            Shape::RemarkTail { coef } => {
                // substitute v = log(1+y)
                let coef = *coef;
                let g = move |v: f64| coef * ((p - 2.0) * v).exp() * (-(-v).exp_m1()).powf(p - 3.0) / (v * v);
                quadrature::log_panels(&g, lo.ln_1p(), hi.ln_1p(), q)
            }
            _ => {
                let g = |y: f64| if y > 0.0 { y.powf(p) * self.radial_density(y) } else { 0.0 };
                quadrature::log_panels(&g, lo, hi, q)
            }
        };
        match ladder {
            Ladder::Converged(v) if v.is_finite() => Ok(v),
            Ladder::Converged(_) | Ladder::Divergent => Ok(f64::INFINITY),
            Ladder::Undecided(v) => Err(Error::NonIntegrable {
                what: format!("radial moment of order {p} on ({lo}, {hi}] undecided after partial sum {v:e}"),
            }),
        }
    }
}

/// `C = ∫_1^∞ z^{-1} log(1+z)^{-2} dz`.
pub fn remark_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let g = |v: f64| 1.0 / (-(-v).exp_m1() * v * v);
        quadrature::log_panels(&g, std::f64::consts::LN_2, f64::INFINITY, &QuadratureConfig::default())
            .extended()
            .filter(|c| c.is_finite())
            .expect("remark constant converges")
    })
}

/// The measure `Q^ε` at one truncation level.
#[derive(Clone)]
pub(crate) struct Truncated {
    pub pieces: Vec<Piece>,
    pub atoms: Vec<(f64, f64)>,
}

impl Truncated {
    fn even_moment(&self, p: f64, a: f64, b: f64, route: Route, q: &QuadratureConfig<f64>) -> Result<f64> {
        let mut sum = 0.0;
        for piece in &self.pieces {
            sum += piece.multiplicity() * piece.radial_moment(p, a, b, route, q)?;
        }
        for &(z, w) in &self.atoms {
            let y = z.abs();
            if y > a && y <= b {
                sum += w * y.powf(p);
            }
        }
        Ok(sum)
    }

    fn odd_moment(&self, p: f64, a: f64, b: f64, route: Route, q: &QuadratureConfig<f64>) -> Result<f64> {
        let mut sum = 0.0;
        for piece in &self.pieces {
            let o = piece.orientation();
            if o != 0.0 {
                sum += o * piece.radial_moment(p, a, b, route, q)?;
            }
        }
        for &(z, w) in &self.atoms {
            let y = z.abs();
            if y > a && y <= b {
                sum += w * z.signum() * y.powf(p);
            }
        }
        Ok(sum)
    }
}

type SamplerCache = Mutex<HashMap<(u64, u64), Arc<MarkSampler>>>;

/// A Lévy base measure together with its truncation scheme.
#[derive(Clone)]
pub struct LevyModel {
    base: LevyBase,
    trunc: TruncationScheme,
    quadrature: QuadratureConfig<f64>,
    samplers: Arc<SamplerCache>,
}

impl fmt::Debug for LevyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyModel")
            .field("base", &self.base)
            .field("trunc", &self.trunc)
            .field("quadrature", &self.quadrature)
            .finish_non_exhaustive()
    }
}

impl LevyModel {
    pub fn new(base: LevyBase, trunc: TruncationScheme) -> Result<Self> {
        Self::with_quadrature(base, trunc, QuadratureConfig::default())
    }

    pub fn with_quadrature(base: LevyBase, trunc: TruncationScheme, quadrature: QuadratureConfig<f64>) -> Result<Self> {
        let expected = match base {
            LevyBase::RemarkDensityFamily => TruncationScheme::FamilyIndex,
            _ => TruncationScheme::OuterCutoff,
        };
        if trunc != expected {
            return Err(invalid("truncation", format!("{trunc:?} does not apply to this family")));
        }
        match &base {
            LevyBase::CompoundPoisson(atoms) => {
                if atoms.is_empty() {
                    return Err(invalid("atoms", "empty atom list"));
                }
                for &(z, w) in atoms {
                    if !z.is_finite() || z == 0.0 {
                        return Err(invalid("atoms", format!("atom location {z} must be finite and nonzero")));
                    }
                    if !(w.is_finite() && w > 0.0) {
                        return Err(invalid("atoms", format!("atom weight {w} must be positive")));
                    }
                }
            }
            LevyBase::SymmetricStable { alpha } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(invalid("alpha", format!("{alpha} outside (0, 2)")));
                }
            }
            LevyBase::CustomDensity(c) => {
                let (lo, hi) = c.support;
                if !(lo < hi) || lo.is_nan() || hi.is_nan() {
                    return Err(invalid("support", format!("({lo}, {hi}) is not an interval")));
                }
            }
            LevyBase::GammaSubordinator | LevyBase::RemarkDensityFamily => {}
        }
        let model = Self {
            base,
            trunc,
            quadrature,
            samplers: Arc::new(Mutex::new(HashMap::new())),
        };
        if let LevyBase::CustomDensity(_) = model.base {
            // ∫ (1 ∧ z²) Q(dz) < ∞
            let m = model.untruncated();
            let small = m.even_moment(2.0, 0.0, 1.0, Route::Quadrature, &model.quadrature)?;
            let large = m.even_moment(0.0, 1.0, f64::INFINITY, Route::Quadrature, &model.quadrature)?;
            if !(small + large).is_finite() {
                return Err(Error::NonIntegrable {
                    what: "custom density fails ∫(1 ∧ z²) Q(dz) < ∞".into(),
                });
            }
        }
        Ok(model)
    }

    pub fn gamma() -> Self {
        Self::new(LevyBase::GammaSubordinator, TruncationScheme::OuterCutoff).expect("valid")
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        Self::new(LevyBase::SymmetricStable { alpha }, TruncationScheme::OuterCutoff)
    }

    pub fn remark() -> Self {
        Self::new(LevyBase::RemarkDensityFamily, TruncationScheme::FamilyIndex).expect("valid")
    }

    pub fn compound_poisson(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(LevyBase::CompoundPoisson(atoms), TruncationScheme::OuterCutoff)
    }

    pub fn base(&self) -> &LevyBase {
        &self.base
    }

    pub fn truncation(&self) -> TruncationScheme {
        self.trunc
    }

    pub fn quadrature_config(&self) -> &QuadratureConfig<f64> {
        &self.quadrature
    }

    /// Short identifier used in reports and seed derivation.
    pub fn name(&self) -> String {
        match &self.base {
            LevyBase::CompoundPoisson(_) => "compound_poisson".into(),
            LevyBase::GammaSubordinator => "gamma".into(),
            LevyBase::SymmetricStable { alpha } => format!("stable_a{alpha}"),
            LevyBase::RemarkDensityFamily => "remark".into(),
            LevyBase::CustomDensity(c) => format!("custom_{}", c.name),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.base {
            LevyBase::SymmetricStable { .. } | LevyBase::RemarkDensityFamily => true,
            LevyBase::GammaSubordinator | LevyBase::CustomDensity(_) => false,
            LevyBase::CompoundPoisson(atoms) => {
                let mut pos: Vec<(f64, f64)> = atoms.iter().filter(|a| a.0 > 0.0).copied().collect();
                let mut neg: Vec<(f64, f64)> = atoms.iter().filter(|a| a.0 < 0.0).map(|a| (-a.0, a.1)).collect();
                pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
                neg.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pos == neg
            }
        }
    }

    fn check_eps(eps: f64) -> Result<()> {
        if eps.is_finite() && eps > 0.0 {
            Ok(())
        } else {
            Err(invalid("epsilon", format!("{eps} must be positive and finite")))
        }
    }

    fn untruncated(&self) -> Truncated {
        self.measure_at(f64::INFINITY)
    }

    pub(crate) fn measure_at(&self, eps: f64) -> Truncated {
        let cut = |lo: f64, hi: f64| (lo, hi.min(eps));
        match &self.base {
            LevyBase::CompoundPoisson(atoms) => Truncated {
                pieces: Vec::new(),
                atoms: atoms.iter().filter(|(z, _)| z.abs() <= eps).copied().collect(),
            },
            LevyBase::GammaSubordinator => Truncated {
                pieces: vec![Piece { side: Side::Pos, lo: 0.0, hi: eps, shape: Shape::Gamma }],
                atoms: Vec::new(),
            },
            LevyBase::SymmetricStable { alpha } => Truncated {
                pieces: vec![Piece {
                    side: Side::Both,
                    lo: 0.0,
                    hi: eps,
                    shape: Shape::Power { coef: 1.0, exp: -1.0 - alpha },
                }],
                atoms: Vec::new(),
            },
            LevyBase::RemarkDensityFamily => Truncated {
                pieces: vec![
                    Piece { side: Side::Both, lo: 0.0, hi: eps, shape: Shape::Power { coef: 0.5, exp: -2.0 } },
                    Piece {
                        side: Side::Both,
                        lo: 1.0,
                        hi: f64::INFINITY,
                        shape: Shape::RemarkTail { coef: eps * eps / (2.0 * remark_constant()) },
                    },
                ],
                atoms: Vec::new(),
            },
            LevyBase::CustomDensity(c) => {
                let (lo, hi) = c.support;
                let mut pieces = Vec::new();
                if hi > 0.0 {
                    let (a, b) = cut(lo.max(0.0), hi);
                    if a < b {
                        pieces.push(Piece {
                            side: Side::Pos,
                            lo: a,
                            hi: b,
                            shape: Shape::Custom { density: c.density.clone(), sign: 1.0 },
                        });
                    }
                }
                if lo < 0.0 {
                    let (a, b) = cut((-hi).max(0.0), -lo);
                    if a < b {
                        pieces.push(Piece {
                            side: Side::Neg,
                            lo: a,
                            hi: b,
                            shape: Shape::Custom { density: c.density.clone(), sign: -1.0 },
                        });
                    }
                }
                Truncated { pieces, atoms: Vec::new() }
            }
        }
    }

    /// Largest `|z|` charged by `Q^ε`.
    pub fn support_radius(&self, eps: f64) -> f64 {
        let m = self.measure_at(eps);
        let p = m.pieces.iter().map(|p| p.hi).fold(0.0, f64::max);
        m.atoms.iter().map(|a| a.0.abs()).fold(p, f64::max)
    }

    pub fn even_moment(&self, eps: f64, p: f64, a: f64, b: f64, route: Route) -> Result<f64> {
        Self::check_eps(eps)?;
        self.measure_at(eps).even_moment(p, a, b, route, &self.quadrature)
    }

    pub fn odd_moment(&self, eps: f64, p: f64, a: f64, b: f64, route: Route) -> Result<f64> {
        Self::check_eps(eps)?;
        self.measure_at(eps).odd_moment(p, a, b, route, &self.quadrature)
    }

    /// `σ²(ε) = ∫ z² Q^ε(dz)`.
    pub fn variance(&self, eps: f64) -> Result<f64> {
        self.variance_via(eps, Route::Auto)
    }

    pub fn variance_via(&self, eps: f64, route: Route) -> Result<f64> {
        let v = self.even_moment(eps, 2.0, 0.0, f64::INFINITY, route)?;
        if !v.is_finite() {
            return Err(Error::NonIntegrable { what: format!("second moment at epsilon = {eps}") });
        }
        if v <= 0.0 {
            return Err(Error::ZeroVariance { eps });
        }
        Ok(v)
    }

    /// `σ^{-2} ∫_{|z|>κσ} z² Q^ε(dz)`.
    pub fn ar_statistic(&self, eps: f64, kappa: f64) -> Result<f64> {
        self.ar_statistic_via(eps, kappa, Route::Auto)
    }

    pub fn ar_statistic_via(&self, eps: f64, kappa: f64, route: Route) -> Result<f64> {
        if !(kappa > 0.0) {
            return Err(invalid("kappa", format!("{kappa} must be positive")));
        }
        let var = self.variance_via(eps, route)?;
        let tail = self.even_moment(eps, 2.0, kappa * var.sqrt(), f64::INFINITY, route)?;
        Ok((tail / var).clamp(0.0, 1.0))
    }

    /// `σ^{-(2+δ)} ∫ |z|^{2+δ} Q^ε(dz)`, `+∞` when the moment diverges.
    pub fn delta_statistic(&self, eps: f64, delta: f64) -> Result<f64> {
        self.delta_statistic_via(eps, delta, Route::Auto)
    }

    pub fn delta_statistic_via(&self, eps: f64, delta: f64, route: Route) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(invalid("delta", format!("{delta} must be positive")));
        }
        let var = self.variance_via(eps, route)?;
        let m = self.even_moment(eps, 2.0 + delta, 0.0, f64::INFINITY, route)?;
        Ok(m / var.powf(1.0 + delta / 2.0))
    }

    /// `λ = Q^ε({|z| > η})`.
    pub fn restricted_mass(&self, eps: f64, eta: f64) -> Result<f64> {
        let lam = self.even_moment(eps, 0.0, eta.max(0.0), f64::INFINITY, Route::Auto)?;
        if !lam.is_finite() {
            return Err(Error::InfiniteActivity { eps, eta });
        }
        Ok(lam)
    }

    /// `m = ∫_{|z|>η} z Q^ε(dz)`.
    pub fn restricted_mean(&self, eps: f64, eta: f64) -> Result<f64> {
        self.restricted_mean_via(eps, eta, Route::Auto)
    }

    pub fn restricted_mean_via(&self, eps: f64, eta: f64, route: Route) -> Result<f64> {
        let m = self.odd_moment(eps, 1.0, eta.max(0.0), f64::INFINITY, route)?;
        if !m.is_finite() {
            return Err(Error::InfiniteActivity { eps, eta });
        }
        Ok(m)
    }

    /// `∫_{|z|≤η} z² Q^ε / σ²(ε)`.
    pub fn dropped_variance_fraction(&self, eps: f64, eta: f64) -> Result<f64> {
        let var = self.variance(eps)?;
        let inner = self.even_moment(eps, 2.0, 0.0, eta.max(0.0), Route::Auto)?;
        Ok((inner / var).clamp(0.0, 1.0))
    }

    /// Inverse-CDF sampler for `Q^ε` restricted to `{|z| > η}`, built once per `(ε, η)`.
    pub fn sampler(&self, eps: f64, eta: f64) -> Result<Arc<MarkSampler>> {
        Self::check_eps(eps)?;
        let key = (eps.to_bits(), eta.max(0.0).to_bits());
        let mut cache = self.samplers.lock().expect("sampler cache poisoned");
        if let Some(s) = cache.get(&key) {
            return Ok(s.clone());
        }
        let lam = self.restricted_mass(eps, eta)?;
        if lam <= 0.0 {
            return Err(Error::EmptyRestriction { eps, eta });
        }
        let s = Arc::new(MarkSampler::build(&self.measure_at(eps), eps, eta.max(0.0), &self.quadrature)?);
        cache.insert(key, s.clone());
        Ok(s)
    }

    pub fn sample_marks<R: Rng + ?Sized>(&self, eps: f64, eta: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        let s = self.sampler(eps, eta)?;
        Ok((0..n).map(|_| s.sample(rng)).collect())
    }

    /// Quadrature rule `(z_i, w_i)` for integrals against `Q^ε` restricted to `{|z| > η}`.
    pub fn restricted_rule(&self, eps: f64, eta: f64) -> Result<Vec<(f64, f64)>> {
        let s = self.sampler(eps, eta)?;
        Ok(s.rule().to_vec())
    }
}

#[cfg(test)]
mod tests;
