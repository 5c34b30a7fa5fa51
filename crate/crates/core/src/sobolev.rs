//! Sobolev norms on the sine basis, dual pairings, the space–time basis
//! `ψ_ij(t,x) = φ̄_i(t) φ_j(x)` and a library of smooth compactly supported test functions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, composite, QuadratureConfig};
use crate::scalar::Real;
use crate::solver::FieldPath;
use crate::spectral::phi;

/// Sine coefficients together with a Sobolev order `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevVector<T> {
    pub coefficients: Vec<T>,
    pub order: T,
}

impl<T: Real> SobolevVector<T> {
    pub fn new(coefficients: Vec<T>, order: T) -> Self {
        Self { coefficients, order }
    }

    /// `√(Σ (1+k²)^r c_k²)`.
    pub fn norm(&self) -> T {
        weighted_norm(&self.coefficients, self.order)
    }
}

fn weighted_norm<T: Real>(c: &[T], r: T) -> T {
    c.iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &v)| {
            let k = T::from_usize_lossy(i + 1);
            acc + (T::one() + k * k).powf(r) * v * v
        })
        .sqrt()
}

/// `‖v‖_{−r} = √(Σ_k (1+k²)^{−r} ⟨v, φ_k⟩²)`.
pub fn dual_norm<T: Real>(coeffs: &[T], r: T) -> T {
    weighted_norm(coeffs, -r)
}

/// `‖v‖_q` for `q ≥ 0`.
pub fn sobolev_norm<T: Real>(coeffs: &[T], q: T) -> T {
    weighted_norm(coeffs, q)
}

pub fn l2_norm<T: Real>(coeffs: &[T]) -> T {
    weighted_norm(coeffs, T::zero())
}

/// Bound on the omitted part of `‖v‖²_{−r}` when `|⟨v, φ_k⟩| ≤ sup` for `k > K` and `r > ½`:
/// `sup² ∫_K^∞ x^{−2r} dx`.
pub fn dual_tail_bound<T: Real>(r: T, modes: usize, sup: T) -> T {
    let two = T::lit(2.0);
    assert!(r > T::lit(0.5), "tail bound needs r > 1/2");
    let k = T::from_usize_lossy(modes.max(1));
    sup * sup * k.powf(T::one() - two * r) / (two * r - T::one())
}

/// `⟨u(t,·), φ⟩ = Σ_k a_k(t) φ̂_k`.
pub fn pairing(path: &FieldPath, t: f64, phi_hat: &[f64]) -> Result<f64> {
    let i = path.index_of(t)?;
    Ok(pair_modes(path.modes_at(i), phi_hat))
}

pub fn pair_modes(modes: &[f64], phi_hat: &[f64]) -> f64 {
    modes.iter().zip(phi_hat).map(|(a, b)| a * b).sum()
}

/// Time basis `φ̄_i(t) = √(2/T) sin(iπt/T)` on `[0, T]`.
pub fn phi_bar<T: Real>(i: usize, t: T, horizon: T) -> T {
    (T::lit(2.0) / horizon).sqrt() * (T::from_usize_lossy(i) * T::PI() * t / horizon).sin()
}

/// `H_ij(s,y) = ∫_s^T φ̄_i(t) φ_j(y) e^{−j²(t−s)} dt` in closed form.
pub fn h_ij_closed_form<T: Real>(i: usize, j: usize, s: T, y: T, horizon: T) -> T {
    let w = T::from_usize_lossy(i) * T::PI() / horizon;
    let jj = T::from_usize_lossy(j * j);
    let sign = if i % 2 == 1 { T::one() } else { -T::one() };
    let bracket = (-jj * (horizon - s)).exp() * w * sign + jj * (w * s).sin() + w * (w * s).cos();
    (T::lit(2.0) / horizon).sqrt() * phi(j, y) / (w * w + jj * jj) * bracket
}

/// The same integral by composite Gauss–Kronrod with `nodes` panels.
pub fn h_ij_quadrature<T: Real>(i: usize, j: usize, s: T, y: T, horizon: T, nodes: usize) -> T {
    let jj = T::from_usize_lossy(j * j);
    let f = |t: T| phi_bar(i, t, horizon) * (-jj * (t - s)).exp();
    phi(j, y) * composite(&f, s, horizon, nodes.max(1))
}

fn uniform_spacing(path: &FieldPath) -> Result<f64> {
    let n = path.len();
    if n < 2 {
        return Err(Error::OutOfRange { what: "path needs at least two instants".into() });
    }
    let h = path.times[1] - path.times[0];
    let ok = path.times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    if !ok {
        return Err(Error::OutOfRange { what: "recorded grid is not uniform".into() });
    }
    Ok(h)
}

/// `⟨u, ψ_ij⟩`: discrete sine transform in time of the `j`-th mode trajectory.
pub fn space_time_projection(path: &FieldPath, i: usize, j: usize) -> Result<f64> {
    if j == 0 || j > path.mode_count() || i == 0 {
        return Err(Error::OutOfRange { what: format!("(i, j) = ({i}, {j})") });
    }
    let h = uniform_spacing(path)?;
    let horizon = *path.times.last().unwrap();
    // endpoint terms vanish because φ̄_i(0) = φ̄_i(T) = 0
    let s: f64 = (1..path.len() - 1)
        .map(|n| phi_bar(i, path.times[n], horizon) * path.modes_at(n)[j - 1])
        .sum();
    Ok(s * h)
}

/// `‖u‖²_{L²([0,T]×[0,π])}` by the trapezoidal rule in time.
pub fn path_l2_norm_sq(path: &FieldPath) -> Result<f64> {
    let h = uniform_spacing(path)?;
    let n = path.len();
    let sq = |i: usize| path.modes_at(i).iter().map(|v| v * v).sum::<f64>();
    let inner: f64 = (1..n - 1).map(sq).sum();
    Ok(h * (inner + 0.5 * (sq(0) + sq(n - 1))))
}

/// Smooth test functions with precomputed sine coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `φ_k`
    Mode(usize),
    /// `c · exp(−1 / (1 − ((x − center)/radius)²))` on `|x − center| < radius`, unit `L²` norm.
    Bump { center: f64, radius: f64, scale: f64, coeffs: Vec<f64> },
}

const BUMP_MODES: usize = 256;

fn raw_bump(x: f64, center: f64, radius: f64) -> f64 {
    let u = (x - center) / radius;
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

impl TestFunction {
    pub fn bump(center: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && center - radius >= 0.0 && center + radius <= PI) {
            return Err(crate::error::invalid("bump", format!("support ({}, {}) not inside [0, π]", center - radius, center + radius)));
        }
        let q = QuadratureConfig { rel_tol: 1e-13, ..QuadratureConfig::default() };
        let (a, b) = (center - radius, center + radius);
        let norm_sq = adaptive(&|x: f64| raw_bump(x, center, radius).powi(2), a, b, &q).value;
        let scale = 1.0 / norm_sq.sqrt();
        let coeffs = (1..=BUMP_MODES)
            .map(|k| {
                // split the support so oscillatory modes stay resolved
                let pieces = (k / 4).max(4);
                let h = (b - a) / pieces as f64;
                (0..pieces)
                    .map(|p| {
                        let lo = a + h * p as f64;
                        adaptive(&|x: f64| raw_bump(x, center, radius) * phi(k, x), lo, lo + h, &q).value
                    })
                    .sum::<f64>()
                    * scale
            })
            .collect();
        Ok(TestFunction::Bump { center, radius, scale, coeffs })
    }

    /// Bump centred at `π/2` with radius `π/4`.
    pub fn standard_bump() -> Self {
        Self::bump(PI / 2.0, PI / 4.0).expect("valid support")
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::Mode(k) => format!("phi{k}"),
            TestFunction::Bump { center, radius, .. } => format!("bump_c{center:.4}_r{radius:.4}"),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            TestFunction::Mode(k) => phi(*k, x),
            TestFunction::Bump { center, radius, scale, .. } => scale * raw_bump(x, *center, *radius),
        }
    }

    /// First `modes` sine coefficients `⟨φ, φ_k⟩`.
    pub fn coeffs(&self, modes: usize) -> Vec<f64> {
        match self {
            TestFunction::Mode(k) => (1..=modes).map(|j| if j == *k { 1.0 } else { 0.0 }).collect(),
            TestFunction::Bump { coeffs, .. } => {
                assert!(modes <= coeffs.len(), "at most {BUMP_MODES} bump coefficients");
                coeffs[..modes].to_vec()
            }
        }
    }

    /// Sine coefficients of `φ''`, i.e. `−k² ⟨φ, φ_k⟩`.
    pub fn second_derivative_coeffs(&self, modes: usize) -> Vec<f64> {
        self.coeffs(modes)
            .into_iter()
            .enumerate()
            .map(|(i, c)| -(((i + 1) * (i + 1)) as f64) * c)
            .collect()
    }

    /// `sup |φ|`.
    pub fn sup_norm(&self) -> f64 {
        match self {
            TestFunction::Mode(_) => (2.0 / PI).sqrt(),
            TestFunction::Bump { scale, .. } => scale * (-1f64).exp(),
        }
    }
}
