//! Realizations of the normalized small-jump Lévy noise and of Gaussian white noise
//! on `[0, T] × [0, π]`.

use std::f64::consts::PI;
use std::io::{self, Read, Write};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{invalid, Error, Result};
use crate::levy_measures::{LevyModel, MarkSampler};
use crate::rng::StreamId;

pub const DEFAULT_BUDGET: f64 = 1e-3;
pub const DEFAULT_ATOM_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseAtom {
    pub t: f64,
    pub x: f64,
    /// Raw mark, in units of the jump size before division by σ(ε).
    pub z: f64,
}

/// Limits on the bias and cost of the inner cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// Maximum dropped variance fraction ρ.
    pub rho: f64,
    /// Maximum expected atom count per realization.
    pub atom_cap: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { rho: DEFAULT_BUDGET, atom_cap: DEFAULT_ATOM_CAP }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyNoiseRealization {
    pub atoms: Vec<NoiseAtom>,
    pub eps: f64,
    pub eta: f64,
    pub sigma: f64,
    pub m_restricted: f64,
    pub dropped_variance_fraction: f64,
    pub horizon: f64,
}

/// Everything needed to draw realizations for one `(model, ε, η, T)`.
#[derive(Debug, Clone)]
pub struct LevyNoiseLaw {
    pub eps: f64,
    pub eta: f64,
    pub horizon: f64,
    pub sigma: f64,
    pub intensity: f64,
    pub m_restricted: f64,
    pub dropped_variance_fraction: f64,
    sampler: Option<Arc<MarkSampler>>,
}

impl LevyNoiseLaw {
    pub fn new(model: &LevyModel, eps: f64, eta: f64, horizon: f64, budget: Budget) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid("horizon", format!("{horizon} must be positive")));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(invalid("eta", format!("{eta} must be nonnegative")));
        }
        let sigma = model.variance(eps)?.sqrt();
        let dropped = model.dropped_variance_fraction(eps, eta)?;
        if dropped > budget.rho {
            return Err(Error::BudgetExceeded { fraction: dropped, budget: budget.rho });
        }
        let intensity = model.restricted_mass(eps, eta)?;
        let expected = intensity * horizon * PI;
        if expected > budget.atom_cap {
            return Err(Error::AtomCapExceeded { expected, cap: budget.atom_cap });
        }
        let m_restricted = if model.is_symmetric() { 0.0 } else { model.restricted_mean(eps, eta)? };
        let sampler = if intensity > 0.0 { Some(model.sampler(eps, eta)?) } else { None };
        Ok(Self {
            eps,
            eta,
            horizon,
            sigma,
            intensity,
            m_restricted,
            dropped_variance_fraction: dropped,
            sampler,
        })
    }

    /// Chooses η automatically, see [`auto_eta`].
    pub fn auto(model: &LevyModel, eps: f64, horizon: f64, budget: Budget) -> Result<Self> {
        let eta = auto_eta(model, eps, horizon, budget)?;
        Self::new(model, eps, eta, horizon, budget)
    }

    pub fn expected_atoms(&self) -> f64 {
        self.intensity * self.horizon * PI
    }

    pub fn realize(&self, stream: StreamId) -> LevyNoiseRealization {
        let mut rng = stream.rng();
        let atoms = self.draw_atoms(&mut rng);
        LevyNoiseRealization {
            atoms,
            eps: self.eps,
            eta: self.eta,
            sigma: self.sigma,
            m_restricted: self.m_restricted,
            dropped_variance_fraction: self.dropped_variance_fraction,
            horizon: self.horizon,
        }
    }

    pub fn draw_atoms<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<NoiseAtom> {
        let Some(sampler) = &self.sampler else {
            return Vec::new();
        };
        let mean = self.expected_atoms();
        let n = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);
        let mut atoms = Vec::with_capacity(n);
        for _ in 0..n {
            let t = rng.random::<f64>() * self.horizon;
            let x = loop {
                let x = rng.random::<f64>() * PI;
                if x > 0.0 {
                    break x;
                }
            };
            let z = sampler.sample(rng);
            atoms.push(NoiseAtom { t, x, z });
        }
        atoms.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.z.total_cmp(&b.z)));
        atoms
    }
}

/// Draws one realization of `σ(ε)^{-1} L^ε` with jumps of size at most η dropped together
/// with their compensator.
pub fn simulate_levy_noise(
    model: &LevyModel,
    eps: f64,
    eta: f64,
    horizon: f64,
    stream: StreamId,
    budget: Budget,
) -> Result<LevyNoiseRealization> {
    Ok(LevyNoiseLaw::new(model, eps, eta, horizon, budget)?.realize(stream))
}

/// Largest η whose dropped variance fraction is within `budget.rho`, found by bisection in
/// `log η`; fails if the resulting expected atom count exceeds the cap.
pub fn auto_eta(model: &LevyModel, eps: f64, horizon: f64, budget: Budget) -> Result<f64> {
    let dropped = |eta: f64| model.dropped_variance_fraction(eps, eta);
    let hi = eps.min(model.support_radius(eps));
    if dropped(hi)? <= budget.rho {
        return check_cap(model, eps, hi, horizon, budget);
    }
    let mut lo = hi * 1e-30;
    if dropped(lo)? > budget.rho {
        return Err(Error::BudgetExceeded { fraction: dropped(lo)?, budget: budget.rho });
    }
    let mut top = hi;
    for _ in 0..80 {
        let mid = (lo * top).sqrt();
        if dropped(mid)? <= budget.rho {
            lo = mid;
        } else {
            top = mid;
        }
        if top / lo < 1.0 + 1e-12 {
            break;
        }
    }
    check_cap(model, eps, lo, horizon, budget)
}

fn check_cap(model: &LevyModel, eps: f64, eta: f64, horizon: f64, budget: Budget) -> Result<f64> {
    let expected = model.restricted_mass(eps, eta)? * horizon * PI;
    if expected > budget.atom_cap {
        return Err(Error::AtomCapExceeded { expected, cap: budget.atom_cap });
    }
    Ok(eta)
}

/// i.i.d. `N(0, Δt Δx)` cell increments, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNoiseRealization {
    pub time_steps: usize,
    pub space_cells: usize,
    pub dt: f64,
    pub dx: f64,
    pub increments: Vec<f64>,
}

impl GaussianNoiseRealization {
    pub fn get(&self, step: usize, cell: usize) -> f64 {
        self.increments[step * self.space_cells + cell]
    }

    pub fn row(&self, step: usize) -> &[f64] {
        &self.increments[step * self.space_cells..(step + 1) * self.space_cells]
    }
}

pub fn simulate_gaussian_noise(
    horizon: f64,
    time_steps: usize,
    space_cells: usize,
    stream: StreamId,
) -> Result<GaussianNoiseRealization> {
    if time_steps == 0 || space_cells == 0 {
        return Err(invalid("grid", "time steps and space cells must be positive"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", format!("{horizon} must be positive")));
    }
    let dt = horizon / time_steps as f64;
    let dx = PI / space_cells as f64;
    let normal = Normal::new(0.0, (dt * dx).sqrt()).expect("positive scale");
    let mut rng = stream.rng();
    let increments = (0..time_steps * space_cells).map(|_| normal.sample(&mut rng)).collect();
    Ok(GaussianNoiseRealization { time_steps, space_cells, dt, dx, increments })
}

/// Writes atoms as consecutive little-endian `(t, x, z)` triples of `f64`.
pub fn write_atoms<W: Write>(out: &mut W, atoms: &[NoiseAtom]) -> io::Result<()> {
    for a in atoms {
        out.write_all(&a.t.to_le_bytes())?;
        out.write_all(&a.x.to_le_bytes())?;
        out.write_all(&a.z.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_atoms<R: Read>(input: &mut R) -> io::Result<Vec<NoiseAtom>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() % 24 != 0 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "atom file length is not a multiple of 24"));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().unwrap());
    Ok(bytes
        .chunks_exact(24)
        .map(|c| NoiseAtom { t: f(&c[..8]), x: f(&c[8..16]), z: f(&c[16..]) })
        .collect())
}
