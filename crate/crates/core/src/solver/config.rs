use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::levy_measures::LevyModel;
use crate::noise::Budget;

/// Smooth bounded nonlinearities with known Lipschitz constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplicativeKind {
    Constant(f64),
    /// `a·u + b`
    Affine { a: f64, b: f64 },
    /// `c·sin(u) + d`
    SineShift { c: f64, d: f64 },
    /// `c·tanh(u) + d`
    TanhShift { c: f64, d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplicativeFunction {
    pub kind: MultiplicativeKind,
    pub lipschitz: f64,
}

impl MultiplicativeFunction {
    pub fn new(kind: MultiplicativeKind) -> Self {
        let lipschitz = match kind {
            MultiplicativeKind::Constant(_) => 0.0,
            MultiplicativeKind::Affine { a, .. } => a.abs(),
            MultiplicativeKind::SineShift { c, .. } | MultiplicativeKind::TanhShift { c, .. } => c.abs(),
        };
        Self { kind, lipschitz }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(MultiplicativeKind::Constant(c))
    }

    pub fn affine(a: f64, b: f64) -> Self {
        Self::new(MultiplicativeKind::Affine { a, b })
    }

    pub fn sine_shift(c: f64, d: f64) -> Self {
        Self::new(MultiplicativeKind::SineShift { c, d })
    }

    pub fn tanh_shift(c: f64, d: f64) -> Self {
        Self::new(MultiplicativeKind::TanhShift { c, d })
    }

    /// Overrides the declared Lipschitz constant; checked by [`validate`](Self::validate).
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = lipschitz;
        self
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            MultiplicativeKind::Constant(c) => c,
            MultiplicativeKind::Affine { a, b } => a * u + b,
            MultiplicativeKind::SineShift { c, d } => c * u.sin() + d,
            MultiplicativeKind::TanhShift { c, d } => c * u.tanh() + d,
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            MultiplicativeKind::Constant(c) => Some(c),
            MultiplicativeKind::Affine { a, b } if a == 0.0 => Some(b),
            MultiplicativeKind::SineShift { c, d } | MultiplicativeKind::TanhShift { c, d } if c == 0.0 => Some(d),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    /// Spot-checks `|f(x)| ≤ L|x| + |f(0)|` and `|f(x) − f(y)| ≤ L|x − y|` on a grid.
    pub fn validate(&self) -> Result<()> {
        if !(self.lipschitz.is_finite() && self.lipschitz >= 0.0) {
            return Err(invalid("lipschitz", format!("{} must be finite and nonnegative", self.lipschitz)));
        }
        let f0 = self.eval(0.0).abs();
        let grid: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.05).collect();
        let slack = 1e-12;
        for w in grid.windows(2) {
            let (x, y) = (w[0], w[1]);
            let fx = self.eval(x);
            if !fx.is_finite() || fx.abs() > self.lipschitz * x.abs() + f0 + slack {
                return Err(invalid("lipschitz", format!("linear growth bound fails at u = {x}")));
            }
            if (fx - self.eval(y)).abs() > self.lipschitz * (x - y).abs() * (1.0 + 1e-9) + slack {
                return Err(invalid("lipschitz", format!("declared constant {} too small near u = {x}", self.lipschitz)));
            }
        }
        Ok(())
    }
}

#[derive(Clone)]
pub enum InitialProfile {
    /// Sine coefficients `⟨u₀, φ_k⟩`.
    Modes(Vec<f64>),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for InitialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialProfile::Modes(m) => f.debug_tuple("Modes").field(m).finish(),
            InitialProfile::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum NoiseKind {
    Levy {
        model: LevyModel,
        eps: f64,
        /// Inner cutoff; `None` selects it from the budget.
        eta: Option<f64>,
        budget: Budget,
    },
    Gaussian,
}

impl NoiseKind {
    pub fn levy(model: LevyModel, eps: f64) -> Self {
        NoiseKind::Levy { model, eps, eta: None, budget: Budget::default() }
    }

    pub fn is_levy(&self) -> bool {
        matches!(self, NoiseKind::Levy { .. })
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub horizon: f64,
    pub modes: usize,
    pub points: usize,
    pub steps: usize,
    pub f: MultiplicativeFunction,
    pub initial: Option<InitialProfile>,
    pub noise: NoiseKind,
    /// Keep every `record_stride`-th step (the final instant is always kept).
    pub record_stride: usize,
    /// Keep the atom log and per-step drift needed by the identity and martingale checks.
    pub retain_log: bool,
}

impl SimConfig {
    /// Desk-scale defaults: `K = 64`, `M = 256`, `N_t = 2¹²`, `T = 1`, additive noise.
    pub fn new(noise: NoiseKind) -> Self {
        Self {
            horizon: 1.0,
            modes: 64,
            points: 256,
            steps: 1 << 12,
            f: MultiplicativeFunction::constant(1.0),
            initial: None,
            noise,
            record_stride: 1,
            retain_log: false,
        }
    }

    pub fn with_resolution(mut self, modes: usize, points: usize, steps: usize) -> Self {
        self.modes = modes;
        self.points = points;
        self.steps = steps;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_f(mut self, f: MultiplicativeFunction) -> Self {
        self.f = f;
        self
    }

    pub fn with_initial(mut self, initial: InitialProfile) -> Self {
        self.initial = Some(initial);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn final_only(self) -> Self {
        let s = self.steps;
        self.with_stride(s)
    }

    pub fn with_log(mut self) -> Self {
        self.retain_log = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid("horizon", format!("{} must be positive", self.horizon)));
        }
        if self.modes == 0 || self.modes > self.points {
            return Err(invalid("modes", format!("need 1 ≤ K ≤ M, got K = {}, M = {}", self.modes, self.points)));
        }
        if self.steps == 0 {
            return Err(invalid("steps", "N_t must be at least 1"));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride", "must be at least 1"));
        }
        self.f.validate()?;
        if let Some(InitialProfile::Modes(m)) = &self.initial {
            if m.len() > self.modes || m.iter().any(|v| !v.is_finite()) {
                return Err(invalid("initial", "coefficients must be finite and at most K"));
            }
        }
        if let NoiseKind::Levy { eps, eta, budget, .. } = &self.noise {
            if !(eps.is_finite() && *eps > 0.0) {
                return Err(invalid("epsilon", format!("{eps} must be positive")));
            }
            if let Some(e) = eta {
                if !(e.is_finite() && *e >= 0.0) {
                    return Err(invalid("eta", format!("{e} must be nonnegative")));
                }
            }
            if !(budget.rho > 0.0 && budget.rho <= 1.0) || !(budget.atom_cap > 0.0) {
                return Err(invalid("budget", "rho must lie in (0, 1] and the atom cap must be positive"));
            }
        }
        Ok(())
    }
}
