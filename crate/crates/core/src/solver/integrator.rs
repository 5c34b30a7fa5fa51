use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::config::{InitialProfile, NoiseKind, SimConfig};
use crate::error::{invalid, Error, Result};
use crate::noise::{GaussianNoiseRealization, LevyNoiseLaw, NoiseAtom};
use crate::rng::{Purpose, StreamId};
use crate::spectral::{phi, phi_all, SineBasis};

/// Atom log and drift history of one Lévy path.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLog {
    pub atoms: Vec<NoiseAtom>,
    /// `f(u(t_j−, x_j))` for each atom.
    pub f_left: Vec<f64>,
    pub sigma: f64,
    /// `m_restricted / σ(ε)`.
    pub drift_rate: f64,
    pub eta: f64,
    /// Per step, the mode drift rates `D_k = −(m/σ) ⟨f(u(t_n)), φ_k⟩`, `N_t × K`.
    pub step_drift: Vec<f64>,
}

impl NoiseLog {
    /// Jump of `⟨u, φ_k⟩` at atom `j`.
    pub fn jump(&self, j: usize, k: usize) -> f64 {
        let a = &self.atoms[j];
        self.f_left[j] * a.z / self.sigma * phi(k, a.x)
    }
}

/// Sine-mode coefficients of a solution path on a recorded time grid.
#[derive(Debug, Clone)]
pub struct FieldPath {
    pub config: Arc<SimConfig>,
    pub stream: StreamId,
    pub dt: f64,
    /// Step index of each recorded instant.
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    modes: Vec<f64>,
    pub log: Option<NoiseLog>,
}

impl FieldPath {
    /// Path on the full step grid of `config` with coefficients `a_k(t) = f(t, k)`.
    pub fn from_samples<F: Fn(f64, usize) -> f64>(config: Arc<SimConfig>, stream: StreamId, f: F) -> Self {
        let n = config.steps;
        let dt = config.horizon / n as f64;
        let times: Vec<f64> = (0..=n).map(|i| if i == n { config.horizon } else { i as f64 * dt }).collect();
        let modes = times.iter().flat_map(|&t| (1..=config.modes).map(move |k| (t, k))).map(|(t, k)| f(t, k)).collect();
        Self { steps: (0..=n).collect(), times, modes, dt, stream, config, log: None }
    }

    pub fn mode_count(&self) -> usize {
        self.config.modes
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Coefficients at the `i`-th recorded instant.
    pub fn modes_at(&self, i: usize) -> &[f64] {
        let k = self.mode_count();
        &self.modes[i * k..(i + 1) * k]
    }

    pub fn final_modes(&self) -> &[f64] {
        self.modes_at(self.len() - 1)
    }

    pub fn is_levy(&self) -> bool {
        self.config.noise.is_levy()
    }

    /// Index of the recorded instant equal to `t` up to rounding.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * self.dt.max(f64::MIN_POSITIVE);
        let i = self.times.partition_point(|&s| s < t - tol);
        if i < self.times.len() && (self.times[i] - t).abs() <= tol {
            Ok(i)
        } else {
            Err(Error::OutOfRange { what: format!("t = {t} is not a recorded instant") })
        }
    }

    /// Nearest recorded instant; returns its index and time.
    pub fn nearest(&self, t: f64) -> Result<(usize, f64)> {
        if !(t >= 0.0 && t <= self.config.horizon * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange { what: format!("t = {t} outside [0, T]") });
        }
        let i = self.times.partition_point(|&s| s < t);
        let i = if i == self.times.len() {
            i - 1
        } else if i > 0 && (t - self.times[i - 1]) <= (self.times[i] - t) {
            i - 1
        } else {
            i
        };
        Ok((i, self.times[i]))
    }

    /// `Σ_k a_k(t) φ_k(x)`.
    pub fn evaluate(&self, t: f64, x: f64) -> Result<f64> {
        let i = self.index_of(t)?;
        self.evaluate_at(i, x)
    }

    pub fn evaluate_at(&self, i: usize, x: f64) -> Result<f64> {
        if !(0.0..=PI).contains(&x) {
            return Err(Error::OutOfRange { what: format!("x = {x} outside [0, π]") });
        }
        Ok(series_value(self.modes_at(i), x))
    }

    /// `(t, k, coefficient)` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,k,coefficient\n");
        for (i, t) in self.times.iter().enumerate() {
            for (k, a) in self.modes_at(i).iter().enumerate() {
                out.push_str(&format!("{t:.17e},{},{a:.17e}\n", k + 1));
            }
        }
        out
    }
}

pub(crate) fn series_value(coeffs: &[f64], x: f64) -> f64 {
    let norm = (2.0 / PI).sqrt();
    let c2 = 2.0 * x.cos();
    let mut prev = 0.0;
    let mut cur = x.sin();
    let mut s = 0.0;
    for a in coeffs {
        s += a * cur;
        let next = c2 * cur - prev;
        prev = cur;
        cur = next;
    }
    norm * s
}

/// Multiplies `modes[k-1]` by `e^{-k² gap}`.
#[inline]
fn decay(modes: &mut [f64], gap: f64) {
    if gap <= 0.0 {
        return;
    }
    let q = (-gap).exp();
    let q2 = q * q;
    let mut r = q;
    let mut step = q * q2;
    for m in modes.iter_mut() {
        *m *= r;
        r *= step;
        step *= q2;
        if r < 1e-300 {
            r = 0.0;
        }
    }
}

/// Prepared exponential integrator for one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    config: Arc<SimConfig>,
    basis: SineBasis<f64>,
    dt: f64,
    decay_step: Vec<f64>,
    /// `√((1 − e^{−2k²Δt}) / (2k²Δt))`
    gauss_scale: Vec<f64>,
    /// `(1 − e^{−k²Δt}) / k²`
    drift_weight: Vec<f64>,
    initial: Vec<f64>,
    law: Option<LevyNoiseLaw>,
}

impl Solver {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let k = config.modes;
        let dt = config.horizon / config.steps as f64;
        let basis = SineBasis::new(k, config.points);
        let mut decay_step = Vec::with_capacity(k);
        let mut gauss_scale = Vec::with_capacity(k);
        let mut drift_weight = Vec::with_capacity(k);
        for i in 1..=k {
            let l = (i * i) as f64;
            decay_step.push((-l * dt).exp());
            gauss_scale.push(((-(2.0 * l * dt)).exp_m1() / (-2.0 * l * dt)).sqrt());
            drift_weight.push(-(-l * dt).exp_m1() / l);
        }
        let initial = match &config.initial {
            None => vec![0.0; k],
            Some(InitialProfile::Modes(m)) => {
                let mut v = m.clone();
                v.resize(k, 0.0);
                v
            }
            Some(InitialProfile::Function(u0)) => {
                if u0(0.0).abs() > 1e-12 || u0(PI).abs() > 1e-12 {
                    return Err(invalid("initial", "profile must vanish at 0 and π"));
                }
                let fine = SineBasis::<f64>::new(k, (16 * k).max(4096));
                let vals: Vec<f64> = fine.grid().iter().map(|&x| u0(x)).collect();
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("initial", "profile must be bounded"));
                }
                let mut v = vec![0.0; k];
                fine.project(&vals, &mut v);
                v
            }
        };
        let law = match &config.noise {
            NoiseKind::Levy { model, eps, eta, budget } => Some(match eta {
                Some(e) => LevyNoiseLaw::new(model, *eps, *e, config.horizon, *budget)?,
                None => LevyNoiseLaw::auto(model, *eps, config.horizon, *budget)?,
            }),
            NoiseKind::Gaussian => None,
        };
        Ok(Self {
            config: Arc::new(config),
            basis,
            dt,
            decay_step,
            gauss_scale,
            drift_weight,
            initial,
            law,
        })
    }

    pub fn config(&self) -> &Arc<SimConfig> {
        &self.config
    }

    pub fn basis(&self) -> &SineBasis<f64> {
        &self.basis
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn law(&self) -> Option<&LevyNoiseLaw> {
        self.law.as_ref()
    }

    pub fn initial_modes(&self) -> &[f64] {
        &self.initial
    }

    /// Stream used for path `path` under base seed `seed`.
    pub fn stream(&self, seed: u64, path: u64) -> StreamId {
        let purpose = if self.law.is_some() { Purpose::LevyNoise } else { Purpose::GaussianNoise };
        StreamId::new(seed, path, purpose)
    }

    /// Whether Gaussian increments are drawn directly in mode space.
    pub fn gaussian_mode_space(&self) -> bool {
        self.config.f.as_constant().is_some() && self.config.modes < self.config.points
    }

    pub fn simulate(&self, stream: StreamId) -> Result<FieldPath> {
        match &self.law {
            Some(law) => {
                let atoms = law.realize(stream).atoms;
                self.run_levy(stream, atoms)
            }
            None => {
                if self.gaussian_mode_space() {
                    self.run_gaussian_modes(stream)
                } else {
                    let mut rng = stream.rng();
                    let normal = Normal::new(0.0, (self.dt * self.basis.dx()).sqrt()).expect("positive scale");
                    let m = self.config.points;
                    let mut row = vec![0.0; m];
                    self.run_gaussian_grid(stream, |_, buf: &mut [f64]| {
                        for v in row.iter_mut() {
                            *v = normal.sample(&mut rng);
                        }
                        buf.copy_from_slice(&row);
                    })
                }
            }
        }
    }

    /// Lévy path driven by a given atom list (e.g. replayed from a file).
    pub fn simulate_with_atoms(&self, stream: StreamId, atoms: Vec<NoiseAtom>) -> Result<FieldPath> {
        if self.law.is_none() {
            return Err(Error::NotLevyPath);
        }
        if atoms.windows(2).any(|w| w[0].t > w[1].t) {
            return Err(invalid("atoms", "atom times must be sorted"));
        }
        let t_max = self.config.horizon;
        if atoms.iter().any(|a| !(a.t >= 0.0 && a.t < t_max && a.x > 0.0 && a.x < PI && a.z.is_finite())) {
            return Err(invalid("atoms", "atoms must lie in [0, T) × (0, π) with finite marks"));
        }
        self.run_levy(stream, atoms)
    }

    /// Gaussian path driven by a given increment grid, always through the collocation grid.
    pub fn simulate_with_gaussian(&self, stream: StreamId, noise: &GaussianNoiseRealization) -> Result<FieldPath> {
        if self.law.is_some() {
            return Err(invalid("noise", "configuration is Lévy driven"));
        }
        if noise.time_steps != self.config.steps || noise.space_cells != self.config.points {
            return Err(invalid("noise", "increment grid does not match the solver grid"));
        }
        self.run_gaussian_grid(stream, |n, buf: &mut [f64]| buf.copy_from_slice(noise.row(n)))
    }

    fn recorder(&self, stream: StreamId, log: Option<NoiseLog>) -> FieldPath {
        let n_rec = self.config.steps / self.config.record_stride + 2;
        let mut p = FieldPath {
            config: self.config.clone(),
            stream,
            dt: self.dt,
            steps: Vec::with_capacity(n_rec),
            times: Vec::with_capacity(n_rec),
            modes: Vec::with_capacity(n_rec * self.config.modes),
            log,
        };
        p.steps.push(0);
        p.times.push(0.0);
        p.modes.extend_from_slice(&self.initial);
        p
    }

    fn record(&self, path: &mut FieldPath, n: usize, modes: &[f64]) -> Result<()> {
        if modes.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step: n });
        }
        if n % self.config.record_stride == 0 || n == self.config.steps {
            path.steps.push(n);
            path.times.push(if n == self.config.steps { self.config.horizon } else { n as f64 * self.dt });
            path.modes.extend_from_slice(modes);
        }
        Ok(())
    }

    fn run_levy(&self, stream: StreamId, atoms: Vec<NoiseAtom>) -> Result<FieldPath> {
        let law = self.law.as_ref().expect("levy law");
        let cfg = &*self.config;
        let k = cfg.modes;
        let sigma = law.sigma;
        let drift_rate = law.m_restricted / sigma;
        let constant = cfg.f.as_constant();
        let zero_f = cfg.f.is_zero();
        let needs_drift = drift_rate != 0.0 && !zero_f;
        let mut modes = self.initial.clone();
        let mut phis = vec![0.0; k];
        let mut grid = vec![0.0; cfg.points];
        let mut drift = vec![0.0; k];
        let mut f_left = Vec::with_capacity(if cfg.retain_log { atoms.len() } else { 0 });
        let mut step_drift = Vec::with_capacity(if cfg.retain_log { cfg.steps * k } else { 0 });
        let mut path = self.recorder(stream, None);
        let mut idx = 0;
        for n in 0..cfg.steps {
            let t0 = n as f64 * self.dt;
            let t1 = if n + 1 == cfg.steps { cfg.horizon } else { (n + 1) as f64 * self.dt };
            if needs_drift {
                match constant {
                    Some(c) => grid.iter_mut().for_each(|g| *g = c),
                    None => {
                        self.basis.synthesize(&modes, &mut grid);
                        grid.iter_mut().for_each(|g| *g = cfg.f.eval(*g));
                    }
                }
                self.basis.project(&grid, &mut drift);
                drift.iter_mut().for_each(|d| *d *= -drift_rate);
            }
            if cfg.retain_log {
                step_drift.extend_from_slice(&drift);
            }
            let mut tau = t0;
            while idx < atoms.len() && (atoms[idx].t < t1 || n + 1 == cfg.steps) {
                let a = atoms[idx];
                decay(&mut modes, a.t - tau);
                tau = tau.max(a.t);
                phi_all(a.x, &mut phis);
                let fv = match constant {
                    Some(c) => c,
                    None => cfg.f.eval(modes.iter().zip(&phis).map(|(m, p)| m * p).sum()),
                };
                if cfg.retain_log {
                    f_left.push(fv);
                }
                let amp = fv * a.z / sigma;
                if amp != 0.0 {
                    for (m, p) in modes.iter_mut().zip(&phis) {
                        *m += amp * p;
                    }
                }
                idx += 1;
            }
            decay(&mut modes, t1 - tau);
            if needs_drift {
                for ((m, d), w) in modes.iter_mut().zip(&drift).zip(&self.drift_weight) {
                    *m += d * w;
                }
            }
            self.record(&mut path, n + 1, &modes)?;
        }
        if cfg.retain_log {
            path.log = Some(NoiseLog {
                atoms,
                f_left,
                sigma,
                drift_rate,
                eta: law.eta,
                step_drift,
            });
        }
        Ok(path)
    }

    fn run_gaussian_modes(&self, stream: StreamId) -> Result<FieldPath> {
        let cfg = &*self.config;
        let c = cfg.f.as_constant().expect("constant f");
        let scale = c * self.dt.sqrt();
        let mut rng = stream.rng();
        let mut modes = self.initial.clone();
        let mut path = self.recorder(stream, None);
        for n in 0..cfg.steps {
            for ((m, d), s) in modes.iter_mut().zip(&self.decay_step).zip(&self.gauss_scale) {
                let z: f64 = rng.sample(StandardNormal);
                *m = *m * d + s * scale * z;
            }
            self.record(&mut path, n + 1, &modes)?;
        }
        Ok(path)
    }

    fn run_gaussian_grid<F: FnMut(usize, &mut [f64])>(&self, stream: StreamId, mut increments: F) -> Result<FieldPath> {
        let cfg = &*self.config;
        let k = cfg.modes;
        let m = cfg.points;
        let mut modes = self.initial.clone();
        let mut grid = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut path = self.recorder(stream, None);
        let constant = cfg.f.as_constant();
        let nyquist = if k == m { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
        for n in 0..cfg.steps {
            increments(n, &mut w);
            match constant {
                Some(c) => grid.iter_mut().zip(&w).for_each(|(g, wi)| *g = c * wi),
                None => {
                    self.basis.synthesize(&modes, &mut grid);
                    grid.iter_mut().zip(&w).for_each(|(g, wi)| *g = cfg.f.eval(*g) * wi);
                }
            }
            for j in 0..k {
                let row = self.basis.row(j + 1);
                let mut inc: f64 = row.iter().zip(&grid).map(|(p, g)| p * g).sum();
                if j + 1 == m {
                    inc *= nyquist;
                }
                modes[j] = modes[j] * self.decay_step[j] + self.gauss_scale[j] * inc;
            }
            self.record(&mut path, n + 1, &modes)?;
        }
        Ok(path)
    }
}
