use crate::error::{Error, Result};
use crate::solver::{series_value, FieldPath, NoiseKind};
use crate::sobolev::TestFunction;
use crate::spectral::SineBasis;

/// Truncated characteristics of the real process `⟨ū, φ⟩` along one path.
///
/// `quadratic[i]` sums `x²·1{|x| ≤ h}` over jumps before `times[i]`, `drift[i]` is the
/// compensator of the big jumps, `−∫∫∫ x·1{|x| > h} ν̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct Characteristics {
    pub h: f64,
    pub times: Vec<f64>,
    pub quadratic: Vec<f64>,
    pub drift: Vec<f64>,
    /// `Σ x²` over all jumps on `[0, T]`.
    pub full_sum: f64,
    /// `Σ x²·1{|x| > h}` on `[0, T]`.
    pub big_sum: f64,
    pub big_jumps: usize,
    pub jumps: usize,
}

impl Characteristics {
    pub fn big_jump_fraction(&self) -> f64 {
        if self.jumps == 0 {
            0.0
        } else {
            self.big_jumps as f64 / self.jumps as f64
        }
    }

    pub fn final_quadratic(&self) -> f64 {
        *self.quadratic.last().unwrap_or(&0.0)
    }
}

/// Jump sizes `f(u(t−, x_j))·φ_K(x_j)·z_j/σ` of `⟨ū, φ⟩`, with jump times.
pub fn projected_jumps(path: &FieldPath, phi: &TestFunction) -> Result<Vec<(f64, f64)>> {
    let log = path.log.as_ref().ok_or(Error::MissingAtomLog)?;
    let phi_hat = phi.coeffs(path.mode_count());
    Ok(log
        .atoms
        .iter()
        .zip(&log.f_left)
        .map(|(a, &fl)| (a.t, fl * series_value(&phi_hat, a.x) * a.z / log.sigma))
        .collect())
}

pub fn characteristics_estimate(path: &FieldPath, phi: &TestFunction, h: f64) -> Result<Characteristics> {
    if !path.is_levy() {
        return Err(Error::NotLevyPath);
    }
    if !(h > 0.0) {
        return Err(Error::OutOfRange { what: format!("truncation level h = {h} must be positive") });
    }
    let log = path.log.as_ref().ok_or(Error::MissingAtomLog)?;
    let NoiseKind::Levy { model, eps, .. } = &path.config.noise else {
        return Err(Error::NotLevyPath);
    };
    let jumps = projected_jumps(path, phi)?;

    let mut quadratic = Vec::with_capacity(path.times.len());
    let (mut acc, mut j) = (0.0, 0);
    for &t in &path.times {
        while j < jumps.len() && jumps[j].0 < t {
            let x = jumps[j].1;
            if x.abs() <= h {
                acc += x * x;
            }
            j += 1;
        }
        quadratic.push(acc);
    }
    let full_sum: f64 = jumps.iter().map(|&(_, x)| x * x).sum();
    let big: Vec<f64> = jumps.iter().map(|&(_, x)| x).filter(|x| x.abs() > h).collect();
    let big_sum = big.iter().map(|x| x * x).sum();

    let cfg = &path.config;
    let basis = SineBasis::<f64>::new(cfg.modes, cfg.points);
    let mut phi_grid = vec![0.0; cfg.points];
    basis.synthesize(&phi.coeffs(cfg.modes), &mut phi_grid);
    let rule = model.restricted_rule(*eps, log.eta)?;
    let z_max = rule.iter().fold(0.0f64, |m, &(z, _)| m.max(z.abs()));
    let phi_sup = phi_grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut grid = vec![0.0; cfg.points];
    let mut rate = |i: usize| -> f64 {
        basis.synthesize(path.modes_at(i), &mut grid);
        let f_sup = grid.iter().fold(0.0f64, |m, &u| m.max(cfg.f.eval(u).abs()));
        if f_sup * phi_sup * z_max / log.sigma <= h {
            return 0.0;
        }
        let mut total = 0.0;
        for (&u, &ph) in grid.iter().zip(&phi_grid) {
            let c = cfg.f.eval(u) * ph / log.sigma;
            for &(z, w) in &rule {
                let x = c * z;
                if x.abs() > h {
                    total += w * x;
                }
            }
        }
        -basis.dx() * total
    };
    let mut drift = Vec::with_capacity(path.times.len());
    let mut b = 0.0;
    drift.push(0.0);
    for i in 1..path.times.len() {
        b += rate(i - 1) * (path.times[i] - path.times[i - 1]);
        drift.push(b);
    }

    Ok(Characteristics {
        h,
        times: path.times.clone(),
        quadratic,
        drift,
        full_sum,
        big_sum,
        big_jumps: big.len(),
        jumps: jumps.len(),
    })
}
