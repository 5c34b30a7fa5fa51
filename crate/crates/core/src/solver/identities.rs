use std::f64::consts::PI;

use super::integrator::FieldPath;
use crate::error::{Error, Result};
use crate::special::weighted_power_integral;

fn levy_log(path: &FieldPath) -> Result<&super::NoiseLog> {
    if !path.is_levy() {
        return Err(Error::NotLevyPath);
    }
    path.log.as_ref().ok_or(Error::MissingAtomLog)
}

/// Max over the recorded grid of `|X_t − ∫_0^t X_s k² e^{−k²(t−s)} ds + e^{−k²t} a_k(0) − a_k(t)|`,
/// where `X` is the driving semimartingale of mode `k`; trapezoidal rule in `s`.
pub fn mode_decomposition_check(path: &FieldPath, k: usize) -> Result<f64> {
    let log = levy_log(path)?;
    if k == 0 || k > path.mode_count() {
        return Err(Error::OutOfRange { what: format!("mode {k} outside 1..={}", path.mode_count()) });
    }
    let kk = (k * k) as f64;
    let kdim = path.mode_count();
    let a0 = path.modes_at(0)[k - 1];
    let mut jumps = 0.0;
    let mut drift = 0.0;
    let mut j = 0;
    let mut step = 0;
    let mut integral = 0.0;
    let mut prev_t = 0.0;
    let mut prev_x = 0.0;
    let mut worst: f64 = 0.0;
    for (i, &t) in path.times.iter().enumerate() {
        while j < log.atoms.len() && log.atoms[j].t < t {
            jumps += log.jump(j, k);
            j += 1;
        }
        while step < path.steps[i] {
            drift += log.step_drift.get(step * kdim + k - 1).copied().unwrap_or(0.0) * path.dt;
            step += 1;
        }
        let x = jumps + drift;
        if i > 0 {
            let h = t - prev_t;
            let e = (-kk * h).exp();
            integral = e * integral + 0.5 * h * kk * (prev_x * e + x);
        }
        let rebuilt = x - integral + (-kk * t).exp() * a0;
        worst = worst.max((rebuilt - path.modes_at(i)[k - 1]).abs());
        prev_t = t;
        prev_x = x;
    }
    Ok(worst)
}

/// `|u(t,x) − (sin δπ/π) ∫_0^t ∫_0^π G_{t−s}(x,y)(t−s)^{δ−1} Y_δ(s,y) dy ds|` with
/// `Y_δ(s,y) = ∫_0^s ∫ G_{s−r}(y,w)(s−r)^{−δ} L(dr,dw)` built from the atom log.
///
/// The `y` integral is exact in the sine basis; the `s` integral uses `sub_steps` cells
/// with the weight `(t−s)^{δ−1}` integrated exactly against linear interpolation.
pub fn factorization_check(path: &FieldPath, delta: f64, t: f64, x: f64, sub_steps: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::InvalidDelta { delta });
    }
    let log = levy_log(path)?;
    let i_t = path.index_of(t)?;
    let target = path.evaluate_at(i_t, x)?;
    if sub_steps == 0 {
        return Err(Error::OutOfRange { what: "sub_steps must be positive".into() });
    }
    let kdim = path.mode_count();
    let h = t / sub_steps as f64;
    let nodes: Vec<f64> = (0..=sub_steps).map(|i| if i == sub_steps { t } else { i as f64 * h }).collect();
    // ∫ over each cell of v^{δ−1} and v^{δ}, v = t − s
    let m0 = |a: f64, b: f64| (b.powf(delta) - a.powf(delta)) / delta;
    let m1 = |a: f64, b: f64| (b.powf(delta + 1.0) - a.powf(delta + 1.0)) / (delta + 1.0);
    let atoms: Vec<_> = log.atoms.iter().enumerate().filter(|(_, a)| a.t < t).collect();
    let drift_steps = path.steps[i_t];
    let has_drift = log.step_drift.iter().any(|&d| d != 0.0);
    let lattice = if has_drift { common_lattice(h, path.dt, t) } else { None };
    let mut value = 0.0;
    for k in 1..=kdim {
        let kk = (k * k) as f64;
        let coeffs: Vec<(f64, f64)> = atoms.iter().map(|(j, a)| (a.t, log.jump(*j, k))).collect();
        // W(m·g) = ∫_0^{m g} v^{−δ} e^{−k²v} dv on a lattice carrying every s − r
        let table = lattice.map(|(g, len)| {
            let w: Vec<f64> = (0..=len).map(|m| weighted_power_integral(1.0 - delta, kk, 0.0, m as f64 * g)).collect();
            (g, w)
        });
        let y_at = |s: f64| -> f64 {
            let mut y = 0.0;
            for &(tj, c) in &coeffs {
                if tj < s {
                    let v = s - tj;
                    y += c * (-kk * v).exp() * v.powf(-delta);
                }
            }
            for n in 0..drift_steps {
                let d = log.step_drift.get(n * kdim + k - 1).copied().unwrap_or(0.0);
                let r0 = n as f64 * path.dt;
                if r0 >= s {
                    break;
                }
                if d == 0.0 {
                    continue;
                }
                let r1 = ((n + 1) as f64 * path.dt).min(s);
                y += d * match &table {
                    Some((g, w)) => w[((s - r0) / g).round() as usize] - w[((s - r1) / g).round() as usize],
                    None => weighted_power_integral(1.0 - delta, kk, s - r1, s - r0),
                };
            }
            y
        };
        let g: Vec<f64> = nodes.iter().map(|&s| (-kk * (t - s)).exp() * y_at(s)).collect();
        let mut r = 0.0;
        for i in 0..sub_steps {
            let (s0, s1) = (nodes[i], nodes[i + 1]);
            let (v1, v0) = (t - s1, t - s0);
            let len = s1 - s0;
            // linear interpolation in s written in v: g = g_i (v − v1)/len + g_{i+1} (v0 − v)/len
            let a = m0(v1, v0);
            let b = m1(v1, v0);
            r += (g[i] * (b - v1 * a) + g[i + 1] * (v0 * a - b)) / len;
        }
        let a0 = path.modes_at(0)[k - 1];
        let mode = (delta * PI).sin() / PI * r + (-kk * t).exp() * a0;
        value += mode * crate::spectral::phi(k, x);
    }
    Ok((value - target).abs())
}

/// Finer of `h` and `dt` when one is an integer multiple of the other, with the lattice length up to `t`.
fn common_lattice(h: f64, dt: f64, t: f64) -> Option<(f64, usize)> {
    let (fine, coarse) = if h <= dt { (h, dt) } else { (dt, h) };
    let q = coarse / fine;
    if (q - q.round()).abs() > 1e-9 * q {
        return None;
    }
    let len = (t / fine).round() as usize;
    ((len as f64 * fine - t).abs() <= 1e-9 * t.max(1.0)).then_some((fine, len))
}
