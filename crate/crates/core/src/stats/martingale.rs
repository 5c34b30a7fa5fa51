use std::sync::Arc;

use crate::error::{Error, Result};
use crate::solver::{FieldPath, MultiplicativeKind, NoiseKind, SimConfig};
use crate::sobolev::{pair_modes, TestFunction};
use crate::spectral::SineBasis;

/// Bounded functions of `⟨ū_s, φ⟩` used to test orthogonality of martingale increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    One,
    Cos,
    Sin,
}

impl Conditioning {
    pub const ALL: [Conditioning; 3] = [Conditioning::One, Conditioning::Cos, Conditioning::Sin];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Conditioning::One => 1.0,
            Conditioning::Cos => x.cos(),
            Conditioning::Sin => x.sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Conditioning::One => "1",
            Conditioning::Cos => "cos",
            Conditioning::Sin => "sin",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleProbe {
    pub xi: f64,
    pub phi: TestFunction,
    pub s: f64,
    pub t: f64,
    pub conditioning: Vec<Conditioning>,
}

impl MartingaleProbe {
    pub fn new(xi: f64, phi: TestFunction, s: f64, t: f64) -> Self {
        Self { xi, phi, s, t, conditioning: Conditioning::ALL.to_vec() }
    }
}

/// Monte Carlo estimate of `E[(M_t − M_s) g]` for one conditioning statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleResidual {
    pub xi: f64,
    pub s: f64,
    pub t: f64,
    pub g: Conditioning,
    pub estimate: (f64, f64),
    pub std_error: (f64, f64),
    pub z_score: (f64, f64),
    pub paths: usize,
}

impl MartingaleResidual {
    pub fn max_abs_z(&self) -> f64 {
        self.z_score.0.abs().max(self.z_score.1.abs())
    }
}

type C64 = (f64, f64);

#[inline]
fn cmul(a: C64, b: C64) -> C64 {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

#[inline]
fn cis(x: f64) -> C64 {
    let (s, c) = x.sin_cos();
    (c, s)
}

/// `Ψ(c) = ∫ (e^{icz} − 1 − icz) Q(dz)` tabulated with cubic Hermite interpolation.
#[derive(Debug, Clone)]
struct PsiTable {
    rule: Vec<(f64, f64)>,
    c_max: f64,
    h: f64,
    vals: Vec<C64>,
    ders: Vec<C64>,
}

const PSI_NODES: usize = 4097;

impl PsiTable {
    fn direct(rule: &[(f64, f64)], c: f64) -> (C64, C64) {
        let mut v = (0.0, 0.0);
        let mut d = (0.0, 0.0);
        for &(z, w) in rule {
            let sn = (c * z).sin();
            // cos(cz) − 1 loses precision for small cz
            let half = (0.5 * c * z).sin();
            let cm1 = -2.0 * half * half;
            v.0 += w * cm1;
            v.1 += w * (sn - c * z);
            d.0 += -w * z * sn;
            d.1 += w * z * cm1;
        }
        (v, d)
    }

    fn new(rule: Vec<(f64, f64)>, c_max: f64) -> Self {
        let c_max = c_max.max(1e-12);
        let h = 2.0 * c_max / (PSI_NODES - 1) as f64;
        let (vals, ders) = (0..PSI_NODES)
            .map(|i| Self::direct(&rule, -c_max + h * i as f64))
            .unzip();
        Self { rule, c_max, h, vals, ders }
    }

    fn eval(&self, c: f64) -> C64 {
        if c.abs() > self.c_max {
            return Self::direct(&self.rule, c).0;
        }
        let pos = (c + self.c_max) / self.h;
        let i = (pos.floor() as usize).min(PSI_NODES - 2);
        let t = pos - i as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let (v0, v1, d0, d1) = (self.vals[i], self.vals[i + 1], self.ders[i], self.ders[i + 1]);
        (
            h00 * v0.0 + h10 * self.h * d0.0 + h01 * v1.0 + h11 * self.h * d1.0,
            h00 * v0.1 + h10 * self.h * d0.1 + h01 * v1.1 + h11 * self.h * d1.1,
        )
    }
}

fn f_bound(kind: MultiplicativeKind) -> f64 {
    match kind {
        MultiplicativeKind::Constant(c) => c.abs(),
        MultiplicativeKind::SineShift { c, d } | MultiplicativeKind::TanhShift { c, d } => c.abs() + d.abs(),
        // typical range; larger arguments fall back to direct evaluation
        MultiplicativeKind::Affine { a, b } => b.abs() + 4.0 * a.abs(),
    }
}

struct Prepared {
    config: Arc<SimConfig>,
    basis: SineBasis<f64>,
    phi_hat: Vec<f64>,
    phi_dd: Vec<f64>,
    phi_grid: Vec<f64>,
    psi: PsiTable,
    sigma: f64,
    i_s: usize,
    i_t: usize,
}

/// Streams paths one at a time and accumulates `E[(M_t − M_s) g]` and `E|M_t|²`.
pub struct MartingaleAccumulator {
    probe: MartingaleProbe,
    prepared: Option<Prepared>,
    sums: Vec<[f64; 4]>,
    m_t_sq: f64,
    count: usize,
}

fn same_config(a: &Arc<SimConfig>, b: &Arc<SimConfig>) -> bool {
    Arc::ptr_eq(a, b) || format!("{a:?}") == format!("{b:?}")
}

impl MartingaleAccumulator {
    pub fn new(probe: MartingaleProbe) -> Result<Self> {
        if !(probe.s >= 0.0 && probe.s <= probe.t) {
            return Err(Error::OutOfRange { what: format!("need 0 ≤ s ≤ t, got s = {}, t = {}", probe.s, probe.t) });
        }
        let sums = vec![[0.0; 4]; probe.conditioning.len()];
        Ok(Self { probe, prepared: None, sums, m_t_sq: 0.0, count: 0 })
    }

    fn prepare(&self, path: &FieldPath) -> Result<Prepared> {
        let log = path.log.as_ref().ok_or(Error::MissingAtomLog)?;
        let cfg = path.config.clone();
        let NoiseKind::Levy { model, eps, .. } = &cfg.noise else {
            return Err(Error::NotLevyPath);
        };
        let k = cfg.modes;
        let basis = SineBasis::<f64>::new(k, cfg.points);
        let phi_hat = self.probe.phi.coeffs(k);
        let phi_dd = self.probe.phi.second_derivative_coeffs(k);
        let mut phi_grid = vec![0.0; cfg.points];
        basis.synthesize(&phi_hat, &mut phi_grid);
        let phi_sup = phi_grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rule = model.restricted_rule(*eps, log.eta)?;
        let c_max = self.probe.xi.abs() * f_bound(cfg.f.kind) * phi_sup / log.sigma;
        let psi = PsiTable::new(rule, c_max);
        let i_s = path.index_of(self.probe.s)?;
        let i_t = path.index_of(self.probe.t)?;
        Ok(Prepared { basis, phi_hat, phi_dd, phi_grid, psi, sigma: log.sigma, i_s, i_t, config: cfg })
    }

    pub fn add(&mut self, path: &FieldPath) -> Result<()> {
        if !path.is_levy() {
            return Err(Error::NotLevyPath);
        }
        if path.log.is_none() {
            return Err(Error::MissingAtomLog);
        }
        if self.prepared.is_none() {
            self.prepared = Some(self.prepare(path)?);
        }
        let p = self.prepared.as_ref().unwrap();
        if !same_config(&p.config, &path.config) {
            return Err(Error::ConfigMismatch);
        }
        let xi = self.probe.xi;
        let f = path.config.f;
        let constant = f.as_constant();
        let mut grid = vec![0.0; p.basis.points()];
        let dx = p.basis.dx();
        let const_comp = constant.map(|c| {
            p.phi_grid.iter().fold((0.0, 0.0), |acc, &ph| {
                let v = p.psi.eval(xi * c * ph / p.sigma);
                (acc.0 + dx * v.0, acc.1 + dx * v.1)
            })
        });
        let integrand = |i: usize, grid: &mut [f64]| -> (f64, C64) {
            let modes = path.modes_at(i);
            let x = pair_modes(modes, &p.phi_hat);
            let d = pair_modes(modes, &p.phi_dd);
            let comp = match const_comp {
                Some(c) => c,
                None => {
                    p.basis.synthesize(modes, grid);
                    grid.iter().zip(&p.phi_grid).fold((0.0, 0.0), |acc, (&u, &ph)| {
                        let v = p.psi.eval(xi * f.eval(u) * ph / p.sigma);
                        (acc.0 + dx * v.0, acc.1 + dx * v.1)
                    })
                }
            };
            let e = cis(xi * x);
            (x, cmul(e, (comp.0, comp.1 + xi * d)))
        };
        let mut integral = (0.0, 0.0);
        let (x0, mut prev) = integrand(0, &mut grid);
        let mut m_s = cis(xi * x0);
        let mut x_s = x0;
        let mut m_t = m_s;
        for i in 1..=p.i_t {
            let (x, cur) = integrand(i, &mut grid);
            let h = path.times[i] - path.times[i - 1];
            integral.0 += 0.5 * h * (prev.0 + cur.0);
            integral.1 += 0.5 * h * (prev.1 + cur.1);
            prev = cur;
            let e = cis(xi * x);
            let m = (e.0 - integral.0, e.1 - integral.1);
            if i == p.i_s {
                m_s = m;
                x_s = x;
            }
            if i == p.i_t {
                m_t = m;
            }
        }
        if p.i_t == p.i_s {
            m_t = m_s;
        }
        let dm = (m_t.0 - m_s.0, m_t.1 - m_s.1);
        for (acc, g) in self.sums.iter_mut().zip(&self.probe.conditioning) {
            let w = g.eval(x_s);
            let (re, im) = (dm.0 * w, dm.1 * w);
            acc[0] += re;
            acc[1] += im;
            acc[2] += re * re;
            acc[3] += im * im;
        }
        self.m_t_sq += m_t.0 * m_t.0 + m_t.1 * m_t.1;
        self.count += 1;
        Ok(())
    }

    pub fn paths(&self) -> usize {
        self.count
    }

    /// `E|M_t|²` over the accumulated paths.
    pub fn second_moment(&self) -> f64 {
        self.m_t_sq / self.count.max(1) as f64
    }

    pub fn finish(&self) -> Vec<MartingaleResidual> {
        let n = self.count as f64;
        let z = |mean: f64, se: f64| if se > 0.0 { mean / se } else if mean == 0.0 { 0.0 } else { f64::INFINITY };
        self.probe
            .conditioning
            .iter()
            .zip(&self.sums)
            .map(|(&g, s)| {
                let (mr, mi) = (s[0] / n, s[1] / n);
                let var = |sq: f64, m: f64| ((sq / n - m * m) * n / (n - 1.0).max(1.0)).max(0.0);
                let se = ((var(s[2], mr) / n).sqrt(), (var(s[3], mi) / n).sqrt());
                MartingaleResidual {
                    xi: self.probe.xi,
                    s: self.probe.s,
                    t: self.probe.t,
                    g,
                    estimate: (mr, mi),
                    std_error: se,
                    z_score: (z(mr, se.0), z(mi, se.1)),
                    paths: self.count,
                }
            })
            .collect()
    }
}

/// `E[(M_t^ε − M_s^ε) g]` for every conditioning statistic of `probe`.
pub fn martingale_residual(paths: &[FieldPath], probe: &MartingaleProbe) -> Result<Vec<MartingaleResidual>> {
    let mut acc = MartingaleAccumulator::new(probe.clone())?;
    for p in paths {
        acc.add(p)?;
    }
    Ok(acc.finish())
}
