use rand::Rng;

use super::{Piece, Route, Side, Truncated};
use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::quadrature::{adaptive, QuadratureConfig};

const TABLE_NODES: usize = 4096;
const TAIL_MASS: f64 = 1e-12;
// GK15 abscissae and weights reused for the coarse mark rule
const RULE_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const RULE_W: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

#[derive(Debug, Clone)]
enum Component {
    Atom(f64),
    Table { inverse: MonotoneCubic, side: Side, lo: f64, hi: f64 },
}

/// Sampler for the normalized restriction of `Q^ε` to `{|z| > η}`.
#[derive(Debug, Clone)]
pub struct MarkSampler {
    eps: f64,
    eta: f64,
    mass: f64,
    cumulative: Vec<f64>,
    components: Vec<Component>,
    rule: Vec<(f64, f64)>,
}

fn effective_upper(piece: &Piece, lo: f64, mass_hint: f64, q: &QuadratureConfig<f64>) -> Result<f64> {
    if piece.hi.is_finite() {
        return Ok(piece.hi);
    }
    let mut z = lo.max(1.0) * 2.0;
    for _ in 0..200 {
        let rest = piece.radial_moment(0.0, z, f64::INFINITY, Route::Quadrature, q)?;
        if rest <= TAIL_MASS * mass_hint {
            return Ok(z);
        }
        z *= 2.0;
    }
    Err(Error::NonIntegrable { what: "mark tail does not decay".into() })
}

impl MarkSampler {
    pub(crate) fn build(measure: &Truncated, eps: f64, eta: f64, q: &QuadratureConfig<f64>) -> Result<Self> {
        let mut weights = Vec::new();
        let mut components = Vec::new();
        let mut rule = Vec::new();
        for piece in &measure.pieces {
            let mut lo = piece.lo.max(eta);
            if !(lo < piece.hi) {
                continue;
            }
            let total = piece.radial_moment(0.0, lo, piece.hi, Route::Auto, q)?;
            if !total.is_finite() {
                return Err(Error::InfiniteActivity { eps, eta });
            }
            if total <= 0.0 {
                continue;
            }
            let hi = effective_upper(piece, lo, total, q)?;
            if lo == 0.0 {
                lo = hi * 2f64.powi(-60);
            }
            let ratio = (hi / lo).ln();
            let nodes: Vec<f64> = (0..TABLE_NODES)
                .map(|i| {
                    if i + 1 == TABLE_NODES {
                        hi
                    } else {
                        lo * (ratio * i as f64 / (TABLE_NODES - 1) as f64).exp()
                    }
                })
                .collect();
            let r = |y: f64| piece.radial_density(y);
            let mut cdf = Vec::with_capacity(TABLE_NODES);
            let mut acc = 0.0;
            cdf.push(0.0);
            for w in nodes.windows(2) {
                acc += adaptive(&r, w[0], w[1], q).value;
                cdf.push(acc);
            }
            let mut xs = Vec::with_capacity(TABLE_NODES);
            let mut ys = Vec::with_capacity(TABLE_NODES);
            for (f, y) in cdf.iter().zip(&nodes) {
                let f = f / acc;
                if xs.last().is_none_or(|&last| f > last) {
                    xs.push(f);
                    ys.push(y.ln());
                }
            }
            if xs.len() < 2 {
                continue;
            }
            *xs.last_mut().unwrap() = 1.0;
            weights.push(piece.multiplicity() * acc);
            components.push(Component::Table {
                inverse: MonotoneCubic::new(xs, ys),
                side: piece.side,
                lo,
                hi,
            });

            // coarse rule on panels of ratio at most √2
            let panels = ((ratio / std::f64::consts::LN_2 * 2.0).ceil() as usize).max(1);
            for j in 0..panels {
                let a = lo * (ratio * j as f64 / panels as f64).exp();
                let b = lo * (ratio * (j + 1) as f64 / panels as f64).exp();
                let c = 0.5 * (a + b);
                let h = 0.5 * (b - a);
                for (k, (&x, &w)) in RULE_X.iter().zip(&RULE_W).enumerate() {
                    let pts: &[f64] = if k == 7 { &[0.0] } else { &[-1.0, 1.0] };
                    for s in pts {
                        let y = c + s * h * x;
                        let wy = w * h * r(y);
                        match piece.side {
                            Side::Pos => rule.push((y, wy)),
                            Side::Neg => rule.push((-y, wy)),
                            Side::Both => {
                                rule.push((y, wy));
                                rule.push((-y, wy));
                            }
                        }
                    }
                }
            }
        }
        for &(z, w) in &measure.atoms {
            if z.abs() > eta {
                weights.push(w);
                components.push(Component::Atom(z));
                rule.push((z, w));
            }
        }
        let mass: f64 = weights.iter().sum();
        if components.is_empty() || mass <= 0.0 {
            return Err(Error::EmptyRestriction { eps, eta });
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w / mass;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self { eps, eta, mass, cumulative, components, rule })
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn inner_cutoff(&self) -> f64 {
        self.eta
    }

    /// Total mass of the tabulated restriction.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Nodes and weights integrating against the unnormalized restriction.
    pub fn rule(&self) -> &[(f64, f64)] {
        &self.rule
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let idx = if self.components.len() == 1 {
            0
        } else {
            let u: f64 = rng.random();
            self.cumulative.partition_point(|&c| c <= u).min(self.components.len() - 1)
        };
        match &self.components[idx] {
            Component::Atom(z) => *z,
            Component::Table { inverse, side, lo, hi } => {
                let v: f64 = rng.random();
                let y = inverse.eval(v).exp().clamp(*lo, *hi);
                match side {
                    Side::Pos => y,
                    Side::Neg => -y,
                    Side::Both => {
                        if rng.random::<bool>() {
                            y
                        } else {
                            -y
                        }
                    }
                }
            }
        }
    }
}
