use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::{ecf_distance, ks_two_sample, KsResult, Provenance, SampleSet, DEFAULT_XI_GRID};
use crate::error::{Error, Result};
use crate::levy_measures::LevyModel;
use crate::noise::Budget;
use crate::rng::derive_seed;
use crate::sobolev::{l2_norm, pairing, path_l2_norm_sq, TestFunction};
use crate::solver::{FieldPath, NoiseKind, SimConfig, Solver};

/// Real-valued observables of one path.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    /// `⟨u_T, φ⟩`
    Pairing(TestFunction),
    /// `u(T, x)`
    PointValue(f64),
    /// `‖u_T‖_{L²}`
    SpatialL2,
    /// `‖u‖_{L²([0,T]×[0,π])}` over the recorded grid
    PathL2,
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Functional::Pairing(phi) => format!("pairing_{}", phi.name()),
            Functional::PointValue(x) => format!("point_{x:.4}"),
            Functional::SpatialL2 => "l2_final".to_string(),
            Functional::PathL2 => "path_l2".to_string(),
        }
    }

    pub fn eval(&self, path: &FieldPath) -> Result<f64> {
        let t = path.config.horizon;
        match self {
            Functional::Pairing(phi) => pairing(path, t, &phi.coeffs(path.mode_count())),
            Functional::PointValue(x) => path.evaluate(t, *x),
            Functional::SpatialL2 => Ok(l2_norm(path.final_modes())),
            Functional::PathL2 => Ok(path_l2_norm_sq(path)?.sqrt()),
        }
    }

    /// Pairings with `φ₁`, `φ₂` and the standard bump, `u(T, π/2)`, and the path norm.
    pub fn battery() -> Vec<Functional> {
        vec![
            Functional::Pairing(TestFunction::Mode(1)),
            Functional::Pairing(TestFunction::Mode(2)),
            Functional::Pairing(TestFunction::standard_bump()),
            Functional::PointValue(FRAC_PI_2),
            Functional::PathL2,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct DichotomySpec {
    pub models: Vec<LevyModel>,
    pub eps_grid: Vec<f64>,
    pub functionals: Vec<Functional>,
    /// Resolution, horizon, `f` and initial data; the noise field is replaced.
    pub template: SimConfig,
    pub paths: usize,
    pub seed: u64,
    pub kappa_ref: f64,
    pub xi_grid: Vec<f64>,
    pub budget: Budget,
    /// Adds a Gaussian sample with an independent seed compared against the reference.
    pub control: bool,
}

impl DichotomySpec {
    pub fn new(models: Vec<LevyModel>, eps_grid: Vec<f64>, template: SimConfig, paths: usize, seed: u64) -> Self {
        Self {
            models,
            eps_grid,
            functionals: Functional::battery(),
            template,
            paths,
            seed,
            kappa_ref: 1.0,
            xi_grid: DEFAULT_XI_GRID.to_vec(),
            budget: Budget::default(),
            control: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub eps: Option<f64>,
    pub kappa_ref: f64,
    pub ar_stat: Option<f64>,
    pub functional: String,
    pub ks: Option<KsResult>,
    pub ecf: Option<f64>,
    pub paths: usize,
    /// Standard error of the mean of the functional over the Lévy sample.
    pub se: Option<f64>,
    /// Why the row carries no statistics.
    pub invalid: Option<String>,
}

impl ComparisonRow {
    pub fn is_valid(&self) -> bool {
        self.invalid.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

pub const REPORT_HEADER: &str = "model,epsilon,kappa_ref,ar_stat,functional,ks,ks_p,ecf,paths,se";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| format!("{x:.10e}"))
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.model,
                opt(r.eps),
                r.kappa_ref,
                opt(r.ar_stat),
                r.functional,
                opt(r.ks.map(|k| k.statistic)),
                opt(r.ks.map(|k| k.p_value)),
                opt(r.ecf),
                r.paths,
                opt(r.se)
            );
        }
        s
    }

    /// Rows for `model` and `functional` in ε-grid order.
    pub fn select(&self, model: &str, functional: &str) -> Vec<&ComparisonRow> {
        self.rows.iter().filter(|r| r.model == model && r.functional == functional).collect()
    }

    /// Valid rows whose KS p-value falls below `level / m`, `m` the number of functionals.
    pub fn bonferroni_rejections(&self, level: f64) -> Vec<&ComparisonRow> {
        let mut names: Vec<&str> = self.rows.iter().map(|r| r.functional.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        let cut = level / names.len().max(1) as f64;
        self.rows.iter().filter(|r| r.ks.is_some_and(|k| k.p_value < cut)).collect()
    }
}

fn sample(solver: &Solver, seed: u64, paths: usize, functionals: &[Functional]) -> Result<Vec<Vec<f64>>> {
    let per_path: Vec<Vec<f64>> = (0..paths as u64)
        .into_par_iter()
        .map(|p| {
            let path = solver.simulate(solver.stream(seed, p))?;
            functionals.iter().map(|f| f.eval(&path)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..functionals.len()).map(|j| per_path.iter().map(|v| v[j]).collect()).collect())
}

fn sets(columns: Vec<Vec<f64>>, noise: &str, eps: Option<f64>, functionals: &[Functional]) -> Result<Vec<SampleSet>> {
    columns
        .into_iter()
        .zip(functionals)
        .map(|(v, f)| SampleSet::new(v, Provenance { noise: noise.to_string(), eps, functional: f.name() }))
        .collect()
}

/// Gaussian reference once, then one Lévy sample per `(model, ε)`, compared functional by functional.
pub fn dichotomy_experiment(spec: &DichotomySpec) -> Result<ComparisonReport> {
    if spec.paths < 2 {
        return Err(Error::OutOfRange { what: format!("need at least 2 paths, got {}", spec.paths) });
    }
    if spec.functionals.is_empty() {
        return Err(Error::EmptySample);
    }
    let fs = &spec.functionals;
    let mut gauss_cfg = spec.template.clone();
    gauss_cfg.noise = NoiseKind::Gaussian;
    let gauss = Solver::new(gauss_cfg)?;
    let reference_seed = derive_seed(spec.seed, &["reference"]);
    let reference = sets(sample(&gauss, reference_seed, spec.paths, fs)?, "gaussian", None, fs)?;

    let mut rows = Vec::new();
    let compare = |rows: &mut Vec<ComparisonRow>, model: String, eps, ar, sample: &[SampleSet]| -> Result<()> {
        for ((f, a), b) in fs.iter().zip(sample).zip(&reference) {
            rows.push(ComparisonRow {
                model: model.clone(),
                eps,
                kappa_ref: spec.kappa_ref,
                ar_stat: ar,
                functional: f.name(),
                ks: Some(ks_two_sample(a, b)?),
                ecf: Some(ecf_distance(a, b, &spec.xi_grid)?),
                paths: a.len(),
                se: Some(a.std_error()),
                invalid: None,
            });
        }
        Ok(())
    };

    if spec.control {
        let control_seed = derive_seed(spec.seed, &["control"]);
        let control = sets(sample(&gauss, control_seed, spec.paths, fs)?, "gaussian", None, fs)?;
        compare(&mut rows, "gaussian_control".to_string(), None, None, &control)?;
    }

    for model in &spec.models {
        let name = model.name();
        for &eps in &spec.eps_grid {
            let ar = model.ar_statistic(eps, spec.kappa_ref).ok();
            let mut cfg = spec.template.clone();
            cfg.noise = NoiseKind::Levy { model: model.clone(), eps, eta: None, budget: spec.budget };
            let solver = match Solver::new(cfg) {
                Ok(s) => s,
                Err(e @ (Error::AtomCapExceeded { .. } | Error::BudgetExceeded { .. } | Error::InfiniteActivity { .. })) => {
                    for f in fs {
                        rows.push(ComparisonRow {
                            model: name.clone(),
                            eps: Some(eps),
                            kappa_ref: spec.kappa_ref,
                            ar_stat: ar,
                            functional: f.name(),
                            ks: None,
                            ecf: None,
                            paths: 0,
                            se: None,
                            invalid: Some(e.to_string()),
                        });
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            let seed = derive_seed(spec.seed, &[&name, &format!("{eps:e}")]);
            let levy = sets(sample(&solver, seed, spec.paths, fs)?, &name, Some(eps), fs)?;
            compare(&mut rows, name.clone(), Some(eps), ar, &levy)?;
        }
    }
    Ok(ComparisonReport { rows })
}
