use std::collections::BTreeMap;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use levy_she::noise::Budget;
use levy_she::sobolev::TestFunction;
use levy_she::solver::{MultiplicativeFunction, NoiseKind, SimConfig};
use levy_she::stats::{Functional, DEFAULT_XI_GRID};
use levy_she::LevyModel;

use crate::error::{CliError, CliResult, Context};

/// Every recognised key with its default value.
const KEYS: &[(&str, &str)] = &[
    ("models", "gamma"),
    ("eps_grid", "1e-1,1e-2,1e-3"),
    ("kappa_grid", "0.5,1,2"),
    ("noise", "levy"),
    ("eta", "auto"),
    ("f", "constant:1"),
    ("paths", "100"),
    ("seed", "0"),
    ("workers", "1"),
    ("output.dir", "."),
    ("budget.rho", "1e-3"),
    ("budget.atom_cap", "1e8"),
    ("solver.modes", "32"),
    ("solver.points", "64"),
    ("solver.steps", "1024"),
    ("solver.horizon", "1"),
    ("solver.stride", "1"),
    ("simulate.export_atoms", "true"),
    ("simulate.replay", ""),
    ("compare.functionals", "phi1,phi2,bump,point,path_l2"),
    ("compare.control", "false"),
    ("compare.kappa_ref", "1"),
    ("compare.xi_grid", ""),
    ("identities.paths", "20"),
];

// keys that do not influence any output bytes and are left out of the hash
const UNHASHED: &[&str] = &["output.dir", "workers"];

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    raw: BTreeMap<String, String>,
    pub models: Vec<LevyModel>,
    pub eps_grid: Vec<f64>,
    pub kappa_grid: Vec<f64>,
    pub gaussian: bool,
    pub eta: Option<f64>,
    pub f: MultiplicativeFunction,
    pub paths: usize,
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub budget: Budget,
    pub modes: usize,
    pub points: usize,
    pub steps: usize,
    pub horizon: f64,
    pub stride: usize,
    pub export_atoms: bool,
    pub replay: Option<PathBuf>,
    pub functionals: Vec<Functional>,
    pub control: bool,
    pub kappa_ref: f64,
    pub xi_grid: Vec<f64>,
    pub identity_paths: usize,
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{key}` = `{value}`: {why}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse().map_err(|e| bad(key, v, e))
}

fn list(key: &str, v: &str) -> CliResult<Vec<f64>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| num(key, s)).collect()
}

fn positive_grid(key: &str, v: &str) -> CliResult<Vec<f64>> {
    let g = list(key, v)?;
    if g.is_empty() {
        return Err(bad(key, v, "grid is empty"));
    }
    if let Some(x) = g.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(bad(key, v, format!("{x} is not positive")));
    }
    Ok(g)
}

fn parse_model(entry: &str) -> CliResult<LevyModel> {
    let (name, arg) = entry.split_once(':').map_or((entry, None), |(a, b)| (a, Some(b)));
    let model = match (name.trim(), arg) {
        ("gamma", None) => Ok(LevyModel::gamma()),
        ("remark", None) => Ok(LevyModel::remark()),
        ("stable", Some(a)) => LevyModel::stable(num("models", a)?),
        ("cp" | "compound_poisson", Some(atoms)) => {
            let pairs = atoms
                .split(';')
                .map(|p| {
                    let (z, w) = p.split_once('/').ok_or_else(|| bad("models", entry, "atoms are written z/w;z/w"))?;
                    Ok((num("models", z)?, num("models", w)?))
                })
                .collect::<CliResult<Vec<_>>>()?;
            LevyModel::compound_poisson(pairs)
        }
        _ => return Err(bad("models", entry, "expected gamma, remark, stable:<alpha> or cp:<z>/<w>;…")),
    };
    model.during("levy_measures", "LevyModel::new")
}

fn parse_f(v: &str) -> CliResult<MultiplicativeFunction> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    let args = parts[1..].iter().map(|s| num::<f64>("f", s)).collect::<CliResult<Vec<_>>>()?;
    let f = match (parts[0], args.as_slice()) {
        ("constant", [c]) => MultiplicativeFunction::constant(*c),
        ("affine", [a, b]) => MultiplicativeFunction::affine(*a, *b),
        ("sine_shift", [c, d]) => MultiplicativeFunction::sine_shift(*c, *d),
        ("tanh_shift", [c, d]) => MultiplicativeFunction::tanh_shift(*c, *d),
        _ => return Err(bad("f", v, "expected constant:c, affine:a:b, sine_shift:c:d or tanh_shift:c:d")),
    };
    f.validate().during("solver", "MultiplicativeFunction::validate")?;
    Ok(f)
}

fn parse_functional(key: &str, v: &str) -> CliResult<Functional> {
    Ok(match v.trim() {
        "bump" => Functional::Pairing(TestFunction::standard_bump()),
        "point" => Functional::PointValue(std::f64::consts::FRAC_PI_2),
        "path_l2" => Functional::PathL2,
        "l2_final" => Functional::SpatialL2,
        s => match s.strip_prefix("phi").and_then(|k| k.parse::<usize>().ok()) {
            Some(k) if k >= 1 => Functional::Pairing(TestFunction::Mode(k)),
            _ => return Err(bad(key, v, "expected phi<k>, bump, point, path_l2 or l2_final")),
        },
    })
}

fn boolean(key: &str, v: &str) -> CliResult<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, v, "expected true or false")),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_document(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
        let k = k.trim();
        if !KEYS.iter().any(|(key, _)| *key == k) {
            return Err(CliError::Config(format!("line {}: unknown key `{k}`", n + 1)));
        }
        if map.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key `{k}`", n + 1)));
        }
    }
    Ok(map)
}

impl ExperimentConfig {
    pub fn from_document(text: &str, overrides: &[(&str, String)]) -> CliResult<Self> {
        let mut raw: BTreeMap<String, String> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        raw.extend(parse_document(text)?);
        for (k, v) in overrides {
            raw.insert(k.to_string(), v.clone());
        }
        Self::resolve(raw)
    }

    fn resolve(raw: BTreeMap<String, String>) -> CliResult<Self> {
        let get = |k: &str| raw[k].as_str();
        let models = get("models")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(parse_model)
            .collect::<CliResult<Vec<_>>>()?;
        if models.is_empty() {
            return Err(bad("models", get("models"), "no model given"));
        }
        let gaussian = match get("noise") {
            "levy" => false,
            "gaussian" => true,
            v => return Err(bad("noise", v, "expected levy or gaussian")),
        };
        let eta = match get("eta") {
            "auto" => None,
            v => {
                let e: f64 = num("eta", v)?;
                if !(e.is_finite() && e >= 0.0) {
                    return Err(bad("eta", v, "must be nonnegative"));
                }
                Some(e)
            }
        };
        let functionals = get("compare.functionals")
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_functional("compare.functionals", s))
            .collect::<CliResult<Vec<_>>>()?;
        if functionals.is_empty() {
            return Err(bad("compare.functionals", "", "no functional given"));
        }
        let xi = get("compare.xi_grid");
        let xi_grid = if xi.is_empty() { DEFAULT_XI_GRID.to_vec() } else { positive_grid("compare.xi_grid", xi)? };
        let count = |k: &str| -> CliResult<usize> {
            let n: usize = num(k, get(k))?;
            if n == 0 {
                return Err(bad(k, get(k), "must be at least 1"));
            }
            Ok(n)
        };
        let replay = get("simulate.replay");
        let cfg = Self {
            models,
            eps_grid: positive_grid("eps_grid", get("eps_grid"))?,
            kappa_grid: positive_grid("kappa_grid", get("kappa_grid"))?,
            gaussian,
            eta,
            f: parse_f(get("f"))?,
            paths: count("paths")?,
            seed: num("seed", get("seed"))?,
            workers: count("workers")?,
            out_dir: PathBuf::from(get("output.dir")),
            budget: Budget { rho: num("budget.rho", get("budget.rho"))?, atom_cap: num("budget.atom_cap", get("budget.atom_cap"))? },
            modes: count("solver.modes")?,
            points: count("solver.points")?,
            steps: count("solver.steps")?,
            horizon: num("solver.horizon", get("solver.horizon"))?,
            stride: count("solver.stride")?,
            export_atoms: boolean("simulate.export_atoms", get("simulate.export_atoms"))?,
            replay: (!replay.is_empty()).then(|| PathBuf::from(replay)),
            functionals,
            control: boolean("compare.control", get("compare.control"))?,
            kappa_ref: positive_grid("compare.kappa_ref", get("compare.kappa_ref"))?[0],
            xi_grid,
            identity_paths: count("identities.paths")?,
            raw,
        };
        for &eps in &cfg.eps_grid {
            cfg.sim_config(cfg.noise_for(&cfg.models[0], eps)).validate().during("solver", "SimConfig::validate")?;
        }
        Ok(cfg)
    }

    pub fn noise_for(&self, model: &LevyModel, eps: f64) -> NoiseKind {
        NoiseKind::Levy { model: model.clone(), eps, eta: self.eta, budget: self.budget }
    }

    pub fn sim_config(&self, noise: NoiseKind) -> SimConfig {
        SimConfig::new(noise)
            .with_resolution(self.modes, self.points, self.steps)
            .with_f(self.f)
            .with_stride(self.stride)
            .with_horizon(self.horizon)
    }

    /// Canonical `key=value` lines of every key that affects results.
    pub fn canonical(&self) -> String {
        self.raw
            .iter()
            .filter(|(k, _)| !UNHASHED.contains(&k.as_str()))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn header(&self, command: &str) -> String {
        format!("# levy-she {} {command} config-sha256 {}\n", env!("CARGO_PKG_VERSION"), self.hash())
    }
}
