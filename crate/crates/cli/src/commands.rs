use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use levy_she::levy_measures::ar_scan;
use levy_she::noise::{read_atoms, write_atoms};
use levy_she::rng::derive_seed;
use levy_she::sobolev::{h_ij_closed_form, h_ij_quadrature, path_l2_norm_sq, phi_bar, space_time_projection};
use levy_she::solver::{factorization_check, mode_decomposition_check, FieldPath, NoiseKind, Solver};
use levy_she::spectral::semigroup_residual;
use levy_she::stats::{dichotomy_experiment, DichotomySpec};
use levy_she::Error;

use crate::config::ExperimentConfig;
use crate::error::{io_err, CliError, CliResult, Context};

fn write(cfg: &ExperimentConfig, name: &str, command: &str, body: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(format!("create {}", cfg.out_dir.display())))?;
    let path = cfg.out_dir.join(name);
    fs::write(&path, format!("{}{body}", cfg.header(command))).map_err(io_err(format!("write {}", path.display())))?;
    Ok(path)
}

pub fn ar_scan_cmd(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let mut body = String::from("model,epsilon,kappa,ar_stat,status\n");
    let mut failed = None;
    for model in &cfg.models {
        let report = ar_scan(model, &cfg.eps_grid, &cfg.kappa_grid).during("levy_measures", "ar_scan")?;
        for line in report.to_csv().lines().skip(1) {
            body.push_str(line);
            body.push('\n');
        }
        if let Some(e) = report.cells.iter().find_map(|c| c.value.clone().err()) {
            failed.get_or_insert(e);
        }
    }
    let path = write(cfg, "ar_scan.csv", "ar-scan", &body)?;
    match failed {
        Some(source) => Err(CliError::Module { module: "levy_measures", operation: "ar_statistic", source }),
        None => Ok(vec![path]),
    }
}

fn label(noise: &NoiseKind) -> String {
    match noise {
        NoiseKind::Gaussian => "gaussian".into(),
        NoiseKind::Levy { model, eps, .. } => format!("{}_eps{eps:e}", model.name()),
    }
}

fn path_rows(out: &mut String, index: u64, path: &FieldPath) {
    for line in path.to_csv().lines().skip(1) {
        out.push_str(&format!("{index},{line}\n"));
    }
}

pub fn simulate_cmd(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let noises: Vec<NoiseKind> = if cfg.gaussian {
        vec![NoiseKind::Gaussian]
    } else {
        cfg.models.iter().flat_map(|m| cfg.eps_grid.iter().map(|&e| cfg.noise_for(m, e))).collect()
    };
    let mut written = Vec::new();
    if let Some(file) = &cfg.replay {
        let noise = noises[0].clone();
        let atoms = read_atoms(&mut fs::File::open(file).map_err(io_err(format!("open {}", file.display())))?)
            .map_err(io_err(format!("read {}", file.display())))?;
        let solver = Solver::new(cfg.sim_config(noise.clone())).during("solver", "Solver::new")?;
        let seed = derive_seed(cfg.seed, &["simulate", &label(&noise)]);
        let path = solver.simulate_with_atoms(solver.stream(seed, 0), atoms).during("solver", "simulate_with_atoms")?;
        let mut body = String::from("path,t,k,coefficient\n");
        path_rows(&mut body, 0, &path);
        written.push(write(cfg, &format!("replay_{}.csv", label(&noise)), "simulate", &body)?);
        return Ok(written);
    }
    for noise in noises {
        let name = label(&noise);
        let mut sim = cfg.sim_config(noise.clone());
        if cfg.export_atoms && noise.is_levy() {
            sim = sim.with_log();
        }
        let solver = Solver::new(sim).during("solver", "Solver::new")?;
        let seed = derive_seed(cfg.seed, &["simulate", &name]);
        let paths = (0..cfg.paths as u64)
            .into_par_iter()
            .map(|p| solver.simulate(solver.stream(seed, p)))
            .collect::<Result<Vec<_>, Error>>()
            .during("solver", "simulate_path")?;
        let mut body = String::from("path,t,k,coefficient\n");
        for (i, p) in paths.iter().enumerate() {
            path_rows(&mut body, i as u64, p);
        }
        written.push(write(cfg, &format!("simulate_{name}.csv"), "simulate", &body)?);
        for (i, p) in paths.iter().enumerate() {
            if let Some(log) = &p.log {
                let file = cfg.out_dir.join(format!("atoms_{name}_path{i}.bin"));
                let mut buf = Vec::new();
                write_atoms(&mut buf, &log.atoms).map_err(io_err("encode atoms"))?;
                fs::write(&file, buf).map_err(io_err(format!("write {}", file.display())))?;
                written.push(file);
            }
        }
    }
    Ok(written)
}

pub fn compare_cmd(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let mut spec = DichotomySpec::new(
        cfg.models.clone(),
        cfg.eps_grid.clone(),
        cfg.sim_config(NoiseKind::Gaussian),
        cfg.paths,
        derive_seed(cfg.seed, &["compare"]),
    );
    spec.functionals = cfg.functionals.clone();
    spec.kappa_ref = cfg.kappa_ref;
    spec.xi_grid = cfg.xi_grid.clone();
    spec.budget = cfg.budget;
    spec.control = cfg.control;
    let report = dichotomy_experiment(&spec).during("stats", "dichotomy_experiment")?;
    Ok(vec![write(cfg, "compare.csv", "compare", &report.to_csv())?])
}

struct Check {
    name: String,
    value: f64,
    threshold: f64,
    /// `true` when the value must stay at or below the threshold
    upper: bool,
}

impl Check {
    fn passed(&self) -> bool {
        if self.upper {
            self.value <= self.threshold
        } else {
            self.value >= self.threshold
        }
    }
}

fn identity_checks(cfg: &ExperimentConfig) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let f = |a: f64| (a * (i as f64 + 1.0)).sin().abs();
        let (x, z) = (3.1 * f(0.37), 3.1 * f(0.71));
        let (t, s) = (0.01 + f(0.53), 0.01 + f(0.29));
        worst = worst.max(semigroup_residual(t, s, x, z, 200, 1000));
    }
    checks.push(Check { name: "green_semigroup".into(), value: worst, threshold: 1e-8, upper: true });

    let model = &cfg.models[0];
    let eps = cfg.eps_grid[0];
    let seed = derive_seed(cfg.seed, &["identities", &model.name()]);
    let coarse_cfg = cfg.sim_config(cfg.noise_for(model, eps)).with_log();
    let mut fine_cfg = coarse_cfg.clone();
    fine_cfg.steps *= 2;
    let coarse = Solver::new(coarse_cfg).during("solver", "Solver::new")?;
    let fine = Solver::new(fine_cfg).during("solver", "Solver::new")?;
    let (mut fc, mut ff, mut md, mut mc, mut mf) = (0.0, 0.0, 0.0f64, 0.0, 0.0);
    for p in 0..cfg.identity_paths as u64 {
        let a = coarse.simulate(coarse.stream(seed, p)).during("solver", "simulate_path")?;
        let atoms = a.log.as_ref().map(|l| l.atoms.clone()).unwrap_or_default();
        let b = fine.simulate_with_atoms(fine.stream(seed, p), atoms).during("solver", "simulate_with_atoms")?;
        let t = cfg.horizon;
        fc += factorization_check(&a, 0.1, t, 1.3, 512).during("solver", "factorization_check")?;
        ff += factorization_check(&a, 0.1, t, 1.3, 1024).during("solver", "factorization_check")?;
        let r = mode_decomposition_check(&a, 1).during("solver", "mode_decomposition_check")?;
        md = md.max(r);
        mc += r;
        mf += mode_decomposition_check(&b, 1).during("solver", "mode_decomposition_check")?;
    }
    let ratio = |fine: f64, coarse: f64| if coarse > 0.0 { fine / coarse } else { 0.0 };
    checks.push(Check { name: "factorization_refinement_ratio".into(), value: ratio(ff, fc), threshold: 0.75, upper: true });
    checks.push(Check { name: "mode_decomposition_max".into(), value: md, threshold: 1e-2, upper: true });
    checks.push(Check { name: "mode_decomposition_refinement_ratio".into(), value: ratio(mf, mc), threshold: 0.75, upper: true });

    let mut h_err: f64 = 0.0;
    for i in 1..=10 {
        for j in 1..=10 {
            for s in [0.0, 0.2, 0.5, 0.8, 0.95] {
                for y in [0.1, 0.9, std::f64::consts::FRAC_PI_2, 2.3, 3.0] {
                    let a: f64 = h_ij_closed_form(i, j, s, y, 1.0);
                    let b: f64 = h_ij_quadrature(i, j, s, y, 1.0, 64);
                    h_err = h_err.max((a - b).abs());
                }
            }
        }
    }
    checks.push(Check { name: "h_ij_closed_form".into(), value: h_err, threshold: 1e-10, upper: true });

    let n = 64;
    let base = Solver::new(cfg.sim_config(NoiseKind::Gaussian).with_resolution(6, 6, n).with_stride(1).with_horizon(1.0))
        .during("solver", "Solver::new")?;
    let band = FieldPath::from_samples(base.config().clone(), base.stream(0, 0), |t, k| {
        (1..n).map(|i| ((i * 7 + k * 3) % 5) as f64 / (i + k) as f64 * phi_bar(i, t, 1.0)).sum()
    });
    let mut total = 0.0;
    for i in 1..n {
        for j in 1..=6 {
            total += space_time_projection(&band, i, j).during("sobolev", "space_time_projection")?.powi(2);
        }
    }
    let l2 = path_l2_norm_sq(&band).during("sobolev", "path_l2_norm_sq")?;
    checks.push(Check { name: "parseval".into(), value: (total - l2).abs() / l2, threshold: 1e-6, upper: true });
    Ok(checks)
}

pub fn identities_cmd(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let checks = identity_checks(cfg)?;
    let mut body = String::from("check,value,threshold,status\n");
    for c in &checks {
        body.push_str(&format!("{},{:.6e},{:e},{}\n", c.name, c.value, c.threshold, if c.passed() { "pass" } else { "fail" }));
    }
    let path = write(cfg, "identities.csv", "identities", &body)?;
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::IdentityFailure(failed));
    }
    Ok(vec![path])
}

pub fn read_config(path: Option<&Path>) -> CliResult<String> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display()))),
        None => Ok(String::new()),
    }
}
