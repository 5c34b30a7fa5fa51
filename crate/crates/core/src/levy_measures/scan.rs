use super::LevyModel;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ArCell {
    pub eps: f64,
    pub kappa: f64,
    pub value: std::result::Result<f64, Error>,
}

/// Table of AR statistics, one cell per `(ε, κ)`, ε-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ArReport {
    pub model: String,
    pub eps_grid: Vec<f64>,
    pub kappa_grid: Vec<f64>,
    pub cells: Vec<ArCell>,
}

impl ArReport {
    pub fn get(&self, i_eps: usize, i_kappa: usize) -> &ArCell {
        &self.cells[i_eps * self.kappa_grid.len() + i_kappa]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,epsilon,kappa,ar_stat,status\n");
        for c in &self.cells {
            match &c.value {
                Ok(v) => out.push_str(&format!("{},{:e},{},{:.12e},ok\n", self.model, c.eps, c.kappa, v)),
                Err(e) => out.push_str(&format!("{},{:e},{},,\"{}\"\n", self.model, c.eps, c.kappa, e)),
            }
        }
        out
    }
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(name, "grid is empty"));
    }
    if let Some(v) = grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(invalid(name, format!("grid value {v} is not positive")));
    }
    Ok(())
}

/// Evaluates the AR statistic on every `(ε, κ)` pair; failing cells are kept as errors.
pub fn ar_scan(model: &LevyModel, eps_grid: &[f64], kappa_grid: &[f64]) -> Result<ArReport> {
    check_grid("eps_grid", eps_grid)?;
    check_grid("kappa_grid", kappa_grid)?;
    let mut cells = Vec::with_capacity(eps_grid.len() * kappa_grid.len());
    for &eps in eps_grid {
        for &kappa in kappa_grid {
            cells.push(ArCell { eps, kappa, value: model.ar_statistic(eps, kappa) });
        }
    }
    Ok(ArReport {
        model: model.name(),
        eps_grid: eps_grid.to_vec(),
        kappa_grid: kappa_grid.to_vec(),
        cells,
    })
}
