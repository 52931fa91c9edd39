//! Quadrature comparison on the moment integrand `sum_i x_i^(2i)`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adaptive::{adapt, AdaptConfig};
use crate::error::{Error, Result};
use crate::models::{problem1_exact, problem1_integrand};
use crate::smolyak::{full_tensor_grid, smolyak_grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum QuadratureVariant {
    Gh { points: usize },
    Sgh { level: usize },
    Asgh { psi: f64, tol: f64 },
}

impl QuadratureVariant {
    pub fn label(&self) -> String {
        match *self {
            QuadratureVariant::Gh { points } => format!("GH_{points}"),
            QuadratureVariant::Sgh { level } => format!("SGH_{level}"),
            QuadratureVariant::Asgh { psi, tol } => format!("ASGH_{{{psi},{tol}}}"),
        }
    }

    /// Published (% error, point count) for the six-dimensional case.
    fn published(&self) -> Option<(f64, usize)> {
        let row = match *self {
            QuadratureVariant::Gh { points: 3 } => (77.8843, 729),
            QuadratureVariant::Gh { points: 4 } => (36.3747, 4096),
            QuadratureVariant::Gh { points: 5 } => (7.8139, 15625),
            QuadratureVariant::Gh { points: 6 } => (0.4784, 46656),
            QuadratureVariant::Sgh { level: 3 } => (7.8066, 97),
            QuadratureVariant::Sgh { level: 4 } => (0.0042, 533),
            QuadratureVariant::Asgh { psi, tol } if (psi, tol) == (0.1, 5.0) => (0.0138, 64),
            QuadratureVariant::Asgh { psi, tol } if (psi, tol) == (0.4, 5.0) => (0.0107, 88),
            QuadratureVariant::Asgh { psi, tol } if (psi, tol) == (0.4, 1.6) => (0.0042, 110),
            _ => return None,
        };
        Some(row)
    }
}

pub fn default_variants() -> Vec<QuadratureVariant> {
    let mut v: Vec<_> = (3..=6)
        .map(|points| QuadratureVariant::Gh { points })
        .collect();
    v.extend((3..=4).map(|level| QuadratureVariant::Sgh { level }));
    v.extend(
        [(0.1, 5.0), (0.4, 5.0), (0.4, 1.6)]
            .into_iter()
            .map(|(psi, tol)| QuadratureVariant::Asgh { psi, tol }),
    );
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub label: String,
    pub variant: QuadratureVariant,
    pub points: usize,
    pub value: f64,
    pub percent_error: f64,
    pub published_percent_error: Option<f64>,
    pub published_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub dim: usize,
    pub exact: f64,
    pub rows: Vec<Table1Row>,
}

impl Table1Report {
    pub fn row(&self, label: &str) -> Option<&Table1Row> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Integrates the moment integrand in `dim` dimensions with each variant.
pub fn run_table1(dim: usize, variants: &[QuadratureVariant]) -> Result<Table1Report> {
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    let exact = problem1_exact(dim);
    let f = |x: &[f64]| vec![problem1_integrand(x)];
    let mut rows = Vec::with_capacity(variants.len());
    for variant in variants {
        let (points, value) = match *variant {
            QuadratureVariant::Gh { points } => {
                let grid = full_tensor_grid(dim, points)?;
                (grid.len(), grid.apply(f)?[0])
            }
            QuadratureVariant::Sgh { level } => {
                let grid = smolyak_grid(dim, level)?;
                (grid.len(), grid.apply(f)?[0])
            }
            QuadratureVariant::Asgh { psi, tol } => {
                let out = adapt(f, dim, &AdaptConfig::new(psi, tol)?)?;
                (out.report.point_count, out.grid.grid.apply(f)?[0])
            }
        };
        let published = if dim == 6 { variant.published() } else { None };
        rows.push(Table1Row {
            label: variant.label(),
            variant: *variant,
            points,
            value,
            percent_error: 100.0 * (value - exact).abs() / exact,
            published_percent_error: published.map(|p| p.0),
            published_points: published.map(|p| p.1),
        });
    }
    Ok(Table1Report { dim, exact, rows })
}

/// Writes `table1.csv` and `table1.json` into `dir`.
pub fn write_table1(report: &Table1Report, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("table1.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record([
        "rule",
        "points",
        "value",
        "percent_error",
        "published_percent_error",
        "published_points",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.label.clone(),
            r.points.to_string(),
            format!("{:e}", r.value),
            format!("{:e}", r.percent_error),
            r.published_percent_error
                .map_or(String::new(), |v| v.to_string()),
            r.published_points.map_or(String::new(), |v| v.to_string()),
        ])?;
    }
    w.flush()?;
    let json_path = dir.join("table1.json");
    fs::write(&json_path, serde_json::to_string_pretty(report)?)?;
    Ok((csv_path, json_path))
}
