//! Multivariate point/weight sets in standard-normal space.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Per-coordinate tolerance under which two points are treated as the same node.
pub const POINT_TOLERANCE: f64 = 1e-12;

/// Deduplicated multivariate quadrature grid. Weights may be negative.
///
/// Points are stored row-major in one flat buffer and kept in lexicographic
/// order, so two constructions from the same inputs are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGrid {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

pub(crate) type PointKey = Vec<i64>;

pub(crate) fn point_key(point: &[f64]) -> PointKey {
    point
        .iter()
        .map(|&x| (x / POINT_TOLERANCE).round() as i64)
        .collect()
}

impl WeightedGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Builds a grid from raw entries, merging coincident points.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, f64)>,
    {
        let mut builder = GridBuilder::new(dim);
        for (p, w) in entries {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            builder.add(&p, w);
        }
        Ok(builder.build())
    }

    /// `sum_i w_i f(x_i)`, evaluating `f` once per point.
    pub fn apply<F>(&self, mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut acc: Option<Vec<f64>> = None;
        for (p, w) in self.iter() {
            let value = f(p);
            if value.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalEvaluation { point: p.to_vec() });
            }
            match acc.as_mut() {
                None => acc = Some(value.iter().map(|v| w * v).collect()),
                Some(a) => {
                    if a.len() != value.len() {
                        return Err(Error::DimensionMismatch {
                            expected: a.len(),
                            found: value.len(),
                        });
                    }
                    for (ai, vi) in a.iter_mut().zip(&value) {
                        *ai += w * vi;
                    }
                }
            }
        }
        acc.ok_or_else(|| Error::InvalidArgument("cannot integrate over an empty grid".into()))
    }

    /// Writes the `x1,...,xn,weight` CSV dump.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        header.push("weight".into());
        out.write_record(&header)?;
        for (p, w) in self.iter() {
            let row: Vec<String> = p
                .iter()
                .chain(std::iter::once(&w))
                .map(|v| format!("{v:e}"))
                .collect();
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(reader);
        let headers = input.headers()?.clone();
        if headers.len() < 2 || &headers[headers.len() - 1] != "weight" {
            return Err(Error::InvalidArgument(
                "grid CSV must have columns x1..xn,weight".into(),
            ));
        }
        let dim = headers.len() - 1;
        let mut entries = Vec::new();
        for record in input.records() {
            let record = record?;
            let values: Vec<f64> = record
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidArgument(format!("bad grid value {s:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if values.len() != dim + 1 {
                return Err(Error::DimensionMismatch {
                    expected: dim + 1,
                    found: values.len(),
                });
            }
            entries.push((values[..dim].to_vec(), values[dim]));
        }
        Self::from_entries(dim, entries)
    }
}

/// Accumulates signed point/weight contributions, merging coincident points.
#[derive(Debug, Clone)]
pub struct GridBuilder {
    dim: usize,
    slots: HashMap<PointKey, usize>,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl GridBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            slots: HashMap::new(),
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add(&mut self, point: &[f64], weight: f64) {
        debug_assert_eq!(point.len(), self.dim);
        let key = point_key(point);
        match self.slots.get(&key) {
            Some(&slot) => self.weights[slot] += weight,
            None => {
                self.slots.insert(key, self.weights.len());
                self.points.extend_from_slice(point);
                self.weights.push(weight);
            }
        }
    }

    pub fn add_grid(&mut self, grid: &WeightedGrid, scale: f64) {
        for (p, w) in grid.iter() {
            self.add(p, scale * w);
        }
    }

    pub fn build(self) -> WeightedGrid {
        let dim = self.dim;
        let mut order: Vec<usize> = (0..self.weights.len()).collect();
        let pts = &self.points;
        order.sort_by(|&a, &b| {
            let pa = &pts[a * dim..(a + 1) * dim];
            let pb = &pts[b * dim..(b + 1) * dim];
            pa.iter()
                .zip(pb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut points = Vec::with_capacity(self.points.len());
        let mut weights = Vec::with_capacity(self.weights.len());
        for i in order {
            points.extend_from_slice(&pts[i * dim..(i + 1) * dim]);
            weights.push(self.weights[i]);
        }
        WeightedGrid {
            dim,
            points,
            weights,
        }
    }
}
