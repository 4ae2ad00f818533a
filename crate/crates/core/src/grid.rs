//! Piecewise-constant functions on uniform partitions of `[0,1]`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{GraphonError, Result};
use crate::kernels::uniform_cell;

/// Step function `f(x) = values[i]` for `x` in the `i`-th of `values.len()`
/// uniform cells. Serializes as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(GraphonError::Domain("grid function needs at least one cell".into()));
        }
        Ok(GridFunction { values })
    }

    pub fn constant(value: f64, resolution: usize) -> Self {
        assert!(resolution > 0, "resolution must be positive");
        GridFunction {
            values: vec![value; resolution],
        }
    }

    /// Samples `f` at the cell midpoints.
    pub fn from_midpoints(resolution: usize, f: impl Fn(f64) -> f64) -> Self {
        assert!(resolution > 0, "resolution must be positive");
        GridFunction {
            values: midpoints(resolution).map(f).collect(),
        }
    }

    pub fn resolution(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value of the cell containing `x` (clamped into `[0,1]`).
    pub fn eval(&self, x: f64) -> f64 {
        self.values[uniform_cell(x.clamp(0.0, 1.0), self.values.len())]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Largest jump between neighbouring cells.
    pub fn max_adjacent_jump(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `midpoint,value` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["midpoint", "value"])?;
        for (x, v) in midpoints(self.values.len()).zip(&self.values) {
            writer.serialize((x, v))?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Midpoints `(i + 1/2)/m` of the uniform `m`-partition.
pub fn midpoints(m: usize) -> impl Iterator<Item = f64> + Clone {
    (0..m).map(move |i| (i as f64 + 0.5) / m as f64)
}

/// Pairs agent `i` of a strategy vector with cell `U_i` of the uniform
/// partition at resolution `s.len()`.
pub fn step_function_embed(s: &[f64]) -> Result<GridFunction> {
    GridFunction::new(s.to_vec())
}

/// Exact `L^2([0,1])` distance between two step functions, computed on the
/// common refinement of their partitions.
pub fn l2_distance(f: &GridFunction, g: &GridFunction) -> f64 {
    let (mf, mg) = (f.resolution(), g.resolution());
    if mf == mg {
        let sum: f64 = f
            .values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        return (sum / mf as f64).sqrt();
    }
    let (mut i, mut j) = (0usize, 0usize);
    let mut left = 0.0;
    let mut sum = 0.0;
    while i < mf && j < mg {
        // Compare (i+1)/mf with (j+1)/mg exactly in integers.
        let lhs = (i as u128 + 1) * mg as u128;
        let rhs = (j as u128 + 1) * mf as u128;
        let right = if lhs <= rhs {
            (i + 1) as f64 / mf as f64
        } else {
            (j + 1) as f64 / mg as f64
        };
        let d = f.values[i] - g.values[j];
        sum += d * d * (right - left);
        left = right;
        if lhs <= rhs {
            i += 1;
        }
        if rhs <= lhs {
            j += 1;
        }
    }
    sum.max(0.0).sqrt()
}
