//! Graphon models.
//!
//! A [`GraphonSpec`] is a symmetric kernel `W: [0,1]^2 -> [0,1]` drawn from a
//! small closed family: constant (Erdos-Renyi), stochastic block model, the
//! minmax location kernel `min(x,y)(1 - max(x,y))`, and step functions on a
//! uniform grid. Step kernels are how finite matrices enter the continuum
//! picture: a matrix `P` becomes the graphon equal to `P_ij` on
//! `U_i x U_j`.
//!
//! Partition cells are right-open, except the last which is closed at 1.
//! SBM communities are laid out left to right in the order their masses are
//! given.

use serde::{Deserialize, Serialize};

use crate::error::{GraphonError, Result};

/// Tolerance on `sum(w) = 1` and on matrix symmetry.
const STRUCTURE_TOL: f64 = 1e-9;

/// Serialized form of a graphon, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GraphonKind {
    #[serde(rename = "er")]
    ErdosRenyi { p: f64 },
    #[serde(rename = "sbm")]
    Sbm {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        w: Vec<f64>,
    },
    #[serde(rename = "minmax")]
    MinMax,
    #[serde(rename = "grid")]
    Grid { values: Vec<Vec<f64>> },
}

/// A validated graphon model. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphonKind", into = "GraphonKind")]
pub struct GraphonSpec {
    kind: GraphonKind,
    /// Right endpoints of the SBM communities; empty for other kinds.
    boundaries: Vec<f64>,
}

impl From<GraphonSpec> for GraphonKind {
    fn from(spec: GraphonSpec) -> Self {
        spec.kind
    }
}

impl TryFrom<GraphonKind> for GraphonSpec {
    type Error = GraphonError;

    fn try_from(kind: GraphonKind) -> Result<Self> {
        match kind {
            GraphonKind::ErdosRenyi { p } => GraphonSpec::erdos_renyi(p),
            GraphonKind::Sbm { q, w } => GraphonSpec::sbm(q, w),
            GraphonKind::MinMax => Ok(GraphonSpec::minmax()),
            GraphonKind::Grid { values } => GraphonSpec::grid(values),
        }
    }
}

fn check_probability(v: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(GraphonError::Validation(format!(
            "{what} = {v} is not a probability"
        )));
    }
    Ok(())
}

fn check_symmetric_probabilities(m: &[Vec<f64>], what: &str) -> Result<()> {
    let n = m.len();
    if n == 0 {
        return Err(GraphonError::Validation(format!("{what} is empty")));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(GraphonError::Validation(format!(
                "{what} row {i} has length {}, expected {n}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            check_probability(v, &format!("{what}[{i}][{j}]"))?;
            if (v - m[j][i]).abs() > STRUCTURE_TOL {
                return Err(GraphonError::Validation(format!(
                    "{what} is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

fn check_unit(x: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(GraphonError::Domain(format!("{name} = {x} outside [0,1]")));
    }
    Ok(())
}

/// Index of the uniform `m`-cell containing `x`; cells are right-open and the
/// last one is closed at 1.
pub fn uniform_cell(x: f64, m: usize) -> usize {
    ((x * m as f64).floor() as usize).min(m - 1)
}

impl GraphonSpec {
    pub fn erdos_renyi(p: f64) -> Result<Self> {
        check_probability(p, "p")?;
        Ok(GraphonSpec {
            kind: GraphonKind::ErdosRenyi { p },
            boundaries: Vec::new(),
        })
    }

    /// Stochastic block model with block matrix `q` and community masses `w`.
    pub fn sbm(q: Vec<Vec<f64>>, w: Vec<f64>) -> Result<Self> {
        check_symmetric_probabilities(&q, "Q")?;
        if w.len() != q.len() {
            return Err(GraphonError::Validation(format!(
                "Q is {k}x{k} but w has {} entries",
                w.len(),
                k = q.len()
            )));
        }
        if let Some(bad) = w.iter().find(|&&wk| !(wk > 0.0)) {
            return Err(GraphonError::Validation(format!(
                "community mass {bad} is not positive"
            )));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > STRUCTURE_TOL {
            return Err(GraphonError::Validation(format!(
                "community masses sum to {total}, expected 1"
            )));
        }
        let mut boundaries: Vec<f64> = w
            .iter()
            .scan(0.0, |acc, &wk| {
                *acc += wk;
                Some(*acc)
            })
            .collect();
        *boundaries.last_mut().unwrap() = 1.0;
        Ok(GraphonSpec {
            kind: GraphonKind::Sbm { q, w },
            boundaries,
        })
    }

    /// SBM with `g_in` on the diagonal blocks and `g_out` elsewhere.
    pub fn planted_partition(g_in: f64, g_out: f64, w: Vec<f64>) -> Result<Self> {
        let k = w.len();
        let q = (0..k)
            .map(|a| (0..k).map(|b| if a == b { g_in } else { g_out }).collect())
            .collect();
        Self::sbm(q, w)
    }

    pub fn minmax() -> Self {
        GraphonSpec {
            kind: GraphonKind::MinMax,
            boundaries: Vec::new(),
        }
    }

    /// Step kernel equal to `values[i][j]` on `U_i x U_j` of the uniform
    /// partition with `values.len()` cells.
    pub fn grid(values: Vec<Vec<f64>>) -> Result<Self> {
        check_symmetric_probabilities(&values, "grid values")?;
        Ok(GraphonSpec {
            kind: GraphonKind::Grid { values },
            boundaries: Vec::new(),
        })
    }

    pub fn kind(&self) -> &GraphonKind {
        &self.kind
    }

    /// Number of SBM communities, if this is an SBM.
    pub fn sbm_blocks(&self) -> Option<(&[Vec<f64>], &[f64])> {
        match &self.kind {
            GraphonKind::Sbm { q, w } => Some((q, w)),
            _ => None,
        }
    }

    /// Community containing `x` for an SBM.
    pub fn community_of(&self, x: f64) -> Option<usize> {
        if self.boundaries.is_empty() {
            return None;
        }
        let k = self
            .boundaries
            .iter()
            .position(|&b| x < b)
            .unwrap_or(self.boundaries.len() - 1);
        Some(k)
    }

    /// `W(x, y)`. Errors if either coordinate lies outside `[0,1]`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        check_unit(x, "x")?;
        check_unit(y, "y")?;
        Ok(self.eval_unchecked(x, y))
    }

    /// `W(x, y)` without range checks; callers guarantee `x, y` in `[0,1]`.
    pub(crate) fn eval_unchecked(&self, x: f64, y: f64) -> f64 {
        match &self.kind {
            GraphonKind::ErdosRenyi { p } => *p,
            GraphonKind::Sbm { q, .. } => {
                let a = self.community_of(x).unwrap();
                let b = self.community_of(y).unwrap();
                q[a][b]
            }
            GraphonKind::MinMax => x.min(y) * (1.0 - x.max(y)),
            GraphonKind::Grid { values } => {
                let m = values.len();
                values[uniform_cell(x, m)][uniform_cell(y, m)]
            }
        }
    }

    /// `(L, Omega)`: the kernel is `L`-Lipschitz on each rectangle of a
    /// partition of `[0,1]` into `Omega + 1` intervals.
    pub fn lipschitz_metadata(&self) -> (f64, usize) {
        match &self.kind {
            GraphonKind::ErdosRenyi { .. } => (0.0, 0),
            GraphonKind::Sbm { w, .. } => (0.0, w.len() - 1),
            GraphonKind::MinMax => (2.0, 0),
            GraphonKind::Grid { values } => (0.0, values.len() - 1),
        }
    }

    /// Short label used in file names and manifests.
    pub fn label(&self) -> &'static str {
        match &self.kind {
            GraphonKind::ErdosRenyi { .. } => "er",
            GraphonKind::Sbm { .. } => "sbm",
            GraphonKind::MinMax => "minmax",
            GraphonKind::Grid { .. } => "grid",
        }
    }
}

/// The step graphon of a symmetric matrix with entries in `[0,1]`.
pub fn step_graphon_from_matrix(p: &nalgebra::DMatrix<f64>) -> Result<GraphonSpec> {
    if p.nrows() != p.ncols() {
        return Err(GraphonError::Validation(format!(
            "matrix is {}x{}, expected square",
            p.nrows(),
            p.ncols()
        )));
    }
    let values = (0..p.nrows())
        .map(|i| (0..p.ncols()).map(|j| p[(i, j)]).collect())
        .collect();
    GraphonSpec::grid(values)
}
