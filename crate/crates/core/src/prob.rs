//! Finite probability primitives: distributions, joints, channels and the
//! information quantities built on them.
//!
//! Every quantity is in nats. The conventions `0 ln 0 = 0` and
//! `0 ln(0/0) = 0` apply throughout. Constructors reject inputs whose mass
//! does not sum to one within [`SUM_TOL`]; nothing is silently renormalized.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const SUM_TOL: f64 = 1e-12;

fn check_mass(weights: ArrayView1<'_, f64>, what: &str) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Validation(format!("{what} is empty")));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Validation(format!("{what}: entry {i} = {w} is not a non-negative finite mass")));
        }
    }
    let total: f64 = weights.sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::Validation(format!("{what}: mass sums to {total}, not 1")));
    }
    Ok(())
}

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    weights: Array1<f64>,
}

impl DiscreteDist {
    pub fn new(weights: impl Into<Array1<f64>>) -> Result<Self> {
        let weights = weights.into();
        check_mass(weights.view(), "distribution")?;
        Ok(Self { weights })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Validation("uniform distribution over zero symbols".into()));
        }
        Ok(Self { weights: Array1::from_elem(k, 1.0 / k as f64) })
    }

    pub(crate) fn from_unchecked(weights: Array1<f64>) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// A row-stochastic matrix: row `a` is a distribution over the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    rows: Array2<f64>,
}

impl ConditionalTable {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        if rows.ncols() == 0 || rows.nrows() == 0 {
            return Err(Error::Validation("conditional table has an empty axis".into()));
        }
        for (a, row) in rows.axis_iter(Axis(0)).enumerate() {
            check_mass(row, &format!("conditional row {a}"))?;
        }
        Ok(Self { rows })
    }

    pub(crate) fn from_unchecked(rows: Array2<f64>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> ArrayView2<'_, f64> {
        self.rows.view()
    }

    pub fn row(&self, a: usize) -> ArrayView1<'_, f64> {
        self.rows.row(a)
    }

    pub fn n_inputs(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.rows.ncols()
    }
}

/// A joint probability table `p(x, y)` with rows indexed by `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    table: Array2<f64>,
    x_labels: Vec<String>,
    y_labels: Vec<String>,
}

impl DiscreteJoint {
    /// Builds a joint with index labels `x0, x1, ...` and `y0, y1, ...`.
    pub fn new(table: Array2<f64>) -> Result<Self> {
        let x_labels = (0..table.nrows()).map(|i| format!("x{i}")).collect();
        let y_labels = (0..table.ncols()).map(|j| format!("y{j}")).collect();
        Self::with_labels(table, x_labels, y_labels)
    }

    pub fn with_labels(table: Array2<f64>, x_labels: Vec<String>, y_labels: Vec<String>) -> Result<Self> {
        if x_labels.len() != table.nrows() {
            return Err(Error::Dimension { context: "joint x labels", expected: table.nrows(), actual: x_labels.len() });
        }
        if y_labels.len() != table.ncols() {
            return Err(Error::Dimension { context: "joint y labels", expected: table.ncols(), actual: y_labels.len() });
        }
        let flat = table.iter().copied().collect::<Array1<f64>>();
        check_mass(flat.view(), "joint table")?;
        Ok(Self { table, x_labels, y_labels })
    }

    /// The product joint `p(x) p(y)`.
    pub fn product(px: &DiscreteDist, py: &DiscreteDist) -> Result<Self> {
        let table = Array2::from_shape_fn((px.len(), py.len()), |(i, j)| px.weights[i] * py.weights[j]);
        Self::new(table)
    }

    /// The joint induced by an input law and a channel: `p(a) c(b|a)`.
    pub fn from_channel(px: &DiscreteDist, channel: &ConditionalTable) -> Result<Self> {
        if px.len() != channel.n_inputs() {
            return Err(Error::Dimension { context: "channel input alphabet", expected: px.len(), actual: channel.n_inputs() });
        }
        let table = &channel.rows * &px.weights.view().insert_axis(Axis(1));
        Self::new(table)
    }

    pub fn table(&self) -> ArrayView2<'_, f64> {
        self.table.view()
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn x_card(&self) -> usize {
        self.table.nrows()
    }

    pub fn y_card(&self) -> usize {
        self.table.ncols()
    }

    pub fn x_marginal(&self) -> DiscreteDist {
        DiscreteDist::from_unchecked(self.table.sum_axis(Axis(1)))
    }

    pub fn y_marginal(&self) -> DiscreteDist {
        DiscreteDist::from_unchecked(self.table.sum_axis(Axis(0)))
    }

    /// `p(y|x)`; rows with zero `p(x)` are filled with the y-marginal.
    pub fn y_given_x(&self) -> ConditionalTable {
        let py = self.y_marginal();
        let mut rows = self.table.clone();
        for mut row in rows.axis_iter_mut(Axis(0)) {
            let mass: f64 = row.sum();
            if mass > 0.0 {
                row.mapv_inplace(|v| v / mass);
            } else {
                row.assign(&py.weights);
            }
        }
        ConditionalTable::from_unchecked(rows)
    }
}

/// `-sum p ln p` over a raw slice, with `0 ln 0 = 0`.
pub(crate) fn entropy_of(weights: ArrayView1<'_, f64>) -> f64 {
    let h: f64 = weights.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    h.max(0.0)
}

pub fn entropy(p: &DiscreteDist) -> f64 {
    entropy_of(p.weights())
}

/// `KL(p || q)`. Errors when `q` puts zero mass where `p` does not.
pub fn kl_divergence(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension { context: "kl_divergence support", expected: p.len(), actual: q.len() });
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.weights.iter().zip(q.weights.iter()).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::Domain(format!("p is not absolutely continuous w.r.t. q: p[{i}] = {pi} but q[{i}] = 0")));
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total.max(0.0))
}

pub fn mutual_information(j: &DiscreteJoint) -> f64 {
    let px = j.table.sum_axis(Axis(1));
    let py = j.table.sum_axis(Axis(0));
    let mut total = 0.0;
    for ((a, b), &pab) in j.table.indexed_iter() {
        if pab > 0.0 {
            total += pab * (pab / (px[a] * py[b])).ln();
        }
    }
    total.max(0.0)
}

/// `I(A;B)` for `A ~ px` sent through `channel`.
///
/// A channel whose rows are all identical makes the output independent of
/// the input, so the result is exactly zero in that case.
pub fn mi_from_channel(px: &DiscreteDist, channel: &ConditionalTable) -> Result<f64> {
    if px.len() != channel.n_inputs() {
        return Err(Error::Dimension { context: "mi_from_channel input alphabet", expected: px.len(), actual: channel.n_inputs() });
    }
    let first = channel.row(0);
    if channel.rows.axis_iter(Axis(0)).all(|row| row == first) {
        return Ok(0.0);
    }
    let out_marginal = px.weights.dot(&channel.rows);
    let mut total = 0.0;
    for (a, row) in channel.rows.axis_iter(Axis(0)).enumerate() {
        let pa = px.weights[a];
        if pa == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for (b, &c) in row.iter().enumerate() {
            if c > 0.0 {
                inner += c * (c / out_marginal[b]).ln();
            }
        }
        total += pa * inner;
    }
    Ok(total.max(0.0))
}
