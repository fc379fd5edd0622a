//! Source models: exact joints for the Blahut-Arimoto solver and samplers
//! for the neural estimator.

pub mod idx;

use ndarray::{Array1, Array2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{entropy_of, DiscreteJoint};
use crate::seed::{self, StreamRng};

pub use idx::load_mnist;

/// How a discrete `x` symbol is presented as a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum XEncoding {
    #[default]
    OneHot,
    Scalar,
    RawVector,
}

/// A batch of `n` x-samples with their conditional y-distributions.
#[derive(Debug, Clone)]
pub struct XBatch {
    /// `n x x_dim` feature matrix.
    pub features: Array2<f64>,
    /// `n x y_card` matrix; row `i` is `p(y | x_i)`.
    pub y_rows: Array2<f64>,
}

/// Sampling access to `P_X` and `P_{Y|X}`.
///
/// Implementations are immutable; all randomness flows through the caller's
/// stream so one source can be shared by concurrent trainings.
pub trait SampledSource: Sync {
    fn x_dim(&self) -> usize;

    fn y_card(&self) -> usize;

    /// Seed of the source's own stream (see [`SampledSource::stream`]).
    fn seed(&self) -> u64;

    /// Draws `n` i.i.d. x-samples and their conditional rows.
    fn draw(&self, n: usize, rng: &mut StreamRng) -> XBatch;

    /// True when every conditional row is one-hot.
    fn deterministic_labels(&self) -> bool {
        false
    }

    /// Entropy of the source's y-marginal, in nats.
    fn label_entropy(&self) -> f64;

    fn stream(&self) -> SourceStream<'_, Self>
    where
        Self: Sized,
    {
        SourceStream { source: self, rng: seed::stream(self.seed()) }
    }
}

/// A source paired with its own seeded stream.
pub struct SourceStream<'a, S> {
    source: &'a S,
    rng: StreamRng,
}

impl<S: SampledSource> SourceStream<'_, S> {
    pub fn next_batch(&mut self, n: usize) -> XBatch {
        self.source.draw(n, &mut self.rng)
    }
}

/// Draws `l` labels per row of `y_rows`.
pub fn sample_labels(y_rows: &Array2<f64>, l: usize, rng: &mut StreamRng) -> Vec<Vec<usize>> {
    y_rows
        .rows()
        .into_iter()
        .map(|row| {
            let dist = WeightedIndex::new(row.iter().copied()).expect("conditional rows are valid distributions");
            (0..l).map(|_| dist.sample(rng)).collect()
        })
        .collect()
}

/// The 9x2 toy joint `p(x_i, y_1) = i/90`, `p(x_i, y_2) = (10 - i)/90`.
pub fn toy_model() -> DiscreteJoint {
    let table = Array2::from_shape_fn((9, 2), |(i, j)| {
        let k = (i + 1) as f64;
        if j == 0 {
            k / 90.0
        } else {
            (10.0 - k) / 90.0
        }
    });
    let x_labels = (1..=9).map(|i| format!("x{i}")).collect();
    let y_labels = vec!["y1".to_string(), "y2".to_string()];
    DiscreteJoint::with_labels(table, x_labels, y_labels).expect("toy table is a valid joint")
}

/// A discrete joint exposed as a sampler over its rows.
#[derive(Debug, Clone)]
pub struct DiscreteSource {
    joint: DiscreteJoint,
    y_rows: Array2<f64>,
    x_weights: WeightedIndex<f64>,
    encoding: XEncoding,
    seed: u64,
}

impl DiscreteSource {
    pub fn new(joint: DiscreteJoint, encoding: XEncoding, seed: u64) -> Self {
        let y_rows = joint.y_given_x().rows().to_owned();
        let x_weights = WeightedIndex::new(joint.x_marginal().weights().iter().copied()).expect("joint x-marginal is a valid distribution");
        Self { joint, y_rows, x_weights, encoding, seed }
    }

    pub fn joint(&self) -> &DiscreteJoint {
        &self.joint
    }

    fn encode(&self, x: usize) -> Vec<f64> {
        match self.encoding {
            XEncoding::OneHot | XEncoding::RawVector => {
                let mut v = vec![0.0; self.joint.x_card()];
                v[x] = 1.0;
                v
            }
            XEncoding::Scalar => vec![x as f64],
        }
    }
}

impl SampledSource for DiscreteSource {
    fn x_dim(&self) -> usize {
        match self.encoding {
            XEncoding::Scalar => 1,
            _ => self.joint.x_card(),
        }
    }

    fn y_card(&self) -> usize {
        self.joint.y_card()
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn draw(&self, n: usize, rng: &mut StreamRng) -> XBatch {
        let mut features = Array2::zeros((n, self.x_dim()));
        let mut y_rows = Array2::zeros((n, self.y_card()));
        for i in 0..n {
            let x = self.x_weights.sample(rng);
            features.row_mut(i).assign(&Array1::from(self.encode(x)));
            y_rows.row_mut(i).assign(&self.y_rows.row(x));
        }
        XBatch { features, y_rows }
    }

    fn deterministic_labels(&self) -> bool {
        self.y_rows.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    fn label_entropy(&self) -> f64 {
        entropy_of(self.joint.y_marginal().weights())
    }
}

/// Truncation of the real line to `[-M, M]` split into `N` equal cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDiscretization {
    half_width: f64,
    count: usize,
    delta: f64,
    midpoints: Vec<f64>,
}

impl GaussianDiscretization {
    pub fn new(half_width: f64, count: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Validation(format!("truncation half-width must be positive, got {half_width}")));
        }
        if count < 2 {
            return Err(Error::Validation(format!("grid needs at least 2 cells, got {count}")));
        }
        let delta = 2.0 * half_width / count as f64;
        let midpoints = (1..=count).map(|j| -half_width + delta * (j as f64 - 0.5)).collect();
        Ok(Self { half_width, count, delta, midpoints })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    /// `p(y_j | x)` for `Y = x + N(0, 1)`: the Gaussian density at each
    /// midpoint times the cell width, renormalized over the grid.
    pub fn conditional_row(&self, x: f64) -> Array1<f64> {
        // the density constant and delta cancel under renormalization, so
        // work with log-kernels to survive |x| far outside the grid
        let logs: Vec<f64> = self.midpoints.iter().map(|&y| -0.5 * (y - x) * (y - x)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut row: Array1<f64> = logs.iter().map(|&v| (v - top).exp()).collect();
        let total = row.sum();
        row.mapv_inplace(|v| v / total);
        row
    }
}

/// `Y = X + E` with `X, E ~ N(0, 1)`, discretized on a shared grid.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    grid: GaussianDiscretization,
    joint: DiscreteJoint,
}

/// Builds the discretized Gaussian model. The joint puts `X` on the same
/// grid as `Y` with Gaussian weights.
pub fn gaussian_model(half_width: f64, count: usize) -> Result<GaussianModel> {
    let grid = GaussianDiscretization::new(half_width, count)?;
    let logs: Vec<f64> = grid.midpoints.iter().map(|&x| -0.5 * x * x).collect();
    let mut px: Array1<f64> = logs.iter().map(|v| v.exp()).collect();
    let total = px.sum();
    px.mapv_inplace(|v| v / total);
    let mut table = Array2::zeros((count, count));
    for (i, &x) in grid.midpoints.iter().enumerate() {
        let row = grid.conditional_row(x);
        table.row_mut(i).assign(&(row * px[i]));
    }
    let labels: Vec<String> = grid.midpoints.iter().map(|v| format!("{v:.6}")).collect();
    let joint = DiscreteJoint::with_labels(table, labels.clone(), labels)?;
    Ok(GaussianModel { grid, joint })
}

impl GaussianModel {
    pub fn grid(&self) -> &GaussianDiscretization {
        &self.grid
    }

    pub fn joint(&self) -> &DiscreteJoint {
        &self.joint
    }

    /// Continuous-X sampler: `x ~ N(0, 1)` with the discretized conditional.
    pub fn sampled(&self, seed: u64) -> GaussianSource {
        GaussianSource { grid: self.grid.clone(), label_entropy: entropy_of(self.joint.y_marginal().weights()), seed }
    }
}

#[derive(Debug, Clone)]
pub struct GaussianSource {
    grid: GaussianDiscretization,
    label_entropy: f64,
    seed: u64,
}

impl GaussianSource {
    pub fn grid(&self) -> &GaussianDiscretization {
        &self.grid
    }
}

impl SampledSource for GaussianSource {
    fn x_dim(&self) -> usize {
        1
    }

    fn y_card(&self) -> usize {
        self.grid.count
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn draw(&self, n: usize, rng: &mut StreamRng) -> XBatch {
        let mut features = Array2::zeros((n, 1));
        let mut y_rows = Array2::zeros((n, self.grid.count));
        for i in 0..n {
            let x: f64 = rng.sample(StandardNormal);
            features[[i, 0]] = x;
            y_rows.row_mut(i).assign(&self.grid.conditional_row(x));
        }
        XBatch { features, y_rows }
    }

    /// Entropy of the grid joint's y-marginal.
    fn label_entropy(&self) -> f64 {
        self.label_entropy
    }
}

/// Labelled feature vectors; `p(y | x_i)` is the point mass at the label.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationDataset {
    items: Vec<(Vec<f64>, usize)>,
    y_card: usize,
    x_dim: usize,
}

impl ClassificationDataset {
    pub fn new(items: Vec<(Vec<f64>, usize)>, y_card: usize) -> Result<Self> {
        let Some(first) = items.first() else {
            return Err(Error::Validation("classification dataset is empty".into()));
        };
        let x_dim = first.0.len();
        for (i, (features, label)) in items.iter().enumerate() {
            if *label >= y_card {
                return Err(Error::Validation(format!("item {i}: label {label} >= y_card {y_card}")));
            }
            if features.len() != x_dim {
                return Err(Error::Dimension { context: "dataset feature length", expected: x_dim, actual: features.len() });
            }
        }
        Ok(Self { items, y_card, x_dim })
    }

    pub(crate) fn from_parts(items: Vec<(Vec<f64>, usize)>, y_card: usize, x_dim: usize) -> Self {
        Self { items, y_card, x_dim }
    }

    pub fn items(&self) -> &[(Vec<f64>, usize)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn y_card(&self) -> usize {
        self.y_card
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    /// The first `count` items (all of them if `count` exceeds the size).
    pub fn head(&self, count: usize) -> Result<Self> {
        Self::new(self.items.iter().take(count).cloned().collect(), self.y_card)
    }

    pub fn label_distribution(&self) -> Array1<f64> {
        let mut counts = Array1::zeros(self.y_card);
        for (_, label) in &self.items {
            counts[*label] += 1.0;
        }
        counts / self.items.len() as f64
    }

    pub fn label_entropy(&self) -> f64 {
        entropy_of(self.label_distribution().view())
    }
}

/// `k` Gaussian clusters in `x_dim` dimensions, `per_class` points each.
pub fn synthetic_classification(k: usize, per_class: usize, x_dim: usize, seed: u64) -> Result<ClassificationDataset> {
    if k < 2 {
        return Err(Error::Validation(format!("need at least 2 classes, got {k}")));
    }
    if per_class == 0 || x_dim == 0 {
        return Err(Error::Validation("per_class and x_dim must be positive".into()));
    }
    let mut rng = seed::stream(seed);
    let centers: Vec<Vec<f64>> = (0..k).map(|_| (0..x_dim).map(|_| 8.0 * rng.sample::<f64, _>(StandardNormal)).collect()).collect();
    let mut items = Vec::with_capacity(k * per_class);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            let x = center.iter().map(|c| c + rng.sample::<f64, _>(StandardNormal)).collect();
            items.push((x, label));
        }
    }
    ClassificationDataset::new(items, k)
}

/// Uniform-with-replacement sampler over a dataset's items.
#[derive(Debug, Clone)]
pub struct DatasetSource {
    dataset: ClassificationDataset,
    seed: u64,
}

pub fn dataset_as_source(dataset: ClassificationDataset, seed: u64) -> Result<DatasetSource> {
    if dataset.is_empty() {
        return Err(Error::Validation("cannot sample from an empty dataset".into()));
    }
    Ok(DatasetSource { dataset, seed })
}

impl DatasetSource {
    pub fn dataset(&self) -> &ClassificationDataset {
        &self.dataset
    }
}

impl SampledSource for DatasetSource {
    fn x_dim(&self) -> usize {
        self.dataset.x_dim
    }

    fn y_card(&self) -> usize {
        self.dataset.y_card
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn draw(&self, n: usize, rng: &mut StreamRng) -> XBatch {
        let mut features = Array2::zeros((n, self.x_dim()));
        let mut y_rows = Array2::zeros((n, self.y_card()));
        for i in 0..n {
            let (x, label) = &self.dataset.items[rng.random_range(0..self.dataset.len())];
            features.row_mut(i).assign(&ndarray::ArrayView1::from(x.as_slice()));
            y_rows[[i, *label]] = 1.0;
        }
        XBatch { features, y_rows }
    }

    fn deterministic_labels(&self) -> bool {
        true
    }

    fn label_entropy(&self) -> f64 {
        self.dataset.label_entropy()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{entropy, mutual_information};

    #[test]
    fn toy_entries() {
        let j = toy_model();
        assert_eq!(j.table()[[0, 0]], 1.0 / 90.0);
        assert_eq!(j.table()[[8, 1]], 1.0 / 90.0);
        for &w in j.x_marginal().weights() {
            assert!((w - 1.0 / 9.0).abs() < 1e-15);
        }
        assert!(mutual_information(&j) > 0.0);
    }

    #[test]
    fn grid_constants() {
        let g = GaussianDiscretization::new(10.0, 100).unwrap();
        assert!((g.delta() - 0.2).abs() < 1e-15);
        assert!((g.midpoints()[0] + 9.9).abs() < 1e-12);
        assert!((g.delta() * g.count() as f64 - 20.0).abs() < 1e-12);
        let m = g.midpoints();
        assert_eq!(m.len(), 100);
        assert!(m.windows(2).all(|w| w[1] > w[0]));
        for j in 0..50 {
            assert!((m[j] + m[99 - j]).abs() < 1e-12);
        }
        // cells [mid - delta/2, mid + delta/2] tile [-M, M]
        assert!((m[0] - g.delta() / 2.0 + 10.0).abs() < 1e-12);
        assert!((m[99] + g.delta() / 2.0 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(GaussianDiscretization::new(0.0, 10).is_err());
        assert!(GaussianDiscretization::new(-1.0, 10).is_err());
        assert!(GaussianDiscretization::new(f64::NAN, 10).is_err());
        assert!(GaussianDiscretization::new(1.0, 1).is_err());
        assert!(gaussian_model(10.0, 0).is_err());
    }

    #[test]
    fn gaussian_rows_normalized_and_peaked() {
        let model = gaussian_model(10.0, 100).unwrap();
        let rows = model.joint().y_given_x();
        for r in rows.rows().rows() {
            assert!((r.sum() - 1.0).abs() < 1e-12);
        }
        let row = model.grid().conditional_row(0.0);
        assert!((row.sum() - 1.0).abs() < 1e-12);
        let argmax = row.iter().enumerate().fold(0, |b, (i, &v)| if v > row[b] { i } else { b });
        // midpoints -0.1 and 0.1 tie for nearest to 0
        assert!(argmax == 49 || argmax == 50);
        assert!((row[49] - row[50]).abs() < 1e-15);
        let far = model.grid().conditional_row(40.0);
        assert!((far.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_sampler_rows_valid() {
        let src = gaussian_model(10.0, 100).unwrap().sampled(3);
        let batch = src.stream().next_batch(64);
        for r in batch.y_rows.rows() {
            assert!((r.sum() - 1.0).abs() < 1e-9);
        }
        let again = src.stream().next_batch(64);
        assert_eq!(batch.features, again.features);
    }

    #[test]
    fn synthetic_classification_contract() {
        let d = synthetic_classification(4, 100, 5, 11).unwrap();
        assert!((d.label_entropy() - 4f64.ln()).abs() < 1e-15);
        let d2 = synthetic_classification(2, 3, 2, 1).unwrap();
        assert!(d2.items().iter().all(|(_, y)| *y < 2));
        assert_eq!(synthetic_classification(4, 100, 5, 11).unwrap(), d);
        assert!(synthetic_classification(1, 3, 2, 1).is_err());
    }

    #[test]
    fn dataset_source_contract() {
        let d = synthetic_classification(10, 50, 3, 2).unwrap();
        let src = dataset_as_source(d.clone(), 9).unwrap();
        assert!(src.deterministic_labels());
        let batch = src.stream().next_batch(20_000);
        let mut hist = Array1::<f64>::zeros(10);
        for r in batch.y_rows.rows() {
            assert_eq!(r.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(r.sum(), 1.0);
            hist += &r;
        }
        assert!((d.label_entropy() - 10f64.ln()).abs() < 1e-12);
        let freq = hist / 20_000.0;
        for f in freq.iter() {
            assert!((f - 0.1).abs() < 0.015, "{f}");
        }
        assert!(dataset_as_source(ClassificationDataset::from_parts(vec![], 2, 1), 0).is_err());
    }

    #[test]
    fn full_pass_x_marginal_is_uniform() {
        // one feature value per item, 20 items; 40k draws => ~2000 per item
        let items = (0..20).map(|i| (vec![i as f64], i % 2)).collect();
        let src = dataset_as_source(ClassificationDataset::new(items, 2).unwrap(), 5).unwrap();
        let batch = src.stream().next_batch(40_000);
        let mut counts = [0usize; 20];
        for x in batch.features.column(0) {
            counts[*x as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 - 2000.0).abs() < 250.0, "{c}");
        }
    }

    #[test]
    fn discrete_source_draws_rows_of_the_joint() {
        let src = DiscreteSource::new(toy_model(), XEncoding::OneHot, 1);
        assert_eq!(src.x_dim(), 9);
        let b = src.stream().next_batch(10);
        for i in 0..10 {
            let x = b.features.row(i).iter().position(|&v| v == 1.0).unwrap();
            assert!((b.y_rows[[i, 0]] - (x + 1) as f64 / 10.0).abs() < 1e-15);
        }
        assert!((src.label_entropy() - entropy(&toy_model().y_marginal())).abs() < 1e-15);
        let scalar = DiscreteSource::new(toy_model(), XEncoding::Scalar, 1);
        assert_eq!(scalar.x_dim(), 1);
        let sampled = sample_labels(&b.y_rows, 4, &mut seed::stream(0));
        assert!(sampled.iter().all(|ys| ys.len() == 4 && ys.iter().all(|&y| y < 2)));
    }
}
