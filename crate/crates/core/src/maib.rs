//! Neural estimation of the single-variable mapping-approach IB objective
//!
//! ```text
//! G(r) = -E_X log E_Z exp(beta E_{Y|X} log r(Y|Z))
//! ```
//!
//! with `Z` drawn from a fixed standard Gaussian and `r = r_theta` a softmax
//! classifier. On a batch of `n` x-samples and `m` z-samples the Monte-Carlo
//! loss is
//!
//! ```text
//! F(theta) = -(1/n) sum_i log( (1/m) sum_j exp(-beta kappa_ij) )
//! kappa_ij = -sum_y p(y|x_i) log r_theta(y|z_j)
//! ```
//!
//! where the inner expectation is either taken exactly from the source's
//! conditional rows or averaged over `l` sampled labels.
//!
//! A trained model is turned into a curve point by reading the row-softmin
//! weights `w_ij` as the posterior of "bottleneck symbol" `z_j` given `x_i`
//! under a uniform prior over the `m` z-samples.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ba::LOG_FLOOR;
use crate::error::{Error, Result};
use crate::nn::{Activation, ClassifierNet, GradientVector, Optimizer, OptimizerKind};
use crate::prob::entropy_of;
use crate::seed::{self, StreamRng};
use crate::sources::{sample_labels, SampledSource, XEncoding};

/// How the inner expectation over `Y | X = x_i` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum YMode {
    /// Use the conditional row `p(y | x_i)` directly.
    #[default]
    Exact,
    /// Average over `l` labels drawn from `p(y | x_i)`.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaibConfig {
    pub beta: f64,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub z_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub max_iter: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub x_encoding: XEncoding,
    pub y_mode: YMode,
    /// Evaluation batch sizes; `None` reuses `n` / `m`.
    pub eval_n: Option<usize>,
    pub eval_m: Option<usize>,
    /// Independent evaluation batches averaged into one curve point.
    pub eval_batches: usize,
    /// Number of trailing iterations averaged into the reported loss.
    pub smoothing: usize,
    /// Optional bound on every parameter after each update.
    pub clip: Option<f64>,
}

impl Default for MaibConfig {
    fn default() -> Self {
        Self {
            beta: 5.0,
            n: 128,
            m: 128,
            l: 1,
            z_dim: 8,
            hidden: vec![128, 128],
            activation: Activation::Tanh,
            learning_rate: 1e-3,
            max_iter: 3000,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            x_encoding: XEncoding::OneHot,
            y_mode: YMode::Exact,
            eval_n: None,
            eval_m: None,
            eval_batches: 1,
            smoothing: 50,
            clip: None,
        }
    }
}

impl MaibConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Validation(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if self.n == 0 || self.m == 0 || self.l == 0 || self.z_dim == 0 {
            return Err(Error::Validation("n, m, l and z_dim must all be >= 1".into()));
        }
        if self.eval_n == Some(0) || self.eval_m == Some(0) || self.eval_batches == 0 {
            return Err(Error::Validation("evaluation sizes must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Validation(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.max_iter == 0 {
            return Err(Error::Validation("max_iter must be >= 1".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Validation("hidden widths must be positive".into()));
        }
        Ok(())
    }

    pub fn layer_dims(&self, y_card: usize) -> Vec<usize> {
        let mut dims = vec![self.z_dim];
        dims.extend(&self.hidden);
        dims.push(y_card);
        dims
    }

    pub fn eval_sizes(&self) -> (usize, usize) {
        (self.eval_n.unwrap_or(self.n), self.eval_m.unwrap_or(self.m))
    }

    /// Deterministic-label sources always use exact rows.
    pub fn effective_mode(&self, source: &dyn SampledSource) -> YMode {
        if source.deterministic_labels() {
            YMode::Exact
        } else {
            self.y_mode
        }
    }
}

/// Per-`x` label information for one batch.
#[derive(Debug, Clone)]
pub enum YInfo {
    Exact(Array2<f64>),
    Sampled { labels: Vec<Vec<usize>>, y_card: usize },
}

impl YInfo {
    pub fn n(&self) -> usize {
        match self {
            YInfo::Exact(rows) => rows.nrows(),
            YInfo::Sampled { labels, .. } => labels.len(),
        }
    }

    pub fn y_card(&self) -> usize {
        match self {
            YInfo::Exact(rows) => rows.ncols(),
            YInfo::Sampled { y_card, .. } => *y_card,
        }
    }

    /// Row `i` is the distribution the inner expectation integrates against:
    /// `p(y|x_i)` or the empirical histogram of the `l` draws.
    pub fn weight_rows(&self) -> Array2<f64> {
        match self {
            YInfo::Exact(rows) => rows.clone(),
            YInfo::Sampled { labels, y_card } => {
                let mut rows = Array2::zeros((labels.len(), *y_card));
                for (i, ys) in labels.iter().enumerate() {
                    let w = 1.0 / ys.len() as f64;
                    for &y in ys {
                        rows[[i, y]] += w;
                    }
                }
                rows
            }
        }
    }

    /// Entropy of the batch's average y-distribution.
    pub fn label_entropy(&self) -> f64 {
        let mean = self.weight_rows().mean_axis(Axis(0)).expect("non-empty batch");
        entropy_of(mean.view())
    }
}

/// `n x m` matrix of cross-entropies `kappa_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaMatrix(Array2<f64>);

impl KappaMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("kappa matrix is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!("kappa entries must be finite and >= 0, found {v}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn m(&self) -> usize {
        self.0.ncols()
    }
}

fn floored_logprob(lp: &Array2<f64>) -> Array2<f64> {
    let floor = LOG_FLOOR.ln();
    lp.mapv(|v| v.max(floor))
}

/// `kappa` from log-probabilities `lp` (`m x y_card`).
pub fn kappa_from_logprob(lp: &Array2<f64>, y_info: &YInfo) -> Result<KappaMatrix> {
    if lp.ncols() != y_info.y_card() {
        return Err(Error::Dimension { context: "kappa label alphabet", expected: lp.ncols(), actual: y_info.y_card() });
    }
    let lp = floored_logprob(lp);
    if let Some(v) = lp.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("log-probability {v} in kappa")));
    }
    let kappa = match y_info {
        YInfo::Exact(rows) => {
            let mut k = rows.dot(&lp.t());
            k.mapv_inplace(|v| (-v).max(0.0));
            k
        }
        YInfo::Sampled { labels, .. } => {
            let mut k = Array2::zeros((labels.len(), lp.nrows()));
            for (i, ys) in labels.iter().enumerate() {
                let inv_l = 1.0 / ys.len() as f64;
                for j in 0..lp.nrows() {
                    let total: f64 = ys.iter().map(|&y| lp[[j, y]]).sum();
                    k[[i, j]] = (-total * inv_l).max(0.0);
                }
            }
            k
        }
    };
    Ok(KappaMatrix(kappa))
}

pub fn compute_kappa(net: &ClassifierNet, z_batch: ArrayView2<'_, f64>, y_info: &YInfo) -> Result<KappaMatrix> {
    kappa_from_logprob(&net.forward_logprob(z_batch)?, y_info)
}

/// Row-wise `log w_ij` with `w_ij = exp(-beta k_ij) / sum_j' exp(-beta k_ij')`,
/// and the row log-sum-exps.
fn softmin_rows(kappa: &KappaMatrix, beta: f64) -> (Array2<f64>, Array1<f64>) {
    let mut log_w = kappa.0.mapv(|k| -beta * k);
    let mut lse = Array1::zeros(kappa.n());
    for (mut row, s) in log_w.axis_iter_mut(Axis(0)).zip(lse.iter_mut()) {
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        *s = top + row.iter().map(|&v| (v - top).exp()).sum::<f64>().ln();
        let shift = *s;
        row.mapv_inplace(|v| v - shift);
    }
    (log_w, lse)
}

/// Monte-Carlo loss `F`.
pub fn loss(kappa: &KappaMatrix, beta: f64) -> f64 {
    let (_, lse) = softmin_rows(kappa, beta);
    let ln_m = (kappa.m() as f64).ln();
    let total: f64 = lse.iter().map(|s| s - ln_m).sum();
    -total / kappa.n() as f64 + 0.0
}

/// `dF / d kappa_ij = (beta / n) w_ij`.
pub fn loss_gradient_upstream(kappa: &KappaMatrix, beta: f64) -> Array2<f64> {
    let (log_w, _) = softmin_rows(kappa, beta);
    let scale = beta / kappa.n() as f64;
    log_w.mapv(|v| scale * v.exp())
}

/// Loss and parameter gradient for one fixed batch.
pub fn loss_and_gradient(net: &ClassifierNet, z_batch: ArrayView2<'_, f64>, y_info: &YInfo, beta: f64) -> Result<(f64, GradientVector)> {
    let pass = net.forward(z_batch)?;
    let kappa = kappa_from_logprob(pass.logprob(), y_info)?;
    let value = loss(&kappa, beta);
    let d_kappa = loss_gradient_upstream(&kappa, beta);
    // kappa_ij = -sum_y c_iy lp_jy  =>  dF/dlp_jy = -sum_i dF/dkappa_ij c_iy
    let mut upstream = d_kappa.t().dot(&y_info.weight_rows());
    upstream.mapv_inplace(|v| -v);
    let floor = LOG_FLOOR.ln();
    upstream.zip_mut_with(pass.logprob(), |u, &lp| {
        if lp < floor {
            *u = 0.0;
        }
    });
    Ok((value, net.backward_from(&pass, upstream.view())?))
}

fn gaussian_batch(m: usize, dim: usize, rng: &mut StreamRng) -> Array2<f64> {
    Array2::from_shape_fn((m, dim), |_| rng.sample(StandardNormal))
}

fn draw_y_info(source: &dyn SampledSource, n: usize, l: usize, mode: YMode, rng: &mut StreamRng) -> YInfo {
    let batch = source.draw(n, rng);
    match mode {
        YMode::Exact => YInfo::Exact(batch.y_rows),
        YMode::Sampled => YInfo::Sampled { labels: sample_labels(&batch.y_rows, l, rng), y_card: source.y_card() },
    }
}

/// Loss per training iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    pub losses: Vec<f64>,
}

impl TrainingHistory {
    /// Mean of the last `window` losses.
    pub fn smoothed_loss(&self, window: usize) -> f64 {
        let tail = &self.losses[self.losses.len().saturating_sub(window.max(1))..];
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,loss\n");
        for (i, l) in self.losses.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, crate::curve::format_sig12(*l)));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub net: ClassifierNet,
    pub history: TrainingHistory,
}

/// Stochastic gradient training with fresh `x`, `z` and label draws at every
/// iteration.
pub fn train(source: &dyn SampledSource, cfg: &MaibConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    let mut net = ClassifierNet::new(cfg.layer_dims(source.y_card()), cfg.activation, seed::derive(cfg.seed, "init", 0))?;
    let mut rng = seed::stream(seed::derive(cfg.seed, "train", 0));
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate);
    let mode = cfg.effective_mode(source);
    let mut history = TrainingHistory { losses: Vec::with_capacity(cfg.max_iter) };
    for iteration in 1..=cfg.max_iter {
        let y_info = draw_y_info(source, cfg.n, cfg.l, mode, &mut rng);
        let z = gaussian_batch(cfg.m, cfg.z_dim, &mut rng);
        let diverged = |detail: String| Error::Diverged { iteration, learning_rate: cfg.learning_rate, detail };
        let (value, grad) = loss_and_gradient(&net, z.view(), &y_info, cfg.beta).map_err(|e| diverged(e.to_string()))?;
        if !value.is_finite() {
            return Err(diverged(format!("loss = {value}")));
        }
        if grad.0.iter().any(|g| !g.is_finite()) {
            return Err(diverged("non-finite gradient".into()));
        }
        optimizer.step(&mut net, &grad);
        if let Some(bound) = cfg.clip {
            net.clip(bound);
        }
        if net.params().iter().any(|p| !p.is_finite()) {
            return Err(diverged("non-finite parameters".into()));
        }
        history.losses.push(value);
    }
    Ok(TrainedModel { net, history })
}

/// Estimated `(I(X;T), I(Y;T))` for one trained network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaibPoint {
    pub beta: f64,
    pub i_xt_hat: f64,
    pub i_yt_hat: f64,
    /// `F(theta)` on the evaluation batch.
    pub loss: f64,
    pub h_y_hat: f64,
    pub seed: u64,
    pub eval_n: usize,
    pub eval_m: usize,
}

/// Batch-level estimates from a kappa matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchEstimate {
    pub i_xt: f64,
    pub i_yt: f64,
    pub h_y: f64,
    pub loss: f64,
}

/// `I(X;T) = (1/n) sum_ij w_ij ln(m w_ij)` and
/// `I(Y;T) = -(1/n) sum_ij w_ij kappa_ij + H(Y)`.
pub fn estimate_from_kappa(kappa: &KappaMatrix, h_y: f64, beta: f64) -> BatchEstimate {
    let (log_w, _) = softmin_rows(kappa, beta);
    let ln_m = (kappa.m() as f64).ln();
    let n = kappa.n() as f64;
    let mut compression = 0.0;
    let mut cross = 0.0;
    for (lw_row, k_row) in log_w.axis_iter(Axis(0)).zip(kappa.0.axis_iter(Axis(0))) {
        for (&lw, &k) in lw_row.iter().zip(k_row.iter()) {
            let w = lw.exp();
            if w > 0.0 {
                compression += w * (ln_m + lw);
            }
            cross += w * k;
        }
    }
    BatchEstimate { i_xt: compression / n, i_yt: -cross / n + h_y, h_y, loss: loss(kappa, beta) }
}

/// Averages the batch estimates over `batches` fresh evaluation draws.
pub fn estimate_point(
    net: &ClassifierNet,
    source: &dyn SampledSource,
    beta: f64,
    eval_n: usize,
    eval_m: usize,
    batches: usize,
    seed: u64,
) -> Result<MaibPoint> {
    if eval_n == 0 || eval_m == 0 || batches == 0 {
        return Err(Error::Validation("evaluation sizes and batch count must be >= 1".into()));
    }
    let mut rng = seed::stream(seed);
    let mut sum = [0.0; 4];
    for _ in 0..batches {
        let batch = source.draw(eval_n, &mut rng);
        let y_info = YInfo::Exact(batch.y_rows);
        let z = gaussian_batch(eval_m, net.input_dim(), &mut rng);
        let kappa = compute_kappa(net, z.view(), &y_info)?;
        let est = estimate_from_kappa(&kappa, y_info.label_entropy(), beta);
        for (acc, v) in sum.iter_mut().zip([est.i_xt, est.i_yt, est.loss, est.h_y]) {
            *acc += v;
        }
    }
    let [i_xt, i_yt, loss, h_y] = sum.map(|v| v / batches as f64);
    Ok(MaibPoint { beta, i_xt_hat: i_xt, i_yt_hat: i_yt, loss, h_y_hat: h_y, seed, eval_n, eval_m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_difference, max_relative_error};
    use crate::sources::{toy_model, DiscreteSource};
    use ndarray::array;

    fn kappa(values: Array2<f64>) -> KappaMatrix {
        KappaMatrix::new(values).unwrap()
    }

    #[test]
    fn uniform_network_kappa() {
        let net = ClassifierNet::zeros(vec![3, 4, 2], Activation::Tanh).unwrap();
        let rows = YInfo::Exact(array![[0.3, 0.7], [1.0, 0.0]]);
        let k = compute_kappa(&net, Array2::zeros((5, 3)).view(), &rows).unwrap();
        for v in k.values() {
            assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn one_hot_kappa_examples() {
        let lp = array![[0.9f64.ln(), 0.1f64.ln()], [0.0, f64::NEG_INFINITY]];
        let info = YInfo::Exact(array![[1.0, 0.0]]);
        let k = kappa_from_logprob(&lp, &info).unwrap();
        assert!((k.values()[[0, 0]] - 0.105360515657826).abs() < 1e-15);
        assert_eq!(k.values()[[0, 1]], 0.0);
        let sampled = YInfo::Sampled { labels: vec![vec![0, 1]], y_card: 2 };
        let k = kappa_from_logprob(&lp, &sampled).unwrap();
        assert!((k.values()[[0, 0]] - 0.5 * (-(0.9f64.ln()) - 0.1f64.ln())).abs() < 1e-15);
        // floored at ln(1e-300)
        assert!((k.values()[[0, 1]] - 0.5 * 300.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn loss_examples() {
        let any = kappa(array![[0.3, 1.2, 4.0], [0.0, 2.0, 0.5]]);
        assert_eq!(loss(&any, 0.0), 0.0);
        let c = kappa(Array2::from_elem((4, 3), std::f64::consts::LN_2));
        assert!((loss(&c, 3.0) - 2.0794415416798357).abs() < 1e-14);
        // -ln((1 + 1/4) / 2)
        let k = kappa(array![[0.0, 4f64.ln()]]);
        assert!((loss(&k, 1.0) - 0.470003629245736).abs() < 1e-14);
        assert!(loss(&any, 2.5) >= 0.0);
    }

    #[test]
    fn upstream_examples() {
        let any = kappa(array![[0.3, 1.2], [0.0, 2.0]]);
        assert!(loss_gradient_upstream(&any, 0.0).iter().all(|&v| v == 0.0));
        let flat = kappa(Array2::from_elem((2, 4), 0.7));
        for &v in loss_gradient_upstream(&flat, 3.0).iter() {
            assert!((v - 3.0 / 8.0).abs() < 1e-15);
        }
        let g = loss_gradient_upstream(&any, 1.7);
        for row in g.rows() {
            assert!((row.sum() - 1.7 / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn upstream_matches_finite_differences() {
        let mut rng = seed::stream(4);
        let base = Array2::from_shape_fn((3, 5), |_| rng.random::<f64>() * 2.0);
        let analytic = loss_gradient_upstream(&kappa(base.clone()), 2.0);
        let numeric = central_difference(base.as_slice().unwrap(), 1e-5, |p| loss(&kappa(Array2::from_shape_vec((3, 5), p.to_vec()).unwrap()), 2.0));
        let err = max_relative_error(analytic.as_slice().unwrap(), &numeric, 1e-10);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn end_to_end_gradient_tiny() {
        let net = ClassifierNet::new(vec![2, 4, 2], Activation::Tanh, 21).unwrap();
        let mut rng = seed::stream(22);
        let z = gaussian_batch(3, 2, &mut rng);
        let info = YInfo::Exact(array![[0.2, 0.8], [0.9, 0.1], [0.5, 0.5]]);
        let (_, analytic) = loss_and_gradient(&net, z.view(), &info, 3.0).unwrap();
        let numeric = central_difference(net.params(), 1e-5, |p| {
            let probe = ClassifierNet::from_params(vec![2, 4, 2], Activation::Tanh, p.to_vec()).unwrap();
            loss(&compute_kappa(&probe, z.view(), &info).unwrap(), 3.0)
        });
        let err = max_relative_error(analytic.as_slice(), &numeric, 1e-10);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn zero_beta_estimate_is_exact() {
        let net = ClassifierNet::new(vec![8, 16, 2], Activation::Tanh, 1).unwrap();
        let src = DiscreteSource::new(toy_model(), XEncoding::OneHot, 0);
        let p = estimate_point(&net, &src, 0.0, 49, 49, 1, 3).unwrap();
        assert_eq!(p.i_xt_hat, 0.0);
        assert_eq!(p.loss, 0.0);
        assert!(p.i_yt_hat <= 0.0);
    }

    #[test]
    fn lagrangian_identity_on_random_batch() {
        let net = ClassifierNet::new(vec![8, 16, 2], Activation::Tanh, 5).unwrap();
        let src = DiscreteSource::new(toy_model(), XEncoding::OneHot, 0);
        for (beta, s) in [(0.5, 1), (5.0, 2), (40.0, 3)] {
            let p = estimate_point(&net, &src, beta, 40, 30, 1 + (s as usize % 3), s).unwrap();
            let rhs = p.i_xt_hat - beta * (p.i_yt_hat - p.h_y_hat);
            assert!((p.loss - rhs).abs() <= 1e-9 * p.loss.abs().max(1e-300), "{} vs {}", p.loss, rhs);
            assert!(p.i_yt_hat <= p.h_y_hat + 1e-9);
            assert!(p.i_xt_hat >= 0.0 && p.i_xt_hat <= 30f64.ln() + 1e-12);
        }
    }

    #[test]
    fn zero_beta_training_never_moves() {
        let src = DiscreteSource::new(toy_model(), XEncoding::OneHot, 0);
        let cfg = MaibConfig { beta: 0.0, n: 8, m: 8, hidden: vec![6], max_iter: 20, ..Default::default() };
        let trained = train(&src, &cfg).unwrap();
        let fresh = ClassifierNet::new(cfg.layer_dims(2), cfg.activation, seed::derive(cfg.seed, "init", 0)).unwrap();
        assert_eq!(trained.net, fresh);
        assert!(trained.history.losses.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn training_is_deterministic() {
        let src = DiscreteSource::new(toy_model(), XEncoding::OneHot, 0);
        let cfg = MaibConfig { n: 16, m: 16, hidden: vec![8], max_iter: 30, seed: 42, ..Default::default() };
        let a = train(&src, &cfg).unwrap();
        let b = train(&src, &cfg).unwrap();
        let bits = |h: &TrainingHistory| h.losses.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.history), bits(&b.history));
        let sampled = MaibConfig { y_mode: YMode::Sampled, l: 3, ..cfg };
        assert!(train(&src, &sampled).unwrap().history.losses.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn rejects_invalid_config() {
        let src = DiscreteSource::new(toy_model(), XEncoding::OneHot, 0);
        for bad in [
            MaibConfig { n: 0, ..Default::default() },
            MaibConfig { beta: -1.0, ..Default::default() },
            MaibConfig { learning_rate: 0.0, ..Default::default() },
            MaibConfig { eval_m: Some(0), ..Default::default() },
        ] {
            assert!(matches!(train(&src, &bad), Err(Error::Validation(_))));
        }
    }

    #[test]
    fn divergence_reports_iteration() {
        let src = DiscreteSource::new(toy_model(), XEncoding::OneHot, 0);
        let cfg = MaibConfig {
            n: 4,
            m: 4,
            hidden: vec![4],
            max_iter: 50,
            learning_rate: 1e300,
            optimizer: OptimizerKind::Sgd,
            activation: Activation::Relu,
            beta: 50.0,
            ..Default::default()
        };
        match train(&src, &cfg) {
            Err(Error::Diverged { iteration, .. }) => assert!(iteration >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
