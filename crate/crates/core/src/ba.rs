//! Blahut-Arimoto alternating minimization for the discrete IB Lagrangian
//!
//! ```text
//! L(p, q, r) = sum_x p(x) sum_t p(t|x) ln[p(t|x) / q(t)]
//!            - beta sum_{x,t,y} p(x) p(t|x) p(y|x) ln r(y|t)
//! ```
//!
//! One cycle minimizes `L` exactly in each argument in turn: the encoder
//! `p(t|x) = q(t) exp(beta sum_y p(y|x) ln r(y|t)) / A(x)`, then the marginal
//! `q(t)`, then the decoder `r(y|t) = p(y|t)`. `L` therefore never increases.
//! After any cycle `q` and `r` are the marginal and decoder induced by the
//! encoder, so `L = I(X;T) - beta I(Y;T) + beta H(Y)`.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{entropy_of, mi_from_channel, mutual_information, ConditionalTable, DiscreteDist, DiscreteJoint};
use crate::seed;

/// Floor applied to probabilities before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-300;

#[inline]
pub(crate) fn floored_ln(p: f64) -> f64 {
    p.max(LOG_FLOOR).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaConfig {
    /// Bottleneck alphabet size; `None` uses `|X|`.
    pub t_card: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BaConfig {
    fn default() -> Self {
        Self { t_card: None, tol: 1e-9, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct BaState {
    pub ptx: ConditionalTable,
    pub qt: DiscreteDist,
    pub ryt: ConditionalTable,
    pub beta: f64,
    pub objective: f64,
}

/// Per-joint quantities reused by every cycle.
struct JointView {
    px: Array1<f64>,
    py: Array1<f64>,
    y_given_x: Array2<f64>,
    table: Array2<f64>,
}

impl JointView {
    fn new(j: &DiscreteJoint) -> Self {
        Self {
            px: j.x_marginal().weights().to_owned(),
            py: j.y_marginal().weights().to_owned(),
            y_given_x: j.y_given_x().rows().to_owned(),
            table: j.table().to_owned(),
        }
    }

    /// `s(x, t) = sum_y p(y|x) ln r(y|t)`.
    fn expected_log_decoder(&self, ryt: &Array2<f64>) -> Array2<f64> {
        self.y_given_x.dot(&ryt.mapv(floored_ln).t())
    }

    fn marginal(&self, ptx: &Array2<f64>) -> Array1<f64> {
        self.px.dot(ptx)
    }

    /// `r(y|t)` from `p(t,y)`; unused symbols get `p(y)`.
    fn normalize_rows(&self, ty: &Array2<f64>) -> Array2<f64> {
        let mut r = ty.clone();
        for mut row in r.axis_iter_mut(Axis(0)) {
            let mass: f64 = row.sum();
            if mass > 0.0 {
                row.mapv_inplace(|v| v / mass);
            } else {
                row.assign(&self.py);
            }
        }
        r
    }

    /// `sum_x p(x) sum_t p(t|x) ln(p(t|x) / q(t))`; exactly 0 when every
    /// encoder row is the same.
    fn compression(&self, ptx: &Array2<f64>, qt: &Array1<f64>) -> f64 {
        let first = ptx.row(0);
        if ptx.rows().into_iter().all(|r| r == first) {
            return 0.0;
        }
        let mut total = 0.0;
        for (x, row) in ptx.axis_iter(Axis(0)).enumerate() {
            let px = self.px[x];
            if px == 0.0 {
                continue;
            }
            let c: f64 = row.iter().zip(qt.iter()).filter(|(p, _)| **p > 0.0).map(|(&p, &q)| p * (p / q).ln()).sum();
            total += px * c;
        }
        total
    }

    fn lagrangian(&self, ptx: &Array2<f64>, qt: &Array1<f64>, ryt: &Array2<f64>, beta: f64) -> f64 {
        let s = self.expected_log_decoder(ryt);
        let mut distortion = 0.0;
        for (x, row) in ptx.axis_iter(Axis(0)).enumerate() {
            let d: f64 = row.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(t, &p)| p * s[[x, t]]).sum();
            distortion += self.px[x] * d;
        }
        self.compression(ptx, qt) - beta * distortion
    }

    fn check(&self, s: &BaState) -> Result<()> {
        if s.ptx.n_inputs() != self.px.len() {
            return Err(Error::Dimension { context: "encoder rows vs |X|", expected: self.px.len(), actual: s.ptx.n_inputs() });
        }
        let t = s.ptx.n_outputs();
        if s.qt.len() != t || s.ryt.n_inputs() != t {
            return Err(Error::Dimension {
                context: "bottleneck alphabet",
                expected: t,
                actual: if s.qt.len() != t { s.qt.len() } else { s.ryt.n_inputs() },
            });
        }
        if s.ryt.n_outputs() != self.py.len() {
            return Err(Error::Dimension { context: "decoder columns vs |Y|", expected: self.py.len(), actual: s.ryt.n_outputs() });
        }
        Ok(())
    }

    fn step(&self, s: &BaState) -> BaState {
        let score = self.expected_log_decoder(&s.ryt.rows().to_owned());
        let log_q: Vec<f64> = s.qt.weights().iter().map(|&q| if q > 0.0 { q.ln() } else { f64::NEG_INFINITY }).collect();
        let mut ptx = Array2::zeros(score.raw_dim());
        for (x, mut row) in ptx.axis_iter_mut(Axis(0)).enumerate() {
            let logits: Vec<f64> = log_q.iter().enumerate().map(|(t, &lq)| lq + s.beta * score[[x, t]]).collect();
            let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for (t, &l) in logits.iter().enumerate() {
                // weights below e^-400 are dropped: their products with small joint
                // entries go subnormal, which slows the matrix products badly
                row[t] = if l - top > -400.0 { (l - top).exp() } else { 0.0 };
            }
            // A(x), up to the factor exp(top)
            let normalizer: f64 = row.sum();
            row.mapv_inplace(|v| v / normalizer);
        }
        self.state_from_encoder(ptx, s.beta)
    }

    /// Builds `q`, the induced `r` and the objective. With `r` induced by
    /// the encoder the distortion term is `sum_{t,y} p(t,y) ln r(y|t)`.
    fn state_from_encoder(&self, ptx: Array2<f64>, beta: f64) -> BaState {
        let qt = self.marginal(&ptx);
        let ty = ptx.t().dot(&self.table);
        let ryt = self.normalize_rows(&ty);
        let mut distortion = 0.0;
        for (&p, &r) in ty.iter().zip(ryt.iter()) {
            if p > 0.0 {
                distortion += p * floored_ln(r);
            }
        }
        let objective = self.compression(&ptx, &qt) - beta * distortion + 0.0;
        BaState {
            ptx: ConditionalTable::from_unchecked(ptx),
            qt: DiscreteDist::from_unchecked(qt),
            ryt: ConditionalTable::from_unchecked(ryt),
            beta,
            objective,
        }
    }
}

impl BaState {
    /// Seeded start: each encoder row is uniform plus noise in `[0, 0.01)`,
    /// renormalized; `q` and `r` are the ones it induces.
    pub fn initial(j: &DiscreteJoint, beta: f64, t_card: usize, seed: u64) -> Result<Self> {
        validate_beta(beta)?;
        if t_card == 0 {
            return Err(Error::Validation("bottleneck alphabet must be non-empty".into()));
        }
        let view = JointView::new(j);
        Ok(view.state_from_encoder(random_encoder(j.x_card(), t_card, seed), beta))
    }

    /// Evaluates the Lagrangian for an arbitrary `(p, q, r)` triple.
    pub fn lagrangian_of(j: &DiscreteJoint, ptx: &ConditionalTable, qt: &DiscreteDist, ryt: &ConditionalTable, beta: f64) -> f64 {
        JointView::new(j).lagrangian(&ptx.rows().to_owned(), &qt.weights().to_owned(), &ryt.rows().to_owned(), beta)
    }
}

fn validate_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Validation(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

fn random_encoder(x_card: usize, t_card: usize, seed: u64) -> Array2<f64> {
    let mut rng = seed::stream(seed);
    let mut ptx = Array2::from_shape_fn((x_card, t_card), |_| 1.0 / t_card as f64 + 0.01 * rng.random::<f64>());
    for mut row in ptx.axis_iter_mut(Axis(0)) {
        let total = row.sum();
        row.mapv_inplace(|v| v / total);
    }
    ptx
}

/// One full update cycle.
pub fn ba_step(s: &BaState, j: &DiscreteJoint) -> Result<BaState> {
    let view = JointView::new(j);
    view.check(s)?;
    Ok(view.step(s))
}

#[derive(Debug, Clone)]
pub struct BaSolution {
    pub state: BaState,
    pub i_xt: f64,
    pub i_yt: f64,
    /// `H(Y)` of the joint the solution was computed for.
    pub h_y: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective before the first cycle and after each cycle.
    pub objective_trace: Vec<f64>,
}

/// Iterates [`ba_step`] until the objective changes by less than `tol`.
pub fn solve(j: &DiscreteJoint, beta: f64, cfg: &BaConfig, seed: u64) -> Result<BaSolution> {
    validate_beta(beta)?;
    let t_card = cfg.t_card.unwrap_or(j.x_card());
    if t_card == 0 {
        return Err(Error::Validation("bottleneck alphabet must be non-empty".into()));
    }
    let view = JointView::new(j);
    let mut state = view.state_from_encoder(random_encoder(j.x_card(), t_card, seed), beta);
    let mut trace = vec![state.objective];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let next = view.step(&state);
        iterations += 1;
        let change = (next.objective - state.objective).abs();
        trace.push(next.objective);
        state = next;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    if !state.objective.is_finite() {
        return Err(Error::NonFinite(format!("BA objective at beta = {beta}")));
    }

    let px = DiscreteDist::from_unchecked(view.px.clone());
    let i_xt = mi_from_channel(&px, &state.ptx)?;
    // identical encoder rows make T independent of X, hence of Y
    let i_yt = if i_xt == 0.0 {
        0.0
    } else {
        let ty = state.ptx.rows().t().dot(&view.table);
        mutual_information(&DiscreteJoint::new(ty)?)
    };
    Ok(BaSolution { state, i_xt, i_yt, h_y: entropy_of(view.py.view()), iterations, converged, objective_trace: trace })
}
