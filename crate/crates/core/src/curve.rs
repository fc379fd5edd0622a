//! IB curves: beta sweeps, the deterministic-label reference, comparison
//! and CSV I/O.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::ba::{self, BaConfig};
use crate::error::{Error, Result};
use crate::maib::{self, MaibConfig, MaibPoint, TrainingHistory};
use crate::nn::ClassifierNet;
use crate::prob::DiscreteJoint;
use crate::seed;
use crate::sources::SampledSource;

pub const CSV_HEADER: &str = "method,beta,i_xt,i_yt,objective,seed,n,m,l,z_dim";

/// Rounds to 12 significant digits and prints the shortest decimal that
/// reads back as the rounded value.
pub fn format_sig12(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // fold -0 into 0
    let rounded: f64 = format!("{v:.11e}").parse::<f64>().expect("float formatting round-trips") + 0.0;
    let mag = rounded.abs();
    if mag == 0.0 || (1e-4..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ba,
    Maib,
    Theory,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ba => "ba",
            Method::Maib => "maib",
            Method::Theory => "theory",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ba" => Ok(Method::Ba),
            "maib" => Ok(Method::Maib),
            "theory" => Ok(Method::Theory),
            other => Err(Error::Parse(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub method: Method,
    pub beta: Option<f64>,
    pub i_xt: f64,
    pub i_yt: f64,
    pub objective: Option<f64>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub l: Option<usize>,
    pub z_dim: Option<usize>,
    /// Solver convergence flag; not part of the CSV schema.
    #[serde(skip)]
    pub converged: bool,
}

impl CurvePoint {
    fn bare(method: Method, beta: Option<f64>, i_xt: f64, i_yt: f64) -> Self {
        Self { method, beta, i_xt, i_yt, objective: None, seed: None, n: None, m: None, l: None, z_dim: None, converged: true }
    }

    /// Curve point for an MA-IB estimate. Mutual information is non-negative,
    /// so a negative `I(Y;T)` estimate is reported as 0.
    pub fn from_maib(p: &MaibPoint, cfg: &MaibConfig) -> Self {
        Self {
            objective: Some(p.loss),
            seed: Some(p.seed),
            n: Some(cfg.n),
            m: Some(cfg.m),
            l: Some(cfg.l),
            z_dim: Some(cfg.z_dim),
            ..Self::bare(Method::Maib, Some(p.beta), p.i_xt_hat, p.i_yt_hat.max(0.0))
        }
    }
}

/// A sweep point that produced no estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub method: Method,
    pub beta: f64,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Curve {
    points: Vec<CurvePoint>,
    failures: Vec<SweepFailure>,
    pub label: String,
}

impl Curve {
    pub fn new(mut points: Vec<CurvePoint>, label: impl Into<String>) -> Self {
        points.sort_by(|a, b| a.i_xt.total_cmp(&b.i_xt).then(a.beta.unwrap_or(0.0).total_cmp(&b.beta.unwrap_or(0.0))));
        Self { points, failures: Vec::new(), label: label.into() }
    }

    pub fn with_failures(mut self, failures: Vec<SweepFailure>) -> Self {
        self.failures = failures;
        self
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn failures(&self) -> &[SweepFailure] {
        &self.failures
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks that `i_yt` is nondecreasing in `i_xt` and that consecutive
    /// chord slopes are nonincreasing, both within `slack`. Points closer
    /// than `slack` in `i_xt` are treated as one location. Returns one
    /// message per violation.
    pub fn shape_violations(&self, slack: f64) -> Vec<String> {
        let mut out = Vec::new();
        let mut nodes: Vec<(f64, f64)> = Vec::new();
        for p in &self.points {
            match nodes.last() {
                Some(&(x, y)) if p.i_xt - x < slack => {
                    if (p.i_yt - y).abs() > slack {
                        out.push(format!("two values of i_yt ({y}, {}) at i_xt ~ {x}", p.i_yt));
                    }
                }
                _ => nodes.push((p.i_xt, p.i_yt)),
            }
        }
        for w in nodes.windows(2) {
            if w[1].1 < w[0].1 - slack {
                out.push(format!("i_yt decreases from {} to {} between i_xt {} and {}", w[0].1, w[1].1, w[0].0, w[1].0));
            }
        }
        let slopes: Vec<(f64, f64)> = nodes.windows(2).map(|w| (w[0].0, (w[1].1 - w[0].1) / (w[1].0 - w[0].0))).collect();
        for s in slopes.windows(2) {
            if s[1].1 > s[0].1 + slack {
                out.push(format!("chord slope rises from {} to {} after i_xt {}", s[0].1, s[1].1, s[1].0));
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let opt_f = |v: Option<f64>| v.map(format_sig12).unwrap_or_default();
        let opt_u = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                p.method,
                opt_f(p.beta),
                format_sig12(p.i_xt),
                format_sig12(p.i_yt),
                opt_f(p.objective),
                p.seed.map(|s| s.to_string()).unwrap_or_default(),
                opt_u(p.n),
                opt_u(p.m),
                opt_u(p.l),
                opt_u(p.z_dim),
            ));
        }
        for f in &self.failures {
            out.push_str(&format!("{},{},NaN,NaN,NaN,{},,,,\n", f.method, format_sig12(f.beta), f.seed));
        }
        out
    }

    /// Parses a curve CSV. Rows with a non-finite `i_xt` or `i_yt` become
    /// failures.
    pub fn from_csv(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end() == CSV_HEADER => {}
            other => return Err(Error::Parse(format!("row 1: expected header `{CSV_HEADER}`, found {other:?}"))),
        }
        let columns: Vec<&str> = CSV_HEADER.split(',').collect();
        let mut points = Vec::new();
        let mut failures = Vec::new();
        for (idx, line) in lines.enumerate() {
            let row = idx + 2;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != columns.len() {
                return Err(Error::Parse(format!("row {row}: expected {} columns, found {}", columns.len(), cells.len())));
            }
            let bad = |col: usize, why: String| Error::Parse(format!("row {row}, column `{}`: {why}", columns[col]));
            let float = |col: usize| -> Result<f64> { cells[col].trim().parse::<f64>().map_err(|e| bad(col, format!("`{}`: {e}", cells[col]))) };
            let opt_float = |col: usize| -> Result<Option<f64>> {
                if cells[col].trim().is_empty() {
                    Ok(None)
                } else {
                    float(col).map(Some)
                }
            };
            let opt_uint = |col: usize| -> Result<Option<u64>> {
                let c = cells[col].trim();
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse::<u64>().map(Some).map_err(|e| bad(col, format!("`{c}`: {e}")))
                }
            };
            let method: Method = cells[0].trim().parse().map_err(|e: Error| bad(0, e.to_string()))?;
            let beta = opt_float(1)?;
            let i_xt = float(2)?;
            let i_yt = float(3)?;
            let seed = opt_uint(5)?;
            if !(i_xt.is_finite() && i_yt.is_finite()) {
                failures.push(SweepFailure { method, beta: beta.unwrap_or(f64::NAN), seed: seed.unwrap_or(0), message: "no estimate".into() });
                continue;
            }
            let as_usize = |v: Option<u64>| v.map(|x| x as usize);
            points.push(CurvePoint {
                method,
                beta,
                i_xt,
                i_yt,
                objective: opt_float(4)?,
                seed,
                n: as_usize(opt_uint(6)?),
                m: as_usize(opt_uint(7)?),
                l: as_usize(opt_uint(8)?),
                z_dim: as_usize(opt_uint(9)?),
                converged: true,
            });
        }
        Ok(Curve::new(points, label).with_failures(failures))
    }
}

/// `count` geometrically spaced values from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let ratio = (hi / lo).ln() / (count - 1) as f64;
            (0..count).map(|k| if k + 1 == count { hi } else { lo * (ratio * k as f64).exp() }).collect()
        }
    }
}

fn check_betas(betas: &[f64]) -> Result<()> {
    if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(Error::Validation(format!("beta values must be finite and >= 0, got {b}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaSweep {
    pub solver: BaConfig,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for BaSweep {
    fn default() -> Self {
        Self { solver: BaConfig::default(), restarts: 3, seed: 0 }
    }
}

/// One BA solve per beta, keeping the lowest objective over seeded restarts.
pub fn sweep_ba(j: &DiscreteJoint, betas: &[f64], sweep: &BaSweep) -> Result<Curve> {
    check_betas(betas)?;
    let restarts = sweep.restarts.max(1);
    let points = betas
        .par_iter()
        .enumerate()
        .map(|(k, &beta)| {
            let mut best: Option<(ba::BaSolution, u64)> = None;
            for r in 0..restarts {
                let s = seed::derive(sweep.seed, "ba", (k * restarts + r) as u64);
                let sol = ba::solve(j, beta, &sweep.solver, s)?;
                if best.as_ref().is_none_or(|(b, _)| sol.state.objective < b.state.objective) {
                    best = Some((sol, s));
                }
            }
            let (sol, s) = best.expect("at least one restart");
            Ok(CurvePoint {
                objective: Some(sol.state.objective),
                seed: Some(s),
                converged: sol.converged,
                ..CurvePoint::bare(Method::Ba, Some(beta), sol.i_xt, sol.i_yt)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Curve::new(points, "ba"))
}

/// Per-beta products of an MA-IB sweep.
#[derive(Debug, Clone)]
pub struct MaibRun {
    pub beta: f64,
    pub config: MaibConfig,
    pub point: MaibPoint,
    pub history: TrainingHistory,
    pub net: ClassifierNet,
}

#[derive(Debug, Clone)]
pub struct MaibSweep {
    pub curve: Curve,
    pub runs: Vec<MaibRun>,
}

/// Trains and evaluates one network per beta. Seeds derive from
/// `master_seed` and the beta's index, so results do not depend on the
/// number of workers.
pub fn sweep_maib(source: &dyn SampledSource, betas: &[f64], template: &MaibConfig, master_seed: u64) -> Result<MaibSweep> {
    check_betas(betas)?;
    template.validate()?;
    let outcomes: Vec<std::result::Result<MaibRun, SweepFailure>> = betas
        .par_iter()
        .enumerate()
        .map(|(k, &beta)| {
            let cfg = MaibConfig { beta, seed: seed::derive(master_seed, "maib", k as u64), ..template.clone() };
            let fail = |e: Error| SweepFailure { method: Method::Maib, beta, seed: cfg.seed, message: e.to_string() };
            let trained = maib::train(source, &cfg).map_err(fail)?;
            let (eval_n, eval_m) = cfg.eval_sizes();
            let eval_seed = seed::derive(master_seed, "maib-eval", k as u64);
            let mut point = maib::estimate_point(&trained.net, source, beta, eval_n, eval_m, cfg.eval_batches, eval_seed).map_err(fail)?;
            point.seed = cfg.seed;
            Ok(MaibRun { beta, config: cfg, point, history: trained.history, net: trained.net })
        })
        .collect();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(run) => runs.push(run),
            Err(f) => failures.push(f),
        }
    }
    let points = runs.iter().map(|r| CurvePoint::from_maib(&r.point, &r.config)).collect();
    Ok(MaibSweep { curve: Curve::new(points, "maib").with_failures(failures), runs })
}

/// `I(R) = min(R, H(Y))`, the IB curve when `Y` is a function of `X`.
pub fn theoretical_deterministic_curve(h_y: f64, grid: &[f64]) -> Result<Curve> {
    if !(h_y.is_finite() && h_y > 0.0) {
        return Err(Error::Validation(format!("H(Y) must be positive, got {h_y}")));
    }
    let points = grid.iter().map(|&r| CurvePoint::bare(Method::Theory, None, r, if r <= h_y { r } else { h_y })).collect();
    Ok(Curve::new(points, "theory"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointGap {
    pub beta: Option<f64>,
    pub i_xt: f64,
    pub i_yt: f64,
    pub reference_i_yt: f64,
    /// `reference - test`; positive when the test point is below.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub gaps: Vec<PointGap>,
    /// Test points outside the reference's `i_xt` range.
    pub outside: Vec<CurvePoint>,
    pub median: f64,
    pub max: f64,
    pub max_abs: f64,
}

fn interpolate(reference: &[CurvePoint], x: f64) -> Option<f64> {
    let first = reference.first()?;
    let last = reference.last()?;
    if x < first.i_xt || x > last.i_xt {
        return None;
    }
    let hi = reference.partition_point(|p| p.i_xt < x).min(reference.len() - 1);
    let b = &reference[hi];
    if b.i_xt == x {
        // several reference points can share an i_xt; take the highest
        let same = reference.iter().filter(|p| p.i_xt == x).map(|p| p.i_yt);
        return same.reduce(f64::max);
    }
    let a = &reference[hi - 1];
    let t = (x - a.i_xt) / (b.i_xt - a.i_xt);
    Some(a.i_yt + t * (b.i_yt - a.i_yt))
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Vertical gaps of `test` below `reference`, interpolating the reference
/// linearly in `i_xt`. Test points outside the reference span are listed
/// separately, never extrapolated.
pub fn curve_deviation(test: &Curve, reference: &Curve) -> Result<DeviationReport> {
    if test.is_empty() {
        return Err(Error::Validation("test curve has no points".into()));
    }
    if reference.len() < 2 {
        return Err(Error::Validation("reference curve needs at least 2 points".into()));
    }
    let mut gaps = Vec::new();
    let mut outside = Vec::new();
    for p in test.points() {
        match interpolate(reference.points(), p.i_xt) {
            Some(r) => gaps.push(PointGap { beta: p.beta, i_xt: p.i_xt, i_yt: p.i_yt, reference_i_yt: r, gap: r - p.i_yt }),
            None => outside.push(p.clone()),
        }
    }
    if gaps.is_empty() {
        return Err(Error::Validation("no test point lies within the reference i_xt range".into()));
    }
    let mut values: Vec<f64> = gaps.iter().map(|g| g.gap).collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(DeviationReport { median: median(&mut values), max, max_abs, gaps, outside })
}
