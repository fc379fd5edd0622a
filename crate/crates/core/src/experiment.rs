//! Config-driven experiment runs: source loading, the curve commands, and
//! output files with their run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ba::BaConfig;
use crate::curve::{self, BaSweep, Curve, DeviationReport};
use crate::error::{Error, Result};
use crate::gradcheck::{self, SuiteReport};
use crate::maib::MaibConfig;
use crate::nn::checkpoint;
use crate::prob::DiscreteJoint;
use crate::seed;
use crate::sources::{self, idx, DatasetSource, DiscreteSource, GaussianModel, GaussianSource, SampledSource, XEncoding};

pub const OUT_DIR_ENV: &str = "MAIB_OUT_DIR";
pub const JOBS_ENV: &str = "MAIB_JOBS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceSpec {
    #[default]
    Toy,
    /// `Y = X + noise` on `count` cells spanning `[-half_width, half_width]`.
    Gaussian {
        half_width: f64,
        count: usize,
    },
    Synthetic {
        k: usize,
        per_class: usize,
        x_dim: usize,
    },
    /// IDX image and label files; only the first `subset_size` pairs are used.
    Mnist {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default = "default_subset")]
        subset_size: usize,
    },
}

fn default_subset() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    Ba,
    Maib,
    Theory,
    #[default]
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaSection {
    pub t_card: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for BaSection {
    fn default() -> Self {
        let solver = BaConfig::default();
        Self { t_card: solver.t_card, tol: solver.tol, max_iter: solver.max_iter, restarts: 3 }
    }
}

impl BaSection {
    pub fn sweep(&self, seed: u64) -> BaSweep {
        BaSweep { solver: BaConfig { t_card: self.t_card, tol: self.tol, max_iter: self.max_iter }, restarts: self.restarts, seed }
    }
}

/// Grid of `R` values for the deterministic-label reference curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheorySection {
    pub r_max: f64,
    pub points: usize,
}

impl Default for TheorySection {
    fn default() -> Self {
        Self { r_max: 5.0, points: 101 }
    }
}

/// Everything a run depends on. `maib.beta` and `maib.seed` are replaced
/// per sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: MethodSpec,
    pub betas: Vec<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; `None` lets the pool pick.
    pub jobs: Option<usize>,
    /// Independent MA-IB sweeps per sample size, each with its own seeds.
    pub repeats: usize,
    /// MA-IB sample sizes (`n = m`); empty keeps `maib.n` and `maib.m`.
    pub sizes: Vec<usize>,
    pub source: SourceSpec,
    pub ba: BaSection,
    pub maib: MaibConfig,
    pub theory: TheorySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: MethodSpec::All,
            betas: curve::geometric_grid(0.25, 64.0, 20),
            seed: 0,
            out_dir: PathBuf::from("maib-out"),
            jobs: None,
            repeats: 1,
            sizes: Vec::new(),
            source: SourceSpec::Toy,
            ba: BaSection::default(),
            maib: MaibConfig::default(),
            theory: TheorySection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the TOML serialization, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    /// Applies `MAIB_OUT_DIR` and `MAIB_JOBS` if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                self.out_dir = PathBuf::from(dir);
            }
        }
        if let Ok(jobs) = std::env::var(JOBS_ENV) {
            if !jobs.is_empty() {
                let parsed = jobs.parse().map_err(|_| Error::Config(format!("{JOBS_ENV}={jobs} is not a positive integer")))?;
                self.jobs = Some(parsed);
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(Error::Validation("beta grid is empty".into()));
        }
        if let Some(b) = self.betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::Validation(format!("beta values must be finite and >= 0, got {b}")));
        }
        if self.jobs == Some(0) {
            return Err(Error::Validation("jobs must be >= 1".into()));
        }
        if self.repeats == 0 || self.sizes.contains(&0) {
            return Err(Error::Validation("repeats and sizes must be >= 1".into()));
        }
        if self.ba.restarts == 0 || self.ba.max_iter == 0 || self.ba.tol.is_nan() || self.ba.tol < 0.0 {
            return Err(Error::Validation("ba needs restarts >= 1, max_iter >= 1 and tol >= 0".into()));
        }
        if !(self.theory.r_max > 0.0 && self.theory.r_max.is_finite()) || self.theory.points < 2 {
            return Err(Error::Validation("theory grid needs r_max > 0 and at least 2 points".into()));
        }
        self.maib.validate()
    }

    fn size_variants(&self) -> Vec<(Option<usize>, MaibConfig)> {
        if self.sizes.is_empty() {
            return vec![(None, self.maib.clone())];
        }
        self.sizes.iter().map(|&s| (Some(s), MaibConfig { n: s, m: s, ..self.maib.clone() })).collect()
    }
}

/// A source instantiated from its spec.
pub enum LoadedSource {
    Discrete(DiscreteSource),
    Gaussian(GaussianModel, GaussianSource),
    Dataset(DatasetSource),
}

impl LoadedSource {
    pub fn sampled(&self) -> &dyn SampledSource {
        match self {
            LoadedSource::Discrete(s) => s,
            LoadedSource::Gaussian(_, s) => s,
            LoadedSource::Dataset(s) => s,
        }
    }

    /// The finite joint BA runs on, when there is one.
    pub fn joint(&self) -> Option<&DiscreteJoint> {
        match self {
            LoadedSource::Discrete(s) => Some(s.joint()),
            LoadedSource::Gaussian(m, _) => Some(m.joint()),
            LoadedSource::Dataset(_) => None,
        }
    }

    pub fn label_entropy(&self) -> f64 {
        self.sampled().label_entropy()
    }
}

pub fn load_source(spec: &SourceSpec, encoding: XEncoding, master_seed: u64) -> Result<LoadedSource> {
    let sampler_seed = seed::derive(master_seed, "source", 0);
    Ok(match spec {
        SourceSpec::Toy => LoadedSource::Discrete(DiscreteSource::new(sources::toy_model(), encoding, sampler_seed)),
        SourceSpec::Gaussian { half_width, count } => {
            let model = sources::gaussian_model(*half_width, *count)?;
            let sampled = model.sampled(sampler_seed);
            LoadedSource::Gaussian(model, sampled)
        }
        SourceSpec::Synthetic { k, per_class, x_dim } => {
            let data = sources::synthetic_classification(*k, *per_class, *x_dim, seed::derive(master_seed, "dataset", 0))?;
            LoadedSource::Dataset(sources::dataset_as_source(data, sampler_seed)?)
        }
        SourceSpec::Mnist { images, labels, subset_size } => {
            let data = idx::load_mnist(images, labels)?.head(*subset_size)?;
            LoadedSource::Dataset(sources::dataset_as_source(data, sampler_seed)?)
        }
    })
}

/// Runs `f` on a pool with `jobs` workers.
pub fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestPoint {
    pub curve: String,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub converged: bool,
}

/// Written next to every curve: the effective config, its hash, seeds,
/// timing and per-point status.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub jobs: Option<usize>,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
    pub points: Vec<ManifestPoint>,
    pub failures: Vec<curve::SweepFailure>,
    pub config: ExperimentConfig,
}

/// Paths written by a command, manifest last.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub points: usize,
    pub failures: usize,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn finish(cfg: &ExperimentConfig, command: &str, started: Instant, files: Vec<PathBuf>, curves: &[&Curve]) -> Result<RunOutput> {
    let points: Vec<ManifestPoint> = curves
        .iter()
        .flat_map(|c| c.points().iter().map(|p| ManifestPoint { curve: c.label.clone(), beta: p.beta, seed: p.seed, converged: p.converged }))
        .collect();
    let failures: Vec<_> = curves.iter().flat_map(|c| c.failures().iter().cloned()).collect();
    let manifest = Manifest {
        command: command.into(),
        config_sha256: cfg.hash()?,
        master_seed: cfg.seed,
        jobs: cfg.jobs,
        wall_time_s: started.elapsed().as_secs_f64(),
        files: files.clone(),
        points,
        failures,
        config: cfg.clone(),
    };
    let path = cfg.out_dir.join(format!("{command}.manifest.json"));
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    write_file(&path, &json)?;
    Ok(RunOutput { files, manifest: path, points: manifest.points.len(), failures: manifest.failures.len() })
}

/// BA curve over the beta grid. Needs a source with a finite joint.
pub fn cmd_ba_curve(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let source = load_source(&cfg.source, cfg.maib.x_encoding, cfg.seed)?;
    let joint = source.joint().ok_or_else(|| Error::Validation("ba-curve needs a discrete source (toy or gaussian)".into()))?;
    let sweep = cfg.ba.sweep(cfg.seed);
    let curve = with_pool(cfg.jobs, || curve::sweep_ba(joint, &cfg.betas, &sweep))??;
    let path = cfg.out_dir.join("ba_curve.csv");
    write_file(&path, &curve.to_csv())?;
    finish(cfg, "ba-curve", started, vec![path], &[&curve])
}

/// MA-IB curves, one CSV per sample size, plus a history CSV and a
/// checkpoint per trained network.
pub fn cmd_maib_curve(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let source = load_source(&cfg.source, cfg.maib.x_encoding, cfg.seed)?;
    let mut files = Vec::new();
    let mut curves = Vec::new();
    for (size, template) in cfg.size_variants() {
        let tag = size.map(|s| format!("n{s}")).unwrap_or_else(|| "default".into());
        let mut points = Vec::new();
        let mut failures = Vec::new();
        for r in 0..cfg.repeats {
            let master = seed::derive(cfg.seed, "repeat", r as u64);
            let sweep = with_pool(cfg.jobs, || curve::sweep_maib(source.sampled(), &cfg.betas, &template, master))??;
            for (k, run) in sweep.runs.iter().enumerate() {
                let stem = cfg.out_dir.join(&tag).join(format!("rep{r:02}_beta{k:02}"));
                let history = stem.with_extension("history.csv");
                let ckpt = stem.with_extension("ckpt");
                write_file(&history, &run.history.to_csv())?;
                write_file(&ckpt, &checkpoint::to_string(&run.net))?;
                files.extend([history, ckpt]);
            }
            points.extend(sweep.curve.points().iter().cloned());
            failures.extend(sweep.curve.failures().iter().cloned());
        }
        let curve = Curve::new(points, format!("maib-{tag}")).with_failures(failures);
        let name = match size {
            Some(s) => format!("maib_curve_n{s}.csv"),
            None => "maib_curve.csv".into(),
        };
        let path = cfg.out_dir.join(name);
        write_file(&path, &curve.to_csv())?;
        files.push(path);
        curves.push(curve);
    }
    let refs: Vec<&Curve> = curves.iter().collect();
    let out = finish(cfg, "maib-curve", started, files, &refs)?;
    if out.points == 0 {
        return Err(Error::NonFinite(format!("every MA-IB run failed; see {}", out.manifest.display())));
    }
    Ok(out)
}

/// The `R` grid: evenly spaced on `[0, r_max]` with `H(Y)` added.
pub fn theory_grid(section: &TheorySection, h_y: f64) -> Vec<f64> {
    let step = section.r_max / (section.points - 1) as f64;
    let mut grid: Vec<f64> = (0..section.points).map(|k| k as f64 * step).collect();
    if h_y < section.r_max && !grid.contains(&h_y) {
        grid.push(h_y);
    }
    grid
}

/// `min(R, H(Y))` for the source's label entropy.
pub fn cmd_theory_curve(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let source = load_source(&cfg.source, cfg.maib.x_encoding, cfg.seed)?;
    let h_y = source.label_entropy();
    let curve = curve::theoretical_deterministic_curve(h_y, &theory_grid(&cfg.theory, h_y))?;
    let path = cfg.out_dir.join("theory_curve.csv");
    write_file(&path, &curve.to_csv())?;
    finish(cfg, "theory-curve", started, vec![path], &[&curve])
}

/// Every command selected by `cfg.method`; BA is skipped for sources
/// without a finite joint when running `all`.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>> {
    let discrete = !matches!(cfg.source, SourceSpec::Synthetic { .. } | SourceSpec::Mnist { .. });
    let mut outputs = Vec::new();
    if matches!(cfg.method, MethodSpec::Ba) || (cfg.method == MethodSpec::All && discrete) {
        outputs.push(cmd_ba_curve(cfg)?);
    }
    if matches!(cfg.method, MethodSpec::Theory | MethodSpec::All) {
        outputs.push(cmd_theory_curve(cfg)?);
    }
    if matches!(cfg.method, MethodSpec::Maib | MethodSpec::All) {
        outputs.push(cmd_maib_curve(cfg)?);
    }
    Ok(outputs)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareOutcome {
    pub threshold: f64,
    pub passed: bool,
    pub report: DeviationReport,
}

impl CompareOutcome {
    pub fn summary(&self) -> String {
        format!(
            "points {} outside {} median_gap {} max_gap {} max_abs_gap {} threshold {} {}",
            self.report.gaps.len(),
            self.report.outside.len(),
            curve::format_sig12(self.report.median),
            curve::format_sig12(self.report.max),
            curve::format_sig12(self.report.max_abs),
            curve::format_sig12(self.threshold),
            if self.passed { "PASS" } else { "FAIL" }
        )
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

pub fn read_curve(path: impl AsRef<Path>) -> Result<Curve> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Curve::from_csv(&text, path.display().to_string()).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Passes when the median vertical gap is at most `threshold`.
pub fn cmd_compare(test: impl AsRef<Path>, reference: impl AsRef<Path>, threshold: f64) -> Result<CompareOutcome> {
    if !threshold.is_finite() {
        return Err(Error::Validation(format!("threshold must be finite, got {threshold}")));
    }
    let report = curve::curve_deviation(&read_curve(test)?, &read_curve(reference)?)?;
    Ok(CompareOutcome { threshold, passed: report.median <= threshold, report })
}

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

pub fn cmd_gradcheck(instances: usize, step: f64, seed: u64) -> Result<(SuiteReport, bool)> {
    if instances == 0 || step.is_nan() || step <= 0.0 {
        return Err(Error::Validation("gradcheck needs instances >= 1 and step > 0".into()));
    }
    let report = gradcheck::run_suite(instances, step, seed)?;
    Ok((report, report.worst() < GRADCHECK_TOLERANCE))
}
