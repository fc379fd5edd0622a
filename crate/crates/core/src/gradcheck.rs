//! Central finite differences, used to check hand-written gradients.

/// `(f(p + h e_k) - f(p - h e_k)) / 2h` for every coordinate `k`.
pub fn central_difference(params: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = params.to_vec();
    (0..params.len())
        .map(|k| {
            let orig = probe[k];
            probe[k] = orig + h;
            let plus = f(&probe);
            probe[k] = orig - h;
            let minus = f(&probe);
            probe[k] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Largest `|a - b| / max(|a|, |b|)` over entries where either magnitude
/// reaches `floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .filter(|(a, b)| a.abs() >= floor || b.abs() >= floor)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()))
        .fold(0.0, f64::max)
}

/// Outcome of [`run_suite`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SuiteReport {
    pub instances: usize,
    pub step: f64,
    /// Worst relative error of the network backward pass.
    pub backward: f64,
    /// Worst relative error of the MA-IB loss gradient.
    pub end_to_end: f64,
}

impl SuiteReport {
    pub fn worst(&self) -> f64 {
        self.backward.max(self.end_to_end)
    }
}

/// Checks `backward` and the MA-IB loss gradient against central
/// differences on `instances` random small networks and batches.
pub fn run_suite(instances: usize, step: f64, seed: u64) -> crate::Result<SuiteReport> {
    use crate::maib::{compute_kappa, loss, loss_and_gradient, YInfo};
    use crate::nn::{backward, Activation, ClassifierNet};
    use ndarray::Array2;
    use rand::Rng;

    let mut report = SuiteReport { instances, step, backward: 0.0, end_to_end: 0.0 };
    for k in 0..instances {
        let mut rng = crate::seed::stream(crate::seed::derive(seed, "gradcheck", k as u64));
        let mut dims = vec![rng.random_range(1..=4)];
        for _ in 0..rng.random_range(1..=2) {
            dims.push(rng.random_range(2..=6));
        }
        dims.push(rng.random_range(2..=5));
        let activation = Activation::Tanh;
        let net = ClassifierNet::new(dims.clone(), activation, rng.random())?;
        let m = rng.random_range(2..=6);
        let z = Array2::from_shape_fn((m, dims[0]), |_| rng.random_range(-2.0..2.0));
        let rebuild = |p: &[f64]| ClassifierNet::from_params(dims.clone(), activation, p.to_vec()).expect("same shape");

        let upstream = Array2::from_shape_fn((m, net.output_dim()), |_| rng.random_range(-1.0..1.0));
        let analytic = backward(&net, z.view(), upstream.view())?;
        let numeric = central_difference(net.params(), step, |p| {
            let lp = rebuild(p).forward_logprob(z.view()).expect("valid batch");
            (&lp * &upstream).sum()
        });
        report.backward = report.backward.max(max_relative_error(analytic.as_slice(), &numeric, 1e-8));

        let n = rng.random_range(2..=6);
        let mut rows = Array2::from_shape_fn((n, net.output_dim()), |_| rng.random::<f64>() + 0.05);
        for mut row in rows.rows_mut() {
            let total = row.sum();
            row.mapv_inplace(|v| v / total);
        }
        let info = YInfo::Exact(rows);
        let beta = rng.random_range(0.5..20.0);
        let (_, analytic) = loss_and_gradient(&net, z.view(), &info, beta)?;
        let numeric = central_difference(net.params(), step, |p| loss(&compute_kappa(&rebuild(p), z.view(), &info).expect("valid batch"), beta));
        report.end_to_end = report.end_to_end.max(max_relative_error(analytic.as_slice(), &numeric, 1e-8));
    }
    Ok(report)
}
