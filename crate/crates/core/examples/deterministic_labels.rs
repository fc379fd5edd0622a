//! When Y is a function of X the IB curve is min(R, H(Y)). This sweeps
//! MA-IB on ten well-separated Gaussian clusters and checks each point
//! against that line.
//!
//! cargo run --release --example deterministic_labels

use maib::curve::{sweep_maib, theoretical_deterministic_curve};
use maib::maib::MaibConfig;
use maib::sources::{dataset_as_source, synthetic_classification, SampledSource};

fn main() -> maib::Result<()> {
    let data = synthetic_classification(10, 100, 16, 3)?;
    let source = dataset_as_source(data, 4)?;
    let h_y = source.label_entropy();
    let template = MaibConfig { n: 128, m: 128, hidden: vec![64, 64], max_iter: 1500, eval_batches: 5, ..Default::default() };
    let sweep = sweep_maib(&source, &[0.5, 2.0, 4.0, 16.0, 64.0], &template, 5)?;
    let theory = theoretical_deterministic_curve(h_y, &[0.0, h_y, 2.0 * h_y])?;
    print!("{}", theory.to_csv());
    println!("H(Y) = {h_y:.4}");
    for p in sweep.curve.points() {
        let bound = p.i_xt.min(h_y);
        println!("beta {:>5}: I(X;T) {:.3}  I(Y;T) {:.3}  bound {:.3}", p.beta.unwrap_or(f64::NAN), p.i_xt, p.i_yt, bound);
    }
    Ok(())
}
