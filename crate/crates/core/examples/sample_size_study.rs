//! MA-IB curves of the toy model at sample sizes 32, 64 and 128, each
//! scored by its median vertical gap below the BA curve.
//!
//! cargo run --release --example sample_size_study -- [seeds]

use maib::curve::{curve_deviation, geometric_grid, sweep_ba, sweep_maib, BaSweep, Curve};
use maib::maib::MaibConfig;
use maib::seed::derive;
use maib::sources::{toy_model, DiscreteSource, XEncoding};

fn main() -> maib::Result<()> {
    let seeds: u64 = std::env::args().nth(1).map_or(Ok(3), |a| a.parse()).expect("seed count");
    let joint = toy_model();
    let reference = sweep_ba(&joint, &geometric_grid(0.25, 256.0, 25), &BaSweep::default())?;
    let source = DiscreteSource::new(joint, XEncoding::OneHot, 0);
    let betas = geometric_grid(4.0, 64.0, 10);
    for size in [32, 64, 128] {
        let template = MaibConfig { n: size, m: size, hidden: vec![32, 32], max_iter: 2000, eval_batches: 20, ..Default::default() };
        let mut points = Vec::new();
        for s in 0..seeds {
            let sweep = sweep_maib(&source, &betas, &template, derive(99, "study", s))?;
            points.extend_from_slice(sweep.curve.points());
        }
        let report = curve_deviation(&Curve::new(points, format!("n{size}")), &reference)?;
        println!("n = m = {size:>3}: median gap {:.4} nats, max {:.4}", report.median, report.max);
    }
    Ok(())
}
