//! Blahut-Arimoto IB curve of the 9x2 toy model, printed as CSV.
//!
//! cargo run --release --example toy_ba_curve

use maib::curve::{geometric_grid, sweep_ba, BaSweep};
use maib::prob::mutual_information;
use maib::sources::toy_model;

fn main() -> maib::Result<()> {
    let joint = toy_model();
    let betas = geometric_grid(0.25, 64.0, 20);
    let curve = sweep_ba(&joint, &betas, &BaSweep::default())?;
    print!("{}", curve.to_csv());

    let shape = curve.shape_violations(1e-6);
    eprintln!("I(X;Y) = {:.6} nats", mutual_information(&joint));
    eprintln!("concave and monotone: {}", shape.is_empty());
    Ok(())
}
