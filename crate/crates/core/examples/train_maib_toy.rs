//! Trains one MA-IB network on the toy model, saves a checkpoint, reloads
//! it and reports the estimated curve point.
//!
//! cargo run --release --example train_maib_toy -- [beta]

use maib::maib::{estimate_point, train, MaibConfig};
use maib::nn::checkpoint;
use maib::sources::{toy_model, DiscreteSource, XEncoding};

fn main() -> maib::Result<()> {
    let beta: f64 = std::env::args().nth(1).map_or(Ok(8.0), |a| a.parse()).expect("beta must be a number");
    let source = DiscreteSource::new(toy_model(), XEncoding::OneHot, 1);
    let cfg = MaibConfig { beta, n: 64, m: 64, hidden: vec![32, 32], max_iter: 2000, seed: 7, ..Default::default() };
    let trained = train(&source, &cfg)?;
    for (i, loss) in trained.history.losses.iter().enumerate().step_by(250) {
        println!("iteration {:>5}  loss {loss:.5}", i + 1);
    }
    println!("smoothed final loss {:.5}", trained.history.smoothed_loss(cfg.smoothing));

    let path = std::env::temp_dir().join("maib-toy.ckpt");
    checkpoint::save(&trained.net, &path)?;
    let restored = checkpoint::load(&path)?;
    assert_eq!(restored, trained.net);

    let p = estimate_point(&restored, &source, beta, 1000, 1000, 5, 11)?;
    println!("beta {beta}: I(X;T) ~ {:.4}, I(Y;T) ~ {:.4}, F = {:.4}", p.i_xt_hat, p.i_yt_hat, p.loss);
    Ok(())
}
