//! BA on the discretized jointly Gaussian pair `Y = X + E`, next to the
//! closed-form Gaussian IB curve `I_Y = -0.5 ln(rho^2 e^{-2 I_X} + 1 - rho^2)`
//! for correlation `rho^2 = 1/2`.
//!
//! cargo run --release --example gaussian_ba_curve

use maib::ba::{solve, BaConfig};
use maib::sources::gaussian_model;

fn main() -> maib::Result<()> {
    let model = gaussian_model(10.0, 100)?;
    let cfg = BaConfig { max_iter: 100_000, ..Default::default() };
    println!("beta,i_xt,i_yt,gaussian_ib,iterations");
    for beta in [1.0, 2.5, 4.0, 8.0, 16.0, 32.0] {
        let sol = solve(model.joint(), beta, &cfg, 0)?;
        let closed_form = -0.5 * (0.5 * (-2.0 * sol.i_xt).exp() + 0.5).ln();
        println!("{beta},{:.6},{:.6},{closed_form:.6},{}", sol.i_xt, sol.i_yt, sol.iterations);
    }
    Ok(())
}
