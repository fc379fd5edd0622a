//! Builds an experiment config, prints it as TOML and runs every method
//! into a temporary directory, then compares the MA-IB curve to BA.
//!
//! cargo run --release --example config_run

use maib::experiment::{cmd_compare, cmd_run, ExperimentConfig, MethodSpec};
use maib::maib::MaibConfig;

fn main() -> maib::Result<()> {
    let out = std::env::temp_dir().join("maib-config-run");
    let cfg = ExperimentConfig {
        method: MethodSpec::All,
        betas: vec![0.0, 4.0, 16.0, 64.0],
        out_dir: out.clone(),
        maib: MaibConfig { n: 64, m: 64, hidden: vec![32], max_iter: 1000, ..Default::default() },
        ..Default::default()
    };
    print!("{}", cfg.to_toml()?);
    for run in cmd_run(&cfg)? {
        println!("{} -> {} points", run.manifest.display(), run.points);
    }
    let outcome = cmd_compare(out.join("maib_curve.csv"), out.join("ba_curve.csv"), 0.05)?;
    println!("{}", outcome.summary());
    Ok(())
}
