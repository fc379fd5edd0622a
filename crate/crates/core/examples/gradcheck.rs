//! Central-difference check of the network backward pass and the MA-IB
//! loss gradient on random small instances.
//!
//! cargo run --release --example gradcheck

use maib::gradcheck::run_suite;

fn main() -> maib::Result<()> {
    let r = run_suite(20, 1e-5, 0)?;
    println!("backward:   max relative error {:.2e}", r.backward);
    println!("end-to-end: max relative error {:.2e}", r.end_to_end);
    Ok(())
}
