//! MA-IB on an MNIST subset read from IDX files. Defaults to the 1000-image
//! fixture shipped with the tests.
//!
//! cargo run --release --example mnist_labels -- [images labels]

use std::path::PathBuf;

use maib::curve::sweep_maib;
use maib::maib::MaibConfig;
use maib::sources::{dataset_as_source, idx::load_mnist, SampledSource};

fn main() -> maib::Result<()> {
    let data_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let mut args = std::env::args().skip(1);
    let images = args.next().map_or(data_dir.join("mnist-1k-images-idx3-ubyte"), PathBuf::from);
    let labels = args.next().map_or(data_dir.join("mnist-1k-labels-idx1-ubyte"), PathBuf::from);
    let data = load_mnist(&images, &labels)?.head(1000)?;
    println!("{} images of dimension {}", data.len(), data.x_dim());
    let source = dataset_as_source(data, 1)?;
    println!("H(Y) = {:.4} nats", source.label_entropy());

    let template = MaibConfig { n: 128, m: 128, hidden: vec![64], max_iter: 1000, ..Default::default() };
    let sweep = sweep_maib(&source, &[1.0, 4.0, 16.0], &template, 2)?;
    print!("{}", sweep.curve.to_csv());
    Ok(())
}
