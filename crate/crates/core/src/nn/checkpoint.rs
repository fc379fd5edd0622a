//! Parameter checkpoints.
//!
//! Plain text, one item per line:
//!
//! ```text
//! maib-checkpoint v1
//! activation tanh
//! layer_dims 8 64 64 2
//! params 4930
//! 3fb999999999999a
//! ...
//! ```
//!
//! Each parameter is the 16-digit lowercase hex of its IEEE-754 bit
//! pattern, so a save/load cycle reproduces the network bit for bit.

use std::path::Path;

use super::{Activation, ClassifierNet};
use crate::error::{Error, Result};

const MAGIC: &str = "maib-checkpoint v1";

pub fn to_string(net: &ClassifierNet) -> String {
    let mut out = String::with_capacity(32 + 17 * net.params().len());
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("activation {}\n", net.activation().tag()));
    let dims: Vec<String> = net.layer_dims().iter().map(usize::to_string).collect();
    out.push_str(&format!("layer_dims {}\n", dims.join(" ")));
    out.push_str(&format!("params {}\n", net.params().len()));
    for p in net.params() {
        out.push_str(&format!("{:016x}\n", p.to_bits()));
    }
    out
}

fn field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| Error::Parse(format!("checkpoint ends before `{key}`")))?;
    line.strip_prefix(key).and_then(|rest| rest.strip_prefix(' ')).ok_or_else(|| Error::Parse(format!("expected `{key} ...`, found `{line}`")))
}

pub fn from_str(text: &str) -> Result<ClassifierNet> {
    let mut lines = text.lines();
    match lines.next() {
        Some(MAGIC) => {}
        other => return Err(Error::Parse(format!("not a v1 checkpoint: header {other:?}"))),
    }
    let tag = field(lines.next(), "activation")?;
    let activation = Activation::from_tag(tag).ok_or_else(|| Error::Parse(format!("unknown activation `{tag}`")))?;
    let dims = field(lines.next(), "layer_dims")?
        .split_whitespace()
        .map(|d| d.parse::<usize>().map_err(|e| Error::Parse(format!("layer dim `{d}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let count: usize = field(lines.next(), "params")?.parse().map_err(|e| Error::Parse(format!("param count: {e}")))?;
    let params = lines
        .take(count)
        .map(|l| u64::from_str_radix(l.trim(), 16).map(f64::from_bits).map_err(|e| Error::Parse(format!("param `{l}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if params.len() != count {
        return Err(Error::Parse(format!("checkpoint declares {count} params, found {}", params.len())));
    }
    ClassifierNet::from_params(dims, activation, params)
}

pub fn save(net: &ClassifierNet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), to_string(net)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<ClassifierNet> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    from_str(&text)
}
