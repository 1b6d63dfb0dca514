//! Plain-text model files.
//!
//! ```text
//! fairtune-model 1
//! kind nn
//! dims 10 64 32 16 8 4 1
//! params 3489
//! <one parameter per line>
//! ```
//!
//! Parameters are written with Rust's shortest round-trip float formatting, so
//! reading a file back reproduces θ bit for bit.

use std::fmt::Write as _;

use super::{ModelError, ModelKind, ParamClassifier};

pub const MODEL_FORMAT_HEADER: &str = "fairtune-model 1";

pub fn write_model(clf: &ParamClassifier) -> String {
    let mut out = String::with_capacity(24 * clf.param_count() + 64);
    out.push_str(MODEL_FORMAT_HEADER);
    out.push('\n');
    let dims: Vec<String> = clf.dims().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "kind {}\ndims {}\nparams {}", clf.kind(), dims.join(" "), clf.param_count());
    for t in clf.theta() {
        let _ = writeln!(out, "{t}");
    }
    out
}

fn field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str, ModelError> {
    let line = line.ok_or_else(|| ModelError::Format(format!("missing `{key}` line")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| ModelError::Format(format!("expected `{key} ...`, found {line:?}")))
}

pub fn read_model(text: &str) -> Result<ParamClassifier, ModelError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == MODEL_FORMAT_HEADER => {}
        other => return Err(ModelError::Format(format!("bad header {other:?}"))),
    }
    let kind: ModelKind = field(lines.next(), "kind")?.parse()?;
    let dims = field(lines.next(), "dims")?
        .split_whitespace()
        .map(|d| d.parse::<usize>().map_err(|e| ModelError::Format(format!("dims: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let count: usize = field(lines.next(), "params")?
        .trim()
        .parse()
        .map_err(|e| ModelError::Format(format!("params: {e}")))?;
    let theta = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|e| ModelError::Format(format!("value {l:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if theta.len() != count {
        return Err(ModelError::Format(format!("declared {count} parameters, found {}", theta.len())));
    }
    ParamClassifier::unflatten(kind, dims, theta)
}
