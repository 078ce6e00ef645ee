//! Bit-exact parameter checkpoints.
//!
//! Text container, one record per parameter in registration order:
//!
//! ```text
//! params <count>
//! name <parameter name>
//! shape <dim> <dim> ...
//! values <hex of IEEE-754 bits> ...
//! ```
//!
//! Values are written as the hexadecimal of each f64's raw bits, so a
//! save/load round trip reproduces every parameter exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::ParamSet;

pub fn save_parameters(path: impl AsRef<Path>, params: &ParamSet) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("params {}\n", params.len());
    for (name, tensor) in params.iter() {
        if name.contains(char::is_whitespace) {
            return Err(Error::Invalid(format!(
                "parameter name {name:?} contains whitespace"
            )));
        }
        out.push_str(&format!("name {name}\n"));
        out.push_str("shape");
        for dim in tensor.shape() {
            out.push_str(&format!(" {dim}"));
        }
        out.push_str("\nvalues");
        for value in tensor.values() {
            out.push_str(&format!(" {:016x}", value.to_bits()));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Load a checkpoint into an existing parameter set. Every stored record
/// must match a registered parameter by name and shape, and every
/// registered parameter must be present.
pub fn load_parameters(path: impl AsRef<Path>, params: &ParamSet) -> Result<()> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty checkpoint".to_string()))?;
    let count: usize = header
        .strip_prefix("params ")
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| Error::parse(path, 1, format!("bad header {header:?}")))?;
    if count != params.len() {
        return Err(Error::Invalid(format!(
            "checkpoint holds {count} parameters, model has {}",
            params.len()
        )));
    }

    for _ in 0..count {
        let (lineno, name_line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 0, "truncated checkpoint".to_string()))?;
        let name = name_line
            .strip_prefix("name ")
            .ok_or_else(|| Error::parse(path, lineno + 1, format!("expected name, got {name_line:?}")))?;

        let (shape_no, shape_line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 0, "truncated checkpoint".to_string()))?;
        let shape: Vec<usize> = shape_line
            .strip_prefix("shape")
            .ok_or_else(|| Error::parse(path, shape_no + 1, format!("expected shape, got {shape_line:?}")))?
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| Error::parse(path, shape_no + 1, format!("bad dimension {tok:?}")))
            })
            .collect::<Result<_>>()?;

        let (values_no, values_line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 0, "truncated checkpoint".to_string()))?;
        let values: Vec<f64> = values_line
            .strip_prefix("values")
            .ok_or_else(|| {
                Error::parse(path, values_no + 1, format!("expected values, got {values_line:?}"))
            })?
            .split_whitespace()
            .map(|tok| {
                u64::from_str_radix(tok, 16)
                    .map(f64::from_bits)
                    .map_err(|_| Error::parse(path, values_no + 1, format!("bad value {tok:?}")))
            })
            .collect::<Result<_>>()?;

        let tensor = params
            .get(name)
            .ok_or_else(|| Error::Invalid(format!("checkpoint parameter {name} not in model")))?;
        if tensor.shape() != shape {
            return Err(Error::Dimension(format!(
                "parameter {name}: checkpoint shape {shape:?} vs model {:?}",
                tensor.shape()
            )));
        }
        tensor.set_values(&values)?;
    }
    Ok(())
}
