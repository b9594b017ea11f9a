//! Versioned text checkpoints that reproduce every `f64` bit for bit.
//!
//! ```text
//! kgalign-checkpoint 1
//! epoch <n>
//! fingerprint <hex>
//! config <key> <value>          (one line per configuration key)
//! tensor <name> <rows> <cols>
//! <cols space-separated values> (one line per row)
//! ```

use std::collections::BTreeMap;

use kgalign_core::model::{ParamShape, Params};
use kgalign_core::trainer::{Checkpoint, TrainConfig};
use kgalign_core::Array2;

use crate::error::ParseError;

const MAGIC: &str = "kgalign-checkpoint";
const VERSION: u32 = 1;

pub fn write_checkpoint(checkpoint: &Checkpoint, config: &TrainConfig) -> String {
    let mut out = format!(
        "{MAGIC} {VERSION}\nepoch {}\nfingerprint {}\n",
        checkpoint.epoch, checkpoint.config_fingerprint
    );
    for (k, v) in config.entries() {
        out.push_str(&format!("config {k} {v}\n"));
    }
    for (name, tensor) in checkpoint.params.tensors() {
        out.push_str(&format!(
            "tensor {name} {} {}\n",
            tensor.nrows(),
            tensor.ncols()
        ));
        for row in tensor.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn parse_checkpoint(text: &str, source: &str) -> Result<(Checkpoint, TrainConfig), ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| ParseError::new(source, 0, format!("truncated before {what}")))
    };
    let err = |line: usize, message: String| ParseError::new(source, line, message);

    let (n, header) = next("header")?;
    if header != format!("{MAGIC} {VERSION}") {
        return Err(err(n, format!("not a version {VERSION} checkpoint")));
    }
    let (n, epoch_line) = next("epoch")?;
    let epoch = epoch_line
        .strip_prefix("epoch ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(n, String::from("expected `epoch <n>`")))?;
    let (n, fp_line) = next("fingerprint")?;
    let fingerprint = fp_line
        .strip_prefix("fingerprint ")
        .ok_or_else(|| err(n, String::from("expected `fingerprint <hex>`")))?
        .to_string();

    let mut config = TrainConfig::default();
    let mut tensors: BTreeMap<String, Array2<f64>> = BTreeMap::new();
    while let Ok((n, line)) = next("end") {
        if let Some(rest) = line.strip_prefix("config ") {
            let (k, v) = rest
                .split_once(' ')
                .ok_or_else(|| err(n, String::from("expected `config <key> <value>`")))?;
            config.set(k, v).map_err(|e| err(n, e.to_string()))?;
        } else if let Some(rest) = line.strip_prefix("tensor ") {
            let parts: Vec<&str> = rest.split(' ').collect();
            let [name, rows, cols] = parts.as_slice() else {
                return Err(err(
                    n,
                    String::from("expected `tensor <name> <rows> <cols>`"),
                ));
            };
            let rows: usize = rows
                .parse()
                .map_err(|_| err(n, format!("bad row count `{rows}`")))?;
            let cols: usize = cols
                .parse()
                .map_err(|_| err(n, format!("bad column count `{cols}`")))?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (rn, row) = next("tensor row")?;
                let before = data.len();
                for cell in row.split(' ').filter(|c| !c.is_empty()) {
                    data.push(
                        cell.parse::<f64>()
                            .map_err(|_| err(rn, format!("bad number `{cell}`")))?,
                    );
                }
                if data.len() - before != cols {
                    return Err(err(
                        rn,
                        format!("expected {cols} values, found {}", data.len() - before),
                    ));
                }
            }
            let tensor = Array2::from_shape_vec((rows, cols), data).expect("row lengths checked");
            tensors.insert(name.to_string(), tensor);
        } else if !line.is_empty() {
            return Err(err(n, format!("unexpected line `{line}`")));
        }
    }

    let params = assemble(tensors, &config).map_err(|m| err(0, m))?;
    Ok((
        Checkpoint {
            params,
            epoch,
            config_fingerprint: fingerprint,
        },
        config,
    ))
}

fn assemble(
    mut tensors: BTreeMap<String, Array2<f64>>,
    config: &TrainConfig,
) -> Result<Params, String> {
    let rows = |name: &str, tensors: &BTreeMap<String, Array2<f64>>| {
        tensors
            .get(name)
            .map(|t| t.nrows())
            .ok_or_else(|| format!("missing tensor `{name}`"))
    };
    let layers = tensors.keys().filter(|k| k.ends_with(".self")).count();
    let dim = tensors
        .get("attention.w")
        .map(|t| t.ncols())
        .ok_or_else(|| String::from("missing tensor `attention.w`"))?;
    let shape = ParamShape {
        entities: [
            rows("entity.left", &tensors)?,
            rows("entity.right", &tensors)?,
        ],
        relations: [
            rows("relation.left", &tensors)?,
            rows("relation.right", &tensors)?,
        ],
        dim,
        layers,
    };
    let mut params = Params::zeros(shape);
    params.attention.leaky_slope = config.leaky_slope;
    params.encoder.dropout = config.dropout;
    let expected = params.tensors().len();
    for (name, slot) in params.tensors_mut() {
        let tensor = tensors
            .remove(&name)
            .ok_or_else(|| format!("missing tensor `{name}`"))?;
        if tensor.dim() != slot.dim() {
            return Err(format!(
                "tensor `{name}` has shape {:?}, expected {:?}",
                tensor.dim(),
                slot.dim()
            ));
        }
        *slot = tensor;
    }
    if let Some(extra) = tensors.keys().next() {
        return Err(format!("unexpected tensor `{extra}` ({expected} expected)"));
    }
    Ok(params)
}
