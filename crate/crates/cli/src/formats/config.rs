//! Training configuration files: flat `key = value` lines, `#` comments.

use kgalign_core::trainer::TrainConfig;

use super::content_lines;
use crate::error::ParseError;

/// Starts from the defaults and applies every line; unknown keys and bad values are errors.
pub fn parse_config(text: &str, source: &str) -> Result<TrainConfig, ParseError> {
    let mut config = TrainConfig::default();
    for (line_no, line) in content_lines(text) {
        let Some((key, value)) = line.split_once('=') else {
            return Err(ParseError::new(source, line_no, "expected `key = value`"));
        };
        config
            .set(key.trim(), value.trim())
            .map_err(|e| ParseError::new(source, line_no, e.to_string()))?;
    }
    config
        .validate()
        .map_err(|e| ParseError::new(source, 0, e.to_string()))?;
    Ok(config)
}

/// Every key, in canonical order.
pub fn write_config(config: &TrainConfig) -> String {
    config
        .entries()
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}
