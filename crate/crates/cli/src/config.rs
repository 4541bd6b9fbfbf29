//! Flag > config file > default resolution.

use std::fs;
use std::path::Path;

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Overlays the JSON object in `config` onto `parsed` for every key that
/// was not given on the command line. Unknown keys are usage errors.
pub fn resolve<A>(parsed: A, matches: &ArgMatches, config: Option<&Path>) -> Result<A, CliError>
where
    A: Serialize + DeserializeOwned,
{
    let Some(path) = config else {
        return Ok(parsed);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let file: Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not a JSON object: {e}", path.display())))?;
    let mut merged = match serde_json::to_value(&parsed) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("argument structs serialize to objects"),
    };
    for (key, value) in file {
        if !merged.contains_key(&key) {
            return Err(CliError::Usage(format!("config {}: unknown key `{key}`", path.display())));
        }
        if matches.value_source(&key) != Some(ValueSource::CommandLine) {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

/// The line every run prints first: the command and its resolved settings.
pub fn echo<A: Serialize>(command: &str, args: &A) -> String {
    serde_json::json!({ "command": command, "config": args }).to_string()
}
