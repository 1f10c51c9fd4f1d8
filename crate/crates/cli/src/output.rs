use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::commands::CliError;

/// Rounds to 9 significant digits for display.
fn round_sig9(x: f64) -> f64 {
    if x.is_finite() && x != 0.0 {
        format!("{x:.8e}").parse().unwrap_or(x)
    } else {
        x
    }
}

fn round_numbers(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().map(round_sig9).and_then(serde_json::Number::from_f64) {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Prints one JSON record on standard output, floats at 9 significant digits.
pub fn print_record<T: Serialize>(record: &T) -> Result<(), CliError> {
    let mut value = serde_json::to_value(record).map_err(|e| CliError::Invalid(e.to_string()))?;
    round_numbers(&mut value);
    println!("{value}");
    Ok(())
}

/// Writes a machine-readable file at full double precision.
pub fn write_file<T: Serialize>(path: &Path, record: &T) -> Result<(), CliError> {
    let text =
        serde_json::to_string_pretty(record).map_err(|e| CliError::Invalid(e.to_string()))?;
    fs::write(path, text + "\n")
        .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(round_sig9(0.731_058_578_630_005), 0.731_058_579);
        assert_eq!(round_sig9(1_234.567_890_123), 1_234.567_89);
        assert_eq!(round_sig9(0.0), 0.0);
        let mut v = serde_json::json!({"p": [0.183_939_720_585_721_17], "index": 3});
        round_numbers(&mut v);
        assert_eq!(v, serde_json::json!({"p": [0.183_939_721], "index": 3}));
    }
}
