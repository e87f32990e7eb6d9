use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaptionError {
    #[error("spectrum metadata lacks {0}")]
    MissingField(String),
    #[error("spectrum metadata field {field} must be {expected}")]
    BadField { field: String, expected: &'static str },
}

/// Keys read from spectrum metadata, in template order.
pub const CAPTION_FIELDS: [&str; 9] = [
    "frequency_mhz",
    "nucleus",
    "solvent",
    "timestamp",
    "scans",
    "scan_delay_s",
    "ppm_low",
    "ppm_high",
    "peaks",
];

/// Numbers keep the spelling they had in the metadata JSON, so `138.0`
/// stays `138.0` and `4` stays `4`.
fn scalar(meta: &Map<String, Value>, field: &str) -> Result<String, CaptionError> {
    match meta.get(field) {
        None | Some(Value::Null) => Err(CaptionError::MissingField(field.to_owned())),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        Some(_) => Err(CaptionError::BadField {
            field: field.to_owned(),
            expected: "a string or number",
        }),
    }
}

pub fn generate_caption(meta: &Map<String, Value>) -> Result<String, CaptionError> {
    let freq = scalar(meta, "frequency_mhz")?;
    let nucleus = scalar(meta, "nucleus")?;
    let solvent = scalar(meta, "solvent")?;
    let timestamp = scalar(meta, "timestamp")?;
    let scans = scalar(meta, "scans")?;
    let delay = scalar(meta, "scan_delay_s")?;
    let lo = scalar(meta, "ppm_low")?;
    let hi = scalar(meta, "ppm_high")?;
    let peaks = match meta.get("peaks") {
        None | Some(Value::Null) => return Err(CaptionError::MissingField("peaks".into())),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::Number(n) => Ok(n.to_string()),
                Value::String(s) => Ok(s.clone()),
                _ => Err(CaptionError::BadField {
                    field: "peaks".into(),
                    expected: "a list of numbers",
                }),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(", "),
        Some(_) => {
            return Err(CaptionError::BadField {
                field: "peaks".into(),
                expected: "a list of numbers",
            })
        }
    };
    Ok(format!(
        "A {freq} MHz {nucleus} NMR in {solvent} collected on {timestamp} with {scans} scans and a scan delay of \
         {delay} seconds. The displayed spectrum is between {lo} and {hi} PPM. Peaks (ppm): {peaks}"
    ))
}
