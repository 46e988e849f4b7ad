//! Flag value parsers shared by the subcommands.

/// A comma list (or range) given as one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

pub fn frequency_flag(s: &str) -> Result<FloatList, String> {
    frequency_list(s).map(FloatList)
}

pub fn list_flag(s: &str) -> Result<FloatList, String> {
    float_list(s).map(FloatList)
}

/// Parses `start:step:end` (end inclusive within 1e-9) or a comma list.
pub fn frequency_list(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => float_list(s),
        3 => {
            let [start, step, end] = [parts[0], parts[1], parts[2]].map(|p| p.trim().parse::<f64>());
            let (start, step, end) = (
                start.map_err(|e| format!("bad range start: {e}"))?,
                step.map_err(|e| format!("bad range step: {e}"))?,
                end.map_err(|e| format!("bad range end: {e}"))?,
            );
            if step.is_nan() || step <= 0.0 || end < start {
                return Err(format!("range {s} must have step > 0 and end >= start"));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + step * i as f64).collect())
        }
        _ => Err(format!("expected start:step:end or a comma list, got {s:?}")),
    }
}

/// Parses a comma-separated list of floats. An empty string gives an empty
/// list so that the library can report which grid is empty.
pub fn float_list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect()
}

/// Parses a float that may also be `inf`.
pub fn snr(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        other => other.parse::<f64>().map_err(|e| e.to_string()),
    }
}
