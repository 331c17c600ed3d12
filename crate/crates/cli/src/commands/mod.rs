pub mod apparatus;
pub mod logical;
pub mod phase;
pub mod physical;
pub mod trajectory;

use crate::config::{resolve_f64, ConfigFile};
use crate::CliError;

/// Resolve + range-check the stored-state amplitude (no default: the
/// flag or a config entry must supply it).
pub fn need_alpha(flag: Option<f64>, config: &ConfigFile) -> Result<f64, CliError> {
    let alpha = flag
        .or(config.get_f64("alpha")?)
        .ok_or_else(|| CliError::Usage("missing --alpha (no config default either)".into()))?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CliError::Usage(format!("--alpha {} must lie in [0, 1]", alpha)));
    }
    Ok(alpha)
}

pub fn resolve_n_thermal(flag: Option<f64>, config: &ConfigFile) -> Result<f64, CliError> {
    let n = resolve_f64(flag, config.get_f64("n-thermal"), 0.0)?;
    if !(0.0..=0.5).contains(&n) {
        return Err(CliError::Usage(format!("--n-thermal {} must lie in [0, 0.5]", n)));
    }
    Ok(n)
}

pub fn resolve_positive(
    flag: Option<f64>,
    config: &ConfigFile,
    key: &str,
    default: f64,
) -> Result<f64, CliError> {
    let v = resolve_f64(flag, config.get_f64(key), default)?;
    if v <= 0.0 || !v.is_finite() {
        return Err(CliError::Usage(format!("--{} {} must be positive", key, v)));
    }
    Ok(v)
}

/// Parse a `min:max:count` grid specification into a linspace.
pub fn parse_grid(spec: &str, name: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Usage(format!("--{} `{}` is not of the form min:max:count", name, spec));
    if parts.len() != 3 {
        return Err(bad());
    }
    let min: f64 = parts[0].parse().map_err(|_| bad())?;
    let max: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if count < 1 || max < min || !min.is_finite() || !max.is_finite() {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let span = max - min;
    Ok((0..count)
        .map(|i| min + span * (i as f64 / (count - 1) as f64))
        .collect())
}
