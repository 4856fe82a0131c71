//! Flat key-value configuration files.
//!
//! One `key = value` per line, `#` starts a comment, blank lines are
//! ignored. Keys mirror the fields of `ExperimentConfig`; unspecified keys
//! keep their defaults. Unknown or duplicated keys are rejected with the
//! offending line number so typos cannot silently fall back to defaults.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ExperimentConfig, ScaledState, ScalingRegime};

/// All recognized keys, in canonical render order.
const KEYS: [&str; 18] = [
    "k1",
    "km1",
    "k2",
    "regime",
    "n",
    "z0",
    "t_end",
    "replicas",
    "master_seed",
    "grid_points",
    "k2_tilde",
    "sde_dt",
    "jump_cap",
    "threads",
    "occ_eps",
    "occ_burn_in",
    "occ_bins_state",
    "occ_bins_time",
];

/// Parse a configuration file, starting from `ExperimentConfig::default()`.
pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
    from_str(&std::fs::read_to_string(path)?)
}

/// Parse configuration text, starting from `ExperimentConfig::default()`.
///
/// The returned config is validated.
pub fn from_str(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::ConfigParse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(Error::UnknownConfigKey {
                line,
                key: key.to_string(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::ConfigParse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        apply(&mut cfg, key, value).map_err(|message| Error::ConfigParse { line, message })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply(cfg: &mut ExperimentConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    match key {
        "k1" => cfg.rates.k1 = real(key, value)?,
        "km1" => cfg.rates.km1 = real(key, value)?,
        "k2" => cfg.rates.k2 = real(key, value)?,
        "regime" => cfg.regime = regime(value)?,
        "n" => cfg.n = integer(key, value)?,
        "z0" => cfg.z0 = z0(value)?,
        "t_end" => cfg.t_end = real(key, value)?,
        "replicas" => cfg.replicas = integer(key, value)? as usize,
        "master_seed" => cfg.master_seed = integer(key, value)?,
        "grid_points" => cfg.grid_points = integer(key, value)? as usize,
        "k2_tilde" => cfg.k2_tilde = real(key, value)?,
        "sde_dt" => cfg.sde_dt = real(key, value)?,
        "jump_cap" => cfg.jump_cap = integer(key, value)?,
        "threads" => cfg.threads = integer(key, value)? as usize,
        "occ_eps" => cfg.occ_eps = real(key, value)?,
        "occ_burn_in" => cfg.occ_burn_in = real(key, value)?,
        "occ_bins_state" => cfg.occ_bins_state = integer(key, value)? as usize,
        "occ_bins_time" => cfg.occ_bins_time = integer(key, value)? as usize,
        _ => unreachable!("key set checked by caller"),
    }
    Ok(())
}

fn real(key: &str, value: &str) -> std::result::Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|_| format!("`{key}` expects a real number, got `{value}`"))
}

fn integer(key: &str, value: &str) -> std::result::Result<u64, String> {
    value
        .parse::<u64>()
        .map_err(|_| format!("`{key}` expects a non-negative integer, got `{value}`"))
}

fn regime(value: &str) -> std::result::Result<ScalingRegime, String> {
    match value.to_ascii_lowercase().as_str() {
        "tqssa" => Ok(ScalingRegime::TQSSA),
        "sqssa" => Ok(ScalingRegime::SQSSA),
        _ => Err(format!(
            "`regime` expects `tqssa` or `sqssa`, got `{value}`"
        )),
    }
}

fn z0(value: &str) -> std::result::Result<ScaledState, String> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!(
            "`z0` expects four comma-separated reals `zs, ze, zc, zp`, got `{value}`"
        ));
    }
    let mut v = [0.0f64; 4];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .parse::<f64>()
            .map_err(|_| format!("`z0` component `{p}` is not a real number"))?;
    }
    Ok(ScaledState::new(v[0], v[1], v[2], v[3]))
}

/// Render a config as a parseable key-value file mirroring every field.
///
/// `from_str(&render(cfg))` reproduces `cfg` exactly; the CLI writes this
/// next to its outputs so a run can be repeated from its artifacts.
pub fn render(cfg: &ExperimentConfig) -> String {
    let regime = if cfg.regime == ScalingRegime::TQSSA {
        "tqssa"
    } else if cfg.regime == ScalingRegime::SQSSA {
        "sqssa"
    } else {
        "custom"
    };
    let mut s = String::new();
    for key in KEYS {
        let value = match key {
            "k1" => fmt_real(cfg.rates.k1),
            "km1" => fmt_real(cfg.rates.km1),
            "k2" => fmt_real(cfg.rates.k2),
            "regime" => regime.to_string(),
            "n" => cfg.n.to_string(),
            "z0" => format!(
                "{}, {}, {}, {}",
                fmt_real(cfg.z0.zs),
                fmt_real(cfg.z0.ze),
                fmt_real(cfg.z0.zc),
                fmt_real(cfg.z0.zp)
            ),
            "t_end" => fmt_real(cfg.t_end),
            "replicas" => cfg.replicas.to_string(),
            "master_seed" => cfg.master_seed.to_string(),
            "grid_points" => cfg.grid_points.to_string(),
            "k2_tilde" => fmt_real(cfg.k2_tilde),
            "sde_dt" => fmt_real(cfg.sde_dt),
            "jump_cap" => cfg.jump_cap.to_string(),
            "threads" => cfg.threads.to_string(),
            "occ_eps" => fmt_real(cfg.occ_eps),
            "occ_burn_in" => fmt_real(cfg.occ_burn_in),
            "occ_bins_state" => cfg.occ_bins_state.to_string(),
            "occ_bins_time" => cfg.occ_bins_time.to_string(),
            _ => unreachable!(),
        };
        s.push_str(key);
        s.push_str(" = ");
        s.push_str(&value);
        s.push('\n');
    }
    s
}

/// Shortest decimal that parses back to the same f64.
fn fmt_real(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}
