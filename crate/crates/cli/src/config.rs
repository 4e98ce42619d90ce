//! Flat `key = value` noise-parameter files.
//!
//! Keys may be grouped under `[a]` and `[b]` sections, which prefix them
//! with `a.` and `b.`. Durations need a unit suffix (`s`, `ms`, `us`, `µs`,
//! `ns`); probabilities are bare numbers. `#` and `;` start comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;
use tlcs_core::noise::{CnotDamping, NoiseParams, QubitParams};

/// The bundled reference parameter set.
pub const REFERENCE_DEVICE: &str = include_str!("../data/reference_device.conf");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { key: String, line: usize },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("key `{key}`: cannot parse `{value}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: &'static str,
    },
    #[error("invalid parameters: {0}")]
    Invalid(#[from] tlcs_core::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Clone, Copy)]
enum Kind {
    Duration,
    Probability,
}

const KEYS: [(&str, Kind); 20] = [
    ("a.t1", Kind::Duration),
    ("a.t2_star", Kind::Duration),
    ("a.t_pi2", Kind::Duration),
    ("a.t_pi", Kind::Duration),
    ("a.p_err_m", Kind::Probability),
    ("b.t1", Kind::Duration),
    ("b.t2_star", Kind::Duration),
    ("b.t_pi2", Kind::Duration),
    ("b.t_pi", Kind::Duration),
    ("b.p_err_m", Kind::Probability),
    ("t_cnot", Kind::Duration),
    ("t_buffer", Kind::Duration),
    ("t_meas_a", Kind::Duration),
    ("t_meas_b", Kind::Duration),
    ("t_reset", Kind::Duration),
    ("t_a_wait", Kind::Duration),
    ("t_m_wait", Kind::Duration),
    ("t_r_wait", Kind::Duration),
    ("p_err_ini", Kind::Probability),
    ("p_thermal", Kind::Probability),
];

const OPTIONAL_KEYS: [&str; 2] = ["cnot_damping", "damp_basis_rotations"];

const UNITS: [(&str, f64); 6] = [
    ("ns", 1e-9),
    ("us", 1e-6),
    ("µs", 1e-6),
    ("μs", 1e-6),
    ("ms", 1e-3),
    ("s", 1.0),
];

fn parse_duration(key: &str, raw: &str) -> Result<f64, ConfigError> {
    let bad = |reason| ConfigError::BadValue {
        key: key.to_string(),
        value: raw.to_string(),
        reason,
    };
    let (number, factor) = UNITS
        .iter()
        .find_map(|(unit, f)| raw.strip_suffix(unit).map(|n| (n.trim(), *f)))
        .ok_or_else(|| bad("durations need a unit (s, ms, us, ns)"))?;
    let value: f64 = number.parse().map_err(|_| bad("not a number"))?;
    if !value.is_finite() {
        return Err(bad("not finite"));
    }
    Ok(value * factor)
}

fn parse_number(key: &str, raw: &str) -> Result<f64, ConfigError> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::BadValue {
            key: key.to_string(),
            value: raw.to_string(),
            reason: "not a number",
        })
}

/// Key/value pairs with section prefixes applied.
fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut pairs = BTreeMap::new();
    let mut section = String::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split(['#', ';']).next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::Syntax { line: line_no })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: line_no });
        }
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        let known = KEYS.iter().any(|(k, _)| *k == full) || OPTIONAL_KEYS.contains(&full.as_str());
        if !known {
            return Err(ConfigError::UnknownKey {
                key: full,
                line: line_no,
            });
        }
        if pairs.insert(full.clone(), value.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey {
                key: full,
                line: line_no,
            });
        }
    }
    Ok(pairs)
}

pub fn parse_noise_params(text: &str) -> Result<NoiseParams, ConfigError> {
    let pairs = parse_pairs(text)?;
    let mut values = [0.0; KEYS.len()];
    for (slot, (key, kind)) in values.iter_mut().zip(KEYS) {
        let raw = pairs.get(key).ok_or(ConfigError::MissingKey(key))?;
        *slot = match kind {
            Kind::Duration => parse_duration(key, raw)?,
            Kind::Probability => parse_number(key, raw)?,
        };
    }
    let cnot_damping = match pairs.get("cnot_damping") {
        None => CnotDamping::default(),
        Some(raw) => CnotDamping::parse(raw).ok_or_else(|| ConfigError::BadValue {
            key: "cnot_damping".into(),
            value: raw.clone(),
            reason: "expected before, after or split",
        })?,
    };
    let damp_basis_rotations = match pairs.get("damp_basis_rotations").map(String::as_str) {
        None | Some("true") => true,
        Some("false") => false,
        Some(raw) => {
            return Err(ConfigError::BadValue {
                key: "damp_basis_rotations".into(),
                value: raw.to_string(),
                reason: "expected true or false",
            })
        }
    };
    let [a_t1, a_t2, a_pi2, a_pi, a_pm, b_t1, b_t2, b_pi2, b_pi, b_pm, t_cnot, t_buffer, t_meas_a, t_meas_b, t_reset, t_a_wait, t_m_wait, t_r_wait, p_err_ini, p_thermal] =
        values;
    let params = NoiseParams {
        a: QubitParams {
            t1: a_t1,
            t2_star: a_t2,
            t_pi2: a_pi2,
            t_pi: a_pi,
            p_err_m: a_pm,
        },
        b: QubitParams {
            t1: b_t1,
            t2_star: b_t2,
            t_pi2: b_pi2,
            t_pi: b_pi,
            p_err_m: b_pm,
        },
        t_cnot,
        t_buffer,
        t_meas_a,
        t_meas_b,
        t_reset,
        t_a_wait,
        t_m_wait,
        t_r_wait,
        p_err_ini,
        p_thermal,
        cnot_damping,
        damp_basis_rotations,
    };
    params.validate()?;
    Ok(params)
}

pub fn load_noise_params(path: &Path) -> Result<NoiseParams, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_noise_params(&text)
}

pub fn reference_noise_params() -> NoiseParams {
    parse_noise_params(REFERENCE_DEVICE).expect("bundled parameters are valid")
}

/// Shortest rendering of a duration that parses back to the same value.
fn format_duration(seconds: f64) -> String {
    for (unit, factor) in [("us", 1e-6), ("ns", 1e-9)] {
        let text = format!("{}", seconds / factor);
        if text.len() <= 8 && text.parse::<f64>().map(|v| v * factor) == Ok(seconds) {
            return format!("{text} {unit}");
        }
    }
    format!("{seconds} s")
}

/// Renders parameters in the file format; parsing the output gives back `p` exactly.
pub fn write_noise_params(p: &NoiseParams) -> String {
    let mut out = String::new();
    let shared: [(&str, f64); 8] = [
        ("t_cnot", p.t_cnot),
        ("t_buffer", p.t_buffer),
        ("t_meas_a", p.t_meas_a),
        ("t_meas_b", p.t_meas_b),
        ("t_reset", p.t_reset),
        ("t_a_wait", p.t_a_wait),
        ("t_m_wait", p.t_m_wait),
        ("t_r_wait", p.t_r_wait),
    ];
    for (key, t) in shared {
        let _ = writeln!(out, "{key} = {}", format_duration(t));
    }
    let _ = writeln!(out, "p_err_ini = {}", p.p_err_ini);
    let _ = writeln!(out, "p_thermal = {}", p.p_thermal);
    let _ = writeln!(out, "cnot_damping = {}", p.cnot_damping.as_str());
    let _ = writeln!(out, "damp_basis_rotations = {}", p.damp_basis_rotations);
    for (name, q) in [("a", &p.a), ("b", &p.b)] {
        let _ = writeln!(out, "\n[{name}]");
        let _ = writeln!(out, "t1 = {}", format_duration(q.t1));
        let _ = writeln!(out, "t2_star = {}", format_duration(q.t2_star));
        let _ = writeln!(out, "t_pi2 = {}", format_duration(q.t_pi2));
        let _ = writeln!(out, "t_pi = {}", format_duration(q.t_pi));
        let _ = writeln!(out, "p_err_m = {}", q.p_err_m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_is_the_reference_device() {
        let p = reference_noise_params();
        assert_eq!(p, NoiseParams::reference_device());
        assert!((p.a.t1 - 20e-6).abs() < 1e-18);
        assert_eq!(p.a.p_err_m, 0.050);
        assert_eq!(p.b.p_err_m, 0.053);
        assert_eq!(p.p_err_ini, 0.03);
        assert!((p.t_a_wait - 1.45e-6).abs() < 1e-18);
    }

    #[test]
    fn units() {
        assert_eq!(parse_duration("k", "296 ns").unwrap(), 296.0 * 1e-9);
        assert_eq!(parse_duration("k", "1.45us").unwrap(), 1.45 * 1e-6);
        assert_eq!(parse_duration("k", "1.45 µs").unwrap(), 1.45 * 1e-6);
        assert_eq!(parse_duration("k", "2 ms").unwrap(), 2.0 * 1e-3);
        assert_eq!(parse_duration("k", "3e-6 s").unwrap(), 3e-6);
        assert!(matches!(
            parse_duration("k", "20"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            parse_duration("k", "x ns"),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn empty_file_names_first_missing_key() {
        let err = parse_noise_params("").unwrap_err();
        assert!(matches!(err, ConfigError::MissingKey("a.t1")));
        assert_eq!(err.to_string(), "missing key `a.t1`");
    }

    #[test]
    fn excessive_dephasing_time_is_rejected() {
        let text = REFERENCE_DEVICE.replace("t2_star = 29 us", "t2_star = 50 us");
        assert!(matches!(
            parse_noise_params(&text),
            Err(ConfigError::Invalid(
                tlcs_core::Error::DephasingExceedsRelaxation { .. }
            ))
        ));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        assert!(matches!(
            parse_noise_params("t1 20 us"),
            Err(ConfigError::Syntax { line: 1 })
        ));
        assert!(matches!(
            parse_noise_params("\n[c]\nt1 = 2 us"),
            Err(ConfigError::UnknownKey { line: 3, .. })
        ));
        let dup = format!("{REFERENCE_DEVICE}\n[a]\nt1 = 20 us\n");
        assert!(matches!(
            parse_noise_params(&dup),
            Err(ConfigError::DuplicateKey { .. })
        ));
        let bad = REFERENCE_DEVICE.replace("p_err_ini = 0.03", "p_err_ini = 1.5");
        assert!(matches!(
            parse_noise_params(&bad),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn written_config_round_trips() {
        let mut p = NoiseParams::reference_device();
        assert_eq!(parse_noise_params(&write_noise_params(&p)).unwrap(), p);
        p.a.t1 = 17.3e-6;
        p.t_buffer = 1.0 / 3.0 * 1e-8;
        p.cnot_damping = CnotDamping::Split;
        p.damp_basis_rotations = false;
        assert_eq!(parse_noise_params(&write_noise_params(&p)).unwrap(), p);
    }
}
