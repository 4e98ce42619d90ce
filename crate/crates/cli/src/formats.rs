//! Text, CSV and JSON renderings of run artifacts.

use std::fmt::Write as _;

use serde_json::{json, Value};
use tlcs_core::linalg::Matrix;
use tlcs_core::protocol::{bits_to_string, index_to_bits, ShotRecord};
use tlcs_core::tomography::{ExpectationTable, SettingCounts};

/// One record per line: herald bits, outcome bits, accepted flag.
pub fn records_text(records: &[ShotRecord]) -> String {
    let mut out = String::from("# herald outcomes accepted\n");
    for r in records {
        let _ = writeln!(
            out,
            "{}{} {} {}",
            r.herald[0],
            r.herald[1],
            bits_to_string(&r.outcomes),
            u8::from(r.accepted)
        );
    }
    out
}

/// Inverse of [`records_text`]; shot indices are the line order.
pub fn parse_records(text: &str) -> Option<Vec<ShotRecord>> {
    let bits = |s: &str| {
        s.chars()
            .map(|c| match c {
                '0' => Some(0u8),
                '1' => Some(1u8),
                _ => None,
            })
            .collect::<Option<Vec<u8>>>()
    };
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .enumerate()
        .map(|(shot, line)| {
            let mut fields = line.split_whitespace();
            let herald = bits(fields.next()?)?;
            let outcomes = bits(fields.next()?)?;
            let accepted = fields.next()? == "1";
            (herald.len() == 2 && fields.next().is_none()).then(|| ShotRecord {
                shot: shot as u64,
                herald: [herald[0], herald[1]],
                outcomes,
                accepted,
            })
        })
        .collect()
}

/// `string,probability` rows in big-endian string order.
pub fn distribution_csv(n: usize, probabilities: &[f64]) -> String {
    let mut out = String::from("string,probability\n");
    for (i, p) in probabilities.iter().enumerate() {
        let _ = writeln!(out, "{},{}", bits_to_string(&index_to_bits(i, n)), p);
    }
    out
}

pub fn expectation_csv(table: &ExpectationTable) -> String {
    let mut out = String::from("pauli_string,estimate,shots\n");
    for (pauli, e) in table.iter() {
        let _ = writeln!(out, "{pauli},{},{}", e.estimate, e.shots);
    }
    out
}

/// `setting,string,count` rows for every setting.
pub fn counts_csv(counts: &[SettingCounts]) -> String {
    let mut out = String::from("setting,string,count\n");
    for c in counts {
        let setting = tlcs_core::gates::basis_word(&c.setting);
        let n = c.setting.len();
        for (i, k) in c.counts.iter().enumerate() {
            let _ = writeln!(
                out,
                "{setting},{},{k}",
                bits_to_string(&index_to_bits(i, n))
            );
        }
    }
    out
}

/// Nested rows of `[re, im]` pairs.
pub fn matrix_json(m: &Matrix) -> Value {
    let d = m.dim();
    Value::Array(
        (0..d)
            .map(|i| {
                Value::Array(
                    (0..d)
                        .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn matrix_json_text(m: &Matrix) -> String {
    let mut text = serde_json::to_string(&matrix_json(m)).expect("finite numbers");
    text.push('\n');
    text
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessSummary {
    pub n: usize,
    pub fidelity: f64,
    pub witness: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn witness_summary_csv(rows: &[WitnessSummary]) -> String {
    let mut out = String::from("N,fidelity,witness,ci_low,ci_high\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n, r.fidelity, r.witness, r.ci_low, r.ci_high
        );
    }
    out
}

/// Whitespace-separated columns with a `#` header, readable by gnuplot.
pub fn gnuplot_data(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = format!("# {}\n", header.join(" "));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tlcs_core::linalg::Complex64;

    #[test]
    fn records_round_trip() {
        let records = vec![
            ShotRecord {
                shot: 0,
                herald: [0, 0],
                outcomes: vec![0, 1, 1],
                accepted: true,
            },
            ShotRecord {
                shot: 1,
                herald: [1, 0],
                outcomes: vec![1, 1, 0],
                accepted: false,
            },
        ];
        let text = records_text(&records);
        assert_eq!(text, "# herald outcomes accepted\n00 011 1\n10 110 0\n");
        assert_eq!(parse_records(&text).unwrap(), records);
        assert!(parse_records("0 011 1\n").is_none());
    }

    #[test]
    fn distribution_rows() {
        assert_eq!(
            distribution_csv(2, &[0.25, 0.25, 0.5, 0.0]),
            "string,probability\n00,0.25\n01,0.25\n10,0.5\n11,0\n"
        );
    }

    #[test]
    fn matrix_as_pairs() {
        let mut m = Matrix::identity(2);
        m[(0, 1)] = Complex64::new(0.0, -0.5);
        assert_eq!(
            matrix_json_text(&m),
            "[[[1.0,0.0],[0.0,-0.5]],[[0.0,0.0],[1.0,0.0]]]\n"
        );
    }

    #[test]
    fn summary_and_gnuplot() {
        let row = WitnessSummary {
            n: 3,
            fidelity: 0.7,
            witness: -0.2,
            ci_low: -0.25,
            ci_high: -0.15,
        };
        assert_eq!(
            witness_summary_csv(&[row]),
            "N,fidelity,witness,ci_low,ci_high\n3,0.7,-0.2,-0.25,-0.15\n"
        );
        assert_eq!(
            gnuplot_data(&["N", "w"], &[vec![3.0, -0.2]]),
            "# N w\n3 -0.2\n"
        );
    }
}
