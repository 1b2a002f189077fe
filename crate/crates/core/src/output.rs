//! Versioned CSV tables.
//!
//! Every file starts with a `# schema: <name>/<version>` line followed by a
//! header row of `name[unit]` columns. Numbers are printed with 12
//! significant digits in the style of C's `%.12g`, with `\n` line endings.

use std::io::{self, Write};

use crate::analysis::{EntropyErrors, EntropyRecord};

pub const SCHEMA_ENTROPY: &str = "collapse-lab/entropy/1";
pub const SCHEMA_TRAJECTORIES: &str = "collapse-lab/trajectories/1";
pub const SCHEMA_AVERAGES: &str = "collapse-lab/averages/1";
pub const SCHEMA_INTERRUPT: &str = "collapse-lab/interrupt/1";

/// `%.12g`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (11 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(schema: &'static str, columns: Vec<String>) -> Self {
        Self {
            schema,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# schema: {}", self.schema)?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|&x| format_number(x)))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        buf
    }
}

/// Entropy records, with jackknife SE columns when available.
pub fn entropy_table(records: &[EntropyRecord], errors: Option<&EntropyErrors>) -> Table {
    let mut columns: Vec<String> = [
        "tJ[1]",
        "s_td[nat]",
        "s_ent_avg[nat]",
        "s_sum[nat]",
        "s_td_int[nat]",
        "weight[1]",
        "coherence_re[1]",
        "coherence_im[1]",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    if errors.is_some() {
        columns.extend(
            [
                "s_td_se[nat]",
                "s_ent_avg_se[nat]",
                "s_sum_se[nat]",
                "s_td_int_se[nat]",
                "weight_se[1]",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
    }
    let mut table = Table::new(SCHEMA_ENTROPY, columns);
    for (k, r) in records.iter().enumerate() {
        let mut row = vec![
            r.t,
            r.s_td,
            r.s_ent_avg,
            r.s_sum,
            r.s_td_int,
            r.weight,
            r.coherence.re,
            r.coherence.im,
        ];
        if let Some(e) = errors {
            row.extend([e.s_td[k], e.s_ent_avg[k], e.s_sum[k], e.s_td_int[k], e.weight[k]]);
        }
        table.push(row);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_match_printf_g12() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (0.75, "0.75"),
            (std::f64::consts::LN_2, "0.69314718056"),
            (0.5623351446188085, "0.562335144619"),
            (1e-3, "0.001"),
            (1.234e-5, "1.234e-05"),
            (6.0, "6"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (-2.5e-7, "-2.5e-07"),
            (9.9999999999995, "10"),
            (f64::NAN, "nan"),
        ];
        for (x, want) in cases {
            assert_eq!(format_number(x), want, "{x}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(SCHEMA_AVERAGES, vec!["tJ[1]".into(), "weight[1]".into()]);
        t.push(vec![0.0, 0.75]);
        t.push(vec![0.01, 0.7500001]);
        let text = String::from_utf8(t.to_csv_bytes()).unwrap();
        assert_eq!(
            text,
            "# schema: collapse-lab/averages/1\ntJ[1],weight[1]\n0,0.75\n0.01,0.7500001\n"
        );
    }
}
