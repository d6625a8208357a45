//! Text output for simulation results.

use std::fmt::Write as _;
use std::str::FromStr;

use super::run::SimResult;
use super::table::SuiteCell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Tsv,
    Pretty,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "tsv" => Ok(Format::Tsv),
            "pretty" => Ok(Format::Pretty),
            other => Err(format!("unknown format {other:?}; expected csv, tsv or pretty")),
        }
    }
}

/// Six significant digits, or the shortest round-trip form when `full`.
pub fn format_number(x: f64, full: bool) -> String {
    if full || !x.is_finite() || x == 0.0 {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let sci = format!("{x:.5e}");
    let (mant, e) = sci.split_once('e').expect("exponent form");
    let exp: i32 = e.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    let s = if (-4..6).contains(&exp) {
        trim(&format!("{:.*}", (5 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim(mant))
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn opt(x: Option<f64>, full: bool) -> String {
    x.map_or_else(|| "NA".into(), |v| format_number(v, full))
}

pub const COLUMNS: [&str; 6] = ["estimator", "bias", "se_bias", "mse", "se_mse", "failures"];

fn header_comment(res: &SimResult, full: bool) -> String {
    let c = &res.config;
    format!(
        "# n={} r={} p={} m={} lambda={} beta={} tau2={} sigma2={} seed={} reps={}\n",
        c.n,
        c.r,
        res.p,
        res.m,
        format_number(res.lambda, full),
        format_number(c.beta, full),
        format_number(c.tau2, full),
        format_number(c.sigma2, full),
        c.seed,
        c.reps
    )
}

fn cells(res: &SimResult, full: bool) -> Vec<Vec<String>> {
    res.rows
        .iter()
        .map(|r| {
            vec![
                r.estimator.clone(),
                format_number(r.bias, full),
                opt(r.se_bias, full),
                format_number(r.mse, full),
                opt(r.se_mse, full),
                r.failures.to_string(),
            ]
        })
        .collect()
}

fn delimited(header: &[&str], rows: &[Vec<String>], sep: char) -> String {
    let mut out = header.join(&sep.to_string());
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(&sep.to_string()));
        out.push('\n');
    }
    out
}

/// Right-aligned columns with a rule under the header.
pub fn pretty(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let _ = write!(s, "{c:>w$}");
        }
        s.push('\n');
        s
    };
    let mut out = line(&mut header.iter().copied());
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
    }
    out
}

fn table(header: &[&str], rows: &[Vec<String>], format: Format) -> String {
    match format {
        Format::Csv => delimited(header, rows, ','),
        Format::Tsv => delimited(header, rows, '\t'),
        Format::Pretty => pretty(header, rows),
    }
}

pub fn render_result(res: &SimResult, format: Format, full: bool) -> String {
    header_comment(res, full) + &table(&COLUMNS, &cells(res, full), format)
}

/// One table for the whole suite with the design coordinates as leading
/// columns, preceded by one comment line per cell.
pub fn render_suite(suite: &[SuiteCell], format: Format, full: bool) -> String {
    let mut out = String::new();
    let mut rows = Vec::new();
    for sc in suite {
        out.push_str(&header_comment(&sc.result, full));
        for row in cells(&sc.result, full) {
            let mut r = vec![
                format_number(sc.cell.sigma_xi2, true),
                format_number(sc.cell.sigma2, true),
                sc.cell.n.to_string(),
            ];
            r.extend(row);
            rows.push(r);
        }
    }
    let mut header = vec!["sigma_xi2", "sigma2", "n"];
    header.extend(COLUMNS);
    out + &table(&header, &rows, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.59055123, "0.590551"),
            (-0.289041234, "-0.289041"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e6"),
            (0.0000123456789, "1.23457e-5"),
            (72.5, "72.5"),
            (999999.6, "1e6"),
            (0.000123456, "0.000123456"),
            (-5.0, "-5"),
            (0.999999951, "1"),
        ];
        for (x, want) in cases {
            assert_eq!(format_number(x, false), want, "{x}");
        }
        assert_eq!(format_number(0.1 + 0.2, true), "0.30000000000000004");
        assert_eq!(format_number(f64::NAN, false), "NaN");
    }

    #[test]
    fn formats_parse() {
        assert_eq!("CSV".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("pretty".parse::<Format>().unwrap(), Format::Pretty);
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn pretty_alignment() {
        let t = pretty(&["a", "bb"], &[vec!["xyz".into(), "1".into()]]);
        assert_eq!(t, "  a  bb\n-------\nxyz   1\n");
    }
}
