//! Tab-separated parameter traces readable by Tracer.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::ParseError;

pub const TRACE_MAGIC: &str = "# glottochron trace";

/// One thinned MCMC record.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub iteration: u64,
    pub log_likelihood: f64,
    pub log_prior: f64,
    pub tree_height: f64,
    /// Scalar parameters, kept in alphabetical order.
    pub params: BTreeMap<String, f64>,
}

fn header(params: Option<&BTreeMap<String, f64>>) -> String {
    let mut cols = vec!["Sample", "LnL", "LnPrior", "TreeHeight"];
    if let Some(p) = params {
        cols.extend(p.keys().map(String::as_str));
    }
    cols.join("\t")
}

fn row(s: &TraceSample) -> String {
    let mut out = format!(
        "{}\t{}\t{}\t{}",
        s.iteration, s.log_likelihood, s.log_prior, s.tree_height
    );
    for v in s.params.values() {
        out.push('\t');
        out.push_str(&v.to_string());
    }
    out
}

pub fn write_trace<W: Write>(samples: &[TraceSample], mut sink: W) -> std::io::Result<()> {
    if let Some(first) = samples.first() {
        let keys: Vec<&String> = first.params.keys().collect();
        if samples.iter().any(|s| s.params.keys().collect::<Vec<_>>() != keys) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "trace samples do not share one schema",
            ));
        }
    }
    writeln!(sink, "{TRACE_MAGIC}")?;
    writeln!(sink, "{}", header(samples.first().map(|s| &s.params)))?;
    for s in samples {
        writeln!(sink, "{}", row(s))?;
    }
    sink.flush()
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceSample>, ParseError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut header_line = None;
    for (i, l) in lines.by_ref() {
        if l.starts_with('#') {
            continue;
        }
        header_line = Some((i + 1, l));
        break;
    }
    let (hline, header) = header_line.ok_or_else(|| ParseError::line(1, "missing header"))?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() < 4 || cols[..4] != ["Sample", "LnL", "LnPrior", "TreeHeight"] {
        return Err(ParseError::line(
            hline,
            "header must start with Sample, LnL, LnPrior, TreeHeight",
        ));
    }
    let mut out = Vec::new();
    for (i, l) in lines {
        let lineno = i + 1;
        let fields: Vec<&str> = l.split('\t').collect();
        if fields.len() != cols.len() {
            return Err(ParseError::line(
                lineno,
                format!("expected {} fields, found {}", cols.len(), fields.len()),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| ParseError::line(lineno, format!("bad number `{s}`")))
        };
        let iteration = fields[0]
            .parse::<u64>()
            .map_err(|_| ParseError::line(lineno, format!("bad sample index `{}`", fields[0])))?;
        let mut params = BTreeMap::new();
        for (name, v) in cols[4..].iter().zip(&fields[4..]) {
            params.insert(name.to_string(), num(v)?);
        }
        out.push(TraceSample {
            iteration,
            log_likelihood: num(fields[1])?,
            log_prior: num(fields[2])?,
            tree_height: num(fields[3])?,
            params,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(iter: u64, lnl: f64) -> TraceSample {
        TraceSample {
            iteration: iter,
            log_likelihood: lnl,
            log_prior: -3.25,
            tree_height: 6551.5,
            params: [("pi1".to_string(), 0.4), ("alpha".to_string(), 1.5)]
                .into_iter()
                .collect(),
        }
    }

    #[test]
    fn empty_trace_is_header_only() {
        let mut buf = Vec::new();
        write_trace(&[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# glottochron trace\nSample\tLnL\tLnPrior\tTreeHeight\n");
    }

    #[test]
    fn row_formatting_and_column_order() {
        let mut buf = Vec::new();
        write_trace(&[sample(1000, -12.5)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "Sample\tLnL\tLnPrior\tTreeHeight\talpha\tpi1");
        assert!(lines[2].starts_with("1000\t-12.5\t"));
    }

    #[test]
    fn round_trip() {
        let samples = vec![
            sample(0, -100.125),
            sample(1000, -12.5),
            sample(2000, -1.0e-7 / 3.0),
        ];
        let mut buf = Vec::new();
        write_trace(&samples, &mut buf).unwrap();
        let back = parse_trace(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, samples);
    }

    #[test]
    fn mixed_schemas_are_rejected() {
        let mut b = sample(1, 0.0);
        b.params.insert("extra".into(), 1.0);
        assert!(write_trace(&[sample(0, 0.0), b], Vec::new()).is_err());
    }
}
