//! Tab-separated tables with an optional `#` comment preamble.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) struct Table {
    /// Preamble lines without the leading `#` and surrounding whitespace.
    pub preamble: Vec<String>,
    pub header: Vec<String>,
    /// (1-based file line, fields)
    pub rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    pub fn read(mut reader: impl Read) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        let mut preamble = Vec::new();
        let mut body = text.as_str();
        while body.starts_with('#') {
            let (line, rest) = body.split_once('\n').unwrap_or((body, ""));
            preamble.push(line.trim_start_matches('#').trim().to_string());
            body = rest;
        }
        let offset = preamble.len();

        let mut csv = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .quoting(false)
            .has_headers(true)
            .flexible(true)
            .from_reader(body.as_bytes());
        let header: Vec<String> = csv
            .headers()
            .map_err(|e| Error::parse(offset + 1, e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if header.iter().all(|h| h.is_empty()) {
            return Err(Error::parse(offset + 1, "missing header row"));
        }
        let mut rows = Vec::new();
        for record in csv.records() {
            let record = record?;
            let line = offset + record.position().map_or(0, |p| p.line() as usize);
            if record.len() == 1 && record[0].trim().is_empty() {
                continue;
            }
            if record.len() != header.len() {
                return Err(Error::parse(
                    line,
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            rows.push((line, record.iter().map(|f| f.trim().to_string()).collect()));
        }
        Ok(Self { preamble, header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.try_column(name)
            .ok_or_else(|| Error::parse(self.preamble.len() + 1, format!("missing column `{name}`")))
    }

    pub fn try_column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// `key=value` pairs from the preamble.
    pub fn preamble_value(&self, key: &str) -> Option<&str> {
        self.preamble
            .iter()
            .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(line: usize, column: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::parse(line, format!("column `{column}`: cannot parse `{raw}`")))
}

pub(crate) fn parse_optional_f64(line: usize, column: &str, raw: &str) -> Result<Option<f64>> {
    if raw == "NA" || raw.is_empty() {
        Ok(None)
    } else {
        parse_field(line, column, raw).map(Some)
    }
}

pub(crate) fn write_preamble(out: &mut impl Write, preamble: &[String]) -> std::io::Result<()> {
    for line in preamble {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

pub(crate) fn fmt_optional(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}
