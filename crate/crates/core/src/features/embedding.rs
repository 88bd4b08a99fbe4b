//! Text-keyed vector tables and their on-disk format.
//!
//! ```text
//! dim=<d>
//! # optional metadata lines
//! <key>\t<f_1> <f_2> ... <f_d>
//! ```
//!
//! Keys escape `\` as `\\`, tab as `\t`, newline as `\n`, carriage return as
//! `\r`, and a leading `#` as `\#`. Floats use the shortest representation
//! that round-trips to the same `f64`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        let key = key.into();
        if let Some(bad) = vector.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("entry {bad} for key `{key}`")));
        }
        self.vectors.insert(key, vector);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.vectors.get(key).map(Vec::as_slice)
    }

    pub fn lookup(&self, key: &str) -> Result<&[f64]> {
        self.get(key).ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn read<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let dim = loop {
            let Some((idx, line)) = lines.next() else {
                return Err(Error::Empty(format!("{source_name}: no `dim=` header")));
            };
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            break line
                .trim()
                .strip_prefix("dim=")
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&d| d > 0)
                .ok_or_else(|| Error::parse(source_name, idx + 1, "expected header `dim=<positive integer>`"))?;
        };
        let mut table = EmbeddingTable::new(dim);
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (raw_key, values) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source_name, lineno, "missing tab separator"))?;
            let key = unescape_key(raw_key).map_err(|m| Error::parse(source_name, lineno, m))?;
            let vector = values
                .split(' ')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(source_name, lineno, format!("bad float `{s}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.len() != dim {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("expected {dim} values, found {}", vector.len()),
                ));
            }
            if table.vectors.contains_key(&key) {
                return Err(Error::parse(source_name, lineno, format!("duplicate key `{key}`")));
            }
            table
                .insert(key, vector)
                .map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
        }
        Ok(table)
    }

    /// Writes the table with optional `#` metadata lines after the header.
    pub fn write<W: Write>(&self, mut w: W, metadata: &[String]) -> Result<()> {
        writeln!(w, "dim={}", self.dim)?;
        for m in metadata {
            writeln!(w, "# {m}")?;
        }
        for (key, vector) in &self.vectors {
            w.write_all(escape_key(key).as_bytes())?;
            w.write_all(b"\t")?;
            for (i, x) in vector.iter().enumerate() {
                if i > 0 {
                    w.write_all(b" ")?;
                }
                write!(w, "{x}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn escape_key(key: &str) -> String {
    let mut out = String::with_capacity(key.len());
    for (i, c) in key.chars().enumerate() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '#' if i == 0 => out.push_str("\\#"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_key(raw: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('#') => out.push('#'),
            other => {
                return Err(format!(
                    "bad escape `\\{}`",
                    other.map(String::from).unwrap_or_default()
                ))
            }
        }
    }
    Ok(out)
}
