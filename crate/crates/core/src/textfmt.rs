//! Helpers shared by the line-oriented model and pattern file formats.

use crate::error::{Error, Result};

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub(crate) fn fmt_items(items: &[u32]) -> String {
    items
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) struct Lines<'a> {
    source: &'a str,
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str, source: &'a str) -> Self {
        Lines {
            source,
            lines: text.lines().enumerate().peekable(),
            line_no: 0,
        }
    }

    pub fn err(&self, message: impl Into<String>) -> Error {
        Error::parse(self.source, self.line_no, message)
    }

    pub fn next_line(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line_no = i + 1;
                Ok(l)
            }
            None => Err(Error::Truncated(format!(
                "{}: unexpected end of file",
                self.source
            ))),
        }
    }

    pub fn at_end(&mut self) -> bool {
        self.lines.peek().is_none()
    }

    /// Reads `key value` and returns `value` (the rest of the line).
    pub fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ if line == key => Ok(""),
            _ => Err(self.err(format!("expected `{key} ...`"))),
        }
    }

    /// Reads `key first second`.
    pub fn field2(&mut self, key: &str) -> Result<(&'a str, &'a str)> {
        let v = self.field(key)?;
        v.split_once(' ')
            .ok_or_else(|| self.err(format!("expected `{key} <a> <b>`")))
    }

    pub fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.trim()
            .parse()
            .map_err(|_| self.err(format!("bad value {v:?} for {key}")))
    }

    pub fn expect_format(&mut self, tag: &str) -> Result<()> {
        let v = self.field("format")?;
        if v != tag {
            return Err(self.err(format!("expected format {tag}, found {v}")));
        }
        Ok(())
    }

    pub fn parse_items(&self, s: &str) -> Result<Vec<u32>> {
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(',')
            .map(|x| x.parse().map_err(|_| self.err(format!("bad item {x:?}"))))
            .collect()
    }

    pub fn parse_f64(&self, s: &str) -> Result<f64> {
        let v: f64 = s
            .parse()
            .map_err(|_| self.err(format!("bad number {s:?}")))?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite number {s:?}")));
        }
        Ok(v)
    }

    pub fn parse_f64s(&self, s: &str, expected: usize) -> Result<Vec<f64>> {
        let v: Vec<f64> = s
            .split_whitespace()
            .map(|x| self.parse_f64(x))
            .collect::<Result<_>>()?;
        if v.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: v.len(),
            });
        }
        Ok(v)
    }
}

/// Splits `k1 v1 k2 v2 ...` checking the keys in order.
pub(crate) fn keyed<'a>(lines: &Lines<'_>, s: &'a str, keys: &[&str]) -> Result<Vec<&'a str>> {
    let toks: Vec<&str> = s.split(' ').collect();
    if toks.len() != keys.len() * 2 {
        return Err(lines.err(format!("expected fields {keys:?}")));
    }
    keys.iter()
        .enumerate()
        .map(|(i, k)| {
            if toks[2 * i] == *k {
                Ok(toks[2 * i + 1])
            } else {
                Err(lines.err(format!("expected field {k}, found {}", toks[2 * i])))
            }
        })
        .collect()
}
