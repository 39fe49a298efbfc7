//! Organized Scan Format (OSF), ASCII.
//!
//! ```text
//! OSF1
//! <rows> <cols>
//! <valid:0|1> <x> <y> <z>     (rows * cols lines, row-major)
//! ```
//!
//! Invalid cells are written as `0 0 0 0`. Coordinates use the shortest
//! decimal form that parses back to the same `f64`, so a written file
//! round-trips byte for byte.

use std::io::{Read, Write};

use super::OrganizedScan;
use crate::{Error, Result, Vec3};

const MAGIC: &str = "OSF1";

pub fn write_scan<W: Write>(scan: &OrganizedScan, mut sink: W) -> Result<()> {
    if scan.rows() < 2 || scan.cols() < 1 {
        return Err(Error::contract("scan needs rows >= 2 and cols >= 1"));
    }
    let mut buf = String::with_capacity(32 * scan.len() + 16);
    buf.push_str(MAGIC);
    buf.push('\n');
    buf.push_str(&format!("{} {}\n", scan.rows(), scan.cols()));
    for (p, &v) in scan.points().iter().zip(scan.valid_mask()) {
        if v {
            buf.push_str(&format!("1 {} {} {}\n", p.x, p.y, p.z));
        } else {
            buf.push_str("0 0 0 0\n");
        }
    }
    sink.write_all(buf.as_bytes())?;
    sink.flush()?;
    Ok(())
}

/// Iterates over `(byte_offset, line)` pairs, without line terminators.
struct Lines<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Iterator for Lines<'a> {
    type Item = (usize, &'a str);

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.text.len() {
            return None;
        }
        let start = self.pos;
        let rest = &self.text[start..];
        let (line, advance) = match rest.find('\n') {
            Some(i) => (&rest[..i], i + 1),
            None => (rest, rest.len()),
        };
        self.pos += advance;
        Some((start, line.strip_suffix('\r').unwrap_or(line)))
    }
}

pub fn read_scan<R: Read>(mut source: R) -> Result<OrganizedScan> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::parse(e.valid_up_to(), "stream is not valid UTF-8"))?;
    let mut lines = Lines { text, pos: 0 };

    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((off, other)) => {
            return Err(Error::parse(
                off,
                format!("expected `{MAGIC}`, found `{other}`"),
            ))
        }
        None => return Err(Error::parse(0, "empty stream")),
    }

    let (off, dims) = lines
        .next()
        .ok_or_else(|| Error::parse(text.len(), "missing dimension line"))?;
    let (rows, cols) = parse_dims(dims)
        .ok_or_else(|| Error::parse(off, format!("malformed dimension line `{dims}`")))?;
    if rows < 2 || cols < 1 {
        return Err(Error::parse(
            off,
            format!("invalid dimensions {rows}x{cols}"),
        ));
    }

    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::parse(off, "dimensions overflow"))?;
    let mut points = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for k in 0..n {
        let (off, line) = lines.next().ok_or_else(|| {
            Error::parse(
                text.len(),
                format!("truncated payload: missing record {k} of {n}"),
            )
        })?;
        let (v, p) =
            parse_record(line).map_err(|msg| Error::parse(off, format!("record {k}: {msg}")))?;
        points.push(p);
        valid.push(v);
    }
    if let Some((off, _)) = lines.next() {
        return Err(Error::parse(off, "trailing data after last record"));
    }

    OrganizedScan::new(rows, cols, points, valid)
}

fn parse_dims(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_ascii_whitespace();
    let rows = it.next()?.parse().ok()?;
    let cols = it.next()?.parse().ok()?;
    it.next().is_none().then_some((rows, cols))
}

fn parse_record(line: &str) -> std::result::Result<(bool, Vec3), String> {
    let tok: Vec<&str> = line.split_ascii_whitespace().collect();
    if tok.len() != 4 {
        return Err(format!("expected 4 fields, found {}", tok.len()));
    }
    match tok[0] {
        "0" => {
            if tok[1..].iter().any(|t| *t != "0") {
                return Err("invalid cell must be `0 0 0 0`".into());
            }
            Ok((false, Vec3::zeros()))
        }
        "1" => {
            let mut c = [0.0; 3];
            for (dst, t) in c.iter_mut().zip(&tok[1..]) {
                *dst = t
                    .parse::<f64>()
                    .map_err(|_| format!("bad coordinate `{t}`"))?;
                if !dst.is_finite() {
                    return Err(format!("non-finite coordinate `{t}` on a valid cell"));
                }
            }
            let p = Vec3::new(c[0], c[1], c[2]);
            if p.norm_squared() == 0.0 {
                return Err("valid cell at zero range".into());
            }
            Ok((true, p))
        }
        other => Err(format!("validity flag must be 0 or 1, found `{other}`")),
    }
}
