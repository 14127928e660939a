//! Matrix Market I/O.
//!
//! Sparse matrices use the coordinate format with the banner
//! `%%MatrixMarket matrix coordinate real general` (or `symmetric`, whose
//! lower triangle is mirrored on read). Dense vectors use the array format
//! `%%MatrixMarket matrix array real general` with a single column.
//! Indices are 1-based on disk and 0-based in memory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Crs, TripletList};
use crate::error::{Error, Result};

const BANNER_GENERAL: &str = "%%MatrixMarket matrix coordinate real general";
const BANNER_SYMMETRIC: &str = "%%MatrixMarket matrix coordinate real symmetric";
const BANNER_ARRAY: &str = "%%MatrixMarket matrix array real general";

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Lines after the banner, skipping comments and blanks, tagged with 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

/// Parses coordinate-format text.
pub fn parse_triplets(text: &str) -> Result<TripletList> {
    let banner = text.lines().next().unwrap_or("").trim_end();
    let symmetric = match banner {
        BANNER_GENERAL => false,
        BANNER_SYMMETRIC => true,
        _ => return Err(parse_err(1, format!("unsupported banner '{banner}'"))),
    };
    let mut lines = data_lines(text);
    let (size_line, size) = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))?;
    let mut toks = size.split_whitespace();
    let n_rows: usize = parse_field(toks.next(), size_line, "row count")?;
    let n_cols: usize = parse_field(toks.next(), size_line, "column count")?;
    let nnz: usize = parse_field(toks.next(), size_line, "entry count")?;
    if toks.next().is_some() {
        return Err(parse_err(size_line, "trailing tokens on size line"));
    }
    if symmetric && n_rows != n_cols {
        return Err(parse_err(size_line, "symmetric matrix must be square"));
    }
    let mut t = TripletList::with_capacity(n_rows, n_cols, if symmetric { 2 * nnz } else { nnz });
    let mut count = 0usize;
    let mut last_line = size_line;
    for (ln, l) in lines {
        last_line = ln;
        let mut toks = l.split_whitespace();
        let r: usize = parse_field(toks.next(), ln, "row index")?;
        let c: usize = parse_field(toks.next(), ln, "column index")?;
        let v: f64 = parse_field(toks.next(), ln, "value")?;
        if r == 0 || c == 0 || r > n_rows || c > n_cols {
            return Err(parse_err(ln, format!("index ({r}, {c}) out of range")));
        }
        count += 1;
        if count > nnz {
            return Err(parse_err(ln, format!("more than the declared {nnz} entries")));
        }
        t.push(r - 1, c - 1, v);
        if symmetric && r != c {
            t.push(c - 1, r - 1, v);
        }
    }
    if count != nnz {
        return Err(parse_err(
            last_line,
            format!("declared {nnz} entries, found {count}"),
        ));
    }
    Ok(t)
}

pub fn mm_read(path: impl AsRef<Path>) -> Result<TripletList> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_triplets(&text)
}

pub fn write_crs<W: Write>(mut w: W, a: &Crs) -> std::io::Result<()> {
    writeln!(w, "{BANNER_GENERAL}")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for i in 0..a.n_rows() {
        for (j, v) in a.row(i) {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
        }
    }
    w.flush()
}

pub fn mm_write(path: impl AsRef<Path>, a: &Crs) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_crs(BufWriter::new(f), a).map_err(|e| Error::io(path, e))
}

/// Parses an array-format single column vector.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let banner = text.lines().next().unwrap_or("").trim_end();
    if banner != BANNER_ARRAY {
        return Err(parse_err(1, format!("unsupported banner '{banner}'")));
    }
    let mut lines = data_lines(text);
    let (size_line, size) = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))?;
    let mut toks = size.split_whitespace();
    let n: usize = parse_field(toks.next(), size_line, "row count")?;
    let cols: usize = parse_field(toks.next(), size_line, "column count")?;
    if cols != 1 {
        return Err(parse_err(size_line, "only single-column arrays are supported"));
    }
    let mut out = Vec::with_capacity(n);
    let mut last_line = size_line;
    for (ln, l) in lines {
        last_line = ln;
        if out.len() == n {
            return Err(parse_err(ln, format!("more than the declared {n} values")));
        }
        out.push(parse_field(Some(l), ln, "value")?);
    }
    if out.len() != n {
        return Err(parse_err(
            last_line,
            format!("declared {n} values, found {}", out.len()),
        ));
    }
    Ok(out)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    BufReader::new(f)
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    parse_vector(&text)
}

pub fn write_vector(path: impl AsRef<Path>, x: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{BANNER_ARRAY}")?;
        writeln!(w, "{} 1", x.len())?;
        for v in x {
            writeln!(w, "{v:e}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Reads the whole stream and parses it as coordinate format.
pub fn read_triplets_from<R: BufRead>(mut r: R) -> Result<TripletList> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    parse_triplets(&text)
}
