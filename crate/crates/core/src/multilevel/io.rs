//! Binary container for [`MultilevelPrec`].
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "PSMILU\0\0"
//! version u32      currently 1
//! n       u64      size of the original matrix
//! nnz_a   u64      nonzeros of the original matrix
//! levels  u64      number of levels, followed by each level:
//!   n, m, nnz_l_e, nnz_u_f           u64 each
//!   l_b     compressed (col_start, row_ind, val), m x m
//!   d_b     f64 array
//!   u_b     compressed (row_start, col_ind, val), m x m
//!   e       compressed, (n-m) x m
//!   f       compressed, m x (n-m)
//!   s, t    f64 arrays
//!   p, q_inv u64 arrays
//!   dense   u8 flag; if 1: perm (u64 array) and packed LU (f64 array, row-major)
//! ```
//!
//! Every array is prefixed by its length as a u64. Diagnostics are not stored.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DenseLu, MultilevelPrec, PrecLevel};
use crate::error::{Error, Result};
use crate::sparse::{Ccs, Crs, DenseMatrix};

pub const MAGIC: &[u8; 8] = b"PSMILU\0\0";
pub const VERSION: u32 = 1;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u64(&mut self, v: usize) -> std::io::Result<()> {
        self.0.write_all(&(v as u64).to_le_bytes())
    }

    fn indices(&mut self, v: &[usize]) -> std::io::Result<()> {
        self.u64(v.len())?;
        for &x in v {
            self.u64(x)?;
        }
        Ok(())
    }

    fn reals(&mut self, v: &[f64]) -> std::io::Result<()> {
        self.u64(v.len())?;
        for &x in v {
            self.0.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    fn crs(&mut self, a: &Crs) -> std::io::Result<()> {
        self.indices(a.row_start())?;
        self.indices(a.col_ind())?;
        self.reals(a.values())
    }

    fn ccs(&mut self, a: &Ccs) -> std::io::Result<()> {
        self.indices(a.col_start())?;
        self.indices(a.row_ind())?;
        self.reals(a.values())
    }
}

pub fn write_prec<W: Write>(w: W, prec: &MultilevelPrec) -> std::io::Result<()> {
    let mut w = Writer(w);
    w.0.write_all(MAGIC)?;
    w.0.write_all(&VERSION.to_le_bytes())?;
    w.u64(prec.n)?;
    w.u64(prec.nnz_a)?;
    w.u64(prec.levels.len())?;
    for lv in &prec.levels {
        w.u64(lv.n)?;
        w.u64(lv.m)?;
        w.u64(lv.nnz_l_e)?;
        w.u64(lv.nnz_u_f)?;
        w.ccs(&lv.l_b)?;
        w.reals(&lv.d_b)?;
        w.crs(&lv.u_b)?;
        w.crs(&lv.e)?;
        w.crs(&lv.f)?;
        w.reals(&lv.s)?;
        w.reals(&lv.t)?;
        w.indices(&lv.p)?;
        w.indices(&lv.q_inv)?;
        match &lv.dense {
            Some(lu) => {
                w.0.write_all(&[1])?;
                w.indices(lu.perm())?;
                w.reals(lu.packed().values())?;
            }
            None => w.0.write_all(&[0])?,
        }
    }
    w.0.flush()
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Corrupt(msg.into())
}

impl Reader<'_> {
    fn take(&mut self, k: usize) -> Result<&[u8]> {
        if self.buf.len() - self.pos < k {
            return Err(corrupt("unexpected end of file"));
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u64(&mut self) -> Result<usize> {
        let b = self.take(8)?;
        let v = u64::from_le_bytes(b.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| corrupt("integer overflow"))
    }

    fn len(&mut self, width: usize) -> Result<usize> {
        let n = self.u64()?;
        if n.checked_mul(width).map_or(true, |b| b > self.buf.len() - self.pos) {
            return Err(corrupt(format!("array length {n} exceeds remaining data")));
        }
        Ok(n)
    }

    fn indices(&mut self) -> Result<Vec<usize>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.u64()).collect()
    }

    fn reals(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        Ok((0..n)
            .map(|_| f64::from_le_bytes(self.take(8).expect("length checked").try_into().expect("8 bytes")))
            .collect())
    }

    fn crs(&mut self, rows: usize, cols: usize) -> Result<Crs> {
        let (s, i, v) = (self.indices()?, self.indices()?, self.reals()?);
        Crs::from_parts(rows, cols, s, i, v).map_err(|e| corrupt(e.to_string()))
    }

    fn ccs(&mut self, rows: usize, cols: usize) -> Result<Ccs> {
        let (s, i, v) = (self.indices()?, self.indices()?, self.reals()?);
        Ccs::from_parts(rows, cols, s, i, v).map_err(|e| corrupt(e.to_string()))
    }
}

fn check_len<T>(v: &[T], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(corrupt(format!("{what} has length {}, expected {n}", v.len())));
    }
    Ok(())
}

pub fn parse_prec(buf: &[u8]) -> Result<MultilevelPrec> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n = r.u64()?;
    let nnz_a = r.u64()?;
    let n_levels = r.u64()?;
    if n_levels > super::MAX_LEVELS {
        return Err(corrupt(format!("{n_levels} levels")));
    }
    let mut levels = Vec::with_capacity(n_levels);
    let mut expect_n = n;
    for idx in 0..n_levels {
        let ln = r.u64()?;
        let m = r.u64()?;
        if ln != expect_n || m > ln {
            return Err(corrupt(format!("level {idx} has inconsistent sizes")));
        }
        let nnz_l_e = r.u64()?;
        let nnz_u_f = r.u64()?;
        let l_b = r.ccs(m, m)?;
        let d_b = r.reals()?;
        check_len(&d_b, m, "d_b")?;
        let u_b = r.crs(m, m)?;
        let e = r.crs(ln - m, m)?;
        let f = r.crs(m, ln - m)?;
        let s = r.reals()?;
        let t = r.reals()?;
        let p = r.indices()?;
        let q_inv = r.indices()?;
        for (v, what) in [(&s, "s"), (&t, "t")] {
            check_len(v, ln, what)?;
        }
        for (v, what) in [(&p, "p"), (&q_inv, "q_inv")] {
            check_len(v, ln, what)?;
            if !crate::sparse::is_permutation(v) {
                return Err(corrupt(format!("{what} is not a permutation")));
            }
        }
        let dense = match r.take(1)?[0] {
            0 => None,
            1 => {
                let perm = r.indices()?;
                let vals = r.reals()?;
                let k = perm.len();
                if k != ln - m || !crate::sparse::is_permutation(&perm) {
                    return Err(corrupt("dense block permutation is invalid"));
                }
                let lu = DenseMatrix::from_row_major(k, k, vals).map_err(|e| corrupt(e.to_string()))?;
                Some(DenseLu::from_parts(lu, perm))
            }
            x => return Err(corrupt(format!("bad dense flag {x}"))),
        };
        let last = idx + 1 == n_levels;
        if dense.is_some() != (last && ln > m) {
            return Err(corrupt(format!("level {idx} dense block does not match its position")));
        }
        expect_n = ln - m;
        levels.push(PrecLevel {
            n: ln,
            m,
            l_b,
            d_b,
            u_b,
            e,
            f,
            s,
            t,
            p,
            q_inv,
            dense,
            nnz_l_e,
            nnz_u_f,
        });
    }
    if r.pos != buf.len() {
        return Err(corrupt("trailing bytes"));
    }
    if n > 0 && levels.is_empty() {
        return Err(corrupt("no levels"));
    }
    Ok(MultilevelPrec {
        n,
        nnz_a,
        levels,
        stats: Vec::new(),
    })
}

pub fn save(path: impl AsRef<Path>, prec: &MultilevelPrec) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_prec(BufWriter::new(f), prec).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<MultilevelPrec> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    parse_prec(&buf)
}
