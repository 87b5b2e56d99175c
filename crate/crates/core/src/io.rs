//! Persistence of subspace bases and operators.
//!
//! Two interchangeable layouts, both accepted on import (sniffed by magic):
//! a binary container (small header followed by the matrix in column-major
//! complex `f64` pairs, little endian) and a textual variant (`#`-prefixed
//! header lines followed by one `re,im` entry per line, column-major).
//! Binary round trips are bit exact; the textual writer uses shortest
//! round-trip float formatting, so re-importing reproduces the same bits.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::TruncatedOp;
use crate::scalar::Cx;
use crate::subspaces::Subspace;

const MAGIC: &[u8; 8] = b"SHIFTLAB";
const VERSION: u8 = 1;
const KIND_SUBSPACE: u8 = 1;
const KIND_OPERATOR: u8 = 2;

/// On-disk layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileFormat {
    Binary,
    Text,
}

/// Either persisted object.
#[derive(Clone, Debug)]
pub enum Stored {
    Subspace(Subspace<f64>),
    Operator(TruncatedOp<f64>),
}

fn push_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Parse("unexpected end of file".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn matrix_bytes(buf: &mut Vec<u8>, m: &DMatrix<Cx<f64>>) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            push_f64(buf, m[(i, j)].re);
            push_f64(buf, m[(i, j)].im);
        }
    }
}

fn matrix_from_reader(r: &mut Reader, rows: usize, cols: usize) -> Result<DMatrix<Cx<f64>>> {
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            let re = r.f64()?;
            let im = r.f64()?;
            m[(i, j)] = Cx::new(re, im);
        }
    }
    Ok(m)
}

/// Persist a subspace basis.
pub fn write_subspace(s: &Subspace<f64>, path: &Path, format: FileFormat) -> Result<()> {
    match format {
        FileFormat::Binary => {
            let mut buf = Vec::new();
            buf.extend_from_slice(MAGIC);
            buf.push(KIND_SUBSPACE);
            buf.push(VERSION);
            push_u64(&mut buf, s.order() as u64);
            push_u64(&mut buf, s.fiber_dim() as u64);
            push_u64(&mut buf, s.dim() as u64);
            push_f64(&mut buf, s.tol());
            matrix_bytes(&mut buf, s.basis());
            fs::write(path, buf)?;
        }
        FileFormat::Text => {
            let mut f = fs::File::create(path)?;
            writeln!(f, "# shiftlab-subspace v{VERSION}")?;
            writeln!(f, "# order={} dim={} r={} tol={}", s.order(), s.fiber_dim(), s.dim(), s.tol())?;
            write_matrix_text(&mut f, s.basis())?;
        }
    }
    Ok(())
}

/// Persist an operator.
pub fn write_op(op: &TruncatedOp<f64>, path: &Path, format: FileFormat) -> Result<()> {
    let ((order, dim_in, dim_out, guard, rb, wb), err, matrix) = op.to_parts();
    match format {
        FileFormat::Binary => {
            let mut buf = Vec::new();
            buf.extend_from_slice(MAGIC);
            buf.push(KIND_OPERATOR);
            buf.push(VERSION);
            for v in [order, dim_in, dim_out, guard, rb, wb] {
                push_u64(&mut buf, v as u64);
            }
            push_f64(&mut buf, err);
            matrix_bytes(&mut buf, matrix);
            fs::write(path, buf)?;
        }
        FileFormat::Text => {
            let mut f = fs::File::create(path)?;
            writeln!(f, "# shiftlab-operator v{VERSION}")?;
            writeln!(
                f,
                "# order={order} dim_in={dim_in} dim_out={dim_out} guard={guard} rb={rb} wb={wb} err={err}"
            )?;
            write_matrix_text(&mut f, matrix)?;
        }
    }
    Ok(())
}

fn write_matrix_text(f: &mut fs::File, m: &DMatrix<Cx<f64>>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            writeln!(f, "{},{}", m[(i, j)].re, m[(i, j)].im)?;
        }
    }
    Ok(())
}

/// Import either object, sniffing binary vs text by the magic bytes.
pub fn read_stored(path: &Path) -> Result<Stored> {
    let data = fs::read(path)?;
    if data.starts_with(MAGIC) {
        read_binary(&data)
    } else {
        read_text(&data)
    }
}

/// Import a subspace (errors when the file holds an operator).
pub fn read_subspace(path: &Path) -> Result<Subspace<f64>> {
    match read_stored(path)? {
        Stored::Subspace(s) => Ok(s),
        Stored::Operator(_) => Err(Error::Parse("file holds an operator, not a subspace".into())),
    }
}

/// Import an operator (errors when the file holds a subspace).
pub fn read_op(path: &Path) -> Result<TruncatedOp<f64>> {
    match read_stored(path)? {
        Stored::Operator(op) => Ok(op),
        Stored::Subspace(_) => Err(Error::Parse("file holds a subspace, not an operator".into())),
    }
}

fn read_binary(data: &[u8]) -> Result<Stored> {
    let mut r = Reader { data, pos: MAGIC.len() };
    let kind = r.take(1)?[0];
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported file version {version}")));
    }
    match kind {
        KIND_SUBSPACE => {
            let order = r.u64()? as usize;
            let dim = r.u64()? as usize;
            let rank = r.u64()? as usize;
            let tol = r.f64()?;
            let basis = matrix_from_reader(&mut r, order * dim, rank)?;
            Ok(Stored::Subspace(Subspace::from_orthonormal(order, dim, basis, tol)?))
        }
        KIND_OPERATOR => {
            let order = r.u64()? as usize;
            let dim_in = r.u64()? as usize;
            let dim_out = r.u64()? as usize;
            let guard = r.u64()? as usize;
            let rb = r.u64()? as usize;
            let wb = r.u64()? as usize;
            let err = r.f64()?;
            let matrix = matrix_from_reader(&mut r, order * dim_out, order * dim_in)?;
            Ok(Stored::Operator(TruncatedOp::from_parts(
                (order, dim_in, dim_out, guard, rb, wb),
                err,
                matrix,
            )?))
        }
        other => Err(Error::Parse(format!("unknown object kind {other}"))),
    }
}

fn header_fields(line: &str) -> Result<Vec<(String, String)>> {
    Ok(line
        .trim_start_matches('#')
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

fn field<T: std::str::FromStr>(fields: &[(String, String)], name: &str) -> Result<T> {
    fields
        .iter()
        .find(|(k, _)| k == name)
        .ok_or_else(|| Error::Parse(format!("missing header field {name}")))?
        .1
        .parse()
        .map_err(|_| Error::Parse(format!("malformed header field {name}")))
}

fn read_text(data: &[u8]) -> Result<Stored> {
    let text = std::str::from_utf8(data)
        .map_err(|_| Error::Parse("file is neither the binary container nor UTF-8 text".into()))?;
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let is_subspace = first.contains("shiftlab-subspace");
    let is_operator = first.contains("shiftlab-operator");
    if !is_subspace && !is_operator {
        return Err(Error::Parse("unrecognized text header".into()));
    }
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("missing header line".into()))?;
    let fields = header_fields(header)?;
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (re, im) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected re,im", lineno + 3)))?;
        let re: f64 = re
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad real part", lineno + 3)))?;
        let im: f64 = im
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad imaginary part", lineno + 3)))?;
        values.push(Cx::new(re, im));
    }
    if is_subspace {
        let order: usize = field(&fields, "order")?;
        let dim: usize = field(&fields, "dim")?;
        let rank: usize = field(&fields, "r")?;
        let tol: f64 = field(&fields, "tol")?;
        if values.len() != order * dim * rank {
            return Err(Error::Parse(format!(
                "expected {} entries, found {}",
                order * dim * rank,
                values.len()
            )));
        }
        let basis = DMatrix::from_vec(order * dim, rank, values);
        Ok(Stored::Subspace(Subspace::from_orthonormal(order, dim, basis, tol)?))
    } else {
        let order: usize = field(&fields, "order")?;
        let dim_in: usize = field(&fields, "dim_in")?;
        let dim_out: usize = field(&fields, "dim_out")?;
        let guard: usize = field(&fields, "guard")?;
        let rb: usize = field(&fields, "rb")?;
        let wb: usize = field(&fields, "wb")?;
        let err: f64 = field(&fields, "err")?;
        if values.len() != order * dim_out * order * dim_in {
            return Err(Error::Parse(format!(
                "expected {} entries, found {}",
                order * dim_out * order * dim_in,
                values.len()
            )));
        }
        let matrix = DMatrix::from_vec(order * dim_out, order * dim_in, values);
        Ok(Stored::Operator(TruncatedOp::from_parts(
            (order, dim_in, dim_out, guard, rb, wb),
            err,
            matrix,
        )?))
    }
}
