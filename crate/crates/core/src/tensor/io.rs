//! Tensor file formats.
//!
//! `.dts` is a little-endian binary dense format: the magic bytes `DTNS`,
//! a `u32` version (1), a `u32` order `N`, `N` `u64` mode sizes, then the
//! values as `f64` in first-mode-fastest order. `.tns` is the FROSTT text
//! format: one nonzero per line as `N` one-based indices followed by the
//! value; lines starting with `#` are comments, except a `# dims:` line
//! that records mode sizes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::dense::DenseTensor;
use super::shape::Shape;
use super::sparse::SparseTensor;
use crate::error::{Result, TuckerError};

const MAGIC: &[u8; 4] = b"DTNS";
const VERSION: u32 = 1;

pub fn write_dts<W: Write>(t: &DenseTensor, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for &d in t.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dts<R: Read>(mut r: R) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(TuckerError::Format("missing DTNS magic bytes".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(TuckerError::Format(format!("unsupported .dts version {version}")));
    }
    let order = read_u32(&mut r)? as usize;
    if order == 0 {
        return Err(TuckerError::Format("order must be positive".into()));
    }
    let mut dims = Vec::with_capacity(order);
    for _ in 0..order {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        let d = usize::try_from(u64::from_le_bytes(b))
            .map_err(|_| TuckerError::Format("mode size does not fit in memory".into()))?;
        dims.push(d);
    }
    let shape = Shape::new(dims)?;
    let mut bytes = vec![0u8; shape.len() * 8];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseTensor::new(shape, data)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn save_dts(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    write_dts(t, BufWriter::new(File::create(path)?))
}

pub fn load_dts(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_dts(BufReader::new(File::open(path)?))
}

/// Parse FROSTT text. Mode sizes come from `dims` if given, else from a
/// `# dims: I_0 I_1 ..` comment as written by [`write_tns`], else the
/// largest index seen per mode. Duplicate coordinates are summed.
pub fn read_tns<R: BufRead>(r: R, dims: Option<&[usize]>) -> Result<SparseTensor> {
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut order: Option<usize> = None;
    let mut declared: Option<Vec<usize>> = None;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = lineno + 1;
        let text = line.trim();
        if let Some(rest) = text.strip_prefix('#').and_then(|c| c.trim().strip_prefix("dims:")) {
            let parsed: std::result::Result<Vec<usize>, _> = rest.split_whitespace().map(str::parse).collect();
            declared = Some(parsed.map_err(|_| TuckerError::Parse { line: line_no, msg: "bad dims comment".into() })?);
            continue;
        }
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(TuckerError::Parse { line: line_no, msg: "expected indices followed by a value".into() });
        }
        let n = fields.len() - 1;
        match order {
            None => order = Some(n),
            Some(o) if o != n => {
                return Err(TuckerError::Parse {
                    line: line_no,
                    msg: format!("expected {o} indices, found {n}"),
                })
            }
            Some(_) => {}
        }
        let mut index = Vec::with_capacity(n);
        for f in &fields[..n] {
            let i: usize = f
                .parse()
                .map_err(|_| TuckerError::Parse { line: line_no, msg: format!("bad index {f:?}") })?;
            if i == 0 {
                return Err(TuckerError::Parse { line: line_no, msg: "indices are one-based".into() });
            }
            index.push(i - 1);
        }
        let value: f64 = fields[n]
            .parse()
            .map_err(|_| TuckerError::Parse { line: line_no, msg: format!("bad value {:?}", fields[n]) })?;
        entries.push((index, value));
    }
    let order = order.ok_or_else(|| TuckerError::Format("no entries in .tns input".into()))?;
    let dims = match dims.map(<[usize]>::to_vec).or(declared) {
        Some(d) => d,
        None => (0..order).map(|k| entries.iter().map(|(i, _)| i[k] + 1).max().unwrap_or(1)).collect(),
    };
    SparseTensor::from_entries(dims, entries)
}

pub fn write_tns<W: Write>(t: &SparseTensor, mut w: W) -> Result<()> {
    write!(w, "# dims:")?;
    for d in t.dims() {
        write!(w, " {d}")?;
    }
    writeln!(w)?;
    for (index, v) in t.iter() {
        for i in index {
            write!(w, "{} ", i + 1)?;
        }
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_tns(path: impl AsRef<Path>) -> Result<SparseTensor> {
    read_tns(BufReader::new(File::open(path)?), None)
}

pub fn save_tns(t: &SparseTensor, path: impl AsRef<Path>) -> Result<()> {
    write_tns(t, BufWriter::new(File::create(path)?))
}
