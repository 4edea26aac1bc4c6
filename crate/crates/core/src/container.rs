//! Versioned on-disk format for codebooks and encoded hypervectors.
//!
//! A container is a short text header of `key value` lines closed by `end`,
//! followed by a little-endian binary payload. Bipolar codewords pack one bit
//! per coordinate (LSB first, set bit = +1), Gaussian codewords store f64
//! coordinates, sparse codewords store a u32 count followed by u32 indices.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};

use crate::codebook::{Codebook, CodebookKind};
use crate::error::{HdcError, Result};
use crate::hdcore::{Hypervector, Storage};
use crate::scalar::Scalar;

const CODEBOOK_MAGIC: &str = "HDCB 1";
const VECTOR_MAGIC: &str = "HDHV 1";

fn fmt_err(msg: impl Into<String>) -> HdcError {
    HdcError::Format(msg.into())
}

fn write_vector_payload<T: Scalar>(out: &mut Vec<u8>, v: &Hypervector<T>) {
    match v.storage() {
        Storage::Bipolar(x) => {
            for chunk in x.chunks(8) {
                let mut byte = 0u8;
                for (j, &c) in chunk.iter().enumerate() {
                    if c > 0 {
                        byte |= 1 << j;
                    }
                }
                out.push(byte);
            }
        }
        Storage::Integer { data, .. } => {
            for &c in data {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        Storage::Real(x) => {
            for &c in x {
                out.extend_from_slice(&c.f64().to_le_bytes());
            }
        }
        Storage::Sparse(ix) => {
            out.extend_from_slice(&(ix.len() as u32).to_le_bytes());
            for &i in ix {
                out.extend_from_slice(&i.to_le_bytes());
            }
        }
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| fmt_err("payload truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn read_vector_payload<T: Scalar>(c: &mut Cursor<'_>, storage: &str, d: usize, bound: i32) -> Result<Hypervector<T>> {
    match storage {
        "bipolar" => {
            let bytes = c.take(d.div_ceil(8))?;
            let v = (0..d)
                .map(|i| if (bytes[i / 8] >> (i % 8)) & 1 == 1 { 1 } else { -1 })
                .collect();
            Ok(Hypervector::bipolar_unchecked(v))
        }
        "integer" => {
            let v = (0..d).map(|_| c.i32()).collect::<Result<Vec<_>>>()?;
            Hypervector::integer(v, bound)
        }
        "real" => {
            let v = (0..d).map(|_| c.f64().map(T::of)).collect::<Result<Vec<_>>>()?;
            Ok(Hypervector::real(v))
        }
        "sparse" => {
            let k = c.u32()? as usize;
            if k > d {
                return Err(fmt_err("sparse support larger than dimension"));
            }
            let ix = (0..k).map(|_| c.u32()).collect::<Result<Vec<_>>>()?;
            Hypervector::sparse(d, ix).map_err(|e| fmt_err(e.to_string()))
        }
        other => Err(fmt_err(format!("unknown storage {other}"))),
    }
}

fn codebook_payload<T: Scalar>(cb: &Codebook<T>) -> Vec<u8> {
    let mut out = Vec::new();
    for v in cb.vectors() {
        write_vector_payload(&mut out, v);
    }
    out
}

fn storage_name<T: Scalar>(v: &Hypervector<T>) -> &'static str {
    match v.storage() {
        Storage::Bipolar(_) => "bipolar",
        Storage::Integer { .. } => "integer",
        Storage::Real(_) => "real",
        Storage::Sparse(_) => "sparse",
    }
}

fn kind_param(kind: CodebookKind) -> String {
    match kind {
        CodebookKind::Gaussian { sigma } => format!("{sigma:?}"),
        CodebookKind::SparseBinary { p, fixed_weight } => {
            format!("{p:?}{}", if fixed_weight { "/fixed" } else { "" })
        }
        _ => "-".into(),
    }
}

fn parse_kind(name: &str, param: &str) -> Result<CodebookKind> {
    let num = |s: &str| s.parse::<f64>().map_err(|_| fmt_err(format!("bad parameter {s}")));
    Ok(match name {
        "bipolar" => CodebookKind::DenseBipolar,
        "gaussian" => CodebookKind::Gaussian { sigma: num(param)? },
        "sparse" => match param.strip_suffix("/fixed") {
            Some(p) => CodebookKind::SparseBinary { p: num(p)?, fixed_weight: true },
            None => CodebookKind::SparseBinary { p: num(param)?, fixed_weight: false },
        },
        "explicit" => CodebookKind::Explicit,
        other => return Err(fmt_err(format!("unknown codebook kind {other}"))),
    })
}

/// Hex SHA-256 prefix over the codebook shape and payload.
pub(crate) fn content_id<T: Scalar>(cb: &Codebook<T>) -> String {
    let mut h = Sha256::new();
    h.update(format!("{} {} {}\n", cb.kind().name(), cb.m(), cb.d()).as_bytes());
    h.update(codebook_payload(cb));
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn read_header(r: &mut impl BufRead, magic: &str) -> Result<BTreeMap<String, String>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != magic {
        return Err(fmt_err(format!("expected header {magic:?}, found {:?}", line.trim_end())));
    }
    let mut fields = BTreeMap::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(fmt_err("header not terminated"));
        }
        let l = line.trim_end();
        if l == "end" {
            return Ok(fields);
        }
        let (k, v) = l.split_once(' ').ok_or_else(|| fmt_err(format!("bad header line {l:?}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
}

fn field<'a>(f: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    f.get(key).map(|s| s.as_str()).ok_or_else(|| fmt_err(format!("missing field {key}")))
}

fn parsed<V: std::str::FromStr>(f: &BTreeMap<String, String>, key: &str) -> Result<V> {
    field(f, key)?.parse().map_err(|_| fmt_err(format!("bad value for {key}")))
}

pub fn write_codebook<T: Scalar>(w: &mut impl Write, cb: &Codebook<T>) -> Result<()> {
    let st = cb.stats();
    let mu = cb.cached_incoherence().map_or("-".to_string(), |m| format!("{:?}", m.f64()));
    let bound = cb.vectors()[0].as_integer().map_or(0, |(_, b)| b);
    writeln!(w, "{CODEBOOK_MAGIC}")?;
    writeln!(w, "kind {}", cb.kind().name())?;
    writeln!(w, "param {}", kind_param(cb.kind()))?;
    writeln!(w, "storage {}", storage_name(&cb.vectors()[0]))?;
    writeln!(w, "bound {bound}")?;
    writeln!(w, "m {}", cb.m())?;
    writeln!(w, "d {}", cb.d())?;
    writeln!(w, "seed {}", cb.seed())?;
    writeln!(w, "min_norm {:?}", st.min_norm)?;
    writeln!(w, "max_norm {:?}", st.max_norm)?;
    writeln!(w, "kappa {:?}", st.kappa)?;
    writeln!(w, "mu {mu}")?;
    writeln!(w, "id {}", cb.id())?;
    writeln!(w, "end")?;
    w.write_all(&codebook_payload(cb))?;
    Ok(())
}

pub fn read_codebook<T: Scalar>(r: &mut impl BufRead) -> Result<Codebook<T>> {
    let f = read_header(r, CODEBOOK_MAGIC)?;
    let kind = parse_kind(field(&f, "kind")?, field(&f, "param")?)?;
    let storage = field(&f, "storage")?.to_string();
    let bound: i32 = parsed(&f, "bound")?;
    let m: usize = parsed(&f, "m")?;
    let d: usize = parsed(&f, "d")?;
    let seed: u64 = parsed(&f, "seed")?;
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    let vectors = (0..m)
        .map(|_| read_vector_payload(&mut c, &storage, d, bound))
        .collect::<Result<Vec<_>>>()?;
    if c.pos != buf.len() {
        return Err(fmt_err("trailing bytes after payload"));
    }
    let cb = Codebook::assemble(kind, d, seed, vectors)?;
    let expect = field(&f, "id")?;
    if cb.id() != expect {
        return Err(fmt_err(format!("content id {} does not match header {expect}", cb.id())));
    }
    let stored: f64 = parsed(&f, "min_norm")?;
    if (stored - cb.stats().min_norm).abs() > 1e-9 * stored.max(1.0) {
        return Err(fmt_err("stored norm statistics disagree with payload"));
    }
    if let Ok(mu) = field(&f, "mu")?.parse::<f64>() {
        cb.set_cached_incoherence(mu);
    }
    Ok(cb)
}

/// Writes a single hypervector with free-form metadata.
pub fn write_hypervector<T: Scalar>(w: &mut impl Write, v: &Hypervector<T>, meta: &BTreeMap<String, String>) -> Result<()> {
    writeln!(w, "{VECTOR_MAGIC}")?;
    writeln!(w, "storage {}", storage_name(v))?;
    writeln!(w, "bound {}", v.as_integer().map_or(0, |(_, b)| b))?;
    writeln!(w, "d {}", v.dim())?;
    for (k, val) in meta {
        if k.contains(char::is_whitespace) || val.contains('\n') {
            return Err(fmt_err(format!("metadata key {k:?} not representable")));
        }
        writeln!(w, "meta.{k} {val}")?;
    }
    writeln!(w, "end")?;
    let mut out = Vec::new();
    write_vector_payload(&mut out, v);
    w.write_all(&out)?;
    Ok(())
}

pub fn read_hypervector<T: Scalar>(r: &mut impl BufRead) -> Result<(Hypervector<T>, BTreeMap<String, String>)> {
    let f = read_header(r, VECTOR_MAGIC)?;
    let storage = field(&f, "storage")?.to_string();
    let bound: i32 = parsed(&f, "bound")?;
    let d: usize = parsed(&f, "d")?;
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    let v = read_vector_payload(&mut c, &storage, d, bound)?;
    if c.pos != buf.len() {
        return Err(fmt_err("trailing bytes after payload"));
    }
    let meta = f
        .into_iter()
        .filter_map(|(k, v)| k.strip_prefix("meta.").map(|k| (k.to_string(), v)))
        .collect();
    Ok((v, meta))
}
