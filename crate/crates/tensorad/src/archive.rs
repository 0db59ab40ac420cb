use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::tensor::Tensor;

const MAGIC: &str = "TENSORARCHIVE";
const VERSION: u32 = 1;

/// Errors from reading or writing named-tensor archives.
#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("bad archive header {0:?}")]
    BadHeader(String),

    #[error("unsupported archive version {0}")]
    BadVersion(u32),

    #[error("malformed manifest line {line}: {text:?}")]
    BadManifest { line: usize, text: String },

    #[error("tensor name {0:?} contains characters outside [A-Za-z0-9._/-]")]
    BadName(String),

    #[error("duplicate tensor name {0:?}")]
    DuplicateName(String),

    #[error("payload too short: tensor {name:?} needs {need} bytes, {have} remain")]
    ShortPayload {
        name: String,
        need: usize,
        have: usize,
    },

    #[error("archive has {0} unexplained trailing bytes")]
    TrailingBytes(usize),
}

fn name_ok(name: &str) -> bool {
    !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'/' | b'-'))
}

/// Writes named tensors as a text manifest followed by a flat little-endian
/// f64 payload:
///
/// ```text
/// TENSORARCHIVE 1
/// tensor <name> <rank> <dim0> <dim1> ...
/// ...
/// DATA
/// <raw f64 bytes, manifest order>
/// ```
pub fn save_archive(path: &Path, tensors: &[(&str, &Tensor)]) -> Result<(), ArchiveError> {
    let mut seen = std::collections::HashSet::new();
    for (name, _) in tensors {
        if !name_ok(name) {
            return Err(ArchiveError::BadName(name.to_string()));
        }
        if !seen.insert(*name) {
            return Err(ArchiveError::DuplicateName(name.to_string()));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{MAGIC} {VERSION}")?;
    for (name, t) in tensors {
        write!(w, "tensor {name} {}", t.rank())?;
        for d in t.shape() {
            write!(w, " {d}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "DATA")?;
    for (_, t) in tensors {
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an archive written by [`save_archive`], preserving tensor order.
pub fn load_archive(path: &Path) -> Result<Vec<(String, Tensor)>, ArchiveError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;

    // The manifest is newline-delimited ASCII up to the DATA marker.
    fn next_line(
        bytes: &[u8],
        pos: &mut usize,
        line_no: &mut usize,
    ) -> Result<String, ArchiveError> {
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos] != b'\n' {
            *pos += 1;
        }
        if *pos >= bytes.len() {
            return Err(ArchiveError::BadManifest {
                line: *line_no,
                text: String::from_utf8_lossy(&bytes[start..]).into_owned(),
            });
        }
        let text = String::from_utf8_lossy(&bytes[start..*pos]).into_owned();
        *pos += 1;
        *line_no += 1;
        Ok(text)
    }
    let mut pos = 0usize;
    let mut line_no = 0usize;

    let header = next_line(&bytes, &mut pos, &mut line_no)?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(ArchiveError::BadHeader(header));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| ArchiveError::BadHeader(header.clone()))?;
    if version != VERSION {
        return Err(ArchiveError::BadVersion(version));
    }

    let mut manifest: Vec<(String, Vec<usize>)> = Vec::new();
    let mut names = std::collections::HashSet::new();
    loop {
        let line = next_line(&bytes, &mut pos, &mut line_no)?;
        if line == "DATA" {
            break;
        }
        let mut fields = line.split_whitespace();
        let bad = || ArchiveError::BadManifest {
            line: line_no,
            text: line.clone(),
        };
        if fields.next() != Some("tensor") {
            return Err(bad());
        }
        let name = fields.next().ok_or_else(bad)?.to_string();
        if !name_ok(&name) {
            return Err(ArchiveError::BadName(name));
        }
        if !names.insert(name.clone()) {
            return Err(ArchiveError::DuplicateName(name));
        }
        let rank: usize = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?);
        }
        if fields.next().is_some() {
            return Err(bad());
        }
        manifest.push((name, shape));
    }

    let mut out = Vec::with_capacity(manifest.len());
    for (name, shape) in manifest {
        let numel: usize = shape.iter().product();
        let need = numel * 8;
        if bytes.len() - pos < need {
            return Err(ArchiveError::ShortPayload {
                name,
                need,
                have: bytes.len() - pos,
            });
        }
        let mut data = Vec::with_capacity(numel);
        for chunk in bytes[pos..pos + need].chunks_exact(8) {
            data.push(f64::from_le_bytes(chunk.try_into().expect("8-byte chunk")));
        }
        pos += need;
        let tensor = Tensor::from_vec(data, &shape).expect("manifest shape matches payload");
        out.push((name, tensor));
    }
    if pos != bytes.len() {
        return Err(ArchiveError::TrailingBytes(bytes.len() - pos));
    }
    Ok(out)
}
