//! Self-describing binary snapshots.
//!
//! A snapshot is one line of JSON (the header) followed by the raw payload:
//! every field as little-endian `f64` in row-major `[x][y][z]` order. Complex
//! fields are stored as separate real and imaginary arrays. The header
//! carries a CRC32 of the payload, so truncation and corruption are caught on
//! read, and [`read_header`] never touches the arrays.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{BoundaryField, Field3, HVector, VProfile};
use crate::grid::ChannelGrid;
use crate::spectral::Channel;
use crate::state::{GpvState, LimitState, PrimitiveState};

pub const FORMAT_TAG: &str = "gpvqg-snapshot";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Primitive,
    Gpv,
    Limit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldEntry {
    pub name: String,
    /// Byte offset into the payload.
    pub offset: u64,
    /// Number of `f64` values.
    pub len: u64,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub schema_version: u32,
    pub grid: ChannelGrid,
    pub kind: StateKind,
    pub t: f64,
    pub eps: Option<f64>,
    pub element_type: String,
    pub layout: String,
    pub fields: Vec<FieldEntry>,
    pub payload_bytes: u64,
    pub crc32: u32,
}

/// Any of the three state types, as stored in a snapshot.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyState {
    Primitive(PrimitiveState),
    Gpv(GpvState),
    Limit(LimitState),
}

impl AnyState {
    pub fn kind(&self) -> StateKind {
        match self {
            AnyState::Primitive(_) => StateKind::Primitive,
            AnyState::Gpv(_) => StateKind::Gpv,
            AnyState::Limit(_) => StateKind::Limit,
        }
    }

    pub fn t(&self) -> f64 {
        match self {
            AnyState::Primitive(p) => p.t,
            AnyState::Gpv(g) => g.t,
            AnyState::Limit(l) => l.t,
        }
    }

    /// Primitive form of the state. GPV states are reconstructed, limit
    /// states composed with their fast oscillation at `eps`.
    pub fn into_primitive(self, ch: &Channel, eps: f64) -> Result<PrimitiveState> {
        match self {
            AnyState::Primitive(p) => Ok(p),
            AnyState::Gpv(g) => crate::gpv::reconstruct_primitive(ch, &g),
            AnyState::Limit(l) => crate::gpv::compose_approximation(ch, &l, l.t, eps),
        }
    }
}

impl From<PrimitiveState> for AnyState {
    fn from(p: PrimitiveState) -> Self {
        AnyState::Primitive(p)
    }
}

impl From<GpvState> for AnyState {
    fn from(g: GpvState) -> Self {
        AnyState::Gpv(g)
    }
}

impl From<LimitState> for AnyState {
    fn from(l: LimitState) -> Self {
        AnyState::Limit(l)
    }
}

struct Payload {
    fields: Vec<FieldEntry>,
    bytes: Vec<u8>,
}

impl Payload {
    fn new() -> Self {
        Self {
            fields: Vec::new(),
            bytes: Vec::new(),
        }
    }

    fn push<'a>(&mut self, name: &str, shape: &[usize], values: impl Iterator<Item = &'a f64>) {
        let offset = self.bytes.len() as u64;
        let mut len = 0;
        for v in values {
            self.bytes.extend_from_slice(&v.to_le_bytes());
            len += 1;
        }
        self.fields.push(FieldEntry {
            name: name.to_string(),
            offset,
            len,
            shape: shape.to_vec(),
        });
    }

    fn push3(&mut self, name: &str, a: &Array3<f64>) {
        self.push(name, a.shape(), a.iter());
    }

    fn push3c(&mut self, name: &str, a: &Array3<Complex64>) {
        let re: Vec<f64> = a.iter().map(|c| c.re).collect();
        let im: Vec<f64> = a.iter().map(|c| c.im).collect();
        self.push(&format!("{name}_re"), a.shape(), re.iter());
        self.push(&format!("{name}_im"), a.shape(), im.iter());
    }

    fn push1c(&mut self, name: &str, a: &Array1<Complex64>) {
        let re: Vec<f64> = a.iter().map(|c| c.re).collect();
        let im: Vec<f64> = a.iter().map(|c| c.im).collect();
        self.push(&format!("{name}_re"), a.shape(), re.iter());
        self.push(&format!("{name}_im"), a.shape(), im.iter());
    }
}

fn encode(state: &AnyState) -> Payload {
    let mut p = Payload::new();
    match state {
        AnyState::Primitive(s) => {
            p.push3("v_x", &s.v.x.data);
            p.push3("v_y", &s.v.y.data);
            p.push3("w", &s.w.data);
            p.push3("theta", &s.theta.data);
        }
        AnyState::Gpv(s) => {
            p.push3("phi", &s.phi.data);
            p.push3("psi_x", &s.psi.x.data);
            p.push3("psi_y", &s.psi.y.data);
            p.push("h0", s.h0.data.shape(), s.h0.data.iter());
            p.push("hh", s.hh.data.shape(), s.hh.data.iter());
            p.push("z_x", s.z.x.shape(), s.z.x.iter());
            p.push("z_y", s.z.y.shape(), s.z.y.iter());
        }
        AnyState::Limit(s) => {
            p.push3("phi", &s.phi.data);
            p.push("h0", s.h0.data.shape(), s.h0.data.iter());
            p.push("hh", s.hh.data.shape(), s.hh.data.iter());
            p.push3c("psi_x", &s.psi.x.data);
            p.push3c("psi_y", &s.psi.y.data);
            p.push1c("z_x", &s.z.x);
            p.push1c("z_y", &s.z.y);
        }
    }
    p
}

/// The arrays a snapshot of `state` would hold, as `(name, shape, values)`
/// in row-major order. Complex fields are split into `_re` and `_im`.
pub fn named_arrays(state: &AnyState) -> Vec<(String, Vec<usize>, Vec<f64>)> {
    let p = encode(state);
    p.fields
        .into_iter()
        .map(|f| {
            let start = f.offset as usize;
            let values = p.bytes[start..start + 8 * f.len as usize]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect();
            (f.name, f.shape, values)
        })
        .collect()
}

/// Writes `state` on `grid` to `path`.
pub fn write_snapshot(path: impl AsRef<Path>, grid: &ChannelGrid, state: &AnyState, eps: Option<f64>) -> Result<()> {
    let payload = encode(state);
    let header = SnapshotHeader {
        format: FORMAT_TAG.to_string(),
        schema_version: SCHEMA_VERSION,
        grid: *grid,
        kind: state.kind(),
        t: state.t(),
        eps,
        element_type: "float64-le".to_string(),
        layout: "row-major".to_string(),
        fields: payload.fields,
        payload_bytes: payload.bytes.len() as u64,
        crc32: crc32fast::hash(&payload.bytes),
    };
    let mut f = std::io::BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut f, &header)?;
    f.write_all(b"\n")?;
    f.write_all(&payload.bytes)?;
    f.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Result<SnapshotHeader> {
    let header: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Snapshot(format!("unreadable header: {e}")))?;
    if header.format != FORMAT_TAG {
        return Err(Error::Snapshot(format!("unknown format tag `{}`", header.format)));
    }
    if header.schema_version != SCHEMA_VERSION {
        return Err(Error::Snapshot(format!(
            "schema version {} not supported (expected {SCHEMA_VERSION})",
            header.schema_version
        )));
    }
    if header.element_type != "float64-le" || header.layout != "row-major" {
        return Err(Error::Snapshot("unsupported element type or layout".into()));
    }
    header.grid.validate()?;
    Ok(header)
}

fn read_header_from(r: &mut impl BufRead) -> Result<SnapshotHeader> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.is_empty() {
        return Err(Error::Snapshot("empty file".into()));
    }
    parse_header(&line)
}

/// Reads only the header line.
pub fn read_header(path: impl AsRef<Path>) -> Result<SnapshotHeader> {
    let mut r = BufReader::new(File::open(path)?);
    read_header_from(&mut r)
}

struct Decoder<'a> {
    header: &'a SnapshotHeader,
    bytes: &'a [u8],
}

impl Decoder<'_> {
    fn raw(&self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let e = self
            .header
            .fields
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::Snapshot(format!("missing field `{name}`")))?;
        if e.shape != shape || e.len as usize != shape.iter().product::<usize>() {
            return Err(Error::Snapshot(format!(
                "field `{name}` has shape {:?}, expected {shape:?}",
                e.shape
            )));
        }
        let start = e.offset as usize;
        let end = start + 8 * e.len as usize;
        let chunk = self
            .bytes
            .get(start..end)
            .ok_or_else(|| Error::Snapshot(format!("field `{name}` runs past the payload")))?;
        Ok(chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect())
    }

    fn a3(&self, name: &str) -> Result<Array3<f64>> {
        let g = &self.header.grid;
        let s = g.shape();
        let v = self.raw(name, &[s.0, s.1, s.2])?;
        Ok(Array3::from_shape_vec(s, v).expect("checked shape"))
    }

    fn a3c(&self, name: &str) -> Result<Array3<Complex64>> {
        let re = self.a3(&format!("{name}_re"))?;
        let im = self.a3(&format!("{name}_im"))?;
        Ok(ndarray::Zip::from(&re)
            .and(&im)
            .map_collect(|&a, &b| Complex64::new(a, b)))
    }

    fn a2(&self, name: &str) -> Result<Array2<f64>> {
        let g = &self.header.grid;
        let v = self.raw(name, &[g.nx, g.ny])?;
        Ok(Array2::from_shape_vec((g.nx, g.ny), v).expect("checked shape"))
    }

    fn a1(&self, name: &str) -> Result<Array1<f64>> {
        Ok(Array1::from(self.raw(name, &[self.header.grid.nzp()])?))
    }

    fn a1c(&self, name: &str) -> Result<Array1<Complex64>> {
        let re = self.a1(&format!("{name}_re"))?;
        let im = self.a1(&format!("{name}_im"))?;
        Ok(re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect())
    }
}

/// Reads a snapshot, verifying length and checksum.
pub fn read_snapshot(path: impl AsRef<Path>) -> Result<(SnapshotHeader, AnyState)> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header_from(&mut r)?;
    let mut bytes = Vec::with_capacity(header.payload_bytes as usize);
    r.read_to_end(&mut bytes)?;
    let actual = crc32fast::hash(&bytes);
    if bytes.len() as u64 != header.payload_bytes || actual != header.crc32 {
        return Err(Error::Checksum {
            expected: header.crc32,
            actual,
        });
    }
    let d = Decoder {
        header: &header,
        bytes: &bytes,
    };
    let t = header.t;
    let eps = || {
        header
            .eps
            .ok_or_else(|| Error::Snapshot("ε-state snapshot without `eps`".into()))
    };
    let state = match header.kind {
        StateKind::Primitive => AnyState::Primitive(PrimitiveState {
            v: HVector::new(Field3 { data: d.a3("v_x")? }, Field3 { data: d.a3("v_y")? }),
            w: Field3 { data: d.a3("w")? },
            theta: Field3 { data: d.a3("theta")? },
            t,
            eps: eps()?,
        }),
        StateKind::Gpv => AnyState::Gpv(GpvState {
            phi: Field3 { data: d.a3("phi")? },
            psi: HVector::new(Field3 { data: d.a3("psi_x")? }, Field3 { data: d.a3("psi_y")? }),
            h0: BoundaryField { data: d.a2("h0")? },
            hh: BoundaryField { data: d.a2("hh")? },
            z: VProfile {
                x: d.a1("z_x")?,
                y: d.a1("z_y")?,
            },
            t,
            eps: eps()?,
        }),
        StateKind::Limit => AnyState::Limit(LimitState {
            phi: Field3 { data: d.a3("phi")? },
            h0: BoundaryField { data: d.a2("h0")? },
            hh: BoundaryField { data: d.a2("hh")? },
            psi: HVector::new(Field3 { data: d.a3c("psi_x")? }, Field3 { data: d.a3c("psi_y")? }),
            z: VProfile {
                x: d.a1c("z_x")?,
                y: d.a1c("z_y")?,
            },
            t,
        }),
    };
    Ok((header, state))
}
