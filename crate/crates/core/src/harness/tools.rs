use std::path::{Path, PathBuf};

use serde::Serialize;

use super::write_json;
use crate::error::{Error, Result};
use crate::gpv::{extract_gpv, fast_filter};
use crate::norms::{l2_norm, profile_sobolev_norm, vector_sobolev_norm};
use crate::snapshot::{read_header, read_snapshot, write_snapshot, AnyState, SnapshotHeader};
use crate::spectral::Channel;
use crate::state::LimitState;

/// Header of a snapshot; the arrays are not read.
pub fn inspect(path: impl AsRef<Path>) -> Result<SnapshotHeader> {
    read_header(path)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecomposeSummary {
    pub t: f64,
    pub eps: f64,
    pub gpv_path: PathBuf,
    pub filtered_path: PathBuf,
    pub phi_l2: f64,
    pub psi_l2: f64,
    pub z_l2: f64,
    pub psi_plus_l2: f64,
    pub z_plus_l2: f64,
}

/// Splits a primitive or GPV snapshot into its GPV fields (`gpv.snap`) and
/// the filtered fields `Φ, H₀, Hₕ, Ψ₊, Z₊` (`filtered.snap`, stored in
/// limit-state layout), plus `decompose.json` with their L² norms.
pub fn decompose(path: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<DecomposeSummary> {
    let (header, state) = read_snapshot(path)?;
    let ch = Channel::new(header.grid)?;
    let g = match state {
        AnyState::Primitive(p) => extract_gpv(&ch, &p)?,
        AnyState::Gpv(g) => g,
        AnyState::Limit(_) => return Err(Error::Config("limit snapshots are already in filtered form".into())),
    };
    let f = fast_filter(&g);
    let filtered = LimitState {
        phi: g.phi.clone(),
        h0: g.h0.clone(),
        hh: g.hh.clone(),
        psi: f.psi_plus.clone(),
        z: f.z_plus.clone(),
        t: g.t,
    };
    let out = out.as_ref();
    std::fs::create_dir_all(out)?;
    let gpv_path = out.join("gpv.snap");
    let filtered_path = out.join("filtered.snap");
    write_snapshot(&gpv_path, &header.grid, &AnyState::Gpv(g.clone()), Some(g.eps))?;
    write_snapshot(&filtered_path, &header.grid, &AnyState::Limit(filtered), Some(g.eps))?;
    let summary = DecomposeSummary {
        t: g.t,
        eps: g.eps,
        gpv_path,
        filtered_path,
        phi_l2: l2_norm(&ch, &g.phi),
        psi_l2: vector_sobolev_norm(&ch, &g.psi, 0)?,
        z_l2: profile_sobolev_norm(&ch, &g.z, 0)?,
        psi_plus_l2: vector_sobolev_norm(&ch, &f.psi_plus, 0)?,
        z_plus_l2: profile_sobolev_norm(&ch, &f.z_plus, 0)?,
    };
    write_json(&out.join("decompose.json"), &summary)?;
    Ok(summary)
}
