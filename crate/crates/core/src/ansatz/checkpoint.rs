//! Binary parameter checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "BVMCCKPT"
//! version  u32      = 1
//! lattice  u32      0 = square, 1 = chain, 2 = open chain
//! L        u32
//! N        u32
//! D        u32
//! alpha    u32
//! d_K      u32
//! prior    u32      0 / 1
//! count    u64      number of parameters
//! params   count × f64
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnsatzShape, BackflowJastrow};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeKind};

const MAGIC: &[u8; 8] = b"BVMCCKPT";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub lattice: LatticeKind,
    pub linear_size: u32,
    pub n_particles: u32,
    pub shape: AnsatzShape,
    pub n_params: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(model: &BackflowJastrow, params: &[f64]) -> Result<Self> {
        if params.len() != model.n_params() {
            return Err(Error::Shape("checkpoint parameter count".into()));
        }
        Ok(Self {
            header: CheckpointHeader {
                version: VERSION,
                lattice: model.lattice().kind(),
                linear_size: model.lattice().linear_size() as u32,
                n_particles: model.n_particles(),
                shape: *model.shape(),
                n_params: params.len() as u64,
            },
            params: params.to_vec(),
        })
    }

    /// Rebuilds the model described by the header.
    pub fn model(&self) -> Result<BackflowJastrow> {
        let lattice = Lattice::new(self.header.lattice, self.header.linear_size as usize)?;
        let model = BackflowJastrow::new(lattice, self.header.n_particles, self.header.shape)?;
        if model.n_params() as u64 != self.header.n_params {
            return Err(Error::Checkpoint(format!(
                "header declares {} parameters but the architecture has {}",
                self.header.n_params,
                model.n_params()
            )));
        }
        Ok(model)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(48 + 8 * self.params.len());
        out.extend_from_slice(MAGIC);
        for v in [
            h.version,
            lattice_code(h.lattice),
            h.linear_size,
            h.n_particles,
            h.shape.depth as u32,
            h.shape.channels as u32,
            h.shape.kernel_radius as u32,
            h.shape.mean_field_prior as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&h.n_params.to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let mut words = [0u32; 8];
        for w in words.iter_mut() {
            let mut b = [0u8; 4];
            read_exact(&mut r, &mut b)?;
            *w = u32::from_le_bytes(b);
        }
        if words[0] != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", words[0])));
        }
        let mut b8 = [0u8; 8];
        read_exact(&mut r, &mut b8)?;
        let n_params = u64::from_le_bytes(b8);
        if r.len() as u64 != n_params * 8 {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter bytes, found {}",
                n_params * 8,
                r.len()
            )));
        }
        let params = r
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Self {
            header: CheckpointHeader {
                version: words[0],
                lattice: lattice_from_code(words[1])?,
                linear_size: words[2],
                n_particles: words[3],
                shape: AnsatzShape {
                    depth: words[4] as usize,
                    channels: words[5] as usize,
                    kernel_radius: words[6] as usize,
                    mean_field_prior: words[7] != 0,
                },
                n_params,
            },
            params,
        })
    }
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Checkpoint("truncated header".into()))
}

fn lattice_code(kind: LatticeKind) -> u32 {
    match kind {
        LatticeKind::Square => 0,
        LatticeKind::Chain => 1,
        LatticeKind::OpenChain => 2,
    }
}

fn lattice_from_code(code: u32) -> Result<LatticeKind> {
    match code {
        0 => Ok(LatticeKind::Square),
        1 => Ok(LatticeKind::Chain),
        2 => Ok(LatticeKind::OpenChain),
        other => Err(Error::Checkpoint(format!("unknown lattice code {other}"))),
    }
}

pub fn write_checkpoint(path: impl AsRef<Path>, model: &BackflowJastrow, params: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let bytes = Checkpoint::new(model, params)?.to_bytes();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
