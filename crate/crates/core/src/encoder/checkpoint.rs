use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Activation, EncoderParams, HeadParams};
use crate::error::{Error, Result};

const FORMAT: &str = "evschema-encoder";
const VERSION: u32 = 1;

/// JSON container for encoder weights. Matrices are row-major
/// (`d'` rows of `d` values); floats round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderCheckpoint {
    pub format: String,
    pub version: u32,
    pub num_heads: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    pub leaky_slope: f64,
    pub activation: Activation,
    pub heads: Vec<CheckpointHead>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHead {
    pub w_trig: Vec<Vec<f64>>,
    pub w_arg: Vec<Vec<f64>>,
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<Array2<f64>> {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            expected: nrows * ncols,
            actual: flat.len(),
        });
    }
    Ok(Array2::from_shape_vec((nrows, ncols), flat).expect("shape checked"))
}

impl From<&EncoderParams> for EncoderCheckpoint {
    fn from(p: &EncoderParams) -> Self {
        EncoderCheckpoint {
            format: FORMAT.into(),
            version: VERSION,
            num_heads: p.num_heads(),
            input_dim: p.input_dim(),
            output_dim: p.output_dim(),
            leaky_slope: p.leaky_slope,
            activation: p.activation,
            heads: p
                .heads
                .iter()
                .map(|h| CheckpointHead {
                    w_trig: rows(&h.w_trig),
                    w_arg: rows(&h.w_arg),
                })
                .collect(),
        }
    }
}

impl EncoderCheckpoint {
    pub fn into_params(self) -> Result<EncoderParams> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::Data(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        if self.heads.len() != self.num_heads {
            return Err(Error::Data(format!(
                "checkpoint declares {} heads but stores {}",
                self.num_heads,
                self.heads.len()
            )));
        }
        let heads = self
            .heads
            .iter()
            .map(|h| {
                Ok(HeadParams {
                    w_trig: matrix(&h.w_trig, self.output_dim, self.input_dim)?,
                    w_arg: matrix(&h.w_arg, self.output_dim, self.input_dim)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        EncoderParams::from_heads(heads, self.leaky_slope, self.activation)
    }

    pub fn save(params: &EncoderParams, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_json_atomic(path, &EncoderCheckpoint::from(params))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<EncoderParams> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str::<EncoderCheckpoint>(&text)?.into_params()
    }
}
