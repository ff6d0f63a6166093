//! JSON formats shared by the library and the CLI.
//!
//! * complex entry: `[re, im]`
//! * matrix: row-major nested arrays of complex entries
//! * channel: `{"kind": "kraus"|"stinespring"|"choi", "dim_in", "dim_out", "env_dim"?, "data"}`
//!   where the Choi matrix is `J = Σ_ij N(|i⟩⟨j|) ⊗ |i⟩⟨j|` (output ⊗ input) and the
//!   Stinespring isometry maps into output ⊗ environment
//! * pure state: `{"vector": [[re, im], ...], "dims": [d_A, d_B]}` with `dims` optional
//! * probability vector: array of reals
//! * stochastic matrix: array of columns, each an array of reals

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::quantum::{Channel, DensityMatrix, PureState, Representation};

pub type MatrixRows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub MatrixRows);

pub fn matrix_to_rows(m: &CMatrix) -> MatrixRows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn rows_to_matrix(rows: &MatrixRows) -> Result<CMatrix> {
    let nr = rows.len();
    let nc = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    let m = CMatrix::from_fn(nr, nc, |i, j| c(rows[i][j][0], rows[i][j][1]));
    crate::linalg::ensure_finite(&m)?;
    Ok(m)
}

pub fn vector_to_entries(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn entries_to_vector(e: &[[f64; 2]]) -> CVector {
    CVector::from_iterator(e.len(), e.iter().map(|x| c(x[0], x[1])))
}

impl TryFrom<MatrixJson> for DensityMatrix {
    type Error = Error;
    fn try_from(m: MatrixJson) -> Result<Self> {
        DensityMatrix::new(rows_to_matrix(&m.0)?)
    }
}

impl From<DensityMatrix> for MatrixJson {
    fn from(d: DensityMatrix) -> Self {
        MatrixJson(matrix_to_rows(d.matrix()))
    }
}

/// `{"vector": [[re, im], ...], "dims": [d_A, d_B]?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PureStateJson {
    pub vector: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<(usize, usize)>,
}

impl TryFrom<PureStateJson> for PureState {
    type Error = Error;
    fn try_from(j: PureStateJson) -> Result<Self> {
        PureState::new(entries_to_vector(&j.vector), j.dims)
    }
}

impl From<PureState> for PureStateJson {
    fn from(p: PureState) -> Self {
        PureStateJson { vector: vector_to_entries(p.vector()), dims: p.dims() }
    }
}

/// Serde adapter for plain matrix fields.
pub mod cmatrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let rows = MatrixRows::deserialize(d)?;
        rows_to_matrix(&rows).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Option<Vec<CMatrix>>` fields.
pub mod cmatrix_list_opt {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<Vec<CMatrix>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(|v| v.iter().map(matrix_to_rows).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<CMatrix>>, D::Error> {
        let rows = Option::<Vec<MatrixRows>>::deserialize(d)?;
        rows.map(|v| v.iter().map(rows_to_matrix).collect::<Result<Vec<_>>>())
            .transpose()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelJson {
    pub kind: String,
    pub dim_in: usize,
    pub dim_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_dim: Option<usize>,
    pub data: serde_json::Value,
}

impl From<&Channel> for ChannelJson {
    fn from(ch: &Channel) -> Self {
        let (kind, env_dim, data) = match ch.representation() {
            Representation::Kraus(ks) => {
                ("kraus", None, serde_json::to_value(ks.iter().map(matrix_to_rows).collect::<Vec<_>>()))
            }
            Representation::Stinespring { isometry, env_dim } => {
                ("stinespring", Some(*env_dim), serde_json::to_value(matrix_to_rows(isometry)))
            }
            Representation::Choi(j) => ("choi", None, serde_json::to_value(matrix_to_rows(j))),
        };
        ChannelJson {
            kind: kind.into(),
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            env_dim,
            data: data.expect("matrices serialize"),
        }
    }
}

impl TryFrom<ChannelJson> for Channel {
    type Error = Error;
    fn try_from(j: ChannelJson) -> Result<Self> {
        match j.kind.as_str() {
            "kraus" => {
                let ops: Vec<MatrixRows> = serde_json::from_value(j.data)?;
                let ks = ops.iter().map(rows_to_matrix).collect::<Result<Vec<_>>>()?;
                let ch = Channel::from_kraus(ks)?;
                check_dims(&ch, j.dim_in, j.dim_out)?;
                Ok(ch)
            }
            "stinespring" => {
                let rows: MatrixRows = serde_json::from_value(j.data)?;
                let env = j.env_dim.ok_or_else(|| Error::InvalidInput("stinespring channel needs env_dim".into()))?;
                Channel::from_stinespring(rows_to_matrix(&rows)?, j.dim_out, env)
            }
            "choi" => {
                let rows: MatrixRows = serde_json::from_value(j.data)?;
                Channel::from_choi(rows_to_matrix(&rows)?, j.dim_in, j.dim_out)
            }
            other => Err(Error::InvalidInput(format!("unknown channel kind {other:?}"))),
        }
    }
}

fn check_dims(ch: &Channel, dim_in: usize, dim_out: usize) -> Result<()> {
    if ch.dim_in() != dim_in || ch.dim_out() != dim_out {
        return Err(Error::DimensionMismatch(format!(
            "declared {}->{}, data is {}->{}",
            dim_in,
            dim_out,
            ch.dim_in(),
            ch.dim_out()
        )));
    }
    Ok(())
}

impl Serialize for Channel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ChannelJson::deserialize(d)?;
        Channel::try_from(j).map_err(serde::de::Error::custom)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
