use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMatrix};
use crate::quantum::channel::Channel;

/// `ρ ↦ Σ p_i U_i ρ U_i†`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixedUnitaryJson", into = "MixedUnitaryJson")]
pub struct MixedUnitaryChannel {
    components: Vec<(f64, CMatrix)>,
}

impl MixedUnitaryChannel {
    pub fn new(components: Vec<(f64, CMatrix)>) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::InvalidWeights("no components".into()))?;
        let d = first.1.nrows();
        if components.iter().any(|(p, _)| *p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidWeights("negative weight".into()));
        }
        let total: f64 = components.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        for (_, u) in &components {
            if u.nrows() != d {
                return Err(Error::DimensionMismatch("unitaries of different sizes".into()));
            }
            if !linalg::is_unitary(u, 1e-10) {
                return Err(Error::NotUnitary { deviation: linalg::unitarity_defect(u) });
            }
        }
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.nrows()
    }

    pub fn components(&self) -> &[(f64, CMatrix)] {
        &self.components
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|(p, _)| *p).collect()
    }

    pub fn to_channel(&self) -> Channel {
        let ops = self.components.iter().filter(|(p, _)| *p > 0.0).map(|(p, u)| u * cr(p.sqrt())).collect();
        Channel::from_kraus(ops).expect("mixture of unitaries is a channel")
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        for (p, u) in &self.components {
            out += linalg::conjugate(u, x) * cr(*p);
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixedUnitaryComponentJson {
    pub p: f64,
    pub unitary: crate::io::MatrixRows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixedUnitaryJson {
    pub components: Vec<MixedUnitaryComponentJson>,
}

impl TryFrom<MixedUnitaryJson> for MixedUnitaryChannel {
    type Error = Error;
    fn try_from(j: MixedUnitaryJson) -> Result<Self> {
        let comps = j
            .components
            .iter()
            .map(|c| Ok((c.p, crate::io::rows_to_matrix(&c.unitary)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }
}

impl From<MixedUnitaryChannel> for MixedUnitaryJson {
    fn from(m: MixedUnitaryChannel) -> Self {
        MixedUnitaryJson {
            components: m
                .components
                .iter()
                .map(|(p, u)| MixedUnitaryComponentJson { p: *p, unitary: crate::io::matrix_to_rows(u) })
                .collect(),
        }
    }
}
