//! JSON file formats.
//!
//! Matrices are `{"rows", "cols", "data"}` with `data` a row-major list of
//! `[re, im]` pairs. Floats are written in shortest round-trip form, so
//! save→load reproduces every bit.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use qcond_core::tol::MAX_DIM;
use qcond_core::{
    BipartiteState, ComplexMatrix, ComplexVector, DensityOperator, Ensemble, EnsembleMember, IsoPair, JointTable,
    KrausChannel, Povm,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::report::Inputs;

fn shape_error(detail: String) -> anyhow::Error {
    anyhow!(qcond_core::Error::Validation { invariant: "shape", detail })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl JsonMatrix {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        JsonMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn from_vector(v: &ComplexVector) -> Self {
        JsonMatrix {
            rows: v.len(),
            cols: 1,
            data: v.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        Self::from_matrix(&m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.rows == 0 || self.cols == 0 || self.rows > MAX_DIM || self.cols > MAX_DIM {
            return Err(shape_error(format!(
                "matrix is {}x{}; each side must be in 1..={MAX_DIM}",
                self.rows, self.cols
            )));
        }
        if self.data.len() != self.rows * self.cols {
            return Err(shape_error(format!(
                "data has {} entries, expected rows*cols = {}",
                self.data.len(),
                self.rows * self.cols
            )));
        }
        if self.data.iter().flatten().any(|x| !x.is_finite()) {
            bail!(qcond_core::Error::Validation {
                invariant: "finite",
                detail: "matrix entries must be finite".into()
            });
        }
        Ok(ComplexMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.data.iter().map(|&[re, im]| Complex64::new(re, im)),
        ))
    }

    pub fn to_real(&self) -> Result<DMatrix<f64>> {
        let m = self.to_matrix()?;
        if m.iter().any(|z| z.im != 0.0) {
            bail!(qcond_core::Error::Validation {
                invariant: "real",
                detail: "table entries must have zero imaginary part".into()
            });
        }
        Ok(m.map(|z| z.re))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub matrix: JsonMatrix,
}

impl StateFile {
    pub fn from_state(rho: &DensityOperator) -> Self {
        StateFile {
            dim: rho.dim(),
            matrix: JsonMatrix::from_matrix(rho.matrix()),
        }
    }

    pub fn to_state(&self) -> Result<DensityOperator> {
        let m = self.matrix.to_matrix()?;
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(shape_error(format!(
                "state declares dim {} but matrix is {}x{}",
                self.dim,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(DensityOperator::new(m)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub din: usize,
    pub dout: usize,
    pub kraus: Vec<JsonMatrix>,
}

impl ChannelFile {
    pub fn from_channel(e: &KrausChannel) -> Self {
        ChannelFile {
            din: e.din(),
            dout: e.dout(),
            kraus: e.kraus().iter().map(JsonMatrix::from_matrix).collect(),
        }
    }

    pub fn to_channel(&self) -> Result<KrausChannel> {
        let mut kraus = Vec::with_capacity(self.kraus.len());
        for (k, jm) in self.kraus.iter().enumerate() {
            let m = jm.to_matrix()?;
            if m.nrows() != self.dout || m.ncols() != self.din {
                return Err(shape_error(format!(
                    "Kraus operator {k} is {}x{}, expected dout x din = {}x{}",
                    m.nrows(),
                    m.ncols(),
                    self.dout,
                    self.din
                )));
            }
            kraus.push(m);
        }
        Ok(KrausChannel::new(kraus)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmFile {
    pub dim: usize,
    pub elements: Vec<JsonMatrix>,
    #[serde(default)]
    pub labels: Vec<String>,
}

impl PovmFile {
    pub fn from_povm(m: &Povm) -> Self {
        PovmFile {
            dim: m.dim(),
            elements: m.elements().iter().map(JsonMatrix::from_matrix).collect(),
            labels: m.labels().to_vec(),
        }
    }

    pub fn to_povm(&self) -> Result<Povm> {
        let mut elements = Vec::with_capacity(self.elements.len());
        for (k, jm) in self.elements.iter().enumerate() {
            let m = jm.to_matrix()?;
            if m.nrows() != self.dim || m.ncols() != self.dim {
                return Err(shape_error(format!(
                    "element {k} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    self.dim,
                    self.dim
                )));
            }
            elements.push(m);
        }
        if self.labels.is_empty() {
            Ok(Povm::unlabeled(elements)?)
        } else {
            Ok(Povm::new(elements, self.labels.clone())?)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberFile {
    pub weight: f64,
    pub state: StateFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub members: Vec<MemberFile>,
}

impl EnsembleFile {
    pub fn from_ensemble(ens: &Ensemble) -> Self {
        EnsembleFile {
            members: ens
                .members()
                .iter()
                .map(|m| MemberFile {
                    weight: m.weight,
                    state: StateFile::from_state(&m.state),
                    label: m.label.clone(),
                })
                .collect(),
        }
    }

    pub fn to_ensemble(&self) -> Result<Ensemble> {
        let mut members = Vec::with_capacity(self.members.len());
        for m in &self.members {
            members.push(EnsembleMember {
                weight: m.weight,
                state: m.state.to_state()?,
                label: m.label.clone(),
            });
        }
        Ok(Ensemble::new(members)?)
    }
}

/// Bipartite state `τ` on `A⊗B`, A the slow index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BipartiteFile {
    pub dims: [usize; 2],
    pub matrix: JsonMatrix,
}

impl BipartiteFile {
    pub fn from_state(tau: &BipartiteState) -> Self {
        let (da, db) = tau.dims();
        BipartiteFile {
            dims: [da, db],
            matrix: JsonMatrix::from_matrix(tau.matrix()),
        }
    }

    pub fn to_state(&self) -> Result<BipartiteState> {
        let m = self.matrix.to_matrix()?;
        Ok(BipartiteState::from_matrix(m, (self.dims[0], self.dims[1]))?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairFile {
    pub rho: StateFile,
    pub channel: ChannelFile,
}

impl PairFile {
    pub fn from_pair(pair: &IsoPair) -> Self {
        PairFile {
            rho: StateFile::from_state(pair.rho()),
            channel: ChannelFile::from_channel(pair.channel()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TableFile {
    pub matrix: JsonMatrix,
    pub m_labels: Vec<String>,
    pub n_labels: Vec<String>,
}

impl TableFile {
    pub fn from_table(t: &JointTable) -> Self {
        TableFile {
            matrix: JsonMatrix::from_real(t.probs()),
            m_labels: t.m_labels().to_vec(),
            n_labels: t.n_labels().to_vec(),
        }
    }

    pub fn to_table(&self) -> Result<JointTable> {
        Ok(JointTable::new(self.matrix.to_real()?, self.m_labels.clone(), self.n_labels.clone())?)
    }
}

/// Reads and parses a JSON file, feeding its bytes into the input digest.
pub fn load<T: DeserializeOwned>(path: &Path, inputs: &mut Inputs) -> Result<T> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    inputs.add_file(&bytes);
    parse(&bytes).with_context(|| format!("malformed JSON in {}", path.display()))
}

pub fn parse<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| {
        anyhow!(
            "{} (line {}, column {})",
            e,
            e.line(),
            e.column()
        )
    })
}

pub fn save<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
