//! JSON and CSV formats.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays. Shapes:
//!
//! * observable: `{"dim": d, "matrix": M}` or `{"bloch": [x, y, z]}`
//! * density matrix: `{"dim": d, "matrix": M}`
//! * channel: `{"dim": d, "kraus": [M, ...]}`
//! * pvm: `{"dim": d, "projectors": [M, ...]}`
//!
//! CSV floats are written with 17 significant digits so they read back
//! bit-identically.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::cluster::DistanceMatrix;
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix};
use crate::quantum::{
    bloch_to_pvm, dephasing_channel, pvm_from_observable, BlochObservable, DensityMatrix,
    KrausChannel, ProjectorFamily,
};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixObservableJson {
    pub dim: usize,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochJson {
    pub bloch: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableJson {
    Matrix(MatrixObservableJson),
    Bloch(BlochJson),
}

pub type DensityJson = MatrixObservableJson;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub dim: usize,
    pub kraus: Vec<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvmJson {
    pub dim: usize,
    pub projectors: Vec<MatrixJson>,
}

/// Any document that describes a measurement or a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorJson {
    Channel(ChannelJson),
    Pvm(PvmJson),
    Observable(ObservableJson),
}

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    m.to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn matrix_from_json(m: &MatrixJson, dim: usize) -> Result<ComplexMatrix> {
    if m.len() != dim || m.iter().any(|r| r.len() != dim) {
        return Err(Error::Parse(format!("matrix is not {dim}x{dim}")));
    }
    let rows: Vec<Vec<_>> = m
        .iter()
        .map(|r| r.iter().map(|&[a, b]| c(a, b)).collect())
        .collect();
    ComplexMatrix::from_rows(&rows).map_err(|e| Error::Parse(e.to_string()))
}

pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

impl ObservableJson {
    pub fn from_bloch(b: &BlochObservable) -> Self {
        ObservableJson::Bloch(BlochJson { bloch: b.vector() })
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        ObservableJson::Matrix(MatrixObservableJson {
            dim: m.rows(),
            matrix: matrix_to_json(m),
        })
    }

    pub fn to_pvm(&self) -> Result<ProjectorFamily> {
        match self {
            ObservableJson::Bloch(b) => Ok(bloch_to_pvm(&BlochObservable::new(b.bloch)?)),
            ObservableJson::Matrix(m) => {
                let a = matrix_from_json(&m.matrix, m.dim)?;
                if !a.is_hermitian(1e-10) {
                    return Err(Error::NotHermitian(a.hermitian_deviation()));
                }
                pvm_from_observable(&a)
            }
        }
    }
}

pub fn density_to_json(rho: &DensityMatrix) -> DensityJson {
    DensityJson {
        dim: rho.dim(),
        matrix: matrix_to_json(rho.matrix()),
    }
}

pub fn density_from_json(j: &DensityJson) -> Result<DensityMatrix> {
    DensityMatrix::new(matrix_from_json(&j.matrix, j.dim)?)
}

pub fn channel_to_json(ch: &KrausChannel) -> ChannelJson {
    ChannelJson {
        dim: ch.dim(),
        kraus: ch.kraus().iter().map(matrix_to_json).collect(),
    }
}

pub fn channel_from_json(j: &ChannelJson) -> Result<KrausChannel> {
    let kraus = j
        .kraus
        .iter()
        .map(|m| matrix_from_json(m, j.dim))
        .collect::<Result<_>>()?;
    KrausChannel::new(kraus)
}

pub fn pvm_to_json(p: &ProjectorFamily) -> PvmJson {
    PvmJson {
        dim: p.dim(),
        projectors: p.projectors().iter().map(matrix_to_json).collect(),
    }
}

pub fn pvm_from_json(j: &PvmJson) -> Result<ProjectorFamily> {
    let ps = j
        .projectors
        .iter()
        .map(|m| matrix_from_json(m, j.dim))
        .collect::<Result<_>>()?;
    ProjectorFamily::new(ps)
}

/// Reads a measurement from an observable or pvm document.
pub fn parse_measurement(text: &str) -> Result<ProjectorFamily> {
    match from_json_str::<OperatorJson>(text)? {
        OperatorJson::Pvm(p) => pvm_from_json(&p),
        OperatorJson::Observable(o) => o.to_pvm(),
        OperatorJson::Channel(_) => Err(Error::InvalidProjectorFamily(
            "expected an observable or pvm, found a channel".into(),
        )),
    }
}

/// Reads a channel; measurements are turned into their dephasing channels.
pub fn parse_channel(text: &str) -> Result<KrausChannel> {
    match from_json_str::<OperatorJson>(text)? {
        OperatorJson::Channel(c) => channel_from_json(&c),
        OperatorJson::Pvm(p) => Ok(dephasing_channel(&pvm_from_json(&p)?)),
        OperatorJson::Observable(o) => Ok(dephasing_channel(&o.to_pvm()?)),
    }
}

pub const MAXIMALLY_MIXED: &str = "maximally-mixed";

/// `"maximally-mixed"` or a path to a density-matrix document.
pub fn parse_rho_arg(arg: &str, dim: usize) -> Result<DensityMatrix> {
    if arg == MAXIMALLY_MIXED {
        return Ok(DensityMatrix::maximally_mixed(dim));
    }
    let j: DensityJson = from_json_str(&read_text(Path::new(arg))?)?;
    let rho = density_from_json(&j)?;
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, operators have {dim}",
            rho.dim()
        )));
    }
    Ok(rho)
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("csv: {e}"))
}

/// Headerless `n × n` CSV.
pub fn distances_to_csv(d: &DistanceMatrix) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for row in d.rows() {
        w.write_record(row.iter().map(|&x| format_float(x)))
            .map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

pub fn distances_from_csv(text: &str) -> Result<DistanceMatrix> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(csv_err))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    DistanceMatrix::new(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub truth: usize,
    pub label: Option<usize>,
}

/// `x,y,z,truth,label` with a header row; `label` is empty when absent.
pub fn observables_to_csv(rows: &[ObservableRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "z", "truth", "label"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            format_float(r.x),
            format_float(r.y),
            format_float(r.z),
            r.truth.to_string(),
            r.label.map(|l| l.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

pub fn observables_from_csv(text: &str) -> Result<Vec<ObservableRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|rec| rec.map_err(csv_err)).collect()
}
