//! JSON network file schema.
//!
//! Complex quantities are `[real, imag]` pairs, impedance matrices are lists
//! of rows of `[r_ohm, x_ohm]` pairs and angles are in degrees.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::model::*;
use super::topology::validate_topology;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::phasor::{PhaseId, Phasor};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub base: BaseFile,
    pub buses: Vec<BusFile>,
    pub branches: Vec<BranchFile>,
    #[serde(default)]
    pub loads: Vec<LoadFile>,
    #[serde(default)]
    pub sources: Vec<SourceFile>,
    pub substation: SubstationFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseFile {
    #[serde(default = "default_frequency")]
    pub frequency_hz: f64,
    pub power_va: f64,
}

fn default_frequency() -> f64 {
    60.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusFile {
    pub id: String,
    pub phases: Vec<String>,
    pub nominal_voltage: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchFile {
    pub id: String,
    pub from: String,
    pub to: String,
    pub phases: Vec<String>,
    pub z: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub b_shunt: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub tap: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadFile {
    pub id: String,
    pub bus: String,
    pub phases: Vec<String>,
    #[serde(default = "default_connection")]
    pub connection: String,
    #[serde(default)]
    pub model: Option<String>,
    pub power_va: Vec<[f64; 2]>,
}

fn default_connection() -> String {
    "wye".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceFile {
    pub id: String,
    pub bus: String,
    pub phases: Vec<String>,
    pub fundamental_base_a: f64,
    pub spectrum: Vec<SpectrumEntryFile>,
    #[serde(default)]
    pub sequence: Option<SequenceFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumEntryFile {
    pub order: i64,
    pub magnitude_pct: f64,
    #[serde(default)]
    pub angle_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SequenceFile {
    Rule(String),
    Explicit(Vec<SequenceOffsetFile>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceOffsetFile {
    pub order: u32,
    pub offsets_deg: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstationFile {
    #[serde(default = "default_substation_id")]
    pub id: String,
    pub bus: String,
    pub voltage: Vec<PolarFile>,
    pub z: Vec<Vec<[f64; 2]>>,
}

fn default_substation_id() -> String {
    "source".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarFile {
    pub magnitude: f64,
    #[serde(default)]
    pub angle_deg: f64,
}

fn phases(context: &str, raw: &[String]) -> Result<Vec<PhaseId>> {
    raw.iter()
        .map(|p| p.parse().map_err(|e| Error::Parse(format!("{context}: {e}"))))
        .collect()
}

fn complex_matrix<T: Scalar>(context: &str, rows: &[Vec<[f64; 2]>]) -> Result<CMatrix<T>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!("{context}: matrix rows have unequal length")));
    }
    Ok(CMatrix::from_rows(
        rows.iter()
            .map(|r| r.iter().map(|&[re, im]| Complex::new(T::lit(re), T::lit(im))).collect())
            .collect(),
    ))
}

impl NetworkFile {
    /// Structural conversion into a model. Semantic problems (dangling ids,
    /// dimension mismatches, loops) are left for [`validate_topology`].
    pub fn into_model<T: Scalar>(self) -> Result<NetworkModel<T>> {
        let buses = self
            .buses
            .into_iter()
            .map(|b| {
                Ok(Bus {
                    phases: phases(&format!("bus {}", b.id), &b.phases)?,
                    nominal_voltage: T::lit(b.nominal_voltage),
                    id: b.id,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let branches = self
            .branches
            .into_iter()
            .map(|b| {
                let ctx = format!("branch {}", b.id);
                let z = complex_matrix(&ctx, &b.z)?;
                let shunt = match &b.b_shunt {
                    Some(rows) => {
                        let pairs: Vec<Vec<[f64; 2]>> =
                            rows.iter().map(|r| r.iter().map(|&x| [0.0, x]).collect()).collect();
                        complex_matrix(&ctx, &pairs)?
                    }
                    None => CMatrix::zeros(z.rows(), z.cols()),
                };
                Ok(Branch {
                    phases: phases(&ctx, &b.phases)?,
                    z,
                    shunt,
                    tap: T::lit(b.tap.unwrap_or(1.0)),
                    id: b.id,
                    from: b.from,
                    to: b.to,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let loads = self
            .loads
            .into_iter()
            .map(|l| {
                let ctx = format!("load {}", l.id);
                if l.connection != "wye" {
                    return Err(Error::Parse(format!(
                        "{ctx}: unsupported connection `{}` (only `wye`)",
                        l.connection
                    )));
                }
                let model = match l.model.as_deref() {
                    None | Some("constant_power") => LoadModel::ConstantPower,
                    Some("constant_current") => LoadModel::ConstantCurrent,
                    Some("constant_impedance") => LoadModel::ConstantImpedance,
                    Some(other) => return Err(Error::Parse(format!("{ctx}: unknown load model `{other}`"))),
                };
                Ok(Load {
                    phases: phases(&ctx, &l.phases)?,
                    model,
                    power: l
                        .power_va
                        .iter()
                        .map(|&[p, q]| Complex::new(T::lit(p), T::lit(q)))
                        .collect(),
                    id: l.id,
                    bus: l.bus,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let sources = self
            .sources
            .into_iter()
            .map(|s| {
                let ctx = format!("source {}", s.id);
                let sequence = match s.sequence {
                    None => SequenceRule::Auto,
                    Some(SequenceFile::Rule(r)) if r == "auto" => SequenceRule::Auto,
                    Some(SequenceFile::Rule(r)) => {
                        return Err(Error::Parse(format!("{ctx}: unknown sequence rule `{r}`")))
                    }
                    Some(SequenceFile::Explicit(list)) => SequenceRule::Explicit(
                        list.into_iter()
                            .map(|o| (o.order, o.offsets_deg.into_iter().map(T::lit).collect()))
                            .collect::<BTreeMap<_, _>>(),
                    ),
                };
                let spectrum = s
                    .spectrum
                    .iter()
                    .map(|e| {
                        Ok(SourceComponent {
                            order: u32::try_from(e.order)
                                .map_err(|_| Error::Parse(format!("{ctx}: harmonic order {} out of range", e.order)))?,
                            magnitude_pct: T::lit(e.magnitude_pct),
                            base_angle_deg: T::lit(e.angle_deg),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(HarmonicSource {
                    phases: phases(&ctx, &s.phases)?,
                    fundamental_base: T::lit(s.fundamental_base_a),
                    spectrum,
                    sequence,
                    id: s.id,
                    bus: s.bus,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let sub = self.substation;
        let substation = SubstationEquivalent {
            z: complex_matrix("substation", &sub.z)?,
            voltage: sub
                .voltage
                .iter()
                .map(|v| Phasor::from_degrees(T::lit(v.magnitude), T::lit(v.angle_deg)))
                .collect(),
            id: sub.id,
            bus: sub.bus,
        };

        Ok(NetworkModel {
            base_frequency: T::lit(self.base.frequency_hz),
            base_power: T::lit(self.base.power_va),
            buses,
            branches,
            loads,
            sources,
            substation,
        })
    }
}

/// Parses a model from JSON text without semantic validation.
pub fn parse_network<T: Scalar>(text: &str) -> Result<NetworkModel<T>> {
    let file: NetworkFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_model()
}

/// Reads, parses and validates a network file.
pub fn load_network<T: Scalar>(path: impl AsRef<Path>) -> Result<NetworkModel<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let model = parse_network(&text)?;
    let findings = validate_topology(&model);
    if findings.is_empty() {
        Ok(model)
    } else {
        Err(Error::Validation(findings))
    }
}
