//! JSON plant and result files.
//!
//! Matrices are row-major nested arrays. Floats in result files are written
//! with 17 significant digits so every value round-trips exactly; infinite
//! norms and measurements are written as `null`.

use std::io;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::poset::{BlockPartition, Poset, PosetError};
use crate::statespace::StateSpace;
use crate::synthesis::{PlantData, RawPlant, SynthesisError, SynthesisResult};
use crate::verify::{Artifacts, GainRecord, NormReport, Verdict};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("DimensionMismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Invalid(#[from] SynthesisError),
}

impl From<PosetError> for IoError {
    fn from(e: PosetError) -> Self {
        IoError::Invalid(e.into())
    }
}

impl IoError {
    /// Whether this is a violated modelling assumption rather than a malformed file.
    pub fn is_validation(&self) -> bool {
        matches!(self, IoError::Invalid(e) if !matches!(e, SynthesisError::DimensionMismatch(_)))
    }
}

type Result<T> = std::result::Result<T, IoError>;

pub type Rows = Vec<Vec<f64>>;

pub fn to_rows(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Parses row-major data. `cols` fixes the width when there are no rows.
pub fn from_rows(name: &str, rows: &Rows, cols: Option<usize>) -> Result<DMatrix<f64>> {
    let width = rows.first().map(|r| r.len()).or(cols).unwrap_or(0);
    if let Some(r) = rows.iter().position(|r| r.len() != width) {
        return Err(IoError::Shape(format!("{name}: row {r} has {} entries, expected {width}", rows[r].len())));
    }
    if let Some(c) = cols {
        if c != width {
            return Err(IoError::Shape(format!("{name}: {width} columns, expected {c}")));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosetSpec {
    pub elements: Vec<String>,
    pub hasse_edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub state_dims: Vec<usize>,
    pub input_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance_dims: Option<Vec<usize>>,
    pub output_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub struct PlantMatrices {
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
    pub d: Rows,
    pub f: Rows,
}

/// Plant description. Blocks follow the order of `poset.elements`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantFile {
    pub poset: PosetSpec,
    pub partition: PartitionSpec,
    pub matrices: PlantMatrices,
}

impl PlantFile {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: &str) -> Result<Self> {
        Self::from_json_str(&read_to_string(path)?)
    }

    /// Builds the poset and permutes every block into linear-extension order.
    pub fn to_raw(&self) -> Result<RawPlant> {
        let poset = Poset::build(&self.poset.elements, &self.poset.hasse_edges)?;
        let p = &self.partition;
        let file_part = match &p.disturbance_dims {
            Some(r) => BlockPartition::with_disturbance_dims(
                p.state_dims.clone(),
                p.input_dims.clone(),
                r.clone(),
                p.output_dim,
            ),
            None => BlockPartition::new(p.state_dims.clone(), p.input_dims.clone(), p.output_dim),
        }
        .map_err(|e| IoError::Shape(e.to_string()))?;
        if file_part.blocks() != poset.len() {
            return Err(IoError::Shape(format!(
                "partition has {} blocks, poset has {} elements",
                file_part.blocks(),
                poset.len()
            )));
        }
        let (n, m, l, r) = (
            file_part.n_states(),
            file_part.n_inputs(),
            file_part.output_dim(),
            file_part.n_disturbances(),
        );
        let mx = &self.matrices;
        let a = from_rows("A", &mx.a, Some(n))?;
        let b = from_rows("B", &mx.b, Some(m))?;
        let c = from_rows("C", &mx.c, Some(n))?;
        let d = from_rows("D", &mx.d, Some(m))?;
        let f = from_rows("F", &mx.f, Some(r))?;
        for (name, mat, rows) in [("A", &a, n), ("B", &b, n), ("C", &c, l), ("D", &d, l), ("F", &f, n)] {
            if mat.nrows() != rows {
                return Err(IoError::Shape(format!("{name}: {} rows, expected {rows}", mat.nrows())));
            }
        }

        let order: Vec<usize> = (0..poset.len()).map(|i| poset.source_position(i)).collect();
        let concat = |ranges: &dyn Fn(usize) -> std::ops::Range<usize>| -> Vec<usize> {
            order.iter().flat_map(|&s| ranges(s)).collect()
        };
        let xs = concat(&|s| file_part.state_range(s));
        let us = concat(&|s| file_part.input_range(s));
        let ws = concat(&|s| file_part.disturbance_range(s));
        let outs: Vec<usize> = (0..l).collect();
        let sel = crate::linalg::select;
        Ok(RawPlant {
            partition: file_part.permuted(&order),
            a: sel(&a, &xs, &xs),
            b: sel(&b, &xs, &us),
            c: sel(&c, &outs, &xs),
            d: sel(&d, &outs, &us),
            f: sel(&f, &xs, &ws),
            poset,
        })
    }

    pub fn to_plant(&self, atol: f64) -> Result<PlantData> {
        Ok(crate::synthesis::validate_plant(self.to_raw()?, atol)?)
    }

    /// Describes a validated plant; blocks are written in internal order.
    pub fn from_plant(plant: &PlantData) -> Self {
        let part = plant.partition();
        PlantFile {
            poset: poset_spec(plant.poset()),
            partition: PartitionSpec {
                state_dims: part.state_dims().to_vec(),
                input_dims: part.input_dims().to_vec(),
                disturbance_dims: Some(part.disturbance_dims().to_vec()),
                output_dim: part.output_dim(),
            },
            matrices: PlantMatrices {
                a: to_rows(plant.a()),
                b: to_rows(plant.b()),
                c: to_rows(plant.c()),
                d: to_rows(plant.d()),
                f: to_rows(plant.f()),
            },
        }
    }
}

fn poset_spec(poset: &Poset) -> PosetSpec {
    PosetSpec {
        elements: poset.labels().to_vec(),
        hasse_edges: poset
            .hasse_edges()
            .iter()
            .map(|&(a, b)| (poset.label(a).to_string(), poset.label(b).to_string()))
            .collect(),
    }
}

fn read_to_string(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_string(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub struct Realization {
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
    pub d: Rows,
}

impl Realization {
    pub fn from_state_space(sys: &StateSpace) -> Self {
        Realization {
            a: to_rows(sys.a()),
            b: to_rows(sys.b()),
            c: to_rows(sys.c()),
            d: to_rows(sys.d()),
        }
    }

    /// Dimensions come from `D` (outputs × inputs) and `A` (order), so empty
    /// blocks of a static gain are unambiguous.
    pub fn to_state_space(&self, name: &str) -> Result<StateSpace> {
        let n = self.a.len();
        let d = from_rows(&format!("{name}.D"), &self.d, None)?;
        let (p, m) = d.shape();
        let a = from_rows(&format!("{name}.A"), &self.a, Some(n))?;
        let b = from_rows(&format!("{name}.B"), &self.b, Some(m))?;
        let c = from_rows(&format!("{name}.C"), &self.c, Some(n))?;
        if b.nrows() != n || c.nrows() != p {
            return Err(IoError::Shape(format!("{name}: inconsistent realization")));
        }
        StateSpace::new(a, b, c, d).map_err(|e| IoError::Shape(format!("{name}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainEntry {
    pub label: String,
    pub downstream: Vec<String>,
    #[serde(rename = "X")]
    pub x: Rows,
    #[serde(rename = "L")]
    pub l: Rows,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEntry {
    pub h_open: Option<f64>,
    pub h_centralized: Option<f64>,
    pub h_decentralized: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<NormReport> for NormEntry {
    fn from(n: NormReport) -> Self {
        NormEntry {
            h_open: finite(n.h_open),
            h_centralized: finite(n.h_centralized),
            h_decentralized: finite(n.h_decentralized),
        }
    }
}

impl From<NormEntry> for NormReport {
    fn from(n: NormEntry) -> Self {
        let inf = |x: Option<f64>| x.unwrap_or(f64::INFINITY);
        NormReport {
            h_open: inf(n.h_open),
            h_centralized: inf(n.h_centralized),
            h_decentralized: inf(n.h_decentralized),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub check_name: String,
    pub passed: bool,
    pub measured: Option<f64>,
    pub tolerance: f64,
    pub reference: String,
}

impl From<&Verdict> for VerdictEntry {
    fn from(v: &Verdict) -> Self {
        VerdictEntry {
            check_name: v.check_name.clone(),
            passed: v.passed,
            measured: finite(v.measured.max(-f64::MAX)),
            tolerance: v.tolerance,
            reference: v.reference.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub atol: f64,
    pub freq_samples: usize,
    pub parallel: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: "poset-h2".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosetSummary {
    /// Internal element order; every block below follows it.
    pub elements: Vec<String>,
    pub hasse_edges: Vec<(String, String)>,
    pub sigma: usize,
}

/// Everything `synth` writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub tool: ToolInfo,
    pub config: ConfigEcho,
    pub poset: PosetSummary,
    pub partition: PartitionSpec,
    pub degree: usize,
    pub degree_bound: usize,
    pub controller: Realization,
    pub phi: Realization,
    pub gamma: Realization,
    pub k_phi: Realization,
    pub q_star: Realization,
    pub gains: Vec<GainEntry>,
    pub norms: NormEntry,
    pub verdicts: Vec<VerdictEntry>,
}

impl ResultFile {
    pub fn new(plant: &PlantData, result: &SynthesisResult, verdicts: &[Verdict], config: ConfigEcho) -> Self {
        let poset = plant.poset();
        let part = plant.partition();
        let spec = poset_spec(poset);
        ResultFile {
            tool: ToolInfo::default(),
            config,
            poset: PosetSummary {
                elements: spec.elements,
                hasse_edges: spec.hasse_edges,
                sigma: poset.sigma(),
            },
            partition: PartitionSpec {
                state_dims: part.state_dims().to_vec(),
                input_dims: part.input_dims().to_vec(),
                disturbance_dims: Some(part.disturbance_dims().to_vec()),
                output_dim: part.output_dim(),
            },
            degree: result.k_star.order(),
            degree_bound: result.degree_bound,
            controller: Realization::from_state_space(&result.k_star),
            phi: Realization::from_state_space(&result.phi),
            gamma: Realization::from_state_space(&result.gamma),
            k_phi: Realization::from_state_space(&result.k_phi),
            q_star: Realization::from_state_space(&result.q_star),
            gains: result
                .gains
                .iter()
                .enumerate()
                .map(|(j, g)| GainEntry {
                    label: poset.label(j).to_string(),
                    downstream: poset.downstream(j).iter().map(|&q| poset.label(q).to_string()).collect(),
                    x: to_rows(&g.x),
                    l: to_rows(&g.gain),
                })
                .collect(),
            norms: result.norms.into(),
            verdicts: verdicts.iter().map(VerdictEntry::from).collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: &str) -> Result<Self> {
        Self::from_json_str(&read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        to_json_string(self)
    }

    /// Stored realizations for re-verification, checked against the plant's
    /// element order.
    pub fn artifacts(&self, plant: &PlantData) -> Result<Artifacts> {
        if self.poset.elements != plant.poset().labels() {
            return Err(IoError::Shape(format!(
                "result element order {:?} does not match plant order {:?}",
                self.poset.elements,
                plant.poset().labels()
            )));
        }
        let gains = self
            .gains
            .iter()
            .map(|g| {
                Ok(GainRecord {
                    x: from_rows(&format!("X[{}]", g.label), &g.x, None)?,
                    gain: from_rows(&format!("L[{}]", g.label), &g.l, None)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let art = Artifacts {
            controller: self.controller.to_state_space("controller")?,
            phi: self.phi.to_state_space("phi")?,
            gamma: self.gamma.to_state_space("gamma")?,
            k_phi: self.k_phi.to_state_space("k_phi")?,
            q_star: self.q_star.to_state_space("q_star")?,
            gains,
        };
        art.check_dimensions(plant).map_err(IoError::Shape)?;
        Ok(art)
    }
}

/// Pretty JSON whose floats carry 17 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

struct FullPrecision<F>(F);

macro_rules! forward {
    ($($name:ident),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
                self.0.$name(w)
            }
        )*
    };
}

impl<F: Formatter> Formatter for FullPrecision<F> {
    forward!(begin_array, end_array, end_array_value, begin_object, end_object, end_object_value, begin_object_value);

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value == 0.0 {
            // keeps the sign of negative zero
            return write!(w, "{}", if value.is_sign_negative() { "-0.0" } else { "0.0" });
        }
        write!(w, "{value:.16e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIAMOND: &str = r#"{
      "poset": {"elements": ["4","2","3","1"], "hasse_edges": [["1","2"],["1","3"],["2","4"],["3","4"]]},
      "partition": {"state_dims": [1,1,1,1], "input_dims": [1,1,1,1], "output_dim": 1},
      "matrices": {
        "A": [[-1,0,0,3],[0,-2,0,0],[0,0,-3,0],[0,0,0,-4]],
        "B": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],
        "C": [[0,0,0,0]],
        "D": [[1,1,1,1]],
        "F": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]
      }
    }"#;

    #[test]
    fn file_blocks_are_permuted_to_internal_order() {
        let raw = PlantFile::from_json_str(DIAMOND).unwrap().to_raw().unwrap();
        assert_eq!(raw.poset.labels(), &["1", "2", "3", "4"]);
        // file element "4" (position 0) had A entry 3 from element "1"
        assert_eq!(raw.a[(3, 0)], 3.0);
        assert_eq!(raw.a[(0, 0)], -4.0);
        assert_eq!(raw.a[(3, 3)], -1.0);
    }

    #[test]
    fn ragged_rows_are_a_shape_error() {
        let bad = DIAMOND.replace("[0,-2,0,0]", "[0,-2,0]");
        let err = PlantFile::from_json_str(&bad).unwrap().to_raw().unwrap_err();
        assert!(matches!(err, IoError::Shape(_)));
        assert!(!err.is_validation());
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = PlantFile::from_json_str("{\n  \"poset\": [1,").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn cycle_is_a_validation_error() {
        let cyc = DIAMOND.replace(r#"["3","4"]"#, r#"["3","4"],["4","1"]"#);
        let err = PlantFile::from_json_str(&cyc).unwrap().to_raw().unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("CycleDetected"));
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let x = vec![0.1_f64, 1.0 / 3.0, -2.5e-300, 0.0, 12345.678];
        let s = to_json_string(&x);
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn static_realization_round_trips() {
        let sys = StateSpace::static_gain(DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]));
        let r = Realization::from_state_space(&sys);
        let s = to_json_string(&r);
        let back: Realization = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_state_space("k").unwrap(), sys);
    }
}
