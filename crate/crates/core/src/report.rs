//! Serializable result records.
//!
//! Field order in the structs below is the key order in the JSON output.
//! Floats are written in the shortest form that parses back to the same
//! `f64`, so serialization round-trips exactly.

use serde::{Deserialize, Serialize};

use crate::catalog::Expected;
use crate::error::{Error, Result};
use crate::expr::ConvexFunction;
use crate::frames::{theta_max_at, EjiriData};
use crate::invariants::CalabiInvariants;
use crate::pde::{pde_report_at, PdeReport};

pub const TOOL: &str = "calabi";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamp {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
}

impl Stamp {
    pub fn new(seed: Option<u64>) -> Self {
        Stamp {
            tool: TOOL.into(),
            version: VERSION.into(),
            seed,
        }
    }
}

/// Every JSON document the CLI writes has this shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub command: String,
    pub provenance: Stamp,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, seed: Option<u64>, result: T) -> Self {
        Envelope {
            command: command.into(),
            provenance: Stamp::new(seed),
            result,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDescriptor {
    pub name: Option<String>,
    pub source: String,
    pub n: usize,
}

impl FunctionDescriptor {
    pub fn of(f: &ConvexFunction) -> Self {
        FunctionDescriptor {
            name: f.name.clone(),
            source: f.body.to_string(),
            n: f.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    #[serde(rename = "detD")]
    pub det: f64,
    pub eig_min: f64,
    pub eig_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionalSample {
    /// Coordinate plane `(e_i, e_j)`, 1-based.
    pub plane: [usize; 2],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantSummary {
    #[serde(rename = "Tcheb")]
    pub tcheb: Vec<f64>,
    #[serde(rename = "Tnorm2")]
    pub tnorm2: f64,
    #[serde(rename = "pickJ")]
    pub pick_j: f64,
    pub scalar_contracted: f64,
    #[serde(rename = "scalar_JT")]
    pub scalar_jt: f64,
    pub sectional: Vec<SectionalSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeEntry {
    pub a: f64,
    pub w: f64,
    pub residual_12: f64,
    pub residual_11: f64,
    pub implied_lsharp: f64,
    pub normalized_residual: f64,
}

impl From<&PdeReport> for PdeEntry {
    fn from(r: &PdeReport) -> Self {
        PdeEntry {
            a: r.a,
            w: r.w,
            residual_12: r.residual_12,
            residual_11: r.residual_11,
            implied_lsharp: r.implied_lsharp,
            normalized_residual: r.normalized_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramesSummary {
    pub theta: f64,
    pub lambda1: f64,
    pub maximizer: Vec<f64>,
    pub spectrum: Vec<f64>,
    pub maximizer_spectrum: Vec<f64>,
    pub spectrum_at_maximizer: bool,
}

impl From<&EjiriData> for FramesSummary {
    fn from(e: &EjiriData) -> Self {
        FramesSummary {
            theta: e.theta,
            lambda1: e.lambda1,
            maximizer: e.maximizer.clone(),
            spectrum: e.spectrum.clone(),
            maximizer_spectrum: e.maximizer_spectrum.clone(),
            spectrum_at_maximizer: e.spectrum_at_maximizer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub function: FunctionDescriptor,
    pub point: Vec<f64>,
    pub metric: MetricSummary,
    pub invariants: InvariantSummary,
    pub pde: Vec<PdeEntry>,
    /// Absent (`null`) when the cubic form vanishes.
    pub frames: Option<FramesSummary>,
    pub expected: Vec<Expected>,
    pub provenance: Stamp,
}

pub struct AnalysisOptions<'a> {
    pub exponents: &'a [f64],
    pub restarts: usize,
    pub seed: u64,
    pub expected: Vec<Expected>,
}

impl AnalysisReport {
    pub fn build(f: &ConvexFunction, point: &[f64], opts: AnalysisOptions<'_>) -> Result<Self> {
        let inv = CalabiInvariants::at(f, point)?;
        let n = inv.n();
        let (eig_min, eig_max) = inv.metric.eigen_range();
        let mut sectional = Vec::new();
        let secs = inv.coordinate_sectionals();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                sectional.push(SectionalSample {
                    plane: [i + 1, j + 1],
                    value: secs[k],
                });
                k += 1;
            }
        }
        let pde = opts
            .exponents
            .iter()
            .map(|&a| pde_report_at(&inv.jet, &inv.metric, a).map(|r| PdeEntry::from(&r)))
            .collect::<Result<Vec<_>>>()?;
        let frames = match theta_max_at(&inv, opts.restarts, opts.seed) {
            Ok(e) => Some(FramesSummary::from(&e)),
            Err(Error::VanishingPick) => None,
            Err(e) => return Err(e),
        };
        Ok(AnalysisReport {
            function: FunctionDescriptor::of(f),
            point: point.to_vec(),
            metric: MetricSummary {
                det: inv.metric.det,
                eig_min,
                eig_max,
            },
            invariants: InvariantSummary {
                tcheb: inv.connection.tcheb.clone(),
                tnorm2: inv.connection.tnorm2,
                pick_j: inv.connection.pick_j,
                scalar_contracted: inv.curvature.scalar_contracted,
                scalar_jt: inv.curvature.scalar_jt,
                sectional,
            },
            pde,
            frames,
            expected: opts.expected,
            provenance: Stamp::new(Some(opts.seed)),
        })
    }
}

pub fn to_json<T: Serialize>(r: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(r)? + "\n")
}

/// CSV text with a header row, minimal quoting and `\n` line endings.
pub fn csv_string<I>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// CSV with arbitrary string cells.
pub fn csv_records(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn report(seed: u64) -> AnalysisReport {
        let e = catalog::get("thm13a", 2).unwrap();
        AnalysisReport::build(
            &e.function,
            &[1.0, 0.0],
            AnalysisOptions {
                exponents: &[-2.0 / 3.0, -1.0],
                restarts: 16,
                seed,
                expected: e.expected.clone(),
            },
        )
        .unwrap()
    }

    #[test]
    fn pick_invariant_appears_in_json() {
        let json = to_json(&report(42)).unwrap();
        assert!(json.contains("\"pickJ\": 3.5"), "{json}");
        assert!(json.contains("\"Tnorm2\": 2.25"));
    }

    #[test]
    fn round_trip_is_lossless() {
        let r = report(42);
        let back: AnalysisReport = serde_json::from_str(&to_json(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn empty_pde_section_keeps_its_key() {
        let f = catalog::get("quadratic", 2).unwrap().function;
        let r = AnalysisReport::build(
            &f,
            &[0.0, 0.0],
            AnalysisOptions {
                exponents: &[],
                restarts: 8,
                seed: 1,
                expected: vec![],
            },
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json(&r).unwrap()).unwrap();
        assert_eq!(v["pde"], serde_json::json!([]));
        assert!(v["frames"].is_null());
    }

    #[test]
    fn same_seed_same_bytes() {
        assert_eq!(to_json(&report(7)).unwrap(), to_json(&report(7)).unwrap());
    }

    #[test]
    fn csv_uses_lf_and_quotes_when_needed() {
        let s = csv_string(&["t", "eta"], vec![vec![0.0, 1.5], vec![0.1, -2.0]]).unwrap();
        assert_eq!(s, "t,eta\n0,1.5\n0.1,-2\n");
        let s = csv_records(&["name", "label"], &[vec!["a".into(), "x, y".into()]]).unwrap();
        assert_eq!(s, "name,label\na,\"x, y\"\n");
    }
}
