//! Per-step CSV traces.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::FeSpace;
use crate::fields::SublatticePair;
use crate::flow::StepDiagnostics;

pub const TRACE_HEADER: [&str; 19] = [
    "step",
    "time",
    "E_total",
    "E_intra",
    "E_inter_inhom",
    "E_inter_hom",
    "E_ani",
    "E_dmi",
    "E_zeeman",
    "stop_quantity",
    "err_L1_m1",
    "err_L1_m2",
    "err_Linf_m1",
    "err_Linf_m2",
    "energy_law_residual",
    "solver_iters",
    "avg_mx_m1",
    "avg_mx_m2",
    "avg_mx_total",
];

/// One CSV row, describing the state after a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    #[serde(rename = "E_total")]
    pub e_total: f64,
    #[serde(rename = "E_intra")]
    pub e_intra: f64,
    #[serde(rename = "E_inter_inhom")]
    pub e_inter_inhom: f64,
    #[serde(rename = "E_inter_hom")]
    pub e_inter_hom: f64,
    #[serde(rename = "E_ani")]
    pub e_ani: f64,
    #[serde(rename = "E_dmi")]
    pub e_dmi: f64,
    #[serde(rename = "E_zeeman")]
    pub e_zeeman: f64,
    pub stop_quantity: f64,
    #[serde(rename = "err_L1_m1")]
    pub err_l1_m1: f64,
    #[serde(rename = "err_L1_m2")]
    pub err_l1_m2: f64,
    #[serde(rename = "err_Linf_m1")]
    pub err_linf_m1: f64,
    #[serde(rename = "err_Linf_m2")]
    pub err_linf_m2: f64,
    pub energy_law_residual: f64,
    pub solver_iters: usize,
    pub avg_mx_m1: f64,
    pub avg_mx_m2: f64,
    pub avg_mx_total: f64,
}

/// `(1/|Ω|)∫ m·e₁` with lumped weights, for both sublattices.
pub fn average_mx(space: &FeSpace, pair: &SublatticePair) -> [f64; 2] {
    let w = space.lumped().weights();
    let vol = space.volume();
    [0, 1].map(|l| pair.m[l].iter().zip(w).map(|(m, w)| w * m.x).sum::<f64>() / vol)
}

impl TraceRow {
    /// Row for step `d.step`; `pair` is the state after it and `tau` the step size.
    pub fn from_step(d: &StepDiagnostics, tau: f64, space: &FeSpace, pair: &SublatticePair, eta_s: [f64; 2]) -> Self {
        let e = &d.energy_after;
        let avg = average_mx(space, pair);
        Self {
            step: d.step + 1,
            time: d.time + tau,
            e_total: e.total,
            e_intra: e.intra_exchange,
            e_inter_inhom: e.inter_inhomogeneous,
            e_inter_hom: e.inter_homogeneous,
            e_ani: e.anisotropy,
            e_dmi: e.dmi,
            e_zeeman: e.zeeman,
            stop_quantity: d.stop_quantity,
            err_l1_m1: d.constraint.err_l1[0],
            err_l1_m2: d.constraint.err_l1[1],
            err_linf_m1: d.constraint.err_linf[0],
            err_linf_m2: d.constraint.err_linf[1],
            energy_law_residual: d.energy_law_residual,
            solver_iters: d.solver_iterations,
            avg_mx_m1: avg[0],
            avg_mx_m2: avg[1],
            avg_mx_total: eta_s[0] * avg[0] + eta_s[1] * avg[1],
        }
    }
}

/// Streaming CSV writer; the header is written on creation.
pub struct TraceWriter {
    inner: csv::Writer<BufWriter<File>>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(File::create(path)?));
        inner.write_record(TRACE_HEADER).map_err(csv_err)?;
        Ok(Self { inner })
    }

    pub fn push(&mut self, row: &TraceRow) -> Result<()> {
        self.inner.serialize(row).map_err(csv_err)
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv: {other:?}")),
    }
}

pub fn write_trace<'a>(rows: impl IntoIterator<Item = &'a TraceRow>, path: &Path) -> Result<()> {
    let mut w = TraceWriter::create(path)?;
    for r in rows {
        w.push(r)?;
    }
    w.finish()
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != TRACE_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("unexpected trace header {header:?}") });
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::MaterialParams;
    use crate::fem::Metric;
    use crate::fields::{make_initial, InitialState};
    use crate::flow::{flow_step, FlowConfig, ThetaScheme};
    use crate::mesh::generate_box_mesh;
    use nalgebra::Vector3;

    #[test]
    fn empty_run_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trace(&[], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, TRACE_HEADER.join(",") + "\n");
        assert!(read_trace(&p).unwrap().is_empty());
    }

    #[test]
    fn rows_round_trip() {
        let mesh = generate_box_mesh(2, 2, 2, Vector3::repeat(-0.5), Vector3::repeat(0.5)).unwrap();
        let space = FeSpace::new(mesh);
        let params = MaterialParams::toy_problem();
        let pair = make_initial(&InitialState::Random { seed: 3 }, space.mesh()).unwrap();
        let cfg = FlowConfig::new(ThetaScheme::COUPLED, Metric::L2, 1e-3, 1e-4);
        let step = flow_step(&space, &pair, &params, &cfg).unwrap();
        let row = TraceRow::from_step(&step.diagnostics, 1e-3, &space, &step.pair, [0.5, 0.5]);
        assert_eq!(row.step, 1);
        assert!((row.e_total - step.diagnostics.energy_after.total).abs() == 0.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trace(&[row, row], &p).unwrap();
        assert_eq!(read_trace(&p).unwrap(), vec![row, row]);
    }

    #[test]
    fn average_of_constant_field() {
        let mesh = generate_box_mesh(2, 3, 1, Vector3::zeros(), Vector3::new(2.0, 1.0, 0.5)).unwrap();
        let space = FeSpace::new(mesh);
        let v = Vector3::new(0.6, 0.8, 0.0);
        let pair = make_initial(&InitialState::Constant { m1: v, m2: -v }, space.mesh()).unwrap();
        let a = average_mx(&space, &pair);
        assert!((a[0] - 0.6).abs() < 1e-14 && (a[1] + 0.6).abs() < 1e-14);
    }
}
