use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of the time-series CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub vertices: usize,
    pub living_edges: usize,
    pub total_edges: usize,
    pub max_degree_living: u64,
    pub max_degree_with_blue: u64,
    pub argmax_vertex_birth_time: f64,
}

/// Writes rows with a header and LF line endings.
pub fn write_series_csv<W: Write>(rows: &[SeriesRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Consistency(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::Consistency(format!("csv: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotVertex {
    pub id: usize,
    pub birth_time: f64,
    pub degree_living: u64,
    pub degree_with_blue: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEdge {
    pub id: usize,
    pub endpoints: [usize; 2],
    pub birth_time: f64,
    pub alive: bool,
}

/// The graph as seen at time `t`: vertices and edges born by `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSnapshot {
    pub t: f64,
    pub vertices: Vec<SnapshotVertex>,
    pub edges: Vec<SnapshotEdge>,
}
