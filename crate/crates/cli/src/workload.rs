//! Layer tables: CSV with an `id,m,n,k` header.

use std::collections::HashSet;

use gemmsim::LayerSpec;
use serde::Deserialize;
use thiserror::Error;

/// The convolution layers of MobileNetV1 lowered to GEMM.
pub const MOBILENET_V1: &str = include_str!("../data/mobilenetv1.csv");

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("row {row}: {source}")]
    Parse { row: usize, source: csv::Error },
    #[error("row {row}: dimension {dim} of layer `{id}` must be at least 1")]
    ZeroDimension {
        row: usize,
        id: String,
        dim: &'static str,
    },
    #[error("row {row}: duplicate layer id `{id}`")]
    DuplicateId { row: usize, id: String },
    #[error("no layers")]
    Empty,
}

#[derive(Deserialize)]
struct Row {
    id: String,
    m: usize,
    n: usize,
    k: usize,
}

pub fn parse_layers(text: &str) -> Result<Vec<LayerSpec>, WorkloadError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut seen = HashSet::new();
    let mut layers = Vec::new();
    for (i, record) in reader.deserialize::<Row>().enumerate() {
        // Data rows are numbered from 1, after the header.
        let row = i + 1;
        let r = record.map_err(|source| WorkloadError::Parse { row, source })?;
        for (dim, v) in [("m", r.m), ("n", r.n), ("k", r.k)] {
            if v == 0 {
                return Err(WorkloadError::ZeroDimension { row, id: r.id, dim });
            }
        }
        if !seen.insert(r.id.clone()) {
            return Err(WorkloadError::DuplicateId { row, id: r.id });
        }
        layers.push(LayerSpec::new(r.id, r.m, r.n, r.k));
    }
    if layers.is_empty() {
        return Err(WorkloadError::Empty);
    }
    Ok(layers)
}
