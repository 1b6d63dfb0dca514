//! CSV forms of region tables and per-pair scatter files.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{BenchError, RegionLabel};

/// `pair` value of rows holding the mean over all pairs.
pub const MEAN_PAIR: &str = "mean";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub method: String,
    pub task: String,
    pub model: String,
    pub pair: String,
    pub region: RegionLabel,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub model_id: String,
    pub u: f64,
    pub f: f64,
    pub region: RegionLabel,
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<Vec<T>, BenchError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(BenchError::from)
}

pub fn write_region_table<W: Write>(rows: &[RegionRow], out: W) -> Result<(), BenchError> {
    write_rows(rows, out)
}

pub fn read_region_table<R: Read>(input: R) -> Result<Vec<RegionRow>, BenchError> {
    read_rows(input)
}

pub fn write_scatter<W: Write>(rows: &[ScatterRow], out: W) -> Result<(), BenchError> {
    write_rows(rows, out)
}

pub fn read_scatter<R: Read>(input: R) -> Result<Vec<ScatterRow>, BenchError> {
    read_rows(input)
}
