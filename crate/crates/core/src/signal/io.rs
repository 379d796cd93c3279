//! Plain-text CSV: no header, comma-separated decimals, one matrix row per line.
//! Vectors may be stored as a single row or a single column. Values are written
//! with the shortest representation that round-trips exactly.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::{MeasurementMatrix, Signal};
use crate::error::{Error, Result};

fn read_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {}, field {}: {field:?}", line + 1, col + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_matrix_csv<R: Read>(reader: R) -> Result<MeasurementMatrix> {
    let rows = read_rows(reader)?;
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix file".into()));
    }
    let n = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != n) {
        return Err(Error::Parse(format!(
            "row {} has {} fields, expected {n}",
            i + 1,
            rows[i].len()
        )));
    }
    MeasurementMatrix::from_rows(&rows)
}

pub fn read_vector_csv<R: Read>(reader: R) -> Result<Signal> {
    let rows = read_rows(reader)?;
    let values = match rows.as_slice() {
        [] => return Err(Error::Parse("empty vector file".into())),
        [single] => single.clone(),
        many if many.iter().all(|r| r.len() == 1) => many.iter().map(|r| r[0]).collect(),
        _ => {
            return Err(Error::Parse(
                "vector file must be a single row or a single column".into(),
            ))
        }
    };
    Signal::new(values)
}

pub fn write_matrix_csv<W: Write>(mut w: W, a: &DMatrix<f64>) -> Result<()> {
    for row in a.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Writes one value per line (single column).
pub fn write_vector_csv<W: Write>(mut w: W, v: &[f64]) -> Result<()> {
    for x in v {
        writeln!(w, "{x}")?;
    }
    Ok(())
}
