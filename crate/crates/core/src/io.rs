//! Point ingestion and trace files.

use std::fs;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric::{BaseMetric, DistanceMatrix, Measure, Point, Rho};
use crate::order::AdversaryTrace;
use crate::scalar::Scalar;

/// Symmetry tolerance for distance-matrix files.
pub const MATRIX_SYMMETRY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    /// One point per row, one coordinate per column, no header.
    Csv,
    /// First line `n`, then `n` rows of `n` distances.
    Matrix,
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(InputFormat::Csv),
            "matrix" => Ok(InputFormat::Matrix),
            other => Err(Error::Parameter(format!("unknown input format {other:?}"))),
        }
    }
}

/// Points plus the base metric they live in. Ids follow row order.
#[derive(Clone, Debug)]
pub struct Dataset<T> {
    pub points: Vec<Point<T>>,
    pub base: BaseMetric<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn measure(&self, rho: Rho<T>) -> Measure<T> {
        Measure::new(self.base.clone(), rho)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line: Some(line), message: message.into() }
}

fn parse_real<T: Scalar>(cell: &str, line: usize) -> Result<T> {
    let v: f64 = cell.trim().parse().map_err(|_| parse_err(line, format!("non-numeric cell {cell:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite cell {cell:?}")));
    }
    Ok(T::of(v))
}

pub fn parse_csv<T: Scalar, R: Read>(reader: R) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut points = Vec::new();
    let mut dim = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(points.len() + 1, |p| p.line() as usize);
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        let coords = rec.iter().map(|c| parse_real(c, line)).collect::<Result<Vec<T>>>()?;
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(parse_err(line, format!("ragged row: {} columns, expected {d}", coords.len())))
            }
            _ => {}
        }
        points.push(Point::coords(points.len(), coords));
    }
    if points.is_empty() {
        return Err(Error::Parse { line: None, message: "no points in input".into() });
    }
    Ok(Dataset { points, base: BaseMetric::Euclidean })
}

pub fn parse_matrix<T: Scalar>(text: &str) -> Result<Dataset<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (first, header) = lines.next().ok_or(Error::Parse { line: None, message: "empty matrix file".into() })?;
    let n: usize = header.trim().parse().map_err(|_| parse_err(first, format!("bad size line {header:?}")))?;
    if n == 0 {
        return Err(parse_err(first, "matrix size must be positive"));
    }
    let mut rows = Vec::with_capacity(n);
    for (line, text) in lines {
        if rows.len() == n {
            return Err(parse_err(line, format!("more than {n} matrix rows")));
        }
        let row = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|c| !c.is_empty())
            .map(|c| parse_real(c, line))
            .collect::<Result<Vec<T>>>()?;
        if row.len() != n {
            return Err(parse_err(line, format!("row has {} entries, expected {n}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::Parse { line: None, message: format!("expected {n} rows, found {}", rows.len()) });
    }
    let matrix = DistanceMatrix::new(rows, T::of(MATRIX_SYMMETRY_TOL)).map_err(|e| match e {
        Error::Input(message) => Error::Parse { line: None, message },
        other => other,
    })?;
    let points = (0..n).map(|i| Point::node(i, i)).collect();
    Ok(Dataset { points, base: BaseMetric::Matrix(Arc::new(matrix)) })
}

pub fn ingest_points<T: Scalar>(path: &Path, format: InputFormat) -> Result<Dataset<T>> {
    match format {
        InputFormat::Csv => parse_csv(fs::File::open(path)?),
        InputFormat::Matrix => parse_matrix(&fs::read_to_string(path)?),
    }
}

pub fn read_trace(path: &Path) -> Result<AdversaryTrace> {
    let text = fs::read_to_string(path)?;
    let trace: AdversaryTrace = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    trace.validate()?;
    Ok(trace)
}
