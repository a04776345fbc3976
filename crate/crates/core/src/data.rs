//! Labelled datasets and their CSV form.
//!
//! Files carry a header `x1,...,xd,label` with an optional trailing
//! `clean_label` column. Floats are written with 17 significant digits so a
//! write/read cycle is lossless.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::knn::RegressionSample;
use crate::nn_index::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub points: PointSet,
    pub labels: Vec<u8>,
    /// Labels before corruption, when known.
    pub clean_labels: Option<Vec<u8>>,
}

impl LabeledDataset {
    pub fn new(points: PointSet, labels: Vec<u8>) -> Result<Self> {
        check_labels(&points, &labels)?;
        Ok(LabeledDataset { points, labels, clean_labels: None })
    }

    pub fn with_clean_labels(mut self, clean: Vec<u8>) -> Result<Self> {
        check_labels(&self.points, &clean)?;
        self.clean_labels = Some(clean);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn to_sample(&self) -> RegressionSample {
        RegressionSample {
            points: self.points.clone(),
            responses: self.labels.iter().map(|&l| l as f64).collect(),
        }
    }

    /// Writes the CSV form; the `clean_label` column is included when clean
    /// labels are present.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d = self.dim();
        let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        if self.clean_labels.is_some() {
            header.push("clean_label".into());
        }
        w.write_record(&header).map_err(csv_err)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row: Vec<String> = p.iter().map(|v| format_float(*v)).collect();
            row.push(self.labels[i].to_string());
            if let Some(clean) = &self.clean_labels {
                row.push(clean[i].to_string());
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header = r.headers().map_err(csv_err)?.clone();
        let names: Vec<&str> = header.iter().collect();
        let has_clean = names.last() == Some(&"clean_label");
        let label_col = names.len().checked_sub(1 + has_clean as usize);
        let d = match label_col {
            Some(c) if c >= 1 && names[c] == "label" => c,
            _ => return Err(Error::Parse("header must be x1,...,xd,label[,clean_label]".into())),
        };
        for (j, name) in names[..d].iter().enumerate() {
            if *name != format!("x{}", j + 1) {
                return Err(Error::Parse(format!("unexpected column `{name}`, expected x{}", j + 1)));
            }
        }
        let mut coords = Vec::new();
        let mut labels = Vec::new();
        let mut clean = Vec::new();
        for (row, record) in r.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let line = row + 2;
            for field in record.iter().take(d) {
                coords.push(field.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {line}: `{field}` is not a number"))
                })?);
            }
            labels.push(parse_label(&record[d], line)?);
            if has_clean {
                clean.push(parse_label(&record[d + 1], line)?);
            }
        }
        let points = PointSet::new(d, coords)?;
        let ds = LabeledDataset::new(points, labels)?;
        if has_clean {
            ds.with_clean_labels(clean)
        } else {
            Ok(ds)
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// 17 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_label(field: &str, line: usize) -> Result<u8> {
    match field {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::Parse(format!("line {line}: label `{other}` is not 0 or 1"))),
    }
}

fn check_labels(points: &PointSet, labels: &[u8]) -> Result<()> {
    if labels.len() != points.len() {
        return Err(Error::LengthMismatch { points: points.len(), responses: labels.len() });
    }
    if let Some(i) = labels.iter().position(|&l| l > 1) {
        return Err(Error::NonBinaryLabel { index: i, value: labels[i] as f64 });
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => Error::Parse(e.to_string()),
    }
}

/// Reads a points-only CSV with header `x1,...,xd` (any trailing label
/// columns are ignored).
pub fn read_points_csv<R: Read>(reader: R) -> Result<PointSet> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = r.headers().map_err(csv_err)?.clone();
    let d = header.iter().take_while(|h| h.starts_with('x')).count();
    if d == 0 {
        return Err(Error::Parse("no x1.. columns in header".into()));
    }
    let mut coords = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        for field in record.iter().take(d) {
            coords.push(
                field
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: `{field}` is not a number", row + 2)))?,
            );
        }
    }
    PointSet::new(d, coords)
}
