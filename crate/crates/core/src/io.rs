//! Delimited text input and output.
//!
//! A table has a header row, one response column chosen by name and any
//! number of numeric predictor columns. The intercept column is added on
//! load and never read from or written to the file.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::Dataset;
use crate::sum::pairwise_sum_by;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOptions {
    pub response: String,
    pub delimiter: u8,
    /// When set, responses are checked against the family's support.
    pub family: Option<Family>,
    /// Rescale every predictor column to unit standard deviation.
    pub standardize: bool,
}

impl LoadOptions {
    pub fn new(response: impl Into<String>) -> Self {
        Self {
            response: response.into(),
            delimiter: b',',
            family: None,
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub dataset: Dataset,
    /// Predictor names in coefficient order, without the intercept.
    pub names: Vec<String>,
    /// Per-coefficient divisors applied by standardisation (intercept first,
    /// always 1). `None` when the data were not rescaled.
    pub scales: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl Loaded {
    /// Maps coefficients fitted on the rescaled data back to the original
    /// predictor scale.
    pub fn unscale(&self, beta: &[f64]) -> Vec<f64> {
        match &self.scales {
            Some(s) => beta.iter().zip(s).map(|(b, s)| b / s).collect(),
            None => beta.to_vec(),
        }
    }
}

pub fn load(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Loaded> {
    parse(File::open(path)?, options)
}

pub fn parse<R: Read>(reader: R, options: &LoadOptions) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let response_at = headers
        .iter()
        .position(|h| *h == options.response)
        .ok_or_else(|| Error::InvalidData(format!("no column named '{}'", options.response)))?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != response_at)
        .map(|(_, h)| h.clone())
        .collect();

    let mut y = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1
        let row = record.position().map_or(r + 2, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let mut predictor = 0;
        for (k, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[k].clone(),
                message: format!("'{cell}' is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: headers[k].clone(),
                    message: format!("'{cell}' is not finite"),
                });
            }
            if k == response_at {
                y.push(value);
            } else {
                columns[predictor].push(value);
                predictor += 1;
            }
        }
    }
    if y.len() < 2 {
        return Err(Error::InvalidData(format!(
            "need at least 2 data rows, found {}",
            y.len()
        )));
    }
    if let Some(family) = options.family {
        family.check_response(&y)?;
    }

    let n = y.len();
    let mut warnings = Vec::new();
    let mut scales = options.standardize.then(|| vec![1.0; names.len() + 1]);
    for (k, col) in columns.iter_mut().enumerate() {
        let mean = pairwise_sum_by(n, |i| col[i]) / n as f64;
        let var = pairwise_sum_by(n, |i| (col[i] - mean) * (col[i] - mean)) / n as f64;
        if var == 0.0 {
            warnings.push(format!(
                "predictor '{}' is constant; its coefficient is confounded with the intercept",
                names[k]
            ));
            continue;
        }
        if let Some(s) = scales.as_mut() {
            let sd = var.sqrt();
            s[k + 1] = sd;
            col.iter_mut().for_each(|v| *v /= sd);
        }
    }
    Ok(Loaded {
        dataset: Dataset::from_predictor_columns(&columns, y)?,
        names,
        scales,
        warnings,
    })
}

/// Writes the dataset as a table that [`parse`] reads back bit-for-bit:
/// the response column first, then one column per predictor.
pub fn export<W: Write>(data: &Dataset, names: &[String], response: &str, delimiter: u8, writer: W) -> Result<()> {
    if names.len() + 1 != data.p() {
        return Err(Error::Dimension(format!(
            "{} names for {} predictors",
            names.len(),
            data.p() - 1
        )));
    }
    let mut wtr = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
    let mut header = Vec::with_capacity(data.p());
    header.push(response.to_owned());
    header.extend(names.iter().cloned());
    wtr.write_record(&header)?;
    let mut row = Vec::with_capacity(data.p());
    for i in 0..data.n() {
        row.clear();
        // `Display` for f64 prints the shortest string that round-trips
        row.push(data.y()[i].to_string());
        row.extend((1..data.p()).map(|j| data.get(i, j).to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Default predictor names `x1, x2, …`.
pub fn default_names(p: usize) -> Vec<String> {
    (1..p).map(|j| format!("x{j}")).collect()
}
