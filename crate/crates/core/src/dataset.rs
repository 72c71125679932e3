//! CSV-backed datasets: a numeric feature matrix plus one named response
//! column. The on-disk format is UTF-8 with a header row; every column other
//! than the response is treated as a numeric feature.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::knockoff::standardize_columns;

/// In-memory dataset with named columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// n x p feature matrix, in the column order of the source file.
    pub features: DMatrix<f64>,
    /// Response values; 0/1 for binary problems.
    pub response: DVector<f64>,
    /// Feature column names.
    pub feature_names: Vec<String>,
    /// Response column name.
    pub response_name: String,
}

impl Dataset {
    /// Assembles a dataset from parts, checking that dimensions agree.
    pub fn from_parts(
        features: DMatrix<f64>,
        response: DVector<f64>,
        feature_names: Vec<String>,
        response_name: String,
    ) -> Result<Self> {
        if features.nrows() != response.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows but {} response values",
                features.nrows(),
                response.len()
            )));
        }
        if features.ncols() != feature_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature columns but {} names",
                features.ncols(),
                feature_names.len()
            )));
        }
        Ok(Dataset {
            features,
            response,
            feature_names,
            response_name,
        })
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    /// Number of feature columns.
    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    /// Loads a CSV file, splitting out the column named `response`.
    pub fn load_csv(path: &Path, response: &str) -> Result<Dataset> {
        let display = path.display().to_string();
        let file = File::open(path).map_err(|e| Error::Io {
            path: display.clone(),
            source: e,
        })?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Parse {
                path: display.clone(),
                line: 1,
                msg: e.to_string(),
            })?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let response_idx = headers.iter().position(|h| h == response).ok_or_else(|| {
            Error::Parse {
                path: display.clone(),
                line: 1,
                msg: format!(
                    "response column '{response}' not found; header has: {}",
                    headers.join(", ")
                ),
            }
        })?;
        let feature_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != response_idx)
            .map(|(_, h)| h.clone())
            .collect();
        if feature_names.is_empty() {
            return Err(Error::Parse {
                path: display,
                line: 1,
                msg: "no feature columns besides the response".to_string(),
            });
        }

        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut y: Vec<f64> = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| Error::Parse {
                path: display.clone(),
                line,
                msg: e.to_string(),
            })?;
            if record.len() != headers.len() {
                return Err(Error::Parse {
                    path: display,
                    line,
                    msg: format!(
                        "expected {} fields, found {}",
                        headers.len(),
                        record.len()
                    ),
                });
            }
            let mut row = Vec::with_capacity(feature_names.len());
            for (col, field) in record.iter().enumerate() {
                let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    path: display.clone(),
                    line,
                    msg: format!(
                        "column '{}': cannot parse '{}' as a number",
                        headers[col], field
                    ),
                })?;
                if col == response_idx {
                    y.push(value);
                } else {
                    row.push(value);
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                path: display,
                line: 2,
                msg: "file contains a header but no data rows".to_string(),
            });
        }
        let n = rows.len();
        let p = feature_names.len();
        let features = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Dataset::from_parts(
            features,
            DVector::from_vec(y),
            feature_names,
            response.to_string(),
        )
    }

    /// Centers and scales every feature column to mean 0, variance 1.
    /// Returns the removed means and standard deviations. Constant columns
    /// are reported by name.
    pub fn standardize_features(&mut self) -> Result<(DVector<f64>, DVector<f64>)> {
        let (standardized, means, sds) =
            standardize_columns(&self.features).map_err(|e| match e {
                Error::DegenerateColumn { name } => {
                    // standardize_columns names columns by 1-based index.
                    let idx: usize = name.parse().unwrap_or(0);
                    Error::DegenerateColumn {
                        name: self
                            .feature_names
                            .get(idx.wrapping_sub(1))
                            .cloned()
                            .unwrap_or(name),
                    }
                }
                other => other,
            })?;
        self.features = standardized;
        Ok((means, sds))
    }

    /// Centers the response at zero, returning the removed mean.
    pub fn center_response(&mut self) -> f64 {
        let mean = self.response.mean();
        self.response.add_scalar_mut(-mean);
        mean
    }

    /// Interprets the response as binary labels, requiring every value to
    /// be exactly 0 or 1.
    pub fn binary_labels(&self) -> Result<Vec<u8>> {
        self.response
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v == 0.0 {
                    Ok(0)
                } else if v == 1.0 {
                    Ok(1)
                } else {
                    Err(Error::InvalidParameter(format!(
                        "response '{}' must be 0 or 1 for a probit model; row {} has {v}",
                        self.response_name,
                        i + 1
                    )))
                }
            })
            .collect()
    }

    /// Writes the dataset back out as CSV, features first, response last.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io_err = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            source: e,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        writeln!(
            w,
            "{},{}",
            self.feature_names.join(","),
            self.response_name
        )
        .map_err(io_err)?;
        for i in 0..self.n() {
            for j in 0..self.p() {
                write!(w, "{},", self.features[(i, j)]).map_err(io_err)?;
            }
            writeln!(w, "{}", self.response[i]).map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        Ok(())
    }
}
