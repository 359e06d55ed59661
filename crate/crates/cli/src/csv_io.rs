//! Dataset CSV files: `x1..xp,treatment,reward[,propensity][,truth]`.

use std::path::Path;

use ndarray::Array2;
use ordinal_itr::Dataset;

use crate::error::{CliError, CliResult};

/// Optional columns, in the order they must appear after the covariates.
const TRAILING: [&str; 4] = ["treatment", "reward", "propensity", "truth"];

/// A parsed file. Covariates are always present; the other columns only
/// when the header lists them.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    /// Raw fields, kept so predictions can be appended verbatim.
    pub records: Vec<Vec<String>>,
    pub x: Array2<f64>,
    pub treatment: Option<Vec<usize>>,
    pub reward: Option<Vec<f64>>,
    pub propensity: Option<Vec<f64>>,
    pub truth: Option<Vec<usize>>,
}

impl Table {
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Treatment and reward, or a schema error naming the missing column.
    pub fn outcome(&self, path: &Path) -> CliResult<(Vec<usize>, Vec<f64>)> {
        match (&self.treatment, &self.reward) {
            (Some(a), Some(r)) => Ok((a.clone(), r.clone())),
            (None, _) => Err(missing(path, "treatment")),
            (_, None) => Err(missing(path, "reward")),
        }
    }
}

fn missing(path: &Path, column: &str) -> CliError {
    CliError::Usage(format!("{}: missing required column `{column}`", path.display()))
}

fn schema_error(path: &Path, msg: String) -> CliError {
    CliError::Usage(format!("{}: {msg}", path.display()))
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::io(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let p = header
        .iter()
        .take_while(|h| h.starts_with('x') && h[1..].parse::<usize>().is_ok())
        .count();
    for (j, h) in header.iter().take(p).enumerate() {
        if *h != format!("x{}", j + 1) {
            return Err(schema_error(path, format!("column `{h}` should be `x{}`", j + 1)));
        }
    }
    if p == 0 {
        return Err(schema_error(
            path,
            "header must start with covariate column `x1`".into(),
        ));
    }
    let mut positions = [None; 4];
    let mut next = 0;
    for (col, h) in header.iter().enumerate().skip(p) {
        match TRAILING.iter().position(|t| t == h) {
            Some(k) if k >= next => {
                positions[k] = Some(col);
                next = k + 1;
            }
            Some(_) => {
                return Err(schema_error(
                    path,
                    format!("column `{h}` is out of order (expected order: {})", TRAILING.join(", ")),
                ))
            }
            None => {
                return Err(schema_error(
                    path,
                    format!("unexpected column `{h}` (expected x1..x{p}, {})", TRAILING.join(", ")),
                ))
            }
        }
    }

    let mut records = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        if rec.len() != header.len() {
            return Err(schema_error(
                path,
                format!("row {}: {} fields, header has {}", line + 1, rec.len(), header.len()),
            ));
        }
        records.push(rec.iter().map(|f| f.trim().to_string()).collect::<Vec<_>>());
    }
    if records.is_empty() {
        return Err(schema_error(path, "no data rows".into()));
    }

    let parse_f = |row: usize, col: usize| -> CliResult<f64> {
        records[row][col].parse::<f64>().map_err(|_| {
            schema_error(
                path,
                format!(
                    "row {}: column `{}` has non-numeric value `{}`",
                    row + 1,
                    header[col],
                    records[row][col]
                ),
            )
        })
    };
    let parse_u = |row: usize, col: usize| -> CliResult<usize> {
        records[row][col].parse::<usize>().map_err(|_| {
            schema_error(
                path,
                format!(
                    "row {}: column `{}` needs a positive integer, got `{}`",
                    row + 1,
                    header[col],
                    records[row][col]
                ),
            )
        })
    };

    let n = records.len();
    let mut x = Array2::zeros((n, p));
    for i in 0..n {
        for j in 0..p {
            x[[i, j]] = parse_f(i, j)?;
        }
    }
    let ints = |k: usize| {
        positions[k]
            .map(|c| (0..n).map(|i| parse_u(i, c)).collect::<CliResult<Vec<_>>>())
            .transpose()
    };
    let floats = |k: usize| {
        positions[k]
            .map(|c| (0..n).map(|i| parse_f(i, c)).collect::<CliResult<Vec<_>>>())
            .transpose()
    };
    Ok(Table {
        treatment: ints(0)?,
        reward: floats(1)?,
        propensity: floats(2)?,
        truth: ints(3)?,
        header,
        records,
        x,
    })
}

/// Writes a dataset, with the optional truth column.
pub fn write_dataset(path: &Path, data: &Dataset, truth: Option<&[usize]>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut header: Vec<String> = (1..=data.dim()).map(|j| format!("x{j}")).collect();
    header.extend(["treatment".to_string(), "reward".to_string()]);
    if truth.is_some() {
        header.push("truth".into());
    }
    w.write_record(&header).map_err(|e| CliError::io(path, e))?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.row(i).iter().map(|v| float(*v)).collect();
        rec.push(data.treatment()[i].to_string());
        rec.push(float(data.reward()[i]));
        if let Some(t) = truth {
            rec.push(t[i].to_string());
        }
        w.write_record(&rec).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Input rows followed by `predicted_treatment`.
pub fn write_predictions(path: &Path, table: &Table, predictions: &[usize]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut header = table.header.clone();
    header.push("predicted_treatment".into());
    w.write_record(&header).map_err(|e| CliError::io(path, e))?;
    for (rec, pred) in table.records.iter().zip(predictions) {
        let mut out = rec.clone();
        out.push(pred.to_string());
        w.write_record(&out).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Lossless decimal form (17 significant digits).
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}
