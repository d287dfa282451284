use std::path::Path;

use nalgebra::{DMatrix, DVector};
use pie_core::Dataset;

use crate::CliError;

/// A dataset together with the covariate column names.
pub struct Table {
    pub dataset: Dataset,
    pub names: Vec<String>,
}

/// Reads a headed, comma-separated file of numbers. `response` names the
/// response column; all other columns become covariates in file order.
pub fn read_csv(path: &Path, response: &str) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Input(format!("cannot read header of {}: {e}", path.display())))?
        .iter()
        .map(str::to_owned)
        .collect();
    let resp_col = headers.iter().position(|h| h == response).ok_or_else(|| {
        CliError::Input(format!(
            "response column '{response}' not found; columns are: {}",
            headers.join(", ")
        ))
    })?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != resp_col)
        .map(|(_, h)| h.clone())
        .collect();

    let mut values: Vec<f64> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| CliError::Input(format!("{}: line {line}: {e}", path.display())))?;
        if record.len() != headers.len() {
            return Err(CliError::Input(format!(
                "{}: line {line} has {} fields, expected {}",
                path.display(),
                record.len(),
                headers.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Input(format!(
                    "{}: line {line}, column '{}': cannot parse '{cell}' as a number",
                    path.display(),
                    headers[j]
                ))
            })?;
            if j == resp_col {
                y.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = y.len();
    let x = DMatrix::from_row_slice(n, names.len(), &values);
    let dataset = Dataset::new(x, DVector::from_vec(y))?;
    Ok(Table { dataset, names })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn response_column_can_be_anywhere() {
        let f = write("a,y,b\n1,10,2\n3,20,4\n5,30,7\n");
        let t = read_csv(f.path(), "y").unwrap();
        assert_eq!(t.names, vec!["a", "b"]);
        assert_eq!(t.dataset.y().as_slice(), &[10.0, 20.0, 30.0]);
        assert_eq!(t.dataset.x()[(2, 1)], 7.0);
    }

    #[test]
    fn bad_cell_is_named() {
        let f = write("a,y\n1,2\n3,oops\n");
        let err = read_csv(f.path(), "y").err().unwrap().to_string();
        assert!(
            err.contains("line 3") && err.contains("'y'") && err.contains("oops"),
            "{err}"
        );
    }

    #[test]
    fn missing_response_lists_columns() {
        let f = write("a,b\n1,2\n3,4\n");
        let err = read_csv(f.path(), "y").err().unwrap().to_string();
        assert!(err.contains("'y'") && err.contains("a, b"), "{err}");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let f = write("a,y\n1,2\n3\n");
        assert!(read_csv(f.path(), "y").is_err());
    }
}
