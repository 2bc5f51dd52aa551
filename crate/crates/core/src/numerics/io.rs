//! Matrix files: one JSON header line `{n, m, normalized, description}`
//! followed by `n` CSV rows of `m` decimal values each (row-major).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Matrix, NumericsError, NORMALIZATION_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub n: usize,
    pub m: usize,
    pub normalized: bool,
    #[serde(default)]
    pub description: String,
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<(MatrixHeader, Matrix), NumericsError> {
    let text = fs::read_to_string(path)?;
    read_matrix_str(&text)
}

pub fn read_matrix_str(text: &str) -> Result<(MatrixHeader, Matrix), NumericsError> {
    let (head, body) = text
        .split_once('\n')
        .ok_or_else(|| NumericsError::Format("missing CSV body after header line".into()))?;
    let header: MatrixHeader = serde_json::from_str(head.trim())
        .map_err(|e| NumericsError::Format(format!("bad header: {e}")))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut values = Vec::with_capacity(header.n * header.m);
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| NumericsError::Format(format!("row {r}: {e}")))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.m {
            return Err(NumericsError::Format(format!(
                "row {r} has {} columns, header says m = {}",
                record.len(),
                header.m
            )));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| NumericsError::Format(format!("row {r}, column {c}: cannot parse {field:?}")))?;
            if !v.is_finite() {
                return Err(NumericsError::Format(format!("row {r}, column {c}: non-finite value")));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows != header.n {
        return Err(NumericsError::Format(format!(
            "found {rows} rows, header says n = {}",
            header.n
        )));
    }
    let matrix = Matrix::from_row_major(header.n, header.m, &values)?;
    if header.normalized {
        for j in 0..header.m {
            let c = super::norm2(matrix.column(j));
            if (c - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(NumericsError::Format(format!(
                    "header claims normalized but column {j} has norm {c}"
                )));
            }
        }
    }
    Ok((header, matrix))
}

pub fn write_matrix_string(matrix: &Matrix, normalized: bool, description: &str) -> String {
    let header = MatrixHeader {
        n: matrix.rows(),
        m: matrix.cols(),
        normalized,
        description: description.to_string(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for i in 0..matrix.rows() {
        let row: Vec<String> = (0..matrix.cols()).map(|j| format!("{}", matrix.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_file(
    path: impl AsRef<Path>,
    matrix: &Matrix,
    normalized: bool,
    description: &str,
) -> Result<(), NumericsError> {
    fs::write(path, write_matrix_string(matrix, normalized, description))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let text = "{\"n\":2,\"m\":3,\"normalized\":false,\"description\":\"t\"}\n1,2,3\n4,5,6\n";
        let (h, m) = read_matrix_str(text).unwrap();
        assert_eq!(h.n, 2);
        assert_eq!(m.get(1, 2), 6.0);
        assert_eq!(m.get(0, 1), 2.0);

        let short = "{\"n\":2,\"m\":3,\"normalized\":false}\n1,2,3\n";
        assert!(read_matrix_str(short).is_err());
        let ragged = "{\"n\":2,\"m\":3,\"normalized\":false}\n1,2,3\n4,5\n";
        assert!(read_matrix_str(ragged).is_err());
        let nan = "{\"n\":1,\"m\":2,\"normalized\":false}\n1,NaN\n";
        assert!(read_matrix_str(nan).is_err());
        let lie = "{\"n\":1,\"m\":2,\"normalized\":true}\n1,2\n";
        assert!(read_matrix_str(lie).is_err());
    }

    #[test]
    fn write_then_read_is_exact() {
        let m = Matrix::from_row_major(2, 3, &[0.1, -1.0 / 3.0, 1e-300, 2.0, 5.5, -0.0]).unwrap();
        let text = write_matrix_string(&m, false, "round trip");
        let (h, back) = read_matrix_str(&text).unwrap();
        assert_eq!(h.description, "round trip");
        assert_eq!(back, m);
    }
}
