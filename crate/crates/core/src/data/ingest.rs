use std::io::Read;
use std::path::Path;

use super::{PeriodDataset, Sample};
use crate::error::{Error, Result};

const TIMESTAMP_COLUMN: &str = "timestamp";

/// Reads a headered CSV and partitions its rows, in file order, into periods
/// of `period_length` rows. A short final period is kept.
///
/// Columns named in `target_columns` form `y` (in the order given); every
/// other column except `timestamp` is a feature, in header order.
pub fn load_csv_stream(
    path: impl AsRef<Path>,
    period_length: usize,
    target_columns: &[String],
) -> Result<Vec<PeriodDataset>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv_stream(file, period_length, target_columns)
}

pub fn read_csv_stream<R: Read>(
    reader: R,
    period_length: usize,
    target_columns: &[String],
) -> Result<Vec<PeriodDataset>> {
    if period_length == 0 {
        return Err(Error::invalid("period_length must be at least 1"));
    }
    if target_columns.is_empty() {
        return Err(Error::invalid("at least one target column is required"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Empty("csv file has no header"));
    }

    let mut target_idx = Vec::with_capacity(target_columns.len());
    for name in target_columns {
        let idx = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?;
        target_idx.push(idx);
    }
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|i| !target_idx.contains(i) && header[*i] != TIMESTAMP_COLUMN)
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::invalid("csv has no feature columns"));
    }

    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row number, header excluded
        let row = i + 1;
        if record.len() != header.len() {
            return Err(Error::Arity {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        let cell = |j: usize| -> Result<f64> {
            let raw = record[j].trim();
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    row,
                    column: header[j].clone(),
                    value: raw.to_string(),
                })
        };
        let x = feature_idx.iter().map(|&j| cell(j)).collect::<Result<Vec<_>>>()?;
        let y = target_idx.iter().map(|&j| cell(j)).collect::<Result<Vec<_>>>()?;
        samples.push(Sample { x, y });
    }
    if samples.is_empty() {
        return Err(Error::Empty("csv file has no data rows"));
    }

    let mut periods = Vec::with_capacity(samples.len().div_ceil(period_length));
    let mut rest = samples.into_iter().peekable();
    while rest.peek().is_some() {
        let chunk: Vec<Sample> = rest.by_ref().take(period_length).collect();
        periods.push(PeriodDataset::new(periods.len() + 1, chunk)?);
    }
    Ok(periods)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn targets(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn csv_with_rows(n: usize) -> String {
        let mut s = String::from("timestamp,a,b,cpu\n");
        for i in 0..n {
            s.push_str(&format!("t{i},{i},{},{}\n", i * 2, i * 3));
        }
        s
    }

    #[test]
    fn partitions_even_rows() {
        let periods = read_csv_stream(csv_with_rows(6).as_bytes(), 3, &targets(&["cpu"])).unwrap();
        assert_eq!(periods.len(), 2);
        assert!(periods.iter().all(|p| p.len() == 3));
        assert_eq!(periods[1].index, 2);
        assert_eq!(periods[1].samples()[0].x, vec![3.0, 6.0]);
        assert_eq!(periods[1].samples()[0].y, vec![9.0]);
    }

    #[test]
    fn keeps_short_final_period() {
        let periods = read_csv_stream(csv_with_rows(7).as_bytes(), 3, &targets(&["cpu"])).unwrap();
        let sizes: Vec<usize> = periods.iter().map(PeriodDataset::len).collect();
        assert_eq!(sizes, vec![3, 3, 1]);
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let data = "a,b,y\n1,2,3\n4,abc,6\n";
        let err = read_csv_stream(data.as_bytes(), 2, &targets(&["y"])).unwrap_err();
        match &err {
            Error::NonNumeric { row, column, value } => {
                assert_eq!(*row, 2);
                assert_eq!(column, "b");
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected error {other:?}"),
        }
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("`b`"), "{msg}");
    }

    #[test]
    fn missing_target_and_empty_file() {
        let err = read_csv_stream("a,b\n1,2\n".as_bytes(), 1, &targets(&["y"])).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "y"));
        assert!(read_csv_stream("".as_bytes(), 1, &targets(&["y"])).is_err());
        let err = read_csv_stream("a,y\n".as_bytes(), 1, &targets(&["y"])).unwrap_err();
        assert!(matches!(err, Error::Empty(_)));
    }

    #[test]
    fn ragged_row_is_rejected() {
        let err = read_csv_stream("a,y\n1,2\n3\n".as_bytes(), 1, &targets(&["y"])).unwrap_err();
        assert!(matches!(err, Error::Arity { row: 2, .. }));
    }

    #[test]
    fn missing_file() {
        let err = load_csv_stream("/nonexistent/stream.csv", 3, &targets(&["y"])).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn multiple_targets_follow_requested_order() {
        let data = "y1,a,y0\n1,2,3\n";
        let periods = read_csv_stream(data.as_bytes(), 5, &targets(&["y0", "y1"])).unwrap();
        let s = &periods[0].samples()[0];
        assert_eq!(s.x, vec![2.0]);
        assert_eq!(s.y, vec![3.0, 1.0]);
    }
}
