use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use super::Dataset;
use crate::error::{Error, Result};

/// Which CSV column holds the regression target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
}

impl FromStr for TargetColumn {
    type Err = std::convert::Infallible;

    /// Bare non-negative integers are column indices; anything else is a name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => TargetColumn::Index(i),
            Err(_) => TargetColumn::Name(s.to_string()),
        })
    }
}

/// Load a comma separated file with a header row. Numeric cells are never
/// quoted and use `.` as the decimal separator. Rows are numbered from 1
/// (the first data row) in parse errors.
pub fn load_csv(path: impl AsRef<Path>, target: &TargetColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let target_idx = match target {
        TargetColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingTarget(name.clone()))?,
        TargetColumn::Index(i) if *i < headers.len() => *i,
        TargetColumn::Index(i) => return Err(Error::MissingTarget(i.to_string())),
    };
    if headers.len() < 2 {
        return Err(Error::EmptyDataset("need at least one feature column besides the target".into()));
    }

    let p = headers.len() - 1;
    let mut values = Vec::new();
    let mut y = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(Error::Csv(format!(
                "row {} has {} fields, header has {}",
                row_no + 1,
                record.len(),
                headers.len()
            )));
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Parse {
                row: row_no + 1,
                column: headers[col].clone(),
                value: cell.to_string(),
            })?;
            if col == target_idx {
                y.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset(format!("{} has no data rows", path.display())));
    }
    let features = Array2::from_shape_vec((y.len(), p), values).expect("row lengths checked above");
    let mut names = headers;
    let target_name = names.remove(target_idx);
    Dataset::new(features, y, names, target_name)
}

/// Write `ds` with a header row, features first and the target last.
/// Values use the shortest representation that parses back exactly.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let mut writer = csv::WriterBuilder::new().from_path(path).map_err(|e| Error::Csv(e.to_string()))?;
    let mut header: Vec<&str> = ds.feature_names().iter().map(String::as_str).collect();
    header.push(ds.target_name());
    writer.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    for (row, y) in ds.features().rows().into_iter().zip(ds.target()) {
        let record: Vec<String> = row.iter().chain(std::iter::once(y)).map(|v| v.to_string()).collect();
        writer.write_record(&record).map_err(|e| Error::Csv(e.to_string()))?;
    }
    writer.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_by_name_and_index() {
        let f = write("a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
        let by_name = load_csv(f.path(), &"y".parse().unwrap()).unwrap();
        assert_eq!(by_name.features(), &array![[1.0, 2.0], [4.0, 5.0], [7.0, 8.0]]);
        assert_eq!(by_name.target(), &[3.0, 6.0, 9.0]);
        assert_eq!(by_name.feature_names(), &["a".to_string(), "b".to_string()]);
        let by_index = load_csv(f.path(), &TargetColumn::Index(2)).unwrap();
        assert_eq!(by_name, by_index);
    }

    #[test]
    fn reports_bad_cell() {
        let f = write("a,b,y\nabc,2,3\n");
        match load_csv(f.path(), &"y".parse().unwrap()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_paths() {
        let f = write("a,b,y\n1,2,3\n");
        assert!(matches!(load_csv(f.path(), &"z".parse().unwrap()), Err(Error::MissingTarget(_))));
        assert!(matches!(load_csv(f.path(), &TargetColumn::Index(3)), Err(Error::MissingTarget(_))));
        let empty = write("a,b,y\n");
        assert!(matches!(load_csv(empty.path(), &"y".parse().unwrap()), Err(Error::EmptyDataset(_))));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", &"y".parse().unwrap()),
            Err(Error::Io { .. })
        ));
        let nan = write("a,y\nNaN,1\n");
        assert!(matches!(load_csv(nan.path(), &"y".parse().unwrap()), Err(Error::Parse { .. })));
    }

    #[test]
    fn write_then_load_is_exact() {
        let ds = crate::dataset::synthetic_friedman1(25, 1.0, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_csv(&ds, &path).unwrap();
        let back = load_csv(&path, &TargetColumn::Name("y".into())).unwrap();
        assert_eq!(back, ds);
    }
}
