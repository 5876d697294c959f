//! Long-format panel files: a header row naming `unit`, `time`, `x` and
//! optionally `y`, then one row per observation.

use std::io::Read;
use std::path::Path;

use exoci_core::panel::LongRecord;
use exoci_core::PanelData;

use crate::error::{CliError, Result};

pub fn load_panel(path: &Path) -> Result<PanelData> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_panel(file, path)
}

/// Reads a panel from any reader; `path` is only used in messages.
pub fn read_panel<R: Read>(reader: R, path: &Path) -> Result<PanelData> {
    let csv_err = |msg: String| CliError::Csv { path: path.to_path_buf(), msg };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(iu), Some(it), Some(ix)) = (col("unit"), col("time"), col("x")) else {
        return Err(csv_err("header must name the columns unit, time and x".into()));
    };
    let iy = col("y");

    let mut records = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| csv_err(e.to_string()))?;
        let line = k + 2;
        let field = |i: usize| row.get(i).unwrap_or("");
        let number = |i: usize, name: &str| -> Result<Option<f64>> {
            let s = field(i);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|_| CliError::Format {
                path: path.to_path_buf(),
                line,
                msg: format!("column `{name}`: `{s}` is not a number"),
            })
        };
        let unit = field(iu).to_string();
        let Some(x) = number(ix, "x")? else {
            return Err(exoci_core::Error::MissingValue { column: "x", unit }.into());
        };
        let y = match iy {
            Some(i) => number(i, "y")?,
            None => None,
        };
        records.push(LongRecord {
            unit,
            time: field(it).to_string(),
            x,
            y,
        });
    }
    Ok(PanelData::from_long(records)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<PanelData> {
        read_panel(s.as_bytes(), Path::new("mem.csv"))
    }

    #[test]
    fn reads_with_and_without_response() {
        let p = read("unit,time,x,y\n1,1,0.5,1\n1,2,0.7,2\n2,1,0.1,3\n2,2,0.9,4\n").unwrap();
        assert_eq!((p.n(), p.t()), (2, 2));
        assert_eq!(p.y().unwrap(), &[1.0, 2.0, 3.0, 4.0]);
        let p = read("time,unit,x\n1,a,1\n2,a,2\n1,b,3\n2,b,5\n").unwrap();
        assert!(p.y().is_none());
        assert_eq!(p.x(), &[1.0, 2.0, 3.0, 5.0]);
    }

    #[test]
    fn reports_bad_input() {
        assert!(matches!(read("unit,x\n1,2\n"), Err(CliError::Csv { .. })));
        assert!(matches!(read("unit,time,x\n1,1,abc\n"), Err(CliError::Format { line: 2, .. })));
        let e = read("unit,time,x\n1,1,1\n1,2,2\n2,1,3\n").unwrap_err();
        assert_eq!(e.code(), "UNBALANCED_PANEL");
    }
}
