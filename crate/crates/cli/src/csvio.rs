//! Wide-format CSV: first column the abscissa, one further column per curve.

use std::io::Read;
use std::path::Path;

use curvereg_core::{Grid, SampledFunction};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePanel {
    pub abscissa: String,
    pub ids: Vec<String>,
    pub grid: Grid,
    pub curves: Vec<SampledFunction>,
}

pub fn ingest_csv(path: &Path) -> CliResult<CurvePanel> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::io(format!("cannot open {}: {e}", path.display())))?;
    read_csv(file)
}

pub fn read_csv(input: impl Read) -> CliResult<CurvePanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::data(format!("cannot read header row: {e}")))?
        .clone();
    if headers.len() < 2 {
        return Err(CliError::data("no curves: the file needs an abscissa column and at least one curve column"));
    }
    let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut t = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(format!("parse error: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != headers.len() {
            return Err(CliError::data(format!(
                "parse error at line {line}: expected {} cells, found {}",
                headers.len(),
                rec.len()
            )));
        }
        for (c, cell) in rec.iter().enumerate() {
            if cell.is_empty() {
                return Err(CliError::data(format!(
                    "parse error at line {line}, column {}: missing value",
                    c + 1
                )));
            }
            let v: f64 = cell.parse().map_err(|_| {
                CliError::data(format!(
                    "parse error at line {line}, column {}: '{cell}' is not a number",
                    c + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::data(format!(
                    "parse error at line {line}, column {}: non-finite value",
                    c + 1
                )));
            }
            if c == 0 {
                if let Some(&prev) = t.last() {
                    if v <= prev {
                        return Err(CliError::data(format!(
                            "non-monotone grid: abscissa at line {line} ({v}) does not exceed the previous row ({prev})"
                        )));
                    }
                }
                t.push(v);
            } else {
                cols[c - 1].push(v);
            }
        }
    }
    if t.len() < 2 {
        return Err(CliError::data("need at least two rows of samples"));
    }
    let grid = Grid::new(t)?;
    let curves = cols
        .into_iter()
        .map(|v| SampledFunction::new(grid.clone(), v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CurvePanel {
        abscissa: headers[0].to_string(),
        ids,
        grid,
        curves,
    })
}

/// CSV text with the abscissa first and one column per series. Numbers use
/// the shortest representation that parses back to the same value.
pub fn to_csv(abscissa: &str, t: &[f64], names: &[String], columns: &[Vec<f64>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![abscissa.to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(|e| CliError::io(e.to_string()))?;
    for (i, ti) in t.iter().enumerate() {
        let mut row = vec![ti.to_string()];
        row.extend(columns.iter().map(|c| c[i].to_string()));
        w.write_record(&row).map_err(|e| CliError::io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::io(e.to_string()))
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    use std::io::Write;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| CliError::io(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_named_curves() {
        let p = read_csv("t,a,b\n0,1,2\n0.5,1,3\n1,1,4\n".as_bytes()).unwrap();
        assert_eq!(p.ids, vec!["a", "b"]);
        assert_eq!(p.curves[1].values(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn reports_bad_input() {
        let e = read_csv("t,a\n0,1\n0.5,1\n0.5,2\n".as_bytes()).unwrap_err();
        assert!(e.message.contains("non-monotone") && e.message.contains("line 4"), "{}", e.message);
        let e = read_csv("t\n0\n1\n".as_bytes()).unwrap_err();
        assert!(e.message.contains("no curves"));
        let e = read_csv("t,a\n0,1\n1,x\n".as_bytes()).unwrap_err();
        assert!(e.message.contains("line 3, column 2"), "{}", e.message);
        let e = read_csv("t,a\n0,1\n1,\n".as_bytes()).unwrap_err();
        assert!(e.message.contains("missing"), "{}", e.message);
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn round_trips_exactly() {
        let t = vec![0.0, 0.1, 1.0 / 3.0];
        let cols = vec![vec![1e-300, -2.5, std::f64::consts::PI]];
        let bytes = to_csv("t", &t, &["x".into()], &cols).unwrap();
        let p = read_csv(bytes.as_slice()).unwrap();
        assert_eq!(p.grid.points(), t.as_slice());
        assert_eq!(p.curves[0].values(), cols[0].as_slice());
    }
}
