//! Artifact files: row-major measurement CSV, self-describing grid CSV,
//! pretty JSON and JSON lines.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use eitsdp_core::SymMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::AppError;

/// Shortest round-trip decimal; exponent form outside `[1e-5, 1e15)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), AppError> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, AppError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    Ok(BufWriter::new(
        fs::File::create(path).map_err(|e| AppError::io(path, e))?,
    ))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), AppError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| AppError::io(path, e))?;
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Full symmetric matrix, one row per line. `comment` lines are prefixed
/// with `# `.
pub fn write_matrix_csv(path: &Path, a: &SymMatrix, comment: Option<&str>) -> Result<(), AppError> {
    let mut s = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
    }
    let m = a.order();
    for i in 0..m {
        let row: Vec<String> = (0..m).map(|j| fmt_f64(a.get(i, j))).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    write_text(path, &s)
}

/// Reads a square matrix; lines starting with `#` and blank lines are
/// skipped. Off-diagonal pairs are averaged.
pub fn read_matrix_csv(path: &Path) -> Result<SymMatrix, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let parse_err = |line: usize, msg: String| AppError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(k + 1, format!("{f:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let m = rows.len();
    if m == 0 {
        return Err(parse_err(0, "no matrix rows".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != m) {
        return Err(parse_err(
            0,
            format!("row {} has {} entries, expected {m}", bad + 1, rows[bad].len()),
        ));
    }
    let flat: Vec<f64> = rows.concat();
    Ok(SymMatrix::from_row_major(m, &flat)?)
}

/// Grid CSV: a `# <kind> config_hash=<hash>` line, a header, then rows.
pub fn write_grid_csv(
    path: &Path,
    kind: &str,
    hash: &str,
    header: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<(), AppError> {
    let mut s = format!("# {kind} config_hash={hash}\n{}\n", header.join(","));
    for r in rows {
        let fields: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), AppError> {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it)?);
        s.push('\n');
    }
    write_text(path, &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("y.csv");
        let mut a = SymMatrix::from_diagonal(&[1.0 / 3.0, 0.1, 2.5e-17, 7.0]);
        a.set(0, 3, -1e-300);
        a.set(1, 2, 0.30000000000000004);
        write_matrix_csv(&p, &a, Some("measurement\nsecond line")).unwrap();
        let b = read_matrix_csv(&p).unwrap();
        assert_eq!(a, b);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# measurement\n# second line\n"));
    }

    #[test]
    fn matrix_csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("y.csv");
        for bad in ["1,2\n3\n", "1,x\n2,3\n", "# only comments\n"] {
            fs::write(&p, bad).unwrap();
            assert!(read_matrix_csv(&p).is_err(), "{bad:?}");
        }
        assert!(read_matrix_csv(&dir.path().join("missing.csv")).is_err());
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(1e-8), "1e-8");
        assert_eq!(fmt_f64(-2.5e20), "-2.5e20");
        for v in [1.0 / 3.0, 1e-300, 123456.789, 5e-324] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn grid_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        write_grid_csv(&p, "landscape", "abcd", &["a", "b"], vec![vec![1.0, 2.0]].into_iter()).unwrap();
        assert_eq!(
            fs::read_to_string(&p).unwrap(),
            "# landscape config_hash=abcd\na,b\n1,2\n"
        );
    }
}
