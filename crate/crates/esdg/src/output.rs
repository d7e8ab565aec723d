//! CSV and JSON files.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use esdg_core::{BlendReport, DGField, Semidiscretization, State, TimeSeries, TimeSeriesRow};

use crate::error::{AppError, AppResult};

pub const SNAPSHOT_HEADER: &str = "x,h,hv,b";
pub const TIME_SERIES_HEADER: &str = "t,total_entropy,entropy_rate,dt,alpha_max";

fn create(path: &Path) -> AppResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::io(path, e))
}

fn lines(path: &Path) -> AppResult<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let f = File::open(path).map_err(|e| AppError::io(path, e))?;
    Ok(BufReader::new(f).lines().enumerate().map(|(i, l)| (i + 1, l)))
}

fn syntax(path: &Path, line: usize, message: impl Into<String>) -> AppError {
    AppError::Syntax {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_row<const N: usize>(path: &Path, line_no: usize, line: &str) -> AppResult<[f64; N]> {
    let mut out = [0.0; N];
    let mut parts = line.split(',');
    for slot in out.iter_mut() {
        let cell = parts
            .next()
            .ok_or_else(|| syntax(path, line_no, format!("expected {N} columns")))?;
        *slot = cell
            .trim()
            .parse()
            .map_err(|_| syntax(path, line_no, format!("not a number: `{cell}`")))?;
    }
    if parts.next().is_some() {
        return Err(syntax(path, line_no, format!("expected {N} columns")));
    }
    Ok(out)
}

fn read_table<const N: usize>(path: &Path, header: &str) -> AppResult<Vec<[f64; N]>> {
    let mut rows = Vec::new();
    for (n, line) in lines(path)? {
        let line = line.map_err(|e| AppError::io(path, e))?;
        if n == 1 {
            if line.trim() != header {
                return Err(syntax(path, 1, format!("expected header `{header}`")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_row::<N>(path, n, &line)?);
    }
    Ok(rows)
}

/// One row per node, element-major.
pub fn write_snapshot(path: &Path, semi: &Semidiscretization, field: &DGField) -> AppResult<()> {
    let mut w = create(path)?;
    let io = |e| AppError::io(path, e);
    writeln!(w, "{SNAPSHOT_HEADER}").map_err(io)?;
    for k in 0..field.n_elements() {
        for (i, u) in field.element(k).iter().enumerate() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                semi.node_x(k, i),
                u.h,
                u.hv,
                u.b
            )
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Node coordinates and states of a snapshot file.
pub fn read_snapshot(path: &Path) -> AppResult<Vec<(f64, State)>> {
    Ok(read_table::<4>(path, SNAPSHOT_HEADER)?
        .into_iter()
        .map(|[x, h, hv, b]| (x, State::new(h, hv, b)))
        .collect())
}

pub fn write_time_series(path: &Path, series: &TimeSeries) -> AppResult<()> {
    let mut w = create(path)?;
    let io = |e| AppError::io(path, e);
    writeln!(w, "{TIME_SERIES_HEADER}").map_err(io)?;
    for r in &series.rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.total_entropy, r.entropy_rate, r.dt, r.alpha_max
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_time_series(path: &Path) -> AppResult<Vec<TimeSeriesRow>> {
    Ok(read_table::<5>(path, TIME_SERIES_HEADER)?
        .into_iter()
        .map(|[t, total_entropy, entropy_rate, dt, alpha_max]| TimeSeriesRow {
            t,
            total_entropy,
            entropy_rate,
            dt,
            alpha_max,
        })
        .collect())
}

/// Streaming writer for `(t, interface, dS, dS_llf, alpha)` rows.
pub struct BlendLogWriter {
    path: std::path::PathBuf,
    w: BufWriter<File>,
}

impl BlendLogWriter {
    pub fn create(path: &Path) -> AppResult<Self> {
        let mut w = create(path)?;
        writeln!(w, "t,interface,delta_s,delta_s_llf,alpha").map_err(|e| AppError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            w,
        })
    }

    pub fn write(&mut self, t: f64, log: &[(usize, BlendReport)]) -> AppResult<()> {
        for (k, r) in log {
            writeln!(
                self.w,
                "{t:.16e},{k},{:.16e},{:.16e},{:.16e}",
                r.delta_s, r.delta_s_llf, r.alpha
            )
            .map_err(|e| AppError::io(&self.path, e))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> AppResult<()> {
        self.w.flush().map_err(|e| AppError::io(&self.path, e))
    }
}

pub fn write_text(path: &Path, text: &str) -> AppResult<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| AppError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use esdg_core::{LobattoBasis, Mesh1D, SveParams};

    #[test]
    fn snapshot_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let semi = Semidiscretization::new(
            LobattoBasis::new(3).unwrap(),
            Mesh1D::uniform(0.0, 2f64.sqrt(), 5).unwrap(),
            SveParams::default(),
        )
        .unwrap();
        let field = semi
            .interpolate_ic(|x| State::new(1.0 + (7.3 * x).sin() / 3.0, 0.1 / 3.0 * x, (x * x).exp() * 1e-7))
            .unwrap();
        let path = dir.path().join("nested/snap.csv");
        write_snapshot(&path, &semi, &field).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.len(), 20);
        for ((x, u), (idx, v)) in back.iter().zip(field.values().iter().enumerate()) {
            assert_eq!(*x, semi.node_x(idx / 4, idx % 4));
            assert_eq!(u, v);
        }
    }

    #[test]
    fn time_series_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let series = TimeSeries {
            rows: vec![
                TimeSeriesRow { t: 0.0, total_entropy: 1.0 / 3.0, entropy_rate: -1e-300, dt: 0.1, alpha_max: 0.25 },
                TimeSeriesRow { t: 0.1, total_entropy: 0.3, entropy_rate: 0.0, dt: 0.0, alpha_max: 0.0 },
            ],
            steps: 1,
        };
        let path = dir.path().join("ts.csv");
        write_time_series(&path, &series).unwrap();
        assert_eq!(read_time_series(&path).unwrap(), series.rows);
    }

    #[test]
    fn malformed_files_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x,h,hv,b\n1,2,3,4\n1,2,oops,4\n").unwrap();
        match read_snapshot(&path) {
            Err(AppError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let missing = dir.path().join("missing.csv");
        assert!(read_snapshot(&missing).unwrap_err().to_string().contains("missing.csv"));
    }
}
