//! Output files: `report.csv` (long format), `report.txt` (aligned tables)
//! and `meta.txt` (environment and timing). Only `meta.txt` carries
//! anything that varies between identical runs.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::time::Duration;

/// One table of rows keyed by an experiment id.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub title: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: &[&'static str]) -> Self {
        Table {
            title: title.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push((id.into(), values));
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    /// (label, value) lines for meta.txt.
    pub meta: Vec<(String, String)>,
}

/// Integers print without a fraction; everything else with six decimals.
pub fn fmt_value(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else if v.is_finite() {
        format!("{v:.6}")
    } else {
        format!("{v}")
    }
}

impl Report {
    pub fn csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["experiment_id", "metric", "value"])?;
        for t in &self.tables {
            for (id, values) in &t.rows {
                for (c, v) in t.columns.iter().zip(values) {
                    w.write_record([id.as_str(), c, &fmt_value(*v)])?;
                }
            }
        }
        w.into_inner().map_err(|e| e.into_error())
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for t in &self.tables {
            let cells: Vec<Vec<String>> = t
                .rows
                .iter()
                .map(|(id, vs)| {
                    std::iter::once(id.clone())
                        .chain(vs.iter().map(|v| format!("{v:.2}")))
                        .collect()
                })
                .collect();
            let header: Vec<&str> = std::iter::once("id").chain(t.columns.iter().copied()).collect();
            let widths: Vec<usize> = (0..header.len())
                .map(|i| cells.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
                .collect();
            let _ = writeln!(s, "{}", t.title);
            let line = |row: Vec<&str>| {
                row.iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            let _ = writeln!(s, "{}", line(header.clone()));
            for r in &cells {
                let _ = writeln!(s, "{}", line(r.iter().map(String::as_str).collect()));
            }
            s.push('\n');
        }
        s
    }

    pub fn meta_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "{k}: {v}");
        }
        s
    }

    /// Write the three files, each through a temporary file and a rename.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        write_atomic(&dir.join("report.csv"), &self.csv()?)?;
        write_atomic(&dir.join("report.txt"), self.text().as_bytes())?;
        write_atomic(&dir.join("meta.txt"), self.meta_text().as_bytes())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn secs(d: Duration) -> String {
    format!("{:.6}", d.as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut t = Table::new("demo", &["a", "b"]);
        t.push("x", vec![1.0, 0.125]);
        t.push("longer-id", vec![-2.5, 100.0]);
        Report {
            tables: vec![t],
            meta: vec![("wall".into(), "1.0".into())],
        }
    }

    #[test]
    fn csv_is_long_format() {
        let csv = String::from_utf8(sample().csv().unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "experiment_id,metric,value");
        assert_eq!(lines[1], "x,a,1");
        assert_eq!(lines[2], "x,b,0.125000");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn text_columns_align() {
        let t = sample().text();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "demo");
        assert_eq!(lines[1].len(), lines[2].len());
        assert_eq!(lines[2].len(), lines[3].len());
    }

    #[test]
    fn value_formatting() {
        assert_eq!(fmt_value(3.0), "3");
        assert_eq!(fmt_value(-0.5), "-0.500000");
        assert_eq!(fmt_value(f64::INFINITY), "inf");
    }
}
