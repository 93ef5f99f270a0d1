//! Per-iteration ensemble metrics and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// CSV header, in column order.
pub const COLUMNS: [&str; 10] =
    ["i", "emse", "emse1", "emse2", "cross_emse", "eta_mean", "a_mean", "eta_sq_mean", "net_mu", "n_realizations"];

/// Ensemble means at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub i: u64,
    /// Mean of `e_a(i)^2`.
    pub emse: f64,
    pub emse1: f64,
    pub emse2: f64,
    /// Mean of `e_{a,1}(i) e_{a,2}(i)`.
    pub cross_emse: f64,
    pub eta_mean: f64,
    pub a_mean: f64,
    pub eta_sq_mean: f64,
    pub net_mu: f64,
    pub n_realizations: usize,
    /// Mean of `a(i)^2`; not part of the CSV and `NaN` after reading one.
    pub a_sq_mean: f64,
}

impl MetricsRow {
    /// Ensemble variance of the auxiliary variable.
    pub fn a_var(&self) -> f64 {
        (self.a_sq_mean - self.a_mean * self.a_mean).max(0.0)
    }
}

/// One row per iteration, plus the number of excluded realizations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
    pub n_diverged: usize,
}

impl MetricsTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, f: impl Fn(&MetricsRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn emse(&self) -> Vec<f64> {
        self.column(|r| r.emse)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let wrap = |e: csv::Error| Error::Parse { path: "<csv>".into(), message: e.to_string() };
        w.write_record(COLUMNS).map_err(wrap)?;
        for r in &self.rows {
            w.write_record([
                r.i.to_string(),
                r.emse.to_string(),
                r.emse1.to_string(),
                r.emse2.to_string(),
                r.cross_emse.to_string(),
                r.eta_mean.to_string(),
                r.a_mean.to_string(),
                r.eta_sq_mean.to_string(),
                r.net_mu.to_string(),
                r.n_realizations.to_string(),
            ])
            .map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::Parse { path: "<csv>".into(), message: e.to_string() })
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse { path: "<csv>".into(), message: e.to_string() })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |source| Error::Io { path: path.to_path_buf(), source };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let file = std::fs::File::create(path).map_err(io)?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse { path: path.to_path_buf(), message },
            other => other,
        })
    }

    pub fn read_csv<R: Read>(input: R, origin: &Path) -> Result<Self> {
        let fail = |message: String| Error::Parse { path: origin.to_path_buf(), message };
        let mut rdr = csv::ReaderBuilder::new().from_reader(input);
        let header = rdr.headers().map_err(|e| fail(e.to_string()))?.clone();
        if header.iter().ne(COLUMNS.iter().copied()) {
            return Err(fail(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
        }
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| fail(e.to_string()))?;
            let num = |k: usize| -> Result<f64> {
                rec[k].parse::<f64>().map_err(|e| fail(format!("row {}: column {}: {e}", line + 1, COLUMNS[k])))
            };
            let int = |k: usize| -> Result<u64> {
                rec[k].parse::<u64>().map_err(|e| fail(format!("row {}: column {}: {e}", line + 1, COLUMNS[k])))
            };
            rows.push(MetricsRow {
                i: int(0)?,
                emse: num(1)?,
                emse1: num(2)?,
                emse2: num(3)?,
                cross_emse: num(4)?,
                eta_mean: num(5)?,
                a_mean: num(6)?,
                eta_sq_mean: num(7)?,
                net_mu: num(8)?,
                n_realizations: int(9)? as usize,
                a_sq_mean: f64::NAN,
            });
        }
        Ok(Self { rows, n_diverged: 0 })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }
}

/// Mean of the last `window` entries.
pub fn estimate_steady_state(series: &[f64], window: usize) -> Result<f64> {
    if window == 0 || window > series.len() {
        return Err(Error::Domain(format!(
            "steady-state window {window} does not fit a series of length {}",
            series.len()
        )));
    }
    let tail = &series[series.len() - window..];
    Ok(neumaier_sum(tail.iter().copied()) / window as f64)
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: u64, emse: f64) -> MetricsRow {
        MetricsRow {
            i,
            emse,
            emse1: emse * 2.0,
            emse2: 0.1 + emse,
            cross_emse: 1.0 / 3.0,
            eta_mean: 0.5,
            a_mean: -1e-300,
            eta_sq_mean: 0.25,
            net_mu: 0.0425,
            n_realizations: 300,
            a_sq_mean: f64::NAN,
        }
    }

    #[test]
    fn steady_state_examples() {
        assert_eq!(estimate_steady_state(&[2.5; 40], 10).unwrap(), 2.5);
        let mut spike = vec![0.0; 99];
        spike.push(1.0);
        assert_eq!(estimate_steady_state(&spike, 1).unwrap(), 1.0);
        let ramp: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(estimate_steady_state(&ramp, 1000).unwrap(), 499.5);
        assert!(estimate_steady_state(&ramp, 1001).is_err());
        assert!(estimate_steady_state(&ramp, 0).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let table = MetricsTable { rows: (0..5).map(|i| row(i, 0.1 * i as f64 + 1e-17)).collect(), n_diverged: 0 };
        let text = table.to_csv_string().unwrap();
        assert!(text.starts_with("i,emse,emse1,emse2,cross_emse,eta_mean,a_mean,eta_sq_mean,net_mu,n_realizations\n"));
        assert!(!text.contains('\r'));
        let back = MetricsTable::read_csv(text.as_bytes(), Path::new("mem")).unwrap();
        for (a, b) in table.rows.iter().zip(&back.rows) {
            assert_eq!((a.i, a.emse, a.emse1, a.cross_emse, a.a_mean), (b.i, b.emse, b.emse1, b.cross_emse, b.a_mean));
        }
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(MetricsTable::read_csv("i,x\n0,1\n".as_bytes(), Path::new("mem")).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(xs), 2.0);
    }
}
