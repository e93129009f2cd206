//! Sampled trajectories and their CSV form.

use std::io;

/// Counts per column at evenly spaced sample times.
#[derive(Clone, PartialEq, Debug)]
pub struct TraceTable {
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    /// `rows[k][j]` is column `j` at `times[k]`.
    pub rows: Vec<Vec<u64>>,
}

/// `points` evenly spaced times from 0 to `until`, both included.
pub fn sample_times(until: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2, "need at least two sample points");
    (0..points)
        .map(|k| until * k as f64 / (points - 1) as f64)
        .collect()
}

/// Decimal form of a time that always shows a fractional part.
pub fn format_time(t: f64) -> String {
    let s = format!("{t:?}");
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

impl TraceTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            times: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, time: f64, row: Vec<u64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.times.push(time);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<u64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(std::iter::once("time").chain(self.columns.iter().map(String::as_str)))?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            let mut record = vec![format_time(*t)];
            record.extend(row.iter().map(u64::to_string));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}
