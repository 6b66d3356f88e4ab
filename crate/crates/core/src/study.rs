//! Convergence tables: errors per refinement level and observed rates.

use std::io::Write;

use crate::error::{FemError, Result};

/// Errors below this are treated as exact; their rates are not defined.
pub const EXACT_THRESHOLD: f64 = 1e-12;

/// One refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    /// Mesh size (or time step for temporal studies).
    pub h: f64,
    pub n_dofs: usize,
    pub errors: Vec<f64>,
    /// `rates[j]` between this level and the previous one; NaN on the first level.
    pub rates: Vec<f64>,
}

/// Errors of several quantities across levels with consecutive-level rates
/// `log(e_{i-1}/e_i) / log(h_{i-1}/h_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub names: Vec<String>,
    pub rows: Vec<StudyRow>,
}

impl RateTable {
    pub fn new(names: &[&str]) -> Self {
        RateTable { names: names.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, h: f64, n_dofs: usize, errors: Vec<f64>) {
        assert_eq!(errors.len(), self.names.len(), "one error per column");
        let rates = match self.rows.last() {
            None => vec![f64::NAN; errors.len()],
            Some(prev) => errors.iter().zip(&prev.errors).map(|(&e, &ep)| observed_rate(ep, e, prev.h, h)).collect(),
        };
        self.rows.push(StudyRow { h, n_dofs, errors, rates });
    }

    /// Runs `level(l)` for every entry of `levels`, up to `jobs` at a time,
    /// and pushes the rows `(h, n_dofs, errors)` in level order.
    pub fn from_levels<F>(names: &[&str], levels: &[usize], jobs: usize, level: F) -> Result<Self>
    where
        F: Fn(usize) -> Result<(f64, usize, Vec<f64>)> + Sync,
    {
        Self::check_levels(levels.len())?;
        let mut rows = Vec::with_capacity(levels.len());
        for batch in levels.chunks(jobs.max(1)) {
            if batch.len() == 1 {
                rows.push(level(batch[0])?);
                continue;
            }
            let results: Vec<Result<_>> = std::thread::scope(|s| {
                let level = &level;
                let handles: Vec<_> = batch.iter().map(|&l| s.spawn(move || level(l))).collect();
                handles.into_iter().map(|h| h.join().expect("study worker panicked")).collect()
            });
            for r in results {
                rows.push(r?);
            }
        }
        let mut table = Self::new(names);
        for (h, n, e) in rows {
            table.push(h, n, e);
        }
        Ok(table)
    }

    /// Requires at least two levels.
    pub fn check_levels(levels: usize) -> Result<()> {
        if levels < 2 {
            return Err(FemError::InvalidArgument(format!("a rate study needs at least 2 levels, got {levels}")));
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Rate of `name` between the last two levels.
    pub fn final_rate(&self, name: &str) -> f64 {
        let j = self.column(name).unwrap_or_else(|| panic!("no column '{name}'"));
        self.rows.last().map_or(f64::NAN, |r| r.rates[j])
    }

    pub fn errors(&self, name: &str) -> Vec<f64> {
        let j = self.column(name).unwrap_or_else(|| panic!("no column '{name}'"));
        self.rows.iter().map(|r| r.errors[j]).collect()
    }

    /// True if some rate could not be computed because an error was at round-off level.
    pub fn has_undefined_rates(&self) -> bool {
        self.rows.iter().skip(1).any(|r| r.rates.iter().any(|x| x.is_nan()))
    }

    /// CSV with columns `h, n_dofs, err_<name>, rate_<name>, ...`, 12 significant digits.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        let mut header = vec!["h".to_string(), "n_dofs".to_string()];
        for n in &self.names {
            header.push(format!("err_{n}"));
            header.push(format!("rate_{n}"));
        }
        writeln!(out, "{}", header.join(","))?;
        for r in &self.rows {
            let mut fields = vec![fmt_float(r.h), r.n_dofs.to_string()];
            for (e, rate) in r.errors.iter().zip(&r.rates) {
                fields.push(fmt_float(*e));
                fields.push(fmt_float(*rate));
            }
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Rate between two levels; NaN if either error is at round-off level.
pub fn observed_rate(e_prev: f64, e: f64, h_prev: f64, h: f64) -> f64 {
    if e_prev <= EXACT_THRESHOLD || e <= EXACT_THRESHOLD {
        return f64::NAN;
    }
    (e_prev / e).ln() / (h_prev / h).ln()
}

/// Floating point output with 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.11e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_from_halving() {
        let mut t = RateTable::new(&["l2"]);
        t.push(0.5, 10, vec![0.4]);
        t.push(0.25, 30, vec![0.1]);
        assert!(t.rows[0].rates[0].is_nan());
        assert!((t.final_rate("l2") - 2.0).abs() < 1e-14);
    }

    #[test]
    fn parallel_levels_keep_order() {
        let run = |jobs| {
            RateTable::from_levels(&["e"], &[2, 4, 8, 16], jobs, |n| {
                Ok((1.0 / n as f64, n, vec![1.0 / (n * n) as f64]))
            })
            .unwrap()
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert!((a.final_rate("e") - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exact_errors_flagged() {
        let mut t = RateTable::new(&["l2"]);
        t.push(0.5, 10, vec![0.0]);
        t.push(0.25, 30, vec![1e-16]);
        assert!(t.has_undefined_rates());
    }

    #[test]
    fn csv_layout() {
        let mut t = RateTable::new(&["l2", "h1"]);
        t.push(0.5, 4, vec![1.0, 2.0]);
        let csv = t.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("h,n_dofs,err_l2,rate_l2,err_h1,rate_h1"));
        assert_eq!(lines.next(), Some("5.00000000000e-1,4,1.00000000000e0,nan,2.00000000000e0,nan"));
        assert!(RateTable::check_levels(1).is_err());
    }
}
