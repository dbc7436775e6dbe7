use crate::error::{Error, Result};

/// Dense numeric data matrix, row-major, with one label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    d: usize,
    column_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from rows, generating column names `f0..f(d-1)`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        let names = (0..d).map(|j| format!("f{j}")).collect();
        Self::with_names(rows, names)
    }

    pub fn with_names(rows: Vec<Vec<f64>>, column_names: Vec<String>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Config(
                "dataset must contain at least one row".into(),
            ));
        }
        let d = column_names.len();
        if d == 0 {
            return Err(Error::Config(
                "dataset must contain at least one column".into(),
            ));
        }
        let mut values = Vec::with_capacity(n * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::Structure(format!(
                    "row {i} has {} values, expected {d}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_flat(values, n, d, column_names)
    }

    /// Builds a dataset from a row-major buffer of `n * d` values.
    pub fn from_flat(
        values: Vec<f64>,
        n: usize,
        d: usize,
        column_names: Vec<String>,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Config(format!("dataset shape {n}x{d} is empty")));
        }
        if values.len() != n * d {
            return Err(Error::Structure(format!(
                "buffer holds {} values, shape {n}x{d} needs {}",
                values.len(),
                n * d
            )));
        }
        if column_names.len() != d {
            return Err(Error::Structure(format!(
                "{} column names for {d} columns",
                column_names.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value {} at row {}, column {}",
                values[pos],
                pos / d,
                pos % d
            )));
        }
        Ok(Self {
            values,
            n,
            d,
            column_names,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    /// Maximum of every column over all rows.
    pub fn column_max(&self) -> Vec<f64> {
        let mut max = self.row(0).to_vec();
        for row in self.rows().skip(1) {
            for (m, &v) in max.iter_mut().zip(row) {
                if v > *m {
                    *m = v;
                }
            }
        }
        max
    }

    /// Returns a copy with `extra` appended as a final row.
    pub fn with_row(&self, extra: &[f64]) -> Result<Self> {
        if extra.len() != self.d {
            return Err(Error::Input(format!(
                "row has {} values, dataset has {} columns",
                extra.len(),
                self.d
            )));
        }
        let mut values = Vec::with_capacity(self.values.len() + self.d);
        values.extend_from_slice(&self.values);
        values.extend_from_slice(extra);
        Self::from_flat(values, self.n + 1, self.d, self.column_names.clone())
    }

    /// Keeps only the rows whose index satisfies `keep`.
    pub fn filter_rows(&self, mut keep: impl FnMut(usize) -> bool) -> Result<Self> {
        let mut values = Vec::new();
        let mut n = 0;
        for (i, row) in self.rows().enumerate() {
            if keep(i) {
                values.extend_from_slice(row);
                n += 1;
            }
        }
        Self::from_flat(values, n, self.d, self.column_names.clone())
    }

    /// Removes column `j`, returning the reduced dataset and the removed values.
    pub fn split_off_column(&self, j: usize) -> Result<(Self, Vec<f64>)> {
        if j >= self.d {
            return Err(Error::Input(format!(
                "column {j} out of range for d={}",
                self.d
            )));
        }
        let mut values = Vec::with_capacity(self.n * (self.d - 1));
        let mut removed = Vec::with_capacity(self.n);
        for row in self.rows() {
            removed.push(row[j]);
            values.extend(
                row.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != j)
                    .map(|(_, &v)| v),
            );
        }
        let mut names = self.column_names.clone();
        names.remove(j);
        Ok((Self::from_flat(values, self.n, self.d - 1, names)?, removed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let err = Dataset::from_rows(vec![vec![1.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        let err = Dataset::from_rows(vec![vec![f64::INFINITY]]).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(matches!(Dataset::from_rows(vec![]), Err(Error::Config(_))));
        assert!(matches!(
            Dataset::from_rows(vec![vec![1.0, 2.0], vec![3.0]]),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn column_max_and_split() {
        let ds = Dataset::from_rows(vec![vec![1.0, -4.0, 0.0], vec![10.0, -2.0, 1.0]]).unwrap();
        assert_eq!(ds.column_max(), vec![10.0, -2.0, 1.0]);
        let (rest, col) = ds.split_off_column(1).unwrap();
        assert_eq!(col, vec![-4.0, -2.0]);
        assert_eq!(rest.row(1), &[10.0, 1.0]);
        assert_eq!(rest.column_names(), &["f0".to_string(), "f2".to_string()]);
    }
}
