//! Binary preference matrix relating points (rows) to model hypotheses
//! (columns). Column `j` is the consensus set of model `j`; row `i` is the
//! preference set of point `i`.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ModelHypothesis, Point2D};

/// Fixed-width bitset over the rows of one column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnBits {
    words: Vec<u64>,
}

impl ColumnBits {
    fn zeros(n: usize) -> Self {
        Self {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Size of the intersection with another column of the same height.
    pub fn overlap(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + t)
            })
        })
    }
}

#[derive(Debug, Clone)]
pub struct PreferenceMatrix {
    n: usize,
    columns: Vec<ColumnBits>,
    /// Model behind each column; empty for bare bit matrices.
    models: Vec<ModelHypothesis>,
    /// Dataset the rows refer to; empty for bare bit matrices.
    points: Arc<Vec<Point2D>>,
    epsilon: Option<f64>,
}

impl PartialEq for PreferenceMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.columns == other.columns && self.models == other.models
    }
}

impl PreferenceMatrix {
    /// `P[i, j] = 1` iff `residual(model_j, point_i) < epsilon`.
    pub fn build(points: &[Point2D], models: &[ModelHypothesis], epsilon: f64) -> Result<Self> {
        Self::build_shared(Arc::new(points.to_vec()), models, epsilon)
    }

    pub fn build_shared(
        points: Arc<Vec<Point2D>>,
        models: &[ModelHypothesis],
        epsilon: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if points.is_empty() || models.is_empty() {
            return Err(Error::InvalidSpec(
                "preference matrix needs points and models".into(),
            ));
        }
        let n = points.len();
        let columns = models
            .par_iter()
            .map(|model| {
                let mut col = ColumnBits::zeros(n);
                for (i, p) in points.iter().enumerate() {
                    if model.residual(p) < epsilon {
                        col.set(i);
                    }
                }
                col
            })
            .collect();
        Ok(Self {
            n,
            columns,
            models: models.to_vec(),
            points,
            epsilon: Some(epsilon),
        })
    }

    /// Matrix from explicit row-major 0/1 rows, with no geometry attached.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        if n == 0 || m == 0 {
            return Err(Error::InvalidSpec(
                "preference matrix must be non-empty".into(),
            ));
        }
        let mut columns = vec![ColumnBits::zeros(n); m];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::LengthMismatch {
                    left: m,
                    right: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => columns[j].set(i),
                    _ => return Err(Error::Parse(format!("entry ({i}, {j}) is {v}, not 0/1"))),
                }
            }
        }
        Ok(Self {
            n,
            columns,
            models: Vec::new(),
            points: Arc::new(Vec::new()),
            epsilon: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.columns[j].get(i)
    }

    pub fn column(&self, j: usize) -> &ColumnBits {
        &self.columns[j]
    }

    pub fn models(&self) -> &[ModelHypothesis] {
        &self.models
    }

    pub fn points(&self) -> &[Point2D] {
        &self.points
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn has_geometry(&self) -> bool {
        !self.models.is_empty() && !self.points.is_empty()
    }

    /// Residual of point `i` to the model of column `j`, if geometry is attached.
    pub fn residual(&self, i: usize, j: usize) -> Option<f64> {
        if !self.has_geometry() {
            return None;
        }
        Some(self.models[j].residual(&self.points[i]))
    }

    pub fn consensus_size(&self, j: usize) -> usize {
        self.columns[j].count()
    }

    /// Number of points shared by models `j` and `k` (entry of `PᵀP`).
    pub fn overlap(&self, j: usize, k: usize) -> usize {
        self.columns[j].overlap(&self.columns[k])
    }

    /// Columns with an empty consensus set.
    pub fn empty_columns(&self) -> Vec<usize> {
        (0..self.m())
            .filter(|&j| self.consensus_size(j) == 0)
            .collect()
    }

    /// Rows covered by no column.
    pub fn orphan_rows(&self) -> Vec<usize> {
        let mut covered = ColumnBits::zeros(self.n);
        for col in &self.columns {
            for (w, word) in covered.words.iter_mut().zip(&col.words) {
                *w |= word;
            }
        }
        (0..self.n).filter(|&i| !covered.get(i)).collect()
    }

    /// Submatrix with the columns in `cols`, in that order.
    pub fn restrict_columns(&self, cols: &[usize]) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::EmptyColumnSet);
        }
        let mut seen = HashSet::with_capacity(cols.len());
        for &j in cols {
            if j >= self.m() {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    m: self.m(),
                });
            }
            if !seen.insert(j) {
                return Err(Error::DuplicateIndex(j));
            }
        }
        Ok(Self {
            n: self.n,
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            models: if self.models.is_empty() {
                Vec::new()
            } else {
                cols.iter().map(|&j| self.models[j].clone()).collect()
            },
            points: Arc::clone(&self.points),
            epsilon: self.epsilon,
        })
    }

    /// Copy without the empty-consensus columns, plus the original indices
    /// of the columns that were kept.
    pub fn drop_empty_columns(&self) -> Result<(Self, Vec<usize>)> {
        let kept: Vec<usize> = (0..self.m())
            .filter(|&j| self.consensus_size(j) > 0)
            .collect();
        Ok((self.restrict_columns(&kept)?, kept))
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.m()).map(|j| self.get(i, j) as u8).collect())
            .collect()
    }

    pub fn to_json(&self) -> PreferenceJson {
        PreferenceJson {
            n: self.n,
            m: self.m(),
            epsilon: self.epsilon,
            entries: self.rows(),
            models: self.models.clone(),
        }
    }

    pub fn from_json(json: &PreferenceJson) -> Result<Self> {
        let mut p = Self::from_rows(&json.entries)?;
        if p.n != json.n || p.m() != json.m {
            return Err(Error::DimensionMismatch {
                expected: json.n * json.m,
                actual: p.n * p.m(),
            });
        }
        if !json.models.is_empty() && json.models.len() != json.m {
            return Err(Error::LengthMismatch {
                left: json.m,
                right: json.models.len(),
            });
        }
        p.models = json.models.clone();
        p.epsilon = json.epsilon;
        Ok(p)
    }

    /// Writes rows of comma-separated 0/1 entries, one row per point.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in self.rows() {
            out.write_record(row.iter().map(|v| if *v == 1 { "1" } else { "0" }))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut input = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut rows = Vec::new();
        for record in input.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| match f.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::Parse(format!("bad preference entry {other:?}"))),
                })
                .collect::<Result<Vec<u8>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

/// Dense row-major JSON form of a preference matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreferenceJson {
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub entries: Vec<Vec<u8>>,
    #[serde(default)]
    pub models: Vec<ModelHypothesis>,
}
