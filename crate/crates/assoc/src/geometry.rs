//! Core matrix kernels shared by every coefficient: column preprocessing,
//! pairwise distances with fractional powers, cross-products, double
//! centering, distance/Gram conversion and classical MDS.

use nalgebra::{DMatrix, DVector};

use crate::error::{AssocError, Result};

/// Relative tolerance used when checking symmetry of square inputs.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues below `EIGEN_TOL * max|lambda|` are treated as zero.
pub const EIGEN_TOL: f64 = 1e-10;

/// Sums a slice with pairwise (cascade) summation. Deterministic and
/// considerably more accurate than a running sum on long inputs.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        let mut acc = 0.0;
        for x in v {
            acc += x;
        }
        acc
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

/// Pairwise-summed inner product of two equally sized matrices, accumulated
/// row by row so memory stays O(n).
pub(crate) fn frob_inner_raw(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let (nr, nc) = a.shape();
    let mut row_buf = vec![0.0; nc];
    let mut row_sums = vec![0.0; nr];
    for i in 0..nr {
        for j in 0..nc {
            row_buf[j] = a[(i, j)] * b[(i, j)];
        }
        row_sums[i] = pairwise_sum(&row_buf);
    }
    pairwise_sum(&row_sums)
}

pub(crate) fn frob_norm_raw(a: &DMatrix<f64>) -> f64 {
    frob_inner_raw(a, a).max(0.0).sqrt()
}

/// Preprocessing state of a data table's columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preprocessing {
    Raw,
    Centered,
    Standardized,
}

/// Requested preprocessing mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessMode {
    Center,
    Standardize,
}

/// An n x p table of observations by variables.
#[derive(Debug, Clone)]
pub struct DataTable {
    values: DMatrix<f64>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    preprocessing: Preprocessing,
}

impl DataTable {
    pub fn new(
        values: DMatrix<f64>,
        row_labels: Option<Vec<String>>,
        col_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let (n, p) = values.shape();
        if n < 2 || p < 1 {
            return Err(AssocError::DimensionMismatch(format!(
                "need n >= 2 and p >= 1, got {n} x {p}"
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(AssocError::NonFinite(format!("table entry {bad}")));
        }
        let row_labels = match row_labels {
            Some(l) if l.len() == n => l,
            Some(l) => {
                return Err(AssocError::DimensionMismatch(format!(
                    "{} row labels for {n} rows",
                    l.len()
                )))
            }
            None => (0..n).map(|i| format!("r{i}")).collect(),
        };
        let col_labels = match col_labels {
            Some(l) if l.len() == p => l,
            Some(l) => {
                return Err(AssocError::DimensionMismatch(format!(
                    "{} column labels for {p} columns",
                    l.len()
                )))
            }
            None => (0..p).map(|j| format!("v{j}")).collect(),
        };
        Ok(Self {
            values,
            row_labels,
            col_labels,
            preprocessing: Preprocessing::Raw,
        })
    }

    /// Convenience constructor from row-major data.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != p) {
            return Err(AssocError::DimensionMismatch("ragged rows".into()));
        }
        let values = DMatrix::from_fn(n, p.max(1), |i, j| rows[i][j]);
        Self::new(values, None, None)
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn preprocessing(&self) -> Preprocessing {
        self.preprocessing
    }

    pub fn is_preprocessed(&self) -> bool {
        self.preprocessing != Preprocessing::Raw
    }

    /// Marks the preprocessing state without recomputing; for internal use
    /// where the state is preserved by construction (e.g. row permutation).
    pub(crate) fn set_preprocessing(&mut self, p: Preprocessing) {
        self.preprocessing = p;
    }

    /// Returns a copy with column means removed, and optionally columns
    /// scaled to unit sample variance (n-1 denominator).
    pub fn preprocess(&self, mode: PreprocessMode) -> Result<Self> {
        let n = self.nrows();
        let p = self.ncols();
        let mut values = self.values.clone();
        for j in 0..p {
            let col: Vec<f64> = (0..n).map(|i| values[(i, j)]).collect();
            let mean = pairwise_sum(&col) / n as f64;
            for i in 0..n {
                values[(i, j)] -= mean;
            }
            if mode == PreprocessMode::Standardize {
                let sq: Vec<f64> = (0..n).map(|i| values[(i, j)] * values[(i, j)]).collect();
                let var = pairwise_sum(&sq) / (n as f64 - 1.0);
                if var <= 0.0 {
                    return Err(AssocError::ZeroVarianceColumn(self.col_labels[j].clone()));
                }
                let sd = var.sqrt();
                for i in 0..n {
                    values[(i, j)] /= sd;
                }
            }
        }
        Ok(Self {
            values,
            row_labels: self.row_labels.clone(),
            col_labels: self.col_labels.clone(),
            preprocessing: match mode {
                PreprocessMode::Center => Preprocessing::Centered,
                PreprocessMode::Standardize => Preprocessing::Standardized,
            },
        })
    }

    /// Centers the table unless it already is; used by coefficients that
    /// require centered input but accept raw tables for convenience.
    pub fn centered(&self) -> Result<Self> {
        if self.is_preprocessed() {
            Ok(self.clone())
        } else {
            self.preprocess(PreprocessMode::Center)
        }
    }

    /// Single-column view of column `j` as its own table.
    pub fn column_table(&self, j: usize) -> Result<Self> {
        let col = DMatrix::from_fn(self.nrows(), 1, |i, _| self.values[(i, j)]);
        let mut t = Self::new(
            col,
            Some(self.row_labels.clone()),
            Some(vec![self.col_labels[j].clone()]),
        )?;
        t.preprocessing = self.preprocessing;
        Ok(t)
    }
}

/// Role of a square n x n matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixRole {
    Distance,
    Gram,
    Centered,
}

/// A symmetric n x n matrix with a role-specific invariant.
#[derive(Debug, Clone)]
pub struct SquareMatrix {
    values: DMatrix<f64>,
    role: MatrixRole,
}

fn check_symmetric(values: &DMatrix<f64>) -> Result<()> {
    if !values.is_square() {
        return Err(AssocError::DimensionMismatch(format!(
            "square matrix expected, got {} x {}",
            values.nrows(),
            values.ncols()
        )));
    }
    let max = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = SYMMETRY_TOL * max.max(1.0);
    for i in 0..values.nrows() {
        for j in (i + 1)..values.ncols() {
            if (values[(i, j)] - values[(j, i)]).abs() > tol {
                return Err(AssocError::NotSymmetric);
            }
        }
    }
    Ok(())
}

fn symmetrize(values: &mut DMatrix<f64>) {
    for i in 0..values.nrows() {
        for j in (i + 1)..values.ncols() {
            let m = 0.5 * (values[(i, j)] + values[(j, i)]);
            values[(i, j)] = m;
            values[(j, i)] = m;
        }
    }
}

impl SquareMatrix {
    /// Wraps a symmetric matrix as a dissimilarity matrix: zero diagonal,
    /// nonnegative entries. Inputs within tolerance are symmetrized.
    pub fn distance(mut values: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&values)?;
        symmetrize(&mut values);
        for i in 0..values.nrows() {
            if values[(i, i)] != 0.0 {
                return Err(AssocError::DegenerateTable(format!(
                    "distance matrix has nonzero diagonal entry at {i}"
                )));
            }
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(AssocError::DegenerateTable(
                "distance matrix has a negative or non-finite entry".into(),
            ));
        }
        Ok(Self {
            values,
            role: MatrixRole::Distance,
        })
    }

    /// Wraps a symmetric matrix as a Gram (inner-product) matrix.
    pub fn gram(mut values: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&values)?;
        symmetrize(&mut values);
        Ok(Self {
            values,
            role: MatrixRole::Gram,
        })
    }

    pub(crate) fn centered_unchecked(values: DMatrix<f64>) -> Self {
        Self {
            values,
            role: MatrixRole::Centered,
        }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn role(&self) -> MatrixRole {
        self.role
    }
}

/// Euclidean embedding produced by MDS or an eigendecomposition of an
/// inner-product matrix.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// n x m coordinates, columns ordered by decreasing eigenvalue.
    pub coordinates: DMatrix<f64>,
    /// Retained (strictly positive) eigenvalues, nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues dropped because they were negative beyond tolerance.
    pub dropped_negative: usize,
}

/// W = X X' for a centered (or standardized) table.
pub fn cross_product(t: &DataTable) -> Result<SquareMatrix> {
    if !t.is_preprocessed() {
        return Err(AssocError::NotPreprocessed);
    }
    let x = t.values();
    SquareMatrix::gram(x * x.transpose())
}

/// Pairwise Euclidean distances raised to the power `alpha`.
pub fn pairwise_distance(t: &DataTable, alpha: f64) -> Result<SquareMatrix> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(AssocError::InvalidAlpha(alpha));
    }
    let n = t.nrows();
    let p = t.ncols();
    let x = t.values();
    let mut d = DMatrix::zeros(n, n);
    let mut buf = vec![0.0; p];
    for i in 0..n {
        for j in (i + 1)..n {
            for (k, b) in buf.iter_mut().enumerate() {
                let diff = x[(i, k)] - x[(j, k)];
                *b = diff * diff;
            }
            let dist = pairwise_sum(&buf).max(0.0).sqrt();
            let v = if alpha == 1.0 {
                dist
            } else if alpha == 2.0 {
                dist * dist
            } else {
                dist.powf(alpha)
            };
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    SquareMatrix::distance(d)
}

pub(crate) fn double_center_raw(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let nf = n as f64;
    let mut row_means = DVector::zeros(n);
    let mut buf = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            buf[j] = m[(i, j)];
        }
        row_means[i] = pairwise_sum(&buf) / nf;
    }
    let col_means: Vec<f64> = (0..n)
        .map(|j| {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = m[(i, j)];
            }
            pairwise_sum(&buf) / nf
        })
        .collect();
    let grand = pairwise_sum(col_means.as_slice()) / nf;
    DMatrix::from_fn(n, n, |i, j| m[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// C M C with C = I - 11'/n: removes row and column means.
pub fn double_center(m: &SquareMatrix) -> Result<SquareMatrix> {
    Ok(SquareMatrix::centered_unchecked(double_center_raw(
        m.values(),
    )))
}

/// Recovers the Gram matrix of a centered configuration from its squared
/// Euclidean distances: W = -1/2 C D C.
pub fn gram_from_distance(d: &SquareMatrix) -> Result<SquareMatrix> {
    check_symmetric(d.values())?;
    let mut w = double_center_raw(d.values());
    w.scale_mut(-0.5);
    SquareMatrix::gram(w)
}

/// Hilbert-Schmidt (Frobenius) inner product of two square matrices.
pub fn frobenius_inner(a: &SquareMatrix, b: &SquareMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(AssocError::DimensionMismatch(format!(
            "{} x {} vs {} x {}",
            a.n(),
            a.n(),
            b.n(),
            b.n()
        )));
    }
    Ok(frob_inner_raw(a.values(), b.values()))
}

/// Sorted symmetric eigendecomposition with a deterministic sign convention:
/// eigenvalues nonincreasing, each eigenvector oriented so its entry of
/// largest magnitude is positive.
pub(crate) fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..n {
            let a = eig.eigenvectors[(i, old_col)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        let sign = if eig.eigenvectors[(best, old_col)] < 0.0 {
            -1.0
        } else {
            1.0
        };
        for i in 0..n {
            vectors[(i, new_col)] = sign * eig.eigenvectors[(i, old_col)];
        }
    }
    (values, vectors)
}

/// Embedding from the eigendecomposition of an inner-product matrix:
/// coordinates are eigenvectors scaled by the square roots of the retained
/// positive eigenvalues.
pub(crate) fn embed_gram(gram: &DMatrix<f64>, dims: usize) -> Embedding {
    let n = gram.nrows();
    let (values, vectors) = sorted_symmetric_eigen(gram);
    let max_abs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = EIGEN_TOL * max_abs;
    let positive: Vec<(f64, usize)> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > tol)
        .map(|(i, &v)| (v, i))
        .collect();
    let dropped_negative = values.iter().filter(|&&v| v < -tol).count();
    let m = dims.min(positive.len());
    let mut coordinates = DMatrix::zeros(n, m);
    let mut eigenvalues = Vec::with_capacity(m);
    for (d, &(lambda, col)) in positive.iter().take(m).enumerate() {
        let s = lambda.sqrt();
        for i in 0..n {
            coordinates[(i, d)] = s * vectors[(i, col)];
        }
        eigenvalues.push(lambda);
    }
    Embedding {
        coordinates,
        eigenvalues,
        dropped_negative,
    }
}

/// Classical MDS (principal coordinates) of a distance matrix, or of a Gram
/// matrix supplied directly.
pub fn mds(d: &SquareMatrix, dims: usize) -> Result<Embedding> {
    if dims < 1 {
        return Err(AssocError::InvalidPlan("mds needs dims >= 1".into()));
    }
    let gram = match d.role() {
        MatrixRole::Distance => {
            let sq = d.values().map(|v| v * v);
            let mut w = double_center_raw(&sq);
            w.scale_mut(-0.5);
            w
        }
        MatrixRole::Gram | MatrixRole::Centered => {
            check_symmetric(d.values())?;
            d.values().clone()
        }
    };
    Ok(embed_gram(&gram, dims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn table(rows: &[Vec<f64>]) -> DataTable {
        DataTable::from_rows(rows).unwrap()
    }

    #[test]
    fn center_removes_mean() {
        let t = table(&[vec![1.0], vec![2.0], vec![3.0]]);
        let c = t.preprocess(PreprocessMode::Center).unwrap();
        let col: Vec<f64> = c.values().column(0).iter().copied().collect();
        assert_eq!(col, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn standardize_unit_variance() {
        // sample sd of (1,2,3) is exactly 1
        let t = table(&[vec![1.0], vec![2.0], vec![3.0]]);
        let s = t.preprocess(PreprocessMode::Standardize).unwrap();
        let col: Vec<f64> = s.values().column(0).iter().copied().collect();
        assert_eq!(col, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn standardize_constant_column_rejected() {
        let t = table(&[vec![5.0], vec![5.0], vec![5.0]]);
        match t.preprocess(PreprocessMode::Standardize) {
            Err(AssocError::ZeroVarianceColumn(_)) => {}
            other => panic!("expected ZeroVarianceColumn, got {other:?}"),
        }
    }

    #[test]
    fn cross_product_1d() {
        let t = table(&[vec![-1.0], vec![1.0]])
            .preprocess(PreprocessMode::Center)
            .unwrap();
        let w = cross_product(&t).unwrap();
        assert_eq!(w.values(), &dmatrix![1.0, -1.0; -1.0, 1.0]);
    }

    #[test]
    fn cross_product_rejects_raw() {
        let t = table(&[vec![1.0], vec![2.0]]);
        assert!(matches!(
            cross_product(&t),
            Err(AssocError::NotPreprocessed)
        ));
    }

    #[test]
    fn cross_product_psd() {
        let t = table(&[
            vec![0.3, -1.2, 0.7],
            vec![1.1, 0.4, -0.2],
            vec![-0.5, 0.8, 1.9],
            vec![0.2, -0.6, 0.4],
        ])
        .preprocess(PreprocessMode::Center)
        .unwrap();
        let w = cross_product(&t).unwrap();
        let (values, _) = sorted_symmetric_eigen(w.values());
        assert!(values.iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn pairwise_distance_alpha_powers() {
        let t = table(&[vec![0.0], vec![2.0]]);
        let d1 = pairwise_distance(&t, 1.0).unwrap();
        assert_eq!(d1.values()[(0, 1)], 2.0);
        let d2 = pairwise_distance(&t, 2.0).unwrap();
        assert_eq!(d2.values()[(0, 1)], 4.0);
        let dh = pairwise_distance(&t, 0.5).unwrap();
        assert!((dh.values()[(0, 1)] - 2.0_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn pairwise_distance_invalid_alpha() {
        let t = table(&[vec![0.0], vec![2.0]]);
        assert!(matches!(
            pairwise_distance(&t, 0.0),
            Err(AssocError::InvalidAlpha(_))
        ));
        assert!(matches!(
            pairwise_distance(&t, 2.5),
            Err(AssocError::InvalidAlpha(_))
        ));
    }

    #[test]
    fn double_center_hand_example() {
        let d = SquareMatrix::distance(dmatrix![0.0, 2.0; 2.0, 0.0]).unwrap();
        let c = double_center(&d).unwrap();
        assert_eq!(c.values(), &dmatrix![-1.0, 1.0; 1.0, -1.0]);
    }

    #[test]
    fn double_center_idempotent() {
        let d = SquareMatrix::gram(dmatrix![1.0, 2.0, 0.5; 2.0, 0.0, -1.0; 0.5, -1.0, 3.0])
            .unwrap();
        let once = double_center(&d).unwrap();
        let twice = double_center(&once).unwrap();
        let diff = (once.values() - twice.values()).abs().max();
        assert!(diff < 1e-12);
    }

    #[test]
    fn double_center_annihilates_constants() {
        let c = DMatrix::from_element(4, 4, 3.7);
        let m = SquareMatrix::gram(c).unwrap();
        let out = double_center(&m).unwrap();
        assert!(out.values().abs().max() < 1e-12);
    }

    #[test]
    fn gram_from_distance_line() {
        let d = SquareMatrix::gram(dmatrix![0.0, 4.0; 4.0, 0.0]).unwrap();
        let w = gram_from_distance(&d).unwrap();
        assert_eq!(w.values(), &dmatrix![1.0, -1.0; -1.0, 1.0]);
    }

    #[test]
    fn gram_from_distance_zero() {
        let d = SquareMatrix::gram(DMatrix::zeros(3, 3)).unwrap();
        let w = gram_from_distance(&d).unwrap();
        assert!(w.values().abs().max() == 0.0);
    }

    #[test]
    fn frobenius_inner_basics() {
        let i2 = SquareMatrix::gram(DMatrix::identity(2, 2)).unwrap();
        assert_eq!(frobenius_inner(&i2, &i2).unwrap(), 2.0);
        let z = SquareMatrix::gram(DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(frobenius_inner(&i2, &z).unwrap(), 0.0);
        let a = SquareMatrix::gram(dmatrix![1.0, 2.0; 2.0, 1.0]).unwrap();
        let b = SquareMatrix::gram(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        assert_eq!(frobenius_inner(&a, &b).unwrap(), 4.0);
    }

    #[test]
    fn frobenius_inner_dimension_mismatch() {
        let a = SquareMatrix::gram(DMatrix::identity(2, 2)).unwrap();
        let b = SquareMatrix::gram(DMatrix::identity(3, 3)).unwrap();
        assert!(matches!(
            frobenius_inner(&a, &b),
            Err(AssocError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn mds_collinear_points() {
        let t = table(&[vec![0.0], vec![1.0], vec![2.0]]);
        let d = pairwise_distance(&t, 1.0).unwrap();
        let e = mds(&d, 3).unwrap();
        assert_eq!(e.eigenvalues.len(), 1);
        // reconstructed distances match the input
        for i in 0..3 {
            for j in 0..3 {
                let rec = (e.coordinates[(i, 0)] - e.coordinates[(j, 0)]).abs();
                assert!((rec - d.values()[(i, j)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mds_zero_distances() {
        let d = SquareMatrix::distance(DMatrix::zeros(4, 4)).unwrap();
        let e = mds(&d, 2).unwrap();
        assert!(e.eigenvalues.is_empty());
        assert_eq!(e.coordinates.ncols(), 0);
    }

    #[test]
    fn mds_2d_configuration() {
        let t = table(&[
            vec![0.0, 0.0],
            vec![1.0, 0.3],
            vec![0.2, 1.4],
            vec![-0.8, 0.5],
            vec![0.6, -0.9],
        ]);
        let d = pairwise_distance(&t, 1.0).unwrap();
        let e = mds(&d, 4).unwrap();
        assert_eq!(e.eigenvalues.len(), 2);
        for i in 0..5 {
            for j in 0..5 {
                let dx = e.coordinates[(i, 0)] - e.coordinates[(j, 0)];
                let dy = e.coordinates[(i, 1)] - e.coordinates[(j, 1)];
                let rec = (dx * dx + dy * dy).sqrt();
                assert!((rec - d.values()[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn distance_rejects_asymmetric() {
        let m = dmatrix![0.0, 1.0; 2.0, 0.0];
        assert!(matches!(
            SquareMatrix::distance(m),
            Err(AssocError::NotSymmetric)
        ));
    }
}
