//! K-table follow-up analysis: pairwise coefficient matrices, their
//! between-structure embedding, the STATIS compromise, and MFA-style group
//! coordinates.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::coefficients::{
    dcor, dcor_star, dcov, lg, rls, rv, rv_debiased, rv_mod, CoefficientKind,
};
use crate::error::{AssocError, Result};
use crate::geometry::{
    cross_product, embed_gram, frob_inner_raw, frob_norm_raw, sorted_symmetric_eigen, DataTable,
    Embedding, Preprocessing, SquareMatrix,
};

/// K x K matrix of pairwise association coefficients between tables.
#[derive(Debug, Clone)]
pub struct AssociationMatrix {
    values: DMatrix<f64>,
    kind: CoefficientKind,
    labels: Vec<String>,
}

impl AssociationMatrix {
    /// Wraps an externally computed coefficient matrix; must be square and
    /// symmetric.
    pub fn from_parts(
        values: DMatrix<f64>,
        kind: CoefficientKind,
        labels: Vec<String>,
    ) -> Result<Self> {
        let k = values.nrows();
        if values.ncols() != k || labels.len() != k {
            return Err(AssocError::DimensionMismatch(format!(
                "{} x {} matrix with {} labels",
                values.nrows(),
                values.ncols(),
                labels.len()
            )));
        }
        for i in 0..k {
            for j in (i + 1)..k {
                if (values[(i, j)] - values[(j, i)]).abs() > 1e-10 {
                    return Err(AssocError::NotSymmetric);
                }
            }
        }
        Ok(Self {
            values,
            kind,
            labels,
        })
    }

    pub fn k(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> CoefficientKind {
        self.kind
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

fn check_shared_n(tables: &[DataTable]) -> Result<usize> {
    let n = tables[0].nrows();
    for t in tables {
        if t.nrows() != n {
            return Err(AssocError::DimensionMismatch(format!(
                "tables have {} and {} observations",
                n,
                t.nrows()
            )));
        }
    }
    Ok(n)
}

fn default_labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("table{}", i + 1)).collect()
}

/// Pairwise coefficients between all K tables. Raw tables are centered first
/// for the cross-product based kinds. `alpha` only affects dcov and dcor
/// (defaulting to 1).
pub fn association_matrix(
    tables: &[DataTable],
    kind: CoefficientKind,
    alpha: Option<f64>,
) -> Result<AssociationMatrix> {
    let k = tables.len();
    if k < 2 {
        return Err(AssocError::DimensionMismatch(format!(
            "need at least 2 tables, got {k}"
        )));
    }
    check_shared_n(tables)?;
    let a = alpha.unwrap_or(1.0);
    let prepared: Vec<DataTable> = match kind {
        CoefficientKind::Rv
        | CoefficientKind::RvDebiased
        | CoefficientKind::RvMod
        | CoefficientKind::Rls
        | CoefficientKind::Lg => tables
            .iter()
            .map(|t| t.centered())
            .collect::<Result<_>>()?,
        _ => tables.to_vec(),
    };
    let pair = |i: usize, j: usize| -> Result<f64> {
        let (x, y) = (&prepared[i], &prepared[j]);
        let c = match kind {
            CoefficientKind::Rv => rv(x, y)?,
            CoefficientKind::RvDebiased => rv_debiased(x, y)?,
            CoefficientKind::RvMod => rv_mod(x, y)?,
            CoefficientKind::RvAdj => crate::coefficients::rv_adj(x, y)?,
            CoefficientKind::Rls => rls(x, y)?,
            CoefficientKind::Lg => lg(x, y)?,
            CoefficientKind::Dcov => dcov(x, y, a)?,
            CoefficientKind::Dcor => dcor(x, y, a)?,
            CoefficientKind::DcorStar => dcor_star(x, y)?,
            CoefficientKind::Mantel | CoefficientKind::Grv | CoefficientKind::Hsic => {
                return Err(AssocError::InvalidPlan(format!(
                    "{} operates on square matrices, not table lists",
                    kind.as_str()
                )))
            }
        };
        Ok(c.value)
    };
    let cells: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i..k).map(move |j| (i, j)))
        .collect();
    let computed: Vec<Result<f64>> = cells.par_iter().map(|&(i, j)| pair(i, j)).collect();
    let mut values = DMatrix::zeros(k, k);
    for (&(i, j), res) in cells.iter().zip(computed) {
        let v = res?;
        values[(i, j)] = v;
        values[(j, i)] = v;
    }
    AssociationMatrix::from_parts(values, kind, default_labels(k))
}

/// Embeds the coefficient matrix as inner products between tables; one point
/// per table, negative eigenvalues dropped.
pub fn between_structure(am: &AssociationMatrix, dims: usize) -> Result<Embedding> {
    if dims < 1 {
        return Err(AssocError::InvalidPlan("need dims >= 1".into()));
    }
    Ok(embed_gram(am.values(), dims))
}

/// STATIS weights and compromise.
#[derive(Debug, Clone)]
pub struct StatisModel {
    /// Unit-norm positive weights, one per table.
    pub weights: Vec<f64>,
    /// Weighted sum of unit-Frobenius-normalized cross-product matrices.
    pub compromise: SquareMatrix,
    /// Positive eigenvalues of the compromise, nonincreasing.
    pub compromise_eigenvalues: Vec<f64>,
    /// Observation coordinates from the compromise eigendecomposition.
    pub compromise_coordinates: DMatrix<f64>,
}

fn normalized_cross_products(tables: &[DataTable]) -> Result<Vec<DMatrix<f64>>> {
    tables
        .iter()
        .map(|t| {
            let w = cross_product(&t.centered()?)?;
            let norm = frob_norm_raw(w.values());
            if norm <= 0.0 {
                return Err(AssocError::DegenerateTable(
                    "constant table has a zero cross-product matrix".into(),
                ));
            }
            Ok(w.values() / norm)
        })
        .collect()
}

/// Weights from the leading eigenvector of the RV matrix; the compromise is
/// the corresponding weighted sum of normalized cross-products.
pub fn statis_compromise(tables: &[DataTable]) -> Result<StatisModel> {
    let k = tables.len();
    if k == 0 {
        return Err(AssocError::DimensionMismatch("no tables".into()));
    }
    let n = check_shared_n(tables)?;
    let tilde = normalized_cross_products(tables)?;
    // with unit-Frobenius W_k the RV matrix and the raw inner-product matrix
    // coincide, so the eigenvector reading is unambiguous
    let mut rv_matrix = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = frob_inner_raw(&tilde[i], &tilde[j]);
            rv_matrix[(i, j)] = v;
            rv_matrix[(j, i)] = v;
        }
    }
    let (_, vectors) = sorted_symmetric_eigen(&rv_matrix);
    let mut weights: Vec<f64> = (0..k).map(|i| vectors[(i, 0)]).collect();
    if weights.iter().sum::<f64>() < 0.0 {
        for w in &mut weights {
            *w = -*w;
        }
    }
    let mut compromise = DMatrix::zeros(n, n);
    for (w, t) in weights.iter().zip(&tilde) {
        compromise += t * *w;
    }
    let embedding = embed_gram(&compromise, n);
    Ok(StatisModel {
        weights,
        compromise: SquareMatrix::gram(compromise)?,
        compromise_eigenvalues: embedding.eigenvalues,
        compromise_coordinates: embedding.coordinates,
    })
}

/// Value of the STATIS objective for given weights.
pub fn compromise_objective(tables: &[DataTable], weights: &[f64]) -> Result<f64> {
    if weights.len() != tables.len() {
        return Err(AssocError::DimensionMismatch(format!(
            "{} weights for {} tables",
            weights.len(),
            tables.len()
        )));
    }
    let n = check_shared_n(tables)?;
    let tilde = normalized_cross_products(tables)?;
    let mut star = DMatrix::zeros(n, n);
    for (w, t) in weights.iter().zip(&tilde) {
        star += t * *w;
    }
    let mut obj = 0.0;
    for t in &tilde {
        let inner = frob_inner_raw(&star, t);
        obj += inner * inner;
    }
    Ok(obj)
}

/// Coordinate of each table on each compromise dimension, read as the Lg
/// between that dimension (a single-column table) and the table.
pub fn mfa_group_coordinates(
    tables: &[DataTable],
    model: &StatisModel,
    dims: usize,
) -> Result<DMatrix<f64>> {
    let k = tables.len();
    if k == 0 {
        return Err(AssocError::DimensionMismatch("no tables".into()));
    }
    let n = check_shared_n(tables)?;
    if model.compromise.n() != n {
        return Err(AssocError::DimensionMismatch(format!(
            "compromise over {} observations, tables have {}",
            model.compromise.n(),
            n
        )));
    }
    let m = dims.min(model.compromise_coordinates.ncols());
    let centered: Vec<DataTable> = tables
        .iter()
        .map(|t| t.centered())
        .collect::<Result<_>>()?;
    let mut coords = DMatrix::zeros(k, m);
    for d in 0..m {
        let col = DMatrix::from_fn(n, 1, |i, _| model.compromise_coordinates[(i, d)]);
        let mut dim_table = DataTable::new(col, None, None)?;
        // compromise axes are orthogonal to the constant vector, hence centered
        dim_table.set_preprocessing(Preprocessing::Centered);
        for (kk, t) in centered.iter().enumerate() {
            coords[(kk, d)] = lg(&dim_table, t)?.value;
        }
    }
    Ok(coords)
}
