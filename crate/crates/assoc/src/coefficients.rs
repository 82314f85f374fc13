//! Scalar association coefficients between two tables or two dissimilarity
//! matrices, plus Procrustes alignment and the closed-form bivariate-Gaussian
//! distance-correlation oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{AssocError, Result};
use crate::geometry::{
    double_center_raw, frob_inner_raw, frob_norm_raw, pairwise_distance, sorted_symmetric_eigen,
    DataTable, MatrixRole, SquareMatrix,
};

/// Which coefficient a value was produced by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientKind {
    Rv,
    RvDebiased,
    RvMod,
    RvAdj,
    Rls,
    Lg,
    Dcov,
    Dcor,
    DcorStar,
    Mantel,
    Grv,
    Hsic,
}

impl CoefficientKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoefficientKind::Rv => "rv",
            CoefficientKind::RvDebiased => "rv_debiased",
            CoefficientKind::RvMod => "rv_mod",
            CoefficientKind::RvAdj => "rv_adj",
            CoefficientKind::Rls => "rls",
            CoefficientKind::Lg => "lg",
            CoefficientKind::Dcov => "dcov",
            CoefficientKind::Dcor => "dcor",
            CoefficientKind::DcorStar => "dcor_star",
            CoefficientKind::Mantel => "mantel",
            CoefficientKind::Grv => "grv",
            CoefficientKind::Hsic => "hsic",
        }
    }
}

/// A computed coefficient with optional metadata.
#[derive(Debug, Clone)]
pub struct CoefficientValue {
    pub kind: CoefficientKind,
    pub value: f64,
    pub null_expectation: Option<f64>,
    pub alpha: Option<f64>,
    pub warning: Option<String>,
}

impl CoefficientValue {
    fn plain(kind: CoefficientKind, value: f64) -> Self {
        Self {
            kind,
            value,
            null_expectation: None,
            alpha: None,
            warning: None,
        }
    }
}

fn check_same_n(nx: usize, ny: usize) -> Result<()> {
    if nx != ny {
        return Err(AssocError::DimensionMismatch(format!(
            "tables have {nx} and {ny} observations"
        )));
    }
    Ok(())
}

fn require_preprocessed(x: &DataTable, y: &DataTable) -> Result<()> {
    if !x.is_preprocessed() || !y.is_preprocessed() {
        return Err(AssocError::NotPreprocessed);
    }
    Ok(())
}

/// Clamps a normalized coefficient that should be nonnegative; tiny negative
/// float noise is forced to zero, anything larger is an internal error.
fn clamp_nonnegative(v: f64, what: &str) -> Result<f64> {
    if v < -1e-12 {
        return Err(AssocError::NumericalInconsistency(format!(
            "{what} = {v} is negative beyond tolerance"
        )));
    }
    Ok(v.max(0.0))
}

// --- RV family -------------------------------------------------------------

/// Cosine between the two cross-product matrices X X' and Y Y', computed in
/// the p x q domain: tr(XX'YY') = ||X'Y||_F^2.
pub fn rv(x: &DataTable, y: &DataTable) -> Result<CoefficientValue> {
    check_same_n(x.nrows(), y.nrows())?;
    require_preprocessed(x, y)?;
    let xtx = x.values().transpose() * x.values();
    let yty = y.values().transpose() * y.values();
    let xty = x.values().transpose() * y.values();
    let num = frob_inner_raw(&xty, &xty);
    let den = frob_norm_raw(&xtx) * frob_norm_raw(&yty);
    if den == 0.0 {
        return Err(AssocError::DegenerateTable(
            "a cross-product matrix has zero norm".into(),
        ));
    }
    let value = clamp_nonnegative(num / den, "rv")?;
    Ok(CoefficientValue::plain(CoefficientKind::Rv, value.min(1.0)))
}

/// The same coefficient computed through double-centered squared Euclidean
/// distance matrices; kept as an independent route for cross-checking.
pub fn rv_distance_form(x: &DataTable, y: &DataTable) -> Result<CoefficientValue> {
    check_same_n(x.nrows(), y.nrows())?;
    require_preprocessed(x, y)?;
    let dx = pairwise_distance(x, 2.0)?;
    let dy = pairwise_distance(y, 2.0)?;
    let a = double_center_raw(dx.values());
    let b = double_center_raw(dy.values());
    let den = frob_norm_raw(&a) * frob_norm_raw(&b);
    if den == 0.0 {
        return Err(AssocError::DegenerateTable(
            "a centered distance matrix has zero norm".into(),
        ));
    }
    let value = clamp_nonnegative(frob_inner_raw(&a, &b) / den, "rv")?;
    Ok(CoefficientValue::plain(CoefficientKind::Rv, value.min(1.0)))
}

/// Expected RV under row permutation: sqrt(beta_x beta_y)/(n-1), where
/// beta = (tr X'X)^2 / tr((X'X)^2) measures the complexity of a table.
pub fn rv_null_expectation(x: &DataTable, y: &DataTable) -> Result<f64> {
    check_same_n(x.nrows(), y.nrows())?;
    require_preprocessed(x, y)?;
    let n = x.nrows() as f64;
    let bx = beta_complexity(x)?;
    let by = beta_complexity(y)?;
    Ok((bx * by).sqrt() / (n - 1.0))
}

fn beta_complexity(t: &DataTable) -> Result<f64> {
    let xtx = t.values().transpose() * t.values();
    let trace = xtx.trace();
    let trace_sq = frob_inner_raw(&xtx, &xtx);
    if trace_sq == 0.0 {
        return Err(AssocError::DegenerateTable(
            "table has zero total variance".into(),
        ));
    }
    Ok(trace * trace / trace_sq)
}

/// RV minus its permutation-null expectation.
pub fn rv_debiased(x: &DataTable, y: &DataTable) -> Result<CoefficientValue> {
    let base = rv(x, y)?;
    let e = rv_null_expectation(x, y)?;
    Ok(CoefficientValue {
        kind: CoefficientKind::RvDebiased,
        value: base.value - e,
        null_expectation: Some(e),
        alpha: None,
        warning: None,
    })
}

/// Modified RV: the cosine after dropping the diagonals of both
/// cross-product matrices. Can be negative.
pub fn rv_mod(x: &DataTable, y: &DataTable) -> Result<CoefficientValue> {
    check_same_n(x.nrows(), y.nrows())?;
    require_preprocessed(x, y)?;
    let a = offdiag_cross_product(x);
    let b = offdiag_cross_product(y);
    let den = frob_norm_raw(&a) * frob_norm_raw(&b);
    if den == 0.0 {
        return Err(AssocError::DegenerateTable(
            "off-diagonal cross-product has zero norm".into(),
        ));
    }
    let value = frob_inner_raw(&a, &b) / den;
    Ok(CoefficientValue::plain(CoefficientKind::RvMod, value))
}

pub(crate) fn offdiag_cross_product(t: &DataTable) -> DMatrix<f64> {
    let mut w = t.values() * t.values().transpose();
    for i in 0..w.nrows() {
        w[(i, i)] = 0.0;
    }
    w
}

/// Adjusted RV: every squared correlation in the sum-of-correlations form of
/// the RV is replaced by its small-sample adjusted version. Standardized
/// tables only.
pub fn rv_adj(x: &DataTable, y: &DataTable) -> Result<CoefficientValue> {
    check_same_n(x.nrows(), y.nrows())?;
    let n = x.nrows();
    if n < 3 {
        return Err(AssocError::TooFewObservations { needed: 3, found: n });
    }
    if x.preprocessing() != crate::geometry::Preprocessing::Standardized
        || y.preprocessing() != crate::geometry::Preprocessing::Standardized
    {
        return Err(AssocError::NotStandardized);
    }
    let adj = |r2: f64| 1.0 - (n as f64 - 1.0) / (n as f64 - 2.0) * (1.0 - r2);
    let nf = n as f64 - 1.0;
    let rxy = x.values().transpose() * y.values() / nf;
    let rxx = x.values().transpose() * x.values() / nf;
    let ryy = y.values().transpose() * y.values() / nf;
    let sum_adj = |m: &DMatrix<f64>| -> f64 {
        let v: Vec<f64> = m.iter().map(|&r| adj(r * r)).collect();
        crate::geometry::pairwise_sum(&v)
    };
    let num = sum_adj(&rxy);
    let den = (sum_adj(&rxx) * sum_adj(&ryy)).sqrt();
    if !den.is_finite() || den == 0.0 {
        return Err(AssocError::DegenerateTable(
            "adjusted self-correlation sum is not positive".into(),
        ));
    }
    Ok(CoefficientValue::plain(CoefficientKind::RvAdj, num / den))
}

// --- Procrustes ------------------------------------------------------------

/// Procrustes (Lingoes-Schoenemann) coefficient: nuclear norm of X'Y over
/// sqrt(tr(X'X) tr(Y'Y)).
pub fn rls(x: &DataTable, y: &DataTable) -> Result<CoefficientValue> {
    check_same_n(x.nrows(), y.nrows())?;
    require_preprocessed(x, y)?;
    let xty = x.values().transpose() * y.values();
    let nuclear: f64 = nalgebra::SVD::new(xty, false, false)
        .singular_values
        .iter()
        .sum();
    let tx = (x.values().transpose() * x.values()).trace();
    let ty = (y.values().transpose() * y.values()).trace();
    if tx <= 0.0 || ty <= 0.0 {
        return Err(AssocError::DegenerateTable(
            "a table has zero total variance".into(),
        ));
    }
    let value = (nuclear / (tx * ty).sqrt()).min(1.0);
    Ok(CoefficientValue::plain(CoefficientKind::Rls, value))
}

/// Result of superimposing configuration `y` onto `x`.
#[derive(Debug, Clone)]
pub struct ProcrustesAlignment {
    /// Orthogonal q x q matrix applied to the centered rows of y.
    pub rotation: DMatrix<f64>,
    /// Dilation factor applied to y.
    pub scale: f64,
    /// Row translation added after rotation and scaling.
    pub translation: DVector<f64>,
    /// y after the optimal translation, rotation and dilation.
    pub aligned: DataTable,
    /// Frobenius norm of x - aligned.
    pub residual: f64,
}

/// Finds the translation, rotation and dilation of `y` minimizing the
/// Frobenius distance to `x`.
pub fn procrustes_align(x: &DataTable, y: &DataTable) -> Result<ProcrustesAlignment> {
    check_same_n(x.nrows(), y.nrows())?;
    if x.ncols() != y.ncols() {
        return Err(AssocError::DimensionMismatch(format!(
            "configurations have {} and {} columns",
            x.ncols(),
            y.ncols()
        )));
    }
    let n = x.nrows();
    let p = x.ncols();
    let x_mean: DVector<f64> = DVector::from_fn(p, |j, _| x.values().column(j).mean());
    let y_mean: DVector<f64> = DVector::from_fn(p, |j, _| y.values().column(j).mean());
    let xc = DMatrix::from_fn(n, p, |i, j| x.values()[(i, j)] - x_mean[j]);
    let yc = DMatrix::from_fn(n, p, |i, j| y.values()[(i, j)] - y_mean[j]);

    let m = yc.transpose() * &xc;
    let svd = nalgebra::SVD::new(m, true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let rotation = u * vt;
    let sigma_sum: f64 = svd.singular_values.iter().sum();
    let ty = frob_inner_raw(&yc, &yc);
    if ty == 0.0 {
        return Err(AssocError::DegenerateTable(
            "y configuration is constant".into(),
        ));
    }
    let scale = sigma_sum / ty;
    let rotated = scale * (yc * &rotation);
    let aligned_values = DMatrix::from_fn(n, p, |i, j| rotated[(i, j)] + x_mean[j]);
    let residual = frob_norm_raw(&(x.values() - &aligned_values));
    let aligned = DataTable::new(
        aligned_values,
        Some(y.row_labels().to_vec()),
        Some(y.col_labels().to_vec()),
    )?;
    Ok(ProcrustesAlignment {
        rotation,
        scale,
        translation: x_mean,
        aligned,
        residual,
    })
}

// --- Lg --------------------------------------------------------------------

/// Lg coefficient: inner product of the cross-product matrices after scaling
/// each by its first covariance eigenvalue. Computed as
/// tr(S_XY S_YX)/(lambda_1 gamma_1) with S the sample covariance matrices.
pub fn lg(x: &DataTable, y: &DataTable) -> Result<CoefficientValue> {
    check_same_n(x.nrows(), y.nrows())?;
    require_preprocessed(x, y)?;
    let l1 = first_cov_eigenvalue(x)?;
    let g1 = first_cov_eigenvalue(y)?;
    let nf = x.nrows() as f64 - 1.0;
    let sxy = x.values().transpose() * y.values() / nf;
    let num = frob_inner_raw(&sxy, &sxy);
    let value = clamp_nonnegative(num / (l1 * g1), "lg")?;
    Ok(CoefficientValue::plain(CoefficientKind::Lg, value))
}

fn first_cov_eigenvalue(t: &DataTable) -> Result<f64> {
    let nf = t.nrows() as f64 - 1.0;
    let s = t.values().transpose() * t.values() / nf;
    let (values, _) = sorted_symmetric_eigen(&s);
    let l1 = values.first().copied().unwrap_or(0.0);
    if l1 <= 0.0 {
        return Err(AssocError::DegenerateTable(
            "first covariance eigenvalue is not positive".into(),
        ));
    }
    Ok(l1)
}

// --- distance covariance family --------------------------------------------

/// Double-centered alpha-power Euclidean distance matrix of a table.
pub(crate) fn centered_alpha_dist(t: &DataTable, alpha: f64) -> Result<DMatrix<f64>> {
    let d = pairwise_distance(t, alpha)?;
    Ok(double_center_raw(d.values()))
}

/// Empirical squared distance covariance: the mean elementwise product of the
/// two double-centered alpha-power distance matrices.
pub fn dcov(x: &DataTable, y: &DataTable, alpha: f64) -> Result<CoefficientValue> {
    check_same_n(x.nrows(), y.nrows())?;
    let n = x.nrows();
    if n == 2 {
        // two observations carry no dependence information; defined as 0
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(AssocError::InvalidAlpha(alpha));
        }
        return Ok(CoefficientValue {
            kind: CoefficientKind::Dcov,
            value: 0.0,
            null_expectation: None,
            alpha: Some(alpha),
            warning: Some("dcov is defined as 0 for n = 2".to_string()),
        });
    }
    let a = centered_alpha_dist(x, alpha)?;
    let b = centered_alpha_dist(y, alpha)?;
    let value = frob_inner_raw(&a, &b) / (n * n) as f64;
    Ok(CoefficientValue {
        kind: CoefficientKind::Dcov,
        value,
        null_expectation: None,
        alpha: Some(alpha),
        warning: None,
    })
}

/// Distance correlation: square root of the cosine between double-centered
/// alpha-power distance matrices. In [0, 1]; its square with alpha = 2
/// coincides with the RV coefficient.
pub fn dcor(x: &DataTable, y: &DataTable, alpha: f64) -> Result<CoefficientValue> {
    check_same_n(x.nrows(), y.nrows())?;
    let n = x.nrows();
    if n < 3 {
        return Err(AssocError::TooFewObservations { needed: 3, found: n });
    }
    let a = centered_alpha_dist(x, alpha)?;
    let b = centered_alpha_dist(y, alpha)?;
    let den = frob_norm_raw(&a) * frob_norm_raw(&b);
    if den == 0.0 {
        return Err(AssocError::DegenerateTable(
            "a centered distance matrix has zero norm".into(),
        ));
    }
    let r2 = clamp_nonnegative(frob_inner_raw(&a, &b) / den, "dcor^2")?;
    Ok(CoefficientValue {
        kind: CoefficientKind::Dcor,
        value: r2.min(1.0).sqrt(),
        null_expectation: None,
        alpha: Some(alpha),
        warning: None,
    })
}

/// U-centering of a distance matrix: the modified double centering whose
/// inner products are unbiased under independence. Diagonal forced to zero.
pub(crate) fn u_centered_dist(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let nf = n as f64;
    let mut row_sums = vec![0.0; n];
    let mut buf = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            buf[j] = d[(i, j)];
        }
        row_sums[i] = crate::geometry::pairwise_sum(&buf);
    }
    let total = crate::geometry::pairwise_sum(&row_sums);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            d[(i, j)] - row_sums[i] / (nf - 2.0) - row_sums[j] / (nf - 2.0)
                + total / ((nf - 1.0) * (nf - 2.0))
        }
    })
}

pub(crate) fn u_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows() as f64;
    frob_inner_raw(a, b) / (n * (n - 3.0))
}

/// Bias-corrected distance correlation built on U-centered Euclidean
/// distance matrices. May be negative; near 0 under independence even in
/// high-dimensional settings.
pub fn dcor_star(x: &DataTable, y: &DataTable) -> Result<CoefficientValue> {
    check_same_n(x.nrows(), y.nrows())?;
    let n = x.nrows();
    if n < 4 {
        return Err(AssocError::TooFewObservations { needed: 4, found: n });
    }
    let a = u_centered_dist(pairwise_distance(x, 1.0)?.values());
    let b = u_centered_dist(pairwise_distance(y, 1.0)?.values());
    let vxy = u_inner(&a, &b);
    let vxx = u_inner(&a, &a);
    let vyy = u_inner(&b, &b);
    let value = if vxx > 0.0 && vyy > 0.0 {
        vxy / (vxx * vyy).sqrt()
    } else {
        0.0
    };
    Ok(CoefficientValue::plain(CoefficientKind::DcorStar, value))
}

/// Closed-form population squared distance correlation for a bivariate
/// normal pair with correlation r.
pub fn dcor_gaussian(r: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&r) || !r.is_finite() {
        return Err(AssocError::InvalidCorrelation(r));
    }
    let num =
        r * r.asin() + (1.0 - r * r).sqrt() - r * (r / 2.0).asin() - (4.0 - r * r).sqrt() + 1.0;
    let den = 1.0 + std::f64::consts::PI / 3.0 - 3.0_f64.sqrt();
    Ok(num / den)
}

// --- dissimilarity-based coefficients ---------------------------------------

pub(crate) fn upper_triangle(d: &DMatrix<f64>) -> Vec<f64> {
    let n = d.nrows();
    let mut v = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            v.push(d[(i, j)]);
        }
    }
    v
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = crate::geometry::pairwise_sum(a) / n;
    let mb = crate::geometry::pairwise_sum(b) / n;
    let prods: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x - ma) * (y - mb))
        .collect();
    let sa: Vec<f64> = a.iter().map(|&x| (x - ma) * (x - ma)).collect();
    let sb: Vec<f64> = b.iter().map(|&y| (y - mb) * (y - mb)).collect();
    let den = (crate::geometry::pairwise_sum(&sa) * crate::geometry::pairwise_sum(&sb)).sqrt();
    if den == 0.0 {
        return Err(AssocError::DegenerateTable(
            "constant upper triangle in a dissimilarity matrix".into(),
        ));
    }
    Ok(crate::geometry::pairwise_sum(&prods) / den)
}

/// Mantel coefficient: Pearson correlation of the strictly-upper-triangle
/// entries of two dissimilarity matrices. No double centering.
pub fn mantel(dx: &SquareMatrix, dy: &SquareMatrix) -> Result<CoefficientValue> {
    check_same_n(dx.n(), dy.n())?;
    if dx.n() < 3 {
        return Err(AssocError::TooFewObservations {
            needed: 3,
            found: dx.n(),
        });
    }
    let r = pearson(&upper_triangle(dx.values()), &upper_triangle(dy.values()))?;
    Ok(CoefficientValue::plain(
        CoefficientKind::Mantel,
        r.clamp(-1.0, 1.0),
    ))
}

/// Generalized RV: cosine between the double-centered squared dissimilarity
/// matrices. Arbitrary dissimilarities are admitted; with Euclidean inputs
/// this reduces exactly to the RV coefficient.
pub fn grv(dx: &SquareMatrix, dy: &SquareMatrix) -> Result<CoefficientValue> {
    check_same_n(dx.n(), dy.n())?;
    let a = double_center_raw(&dx.values().map(|v| v * v));
    let b = double_center_raw(&dy.values().map(|v| v * v));
    let den = frob_norm_raw(&a) * frob_norm_raw(&b);
    if den == 0.0 {
        return Err(AssocError::DegenerateTable(
            "a centered squared dissimilarity matrix has zero norm".into(),
        ));
    }
    let value = (frob_inner_raw(&a, &b) / den).clamp(-1.0, 1.0);
    Ok(CoefficientValue::plain(CoefficientKind::Grv, value))
}

// --- kernels / HSIC ---------------------------------------------------------

fn check_psd(k: &SquareMatrix) -> Result<()> {
    if k.role() != MatrixRole::Gram && k.role() != MatrixRole::Centered {
        return Err(AssocError::DegenerateTable(
            "HSIC expects Gram (kernel) matrices".into(),
        ));
    }
    let (values, _) = sorted_symmetric_eigen(k.values());
    let max_abs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-8 * max_abs.max(1.0) {
        return Err(AssocError::NotPsd(min));
    }
    Ok(())
}

/// tr(K_X K_Y) for two PSD kernel matrices.
pub fn hsic(kx: &SquareMatrix, ky: &SquareMatrix) -> Result<CoefficientValue> {
    check_same_n(kx.n(), ky.n())?;
    check_psd(kx)?;
    check_psd(ky)?;
    let value = frob_inner_raw(kx.values(), ky.values());
    Ok(CoefficientValue::plain(CoefficientKind::Hsic, value))
}

/// Normalized HSIC: tr(K_X K_Y)/(||K_X|| ||K_Y||), the "RV for kernels".
pub fn hsic_normalized(kx: &SquareMatrix, ky: &SquareMatrix) -> Result<CoefficientValue> {
    check_same_n(kx.n(), ky.n())?;
    check_psd(kx)?;
    check_psd(ky)?;
    let den = frob_norm_raw(kx.values()) * frob_norm_raw(ky.values());
    if den == 0.0 {
        return Err(AssocError::DegenerateTable("zero kernel matrix".into()));
    }
    let value = clamp_nonnegative(frob_inner_raw(kx.values(), ky.values()) / den, "hsic")?;
    Ok(CoefficientValue::plain(CoefficientKind::Hsic, value.min(1.0)))
}

/// Linear kernel: cross-product of the column-centered table.
pub fn linear_kernel(t: &DataTable) -> Result<SquareMatrix> {
    let c = t.centered()?;
    SquareMatrix::gram(c.values() * c.values().transpose())
}

/// Gaussian kernel exp(-d_ij^2/(2 sigma^2)). When no bandwidth is given the
/// median of the nonzero pairwise distances is used. Returns the kernel and
/// the bandwidth actually applied.
pub fn gaussian_kernel(t: &DataTable, bandwidth: Option<f64>) -> Result<(SquareMatrix, f64)> {
    let d = pairwise_distance(t, 1.0)?;
    let sigma = match bandwidth {
        Some(s) if s > 0.0 => s,
        Some(s) => return Err(AssocError::InvalidPlan(format!("bandwidth {s} <= 0"))),
        None => {
            let mut nz: Vec<f64> = upper_triangle(d.values())
                .into_iter()
                .filter(|&v| v > 0.0)
                .collect();
            if nz.is_empty() {
                return Err(AssocError::DegenerateTable(
                    "all pairwise distances are zero".into(),
                ));
            }
            nz.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let m = nz.len();
            if m % 2 == 1 {
                nz[m / 2]
            } else {
                0.5 * (nz[m / 2 - 1] + nz[m / 2])
            }
        }
    };
    let k = d.values().map(|v| (-v * v / (2.0 * sigma * sigma)).exp());
    Ok((SquareMatrix::gram(k)?, sigma))
}
