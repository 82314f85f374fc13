//! Significance testing for any coefficient: Monte Carlo permutation tests,
//! exact enumeration for tiny n, and the moment-matched Pearson type III
//! approximation of the permutation null.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma, Normal};

use crate::coefficients::{
    centered_alpha_dist, rv_null_expectation, u_centered_dist, u_inner, upper_triangle,
};
use crate::error::{AssocError, Result};
use crate::geometry::{
    double_center_raw, frob_norm_raw, pairwise_sum, DataTable, SquareMatrix,
};

/// Maximum n for exhaustive permutation enumeration (8! = 40320).
pub const EXACT_MAX_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    PermutationMc,
    PermutationExact,
    Pearson3,
}

impl TestMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestMethod::PermutationMc => "permutation_mc",
            TestMethod::PermutationExact => "permutation_exact",
            TestMethod::Pearson3 => "pearson3",
        }
    }
}

/// How a test is to be carried out.
#[derive(Debug, Clone, Copy)]
pub struct TestPlan {
    pub method: TestMethod,
    /// Monte Carlo replicates (or moment-estimation draws for Pearson III).
    pub replicates: usize,
    pub seed: u64,
}

impl TestPlan {
    pub fn permutation(replicates: usize, seed: u64) -> Self {
        Self {
            method: TestMethod::PermutationMc,
            replicates,
            seed,
        }
    }

    pub fn exact(seed: u64) -> Self {
        Self {
            method: TestMethod::PermutationExact,
            replicates: 0,
            seed,
        }
    }

    pub fn pearson3(moment_draws: usize, seed: u64) -> Self {
        Self {
            method: TestMethod::Pearson3,
            replicates: moment_draws,
            seed,
        }
    }
}

/// First three moments of the fitted permutation null.
#[derive(Debug, Clone, Copy)]
pub struct NullMoments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

/// Outcome of a significance test.
#[derive(Debug, Clone)]
pub struct TestResult {
    pub observed: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub replicates_used: usize,
    pub null_moments: Option<NullMoments>,
    pub seed: u64,
}

/// A statistic that can be re-evaluated under a row permutation of the
/// second argument. Implementations must be pure.
pub trait PermutationStatistic: Sync {
    fn n(&self) -> usize;
    fn observed(&self) -> f64;
    /// Value of the statistic after relabeling the second input by `perm`:
    /// slot i of the second input receives its observation perm[i].
    fn permuted(&self, perm: &[usize]) -> f64;
}

/// Statistic of the form f(<A, P B P'>) for fixed symmetric matrices A, B;
/// covers RV, dCov, dCor, GRV and HSIC, whose denominators are
/// permutation-invariant.
pub struct BilinearStatistic {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    /// Divisor applied to the inner product (norm product or n^2).
    divisor: f64,
    /// Take the square root of the (clamped) ratio.
    sqrt: bool,
    observed: f64,
}

impl BilinearStatistic {
    fn new(a: DMatrix<f64>, b: DMatrix<f64>, divisor: f64, sqrt: bool) -> Self {
        let mut s = Self {
            a,
            b,
            divisor,
            sqrt,
            observed: 0.0,
        };
        let id: Vec<usize> = (0..s.a.nrows()).collect();
        s.observed = s.permuted(&id);
        s
    }
}

impl PermutationStatistic for BilinearStatistic {
    fn n(&self) -> usize {
        self.a.nrows()
    }

    fn observed(&self) -> f64 {
        self.observed
    }

    fn permuted(&self, perm: &[usize]) -> f64 {
        let n = self.a.nrows();
        let mut row_buf = vec![0.0; n];
        let mut rows = vec![0.0; n];
        for i in 0..n {
            let pi = perm[i];
            for j in 0..n {
                row_buf[j] = self.a[(i, j)] * self.b[(pi, perm[j])];
            }
            rows[i] = pairwise_sum(&row_buf);
        }
        let v = pairwise_sum(&rows) / self.divisor;
        if self.sqrt {
            v.max(0.0).min(1.0).sqrt()
        } else {
            v
        }
    }
}

/// RV statistic prepared for permutation: double-centered squared distance
/// matrices with a permutation-invariant denominator.
pub fn rv_statistic(x: &DataTable, y: &DataTable) -> Result<BilinearStatistic> {
    let a = centered_alpha_dist(x, 2.0)?;
    let b = centered_alpha_dist(y, 2.0)?;
    let div = frob_norm_raw(&a) * frob_norm_raw(&b);
    if div == 0.0 {
        return Err(AssocError::DegenerateTable(
            "a centered distance matrix has zero norm".into(),
        ));
    }
    Ok(BilinearStatistic::new(a, b, div, false))
}

pub fn dcov_statistic(x: &DataTable, y: &DataTable, alpha: f64) -> Result<BilinearStatistic> {
    let n = x.nrows();
    let a = centered_alpha_dist(x, alpha)?;
    let b = centered_alpha_dist(y, alpha)?;
    Ok(BilinearStatistic::new(a, b, (n * n) as f64, false))
}

pub fn dcor_statistic(x: &DataTable, y: &DataTable, alpha: f64) -> Result<BilinearStatistic> {
    let a = centered_alpha_dist(x, alpha)?;
    let b = centered_alpha_dist(y, alpha)?;
    let div = frob_norm_raw(&a) * frob_norm_raw(&b);
    if div == 0.0 {
        return Err(AssocError::DegenerateTable(
            "a centered distance matrix has zero norm".into(),
        ));
    }
    Ok(BilinearStatistic::new(a, b, div, true))
}

pub fn dcor_star_statistic(x: &DataTable, y: &DataTable) -> Result<BilinearStatistic> {
    let n = x.nrows();
    if n < 4 {
        return Err(AssocError::TooFewObservations { needed: 4, found: n });
    }
    let a = u_centered_dist(crate::geometry::pairwise_distance(x, 1.0)?.values());
    let b = u_centered_dist(crate::geometry::pairwise_distance(y, 1.0)?.values());
    let vxx = u_inner(&a, &a);
    let vyy = u_inner(&b, &b);
    if vxx <= 0.0 || vyy <= 0.0 {
        return Err(AssocError::DegenerateTable(
            "zero U-centered distance variance".into(),
        ));
    }
    // divisor restores Omega_xy / sqrt(Omega_xx Omega_yy)
    let nf = n as f64;
    let div = nf * (nf - 3.0) * (vxx * vyy).sqrt();
    Ok(BilinearStatistic::new(a, b, div, false))
}

pub fn grv_statistic(dx: &SquareMatrix, dy: &SquareMatrix) -> Result<BilinearStatistic> {
    let a = double_center_raw(&dx.values().map(|v| v * v));
    let b = double_center_raw(&dy.values().map(|v| v * v));
    let div = frob_norm_raw(&a) * frob_norm_raw(&b);
    if div == 0.0 {
        return Err(AssocError::DegenerateTable(
            "a centered squared dissimilarity matrix has zero norm".into(),
        ));
    }
    Ok(BilinearStatistic::new(a, b, div, false))
}

pub fn hsic_statistic(
    kx: &SquareMatrix,
    ky: &SquareMatrix,
    normalized: bool,
) -> Result<BilinearStatistic> {
    let a = kx.values().clone();
    let b = ky.values().clone();
    let div = if normalized {
        let d = frob_norm_raw(&a) * frob_norm_raw(&b);
        if d == 0.0 {
            return Err(AssocError::DegenerateTable("zero kernel matrix".into()));
        }
        d
    } else {
        1.0
    };
    Ok(BilinearStatistic::new(a, b, div, false))
}

/// Mantel statistic: correlation of upper triangles, with the second
/// dissimilarity matrix relabeled under the permutation.
pub struct MantelStatistic {
    dx_upper: Vec<f64>,
    dy: DMatrix<f64>,
    observed: f64,
}

pub fn mantel_statistic(dx: &SquareMatrix, dy: &SquareMatrix) -> Result<MantelStatistic> {
    if dx.n() != dy.n() {
        return Err(AssocError::DimensionMismatch(format!(
            "{} vs {} observations",
            dx.n(),
            dy.n()
        )));
    }
    let mut s = MantelStatistic {
        dx_upper: upper_triangle(dx.values()),
        dy: dy.values().clone(),
        observed: 0.0,
    };
    let id: Vec<usize> = (0..dy.n()).collect();
    s.observed = s.permuted(&id);
    if !s.observed.is_finite() {
        return Err(AssocError::DegenerateTable(
            "constant upper triangle in a dissimilarity matrix".into(),
        ));
    }
    Ok(s)
}

impl PermutationStatistic for MantelStatistic {
    fn n(&self) -> usize {
        self.dy.nrows()
    }

    fn observed(&self) -> f64 {
        self.observed
    }

    fn permuted(&self, perm: &[usize]) -> f64 {
        let n = self.dy.nrows();
        let mut dy_upper = Vec::with_capacity(self.dx_upper.len());
        for i in 0..n {
            for j in (i + 1)..n {
                dy_upper.push(self.dy[(perm[i], perm[j])]);
            }
        }
        match crate::coefficients::pearson(&self.dx_upper, &dy_upper) {
            Ok(r) => r,
            Err(_) => f64::NAN,
        }
    }
}

/// Fallback statistic that physically permutes the rows of the second table;
/// used for coefficients without a precomputable bilinear form (RLS, Lg,
/// adjusted RV).
pub struct RowPermuteStatistic<'a> {
    x: &'a DataTable,
    y: &'a DataTable,
    eval: Box<dyn Fn(&DataTable, &DataTable) -> Result<f64> + Sync + 'a>,
    observed: f64,
}

pub fn row_permute_statistic<'a>(
    x: &'a DataTable,
    y: &'a DataTable,
    eval: impl Fn(&DataTable, &DataTable) -> Result<f64> + Sync + 'a,
) -> Result<RowPermuteStatistic<'a>> {
    let observed = eval(x, y)?;
    Ok(RowPermuteStatistic {
        x,
        y,
        eval: Box::new(eval),
        observed,
    })
}

impl PermutationStatistic for RowPermuteStatistic<'_> {
    fn n(&self) -> usize {
        self.y.nrows()
    }

    fn observed(&self) -> f64 {
        self.observed
    }

    fn permuted(&self, perm: &[usize]) -> f64 {
        let vals = self.y.values();
        let permuted = DMatrix::from_fn(vals.nrows(), vals.ncols(), |i, j| vals[(perm[i], j)]);
        let mut table = match DataTable::new(permuted, None, None) {
            Ok(t) => t,
            Err(_) => return f64::NAN,
        };
        table.set_preprocessing(self.y.preprocessing());
        match (self.eval)(self.x, &table) {
            Ok(v) => v,
            Err(_) => f64::NAN,
        }
    }
}

fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // counter-based stream per replicate: parallel and serial runs agree
    rng.set_stream(replicate.wrapping_add(1));
    rng
}

/// Draws of the statistic under B seeded random permutations, indexed by
/// replicate so the result is independent of execution order.
pub fn permutation_draws<S: PermutationStatistic + ?Sized>(
    stat: &S,
    replicates: usize,
    seed: u64,
) -> Vec<f64> {
    let n = stat.n();
    (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(seed, b as u64);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            stat.permuted(&perm)
        })
        .collect()
}

/// Monte Carlo permutation test with the add-one p-value convention
/// (1 + #{draws >= observed})/(B + 1), so p is never zero.
pub fn permutation_test<S: PermutationStatistic + ?Sized>(
    stat: &S,
    plan: &TestPlan,
) -> Result<TestResult> {
    if plan.method != TestMethod::PermutationMc {
        return Err(AssocError::InvalidPlan(
            "permutation_test requires method = permutation_mc".into(),
        ));
    }
    if plan.replicates < 99 {
        return Err(AssocError::InvalidPlan(format!(
            "permutation_mc needs at least 99 replicates, got {}",
            plan.replicates
        )));
    }
    let observed = stat.observed();
    let draws = permutation_draws(stat, plan.replicates, plan.seed);
    let exceed = draws.iter().filter(|&&t| t >= observed).count();
    Ok(TestResult {
        observed,
        p_value: (exceed as f64 + 1.0) / (plan.replicates as f64 + 1.0),
        method: TestMethod::PermutationMc,
        replicates_used: plan.replicates,
        null_moments: None,
        seed: plan.seed,
    })
}

fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    // Heap's algorithm
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Exhaustive permutation test over all n! relabelings; n <= 8.
pub fn exact_permutation_test<S: PermutationStatistic + ?Sized>(
    stat: &S,
    plan: &TestPlan,
) -> Result<TestResult> {
    if plan.method != TestMethod::PermutationExact {
        return Err(AssocError::InvalidPlan(
            "exact_permutation_test requires method = permutation_exact".into(),
        ));
    }
    let n = stat.n();
    if n > EXACT_MAX_N {
        return Err(AssocError::TooManyObservations {
            found: n,
            max: EXACT_MAX_N,
        });
    }
    let observed = stat.observed();
    let mut total = 0usize;
    let mut exceed = 0usize;
    for_each_permutation(n, |perm| {
        total += 1;
        if stat.permuted(perm) >= observed {
            exceed += 1;
        }
    });
    Ok(TestResult {
        observed,
        p_value: exceed as f64 / total as f64,
        method: TestMethod::PermutationExact,
        replicates_used: total,
        null_moments: None,
        seed: plan.seed,
    })
}

/// Upper-tail probability of a Pearson type III (shifted, scaled gamma)
/// distribution with the given mean, variance and skewness.
pub(crate) fn pearson3_upper_tail(obs: f64, mean: f64, variance: f64, skewness: f64) -> f64 {
    let sd = variance.sqrt();
    if sd == 0.0 {
        return if obs > mean { 0.0 } else { 1.0 };
    }
    let p = if skewness.abs() < 1e-8 {
        let normal = Normal::new(mean, sd).expect("valid normal");
        1.0 - normal.cdf(obs)
    } else {
        let shape = 4.0 / (skewness * skewness);
        let scale = sd * skewness.abs() / 2.0;
        let gamma = Gamma::new(shape, 1.0 / scale).expect("valid gamma");
        if skewness > 0.0 {
            let loc = mean - 2.0 * sd / skewness;
            if obs <= loc {
                1.0
            } else {
                1.0 - gamma.cdf(obs - loc)
            }
        } else {
            // mirrored: support (-inf, loc]
            let loc = mean + 2.0 * sd / skewness.abs();
            if obs >= loc {
                0.0
            } else {
                gamma.cdf(loc - obs)
            }
        }
    };
    p.clamp(1e-300, 1.0)
}

/// Pearson type III approximation of the RV permutation null: the closed-form
/// null mean combined with variance and skewness estimated from
/// `plan.replicates` permutation draws.
pub fn pearson3_test(x: &DataTable, y: &DataTable, plan: &TestPlan) -> Result<TestResult> {
    if plan.method != TestMethod::Pearson3 {
        return Err(AssocError::InvalidPlan(
            "pearson3_test requires method = pearson3".into(),
        ));
    }
    if plan.replicates < 99 {
        return Err(AssocError::InvalidPlan(format!(
            "pearson3 needs at least 99 moment draws, got {}",
            plan.replicates
        )));
    }
    let xc = x.centered()?;
    let yc = y.centered()?;
    let mean = rv_null_expectation(&xc, &yc)?;
    let stat = rv_statistic(&xc, &yc)?;
    let observed = stat.observed();
    let draws = permutation_draws(&stat, plan.replicates, plan.seed);
    let m = draws.len() as f64;
    let emp_mean = pairwise_sum(&draws) / m;
    let dev2: Vec<f64> = draws.iter().map(|d| (d - emp_mean) * (d - emp_mean)).collect();
    let dev3: Vec<f64> = draws
        .iter()
        .map(|d| (d - emp_mean) * (d - emp_mean) * (d - emp_mean))
        .collect();
    let variance = pairwise_sum(&dev2) / m;
    let skewness = if variance > 0.0 {
        (pairwise_sum(&dev3) / m) / variance.powf(1.5)
    } else {
        0.0
    };
    let p_value = pearson3_upper_tail(observed, mean, variance, skewness);
    Ok(TestResult {
        observed,
        p_value,
        method: TestMethod::Pearson3,
        replicates_used: plan.replicates,
        null_moments: Some(NullMoments {
            mean,
            variance,
            skewness,
        }),
        seed: plan.seed,
    })
}
