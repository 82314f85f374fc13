//! Simulation harness: the null/linear/log-square table designs and the
//! power sweep over alpha-power distance covariance tests.

use assoc::{
    dcor, dcor_star, dcor_star_statistic, dcor_statistic, dcov_statistic, permutation_test, rv,
    rv_debiased, rv_statistic, AssocError, DataTable, PreprocessMode, TestPlan,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::io::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table4Design {
    NullGaussian,
    LinearBlock,
    LogSquare,
}

impl Table4Design {
    pub fn as_str(&self) -> &'static str {
        match self {
            Table4Design::NullGaussian => "null_gaussian",
            Table4Design::LinearBlock => "linear_block",
            Table4Design::LogSquare => "log_square",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table4Config {
    pub design: Table4Design,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub replicates: usize,
    pub b: usize,
    pub seed: u64,
}

/// Metric columns of one replicate, in [`METRICS`] order.
pub const METRICS: [&str; 8] = [
    "rv",
    "rv_debiased",
    "dcor",
    "dcor_star",
    "rv_p",
    "dcov_p",
    "dcor_p",
    "dcor_star_p",
];

#[derive(Debug, Clone)]
pub struct Table4Result {
    /// One row per replicate, columns in [`METRICS`] order.
    pub rows: Vec<[f64; 8]>,
    pub medians: [f64; 8],
    /// Rejection rate at level 0.05 for the p-value metrics, NaN elsewhere.
    pub rejection_rates: [f64; 8],
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Noise variance for the dependent designs ("a gaussian noise with a small
/// variance (0.02)"); taken as a variance, not a standard deviation.
const NOISE_SD: f64 = 0.141421356237309515; // sqrt(0.02)

fn draw_tables(
    design: Table4Design,
    n: usize,
    p: usize,
    q: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(DataTable, DataTable)> {
    let y = gaussian_matrix(rng, n, q);
    let x = match design {
        Table4Design::NullGaussian => gaussian_matrix(rng, n, p),
        Table4Design::LinearBlock => {
            if q < 3 || p < 3 {
                return Err(CliError::Invalid(
                    "linear_block needs p >= 3 and q >= 3".into(),
                ));
            }
            let mut x = gaussian_matrix(rng, n, p);
            for j in 0..3 {
                for i in 0..n {
                    let eps: f64 = rng.sample::<f64, _>(StandardNormal);
                    x[(i, j)] = 2.0 * y[(i, j)] + NOISE_SD * eps;
                }
            }
            x
        }
        Table4Design::LogSquare => {
            if q < p {
                return Err(CliError::Invalid("log_square needs q >= p".into()));
            }
            DMatrix::from_fn(n, p, |i, j| {
                let sq = (y[(i, j)] * y[(i, j)]).max(f64::MIN_POSITIVE);
                let eps: f64 = rng.sample::<f64, _>(StandardNormal);
                sq.ln() + NOISE_SD * eps
            })
        }
    };
    Ok((
        DataTable::new(x, None, None)?,
        DataTable::new(y, None, None)?,
    ))
}

fn plan_seed(seed: u64, replicate: u64) -> u64 {
    seed ^ 0x9E3779B97F4A7C15u64.wrapping_mul(replicate.wrapping_add(1))
}

fn table4_replicate(cfg: &Table4Config, r: u64) -> Result<[f64; 8]> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(r.wrapping_add(1));
    let (x, y) = draw_tables(cfg.design, cfg.n, cfg.p, cfg.q, &mut rng)?;
    let xc = x.preprocess(PreprocessMode::Center)?;
    let yc = y.preprocess(PreprocessMode::Center)?;
    let plan = TestPlan::permutation(cfg.b, plan_seed(cfg.seed, r));
    let rv_v = rv(&xc, &yc)?.value;
    let rv_deb = rv_debiased(&xc, &yc)?.value;
    let dcor_v = dcor(&x, &y, 1.0)?.value;
    let dcor_star_v = dcor_star(&x, &y)?.value;
    let rv_p = permutation_test(&rv_statistic(&x, &y)?, &plan)?.p_value;
    let dcov_p = permutation_test(&dcov_statistic(&x, &y, 1.0)?, &plan)?.p_value;
    let dcor_p = permutation_test(&dcor_statistic(&x, &y, 1.0)?, &plan)?.p_value;
    let dcor_star_p = permutation_test(&dcor_star_statistic(&x, &y)?, &plan)?.p_value;
    Ok([
        rv_v,
        rv_deb,
        dcor_v,
        dcor_star_v,
        rv_p,
        dcov_p,
        dcor_p,
        dcor_star_p,
    ])
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

pub fn table4_run(cfg: &Table4Config) -> Result<Table4Result> {
    if cfg.replicates == 0 {
        return Err(CliError::Invalid("need at least one replicate".into()));
    }
    let rows: Vec<[f64; 8]> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| table4_replicate(cfg, r))
        .collect::<Result<_>>()?;
    let mut medians = [0.0; 8];
    let mut rejection_rates = [f64::NAN; 8];
    for (c, name) in METRICS.iter().enumerate() {
        let mut col: Vec<f64> = rows.iter().map(|row| row[c]).collect();
        medians[c] = median(&mut col);
        if name.ends_with("_p") {
            rejection_rates[c] =
                col.iter().filter(|&&p| p <= 0.05).count() as f64 / col.len() as f64;
        }
    }
    Ok(Table4Result {
        rows,
        medians,
        rejection_rates,
    })
}

pub fn table4_csv(cfg: &Table4Config, result: &Table4Result) -> String {
    let mut out = String::from("design,n,replicate,");
    out.push_str(&METRICS.join(","));
    out.push('\n');
    let prefix = format!("{},{}", cfg.design.as_str(), cfg.n);
    for (r, row) in result.rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&format!("{prefix},{r},{}\n", cells.join(",")));
    }
    let med: Vec<String> = result.medians.iter().map(|v| format!("{v}")).collect();
    out.push_str(&format!("{prefix},median,{}\n", med.join(",")));
    let rej: Vec<String> = result
        .rejection_rates
        .iter()
        .map(|v| if v.is_nan() { String::new() } else { format!("{v}") })
        .collect();
    out.push_str(&format!("{prefix},rejection_rate,{}\n", rej.join(",")));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerDesign {
    /// Joint Gaussian blocks with constant cross covariance.
    Linear,
    /// y = log(x^2) entrywise.
    NonLinear,
}

impl PowerDesign {
    pub fn as_str(&self) -> &'static str {
        match self {
            PowerDesign::Linear => "power_linear",
            PowerDesign::NonLinear => "power_nonlinear",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PowerConfig {
    pub design: PowerDesign,
    pub ns: Vec<usize>,
    /// Variables per block.
    pub dim: usize,
    pub cross_cov: f64,
    /// dcov exponents swept next to the RV baseline.
    pub alphas: Vec<f64>,
    pub draws: usize,
    pub b: usize,
    pub seed: u64,
}

impl PowerConfig {
    pub fn desk_scale(design: PowerDesign, seed: u64) -> Self {
        Self {
            design,
            ns: vec![25, 50, 100],
            dim: 5,
            cross_cov: 0.1,
            alphas: vec![0.1, 0.5, 1.0, 1.5],
            draws: 200,
            b: 199,
            seed,
        }
    }

    pub fn paper_scale(design: PowerDesign, seed: u64) -> Self {
        Self {
            draws: 1000,
            b: 500,
            ..Self::desk_scale(design, seed)
        }
    }
}

#[derive(Debug, Clone)]
pub struct PowerPoint {
    pub design: &'static str,
    pub n: usize,
    /// "rv" or "dcov".
    pub method: &'static str,
    pub alpha: Option<f64>,
    pub power: f64,
}

fn cross_cov_cholesky(dim: usize, c: f64) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&c) {
        return Err(CliError::Invalid(format!(
            "cross covariance {c} outside [0, 1)"
        )));
    }
    let d2 = 2 * dim;
    let cov = DMatrix::from_fn(d2, d2, |i, j| {
        if i == j {
            1.0
        } else if (i < dim) == (j < dim) {
            0.0
        } else {
            c
        }
    });
    match nalgebra::Cholesky::new(cov) {
        Some(chol) => Ok(chol.l()),
        None => Err(CliError::Assoc(AssocError::NotPositiveDefinite)),
    }
}

fn draw_power_tables(
    design: PowerDesign,
    n: usize,
    dim: usize,
    chol: Option<&DMatrix<f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<(DataTable, DataTable)> {
    let (x, y) = match design {
        PowerDesign::Linear => {
            let l = chol.expect("precomputed cholesky for the linear design");
            let z = gaussian_matrix(rng, n, 2 * dim);
            let joint = z * l.transpose();
            (
                joint.columns(0, dim).into_owned(),
                joint.columns(dim, dim).into_owned(),
            )
        }
        PowerDesign::NonLinear => {
            let x = gaussian_matrix(rng, n, dim);
            let y = x.map(|v| (v * v).max(f64::MIN_POSITIVE).ln());
            (x, y)
        }
    };
    Ok((
        DataTable::new(x, None, None)?,
        DataTable::new(y, None, None)?,
    ))
}

/// Rejection rate at level 0.05 for the RV test and each dcov(alpha) test,
/// per sample size.
pub fn power_run(cfg: &PowerConfig) -> Result<Vec<PowerPoint>> {
    let chol = match cfg.design {
        PowerDesign::Linear => Some(cross_cov_cholesky(cfg.dim, cfg.cross_cov)?),
        PowerDesign::NonLinear => None,
    };
    let n_methods = cfg.alphas.len() + 1;
    let mut points = Vec::new();
    for &n in &cfg.ns {
        let rejects: Vec<Vec<bool>> = (0..cfg.draws as u64)
            .into_par_iter()
            .map(|r| -> Result<Vec<bool>> {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(((n as u64) << 32) | r.wrapping_add(1));
                let (x, y) = draw_power_tables(cfg.design, n, cfg.dim, chol.as_ref(), &mut rng)?;
                let plan = TestPlan::permutation(cfg.b, plan_seed(cfg.seed ^ (n as u64), r));
                let mut row = Vec::with_capacity(n_methods);
                let rv_p = permutation_test(&rv_statistic(&x, &y)?, &plan)?.p_value;
                row.push(rv_p <= 0.05);
                for &alpha in &cfg.alphas {
                    let p = permutation_test(&dcov_statistic(&x, &y, alpha)?, &plan)?.p_value;
                    row.push(p <= 0.05);
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        for m in 0..n_methods {
            let power = rejects.iter().filter(|row| row[m]).count() as f64 / cfg.draws as f64;
            points.push(PowerPoint {
                design: cfg.design.as_str(),
                n,
                method: if m == 0 { "rv" } else { "dcov" },
                alpha: if m == 0 { None } else { Some(cfg.alphas[m - 1]) },
                power,
            });
        }
    }
    Ok(points)
}

/// Long-format plot-ready CSV.
pub fn power_csv(points: &[PowerPoint]) -> String {
    let mut out = String::from("design,n,method,alpha,power\n");
    for p in points {
        let alpha = p.alpha.map(|a| format!("{a}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.design, p.n, p.method, alpha, p.power
        ));
    }
    out
}
