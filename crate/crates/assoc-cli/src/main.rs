use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use assoc::{
    association_matrix, between_structure, dcor, dcor_star, dcor_star_statistic, dcor_statistic,
    dcov, dcov_statistic, exact_permutation_test, gaussian_kernel, graph_test, grv, grv_statistic,
    hsic_normalized, hsic_statistic, lg, mantel, mantel_statistic, mds, mfa_group_coordinates,
    pairwise_distance, pearson3_test, permutation_test, rls, row_permute_statistic, rv, rv_adj,
    rv_debiased, rv_mod, rv_statistic, statis_compromise, CoefficientKind, CoefficientValue,
    DataTable, GraphKind, PreprocessMode, SquareMatrix, TestPlan, TestResult,
};
use assoc_cli::io::{self, CliError};
use assoc_cli::report;
use assoc_cli::sim::{
    power_csv, power_run, table4_csv, table4_run, PowerConfig, PowerDesign, Table4Config,
    Table4Design, METRICS,
};

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "assoc",
    version,
    about = "Association coefficients and independence tests between data tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one association coefficient between two inputs
    Coeff(CoeffArgs),
    /// Run a significance test for an association statistic
    Test(TestArgs),
    /// Pairwise coefficient matrix across several tables
    Pairwise(PairwiseArgs),
    /// STATIS weights, compromise, and group coordinates
    Statis(StatisArgs),
    /// Classical MDS embedding of a distance matrix or table
    Mds(MdsArgs),
    /// Simulation harness: null/linear/log-square designs and power sweeps
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    #[value(name = "rv")]
    Rv,
    #[value(name = "rv_debiased")]
    RvDebiased,
    #[value(name = "rv_mod")]
    RvMod,
    #[value(name = "rv_adj")]
    RvAdj,
    #[value(name = "rls")]
    Rls,
    #[value(name = "lg")]
    Lg,
    #[value(name = "dcov")]
    Dcov,
    #[value(name = "dcor")]
    Dcor,
    #[value(name = "dcor_star")]
    DcorStar,
    #[value(name = "mantel")]
    Mantel,
    #[value(name = "grv")]
    Grv,
    #[value(name = "hsic")]
    Hsic,
    #[value(name = "graph")]
    Graph,
    #[value(name = "mst")]
    Mst,
}

impl KindArg {
    fn as_str(self) -> &'static str {
        match self {
            KindArg::Rv => "rv",
            KindArg::RvDebiased => "rv_debiased",
            KindArg::RvMod => "rv_mod",
            KindArg::RvAdj => "rv_adj",
            KindArg::Rls => "rls",
            KindArg::Lg => "lg",
            KindArg::Dcov => "dcov",
            KindArg::Dcor => "dcor",
            KindArg::DcorStar => "dcor_star",
            KindArg::Mantel => "mantel",
            KindArg::Grv => "grv",
            KindArg::Hsic => "hsic",
            KindArg::Graph => "graph",
            KindArg::Mst => "mst",
        }
    }

    fn coefficient_kind(self) -> Option<CoefficientKind> {
        match self {
            KindArg::Rv => Some(CoefficientKind::Rv),
            KindArg::RvDebiased => Some(CoefficientKind::RvDebiased),
            KindArg::RvMod => Some(CoefficientKind::RvMod),
            KindArg::RvAdj => Some(CoefficientKind::RvAdj),
            KindArg::Rls => Some(CoefficientKind::Rls),
            KindArg::Lg => Some(CoefficientKind::Lg),
            KindArg::Dcov => Some(CoefficientKind::Dcov),
            KindArg::Dcor => Some(CoefficientKind::Dcor),
            KindArg::DcorStar => Some(CoefficientKind::DcorStar),
            KindArg::Mantel => Some(CoefficientKind::Mantel),
            KindArg::Grv => Some(CoefficientKind::Grv),
            KindArg::Hsic => Some(CoefficientKind::Hsic),
            KindArg::Graph | KindArg::Mst => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PreprocessArg {
    Center,
    Standardize,
}

impl PreprocessArg {
    fn mode(self) -> PreprocessMode {
        match self {
            PreprocessArg::Center => PreprocessMode::Center,
            PreprocessArg::Standardize => PreprocessMode::Standardize,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Permutation,
    Exact,
    Pearson3,
}

#[derive(Args)]
struct CoeffArgs {
    /// First input CSV
    x: PathBuf,
    /// Second input CSV
    y: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Distance exponent for dcov/dcor
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "center")]
    preprocess: PreprocessArg,
    /// Treat inputs as square dissimilarity matrices (mantel, grv)
    #[arg(long)]
    matrix: bool,
    /// First CSV column holds row identifiers
    #[arg(long)]
    row_ids: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct TestArgs {
    x: PathBuf,
    y: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "permutation")]
    method: MethodArg,
    /// Permutation replicates (moment draws for pearson3)
    #[arg(long = "B", default_value_t = 999)]
    b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Neighbors (graph) or tree count (mst)
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, value_enum, default_value = "center")]
    preprocess: PreprocessArg,
    #[arg(long)]
    matrix: bool,
    #[arg(long)]
    row_ids: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct PairwiseArgs {
    /// Input tables (at least two)
    tables: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "rv")]
    kind: KindArg,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// When > 0, attach per-pair permutation p-values with this many draws
    #[arg(long = "B", default_value_t = 0)]
    b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    row_ids: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct StatisArgs {
    /// Input tables
    tables: Vec<PathBuf>,
    /// Compromise dimensions reported for observations and groups
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long)]
    row_ids: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct MdsArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// Input is a square dissimilarity matrix rather than a table
    #[arg(long)]
    matrix: bool,
    #[arg(long)]
    row_ids: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DesignArg {
    #[value(name = "null_gaussian")]
    NullGaussian,
    #[value(name = "linear_block")]
    LinearBlock,
    #[value(name = "log_square")]
    LogSquare,
    #[value(name = "power_linear")]
    PowerLinear,
    #[value(name = "power_nonlinear")]
    PowerNonlinear,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    design: DesignArg,
    /// Sample sizes; one value for table designs, a sweep for power designs
    #[arg(long, value_delimiter = ',', default_values_t = vec![43usize])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 68)]
    p: usize,
    #[arg(long, default_value_t = 356)]
    q: usize,
    #[arg(long, default_value_t = 0.1)]
    cross_cov: f64,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long = "B", default_value_t = 199)]
    b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Full protocol: 1000 draws and B=500 for power sweeps, 1000 replicates
    /// with B=999 for the table designs
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("ASSOC_THREADS") {
        if let Ok(threads) = v.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Coeff(args) => cmd_coeff(args),
        Command::Test(args) => cmd_test(args),
        Command::Pairwise(args) => cmd_pairwise(args),
        Command::Statis(args) => cmd_statis(args),
        Command::Mds(args) => cmd_mds(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn load_matrix_pair(
    x: &Path,
    y: &Path,
    row_ids: bool,
) -> Result<(SquareMatrix, SquareMatrix)> {
    let (mx, _) = io::load_square(x, row_ids)?;
    let (my, _) = io::load_square(y, row_ids)?;
    Ok((SquareMatrix::distance(mx)?, SquareMatrix::distance(my)?))
}

fn distances_from_inputs(
    x: &Path,
    y: &Path,
    matrix: bool,
    row_ids: bool,
) -> Result<(SquareMatrix, SquareMatrix)> {
    if matrix {
        load_matrix_pair(x, y, row_ids)
    } else {
        let tx = io::load_table(x, row_ids)?;
        let ty = io::load_table(y, row_ids)?;
        Ok((pairwise_distance(&tx, 1.0)?, pairwise_distance(&ty, 1.0)?))
    }
}

fn coefficient_report(
    args: &CoeffArgs,
    value: &CoefficientValue,
    extra: Vec<(&str, serde_json::Value)>,
) -> serde_json::Value {
    let mut fields = vec![
        ("kind", json!(value.kind.as_str())),
        ("value", report::float(value.value)),
        (
            "inputs",
            json!([args.x.display().to_string(), args.y.display().to_string()]),
        ),
        (
            "preprocess",
            json!(match args.preprocess {
                PreprocessArg::Center => "center",
                PreprocessArg::Standardize => "standardize",
            }),
        ),
    ];
    if let Some(a) = value.alpha {
        fields.push(("alpha", report::float(a)));
    }
    if let Some(e) = value.null_expectation {
        fields.push(("null_expectation", report::float(e)));
    }
    if let Some(w) = &value.warning {
        fields.push(("warning", json!(w)));
    }
    fields.extend(extra);
    report::report("coeff", fields)
}

fn cmd_coeff(args: CoeffArgs) -> Result<()> {
    let mut extra: Vec<(&str, serde_json::Value)> = Vec::new();
    let value = match args.kind {
        KindArg::Mantel | KindArg::Grv => {
            let (dx, dy) = distances_from_inputs(&args.x, &args.y, args.matrix, args.row_ids)?;
            match args.kind {
                KindArg::Mantel => mantel(&dx, &dy)?,
                _ => grv(&dx, &dy)?,
            }
        }
        KindArg::Hsic => {
            let tx = io::load_table(&args.x, args.row_ids)?;
            let ty = io::load_table(&args.y, args.row_ids)?;
            let (kx, bx) = gaussian_kernel(&tx, None)?;
            let (ky, by) = gaussian_kernel(&ty, None)?;
            extra.push(("bandwidth_x", report::float(bx)));
            extra.push(("bandwidth_y", report::float(by)));
            hsic_normalized(&kx, &ky)?
        }
        KindArg::Graph | KindArg::Mst => {
            return Err(CliError::Invalid(
                "graph statistics have no scalar coefficient; use the test command".into(),
            ))
        }
        KindArg::Dcov | KindArg::Dcor | KindArg::DcorStar => {
            let tx = io::load_table(&args.x, args.row_ids)?;
            let ty = io::load_table(&args.y, args.row_ids)?;
            match args.kind {
                KindArg::Dcov => dcov(&tx, &ty, args.alpha)?,
                KindArg::Dcor => dcor(&tx, &ty, args.alpha)?,
                _ => dcor_star(&tx, &ty)?,
            }
        }
        _ => {
            let tx = io::load_table(&args.x, args.row_ids)?.preprocess(args.preprocess.mode())?;
            let ty = io::load_table(&args.y, args.row_ids)?.preprocess(args.preprocess.mode())?;
            match args.kind {
                KindArg::Rv => rv(&tx, &ty)?,
                KindArg::RvDebiased => rv_debiased(&tx, &ty)?,
                KindArg::RvMod => rv_mod(&tx, &ty)?,
                KindArg::RvAdj => rv_adj(&tx, &ty)?,
                KindArg::Rls => rls(&tx, &ty)?,
                KindArg::Lg => lg(&tx, &ty)?,
                _ => unreachable!(),
            }
        }
    };
    let rep = coefficient_report(&args, &value, extra);
    let content = match args.format {
        FormatArg::Json => report::to_string(&rep),
        FormatArg::Csv => {
            let mut s = String::from("kind,value,alpha,null_expectation\n");
            s.push_str(&format!(
                "{},{},{},{}\n",
                value.kind.as_str(),
                value.value,
                value.alpha.map(|a| a.to_string()).unwrap_or_default(),
                value
                    .null_expectation
                    .map(|e| e.to_string())
                    .unwrap_or_default(),
            ));
            s
        }
    };
    io::emit(args.out.as_deref(), &content)
}

fn run_plan<S: assoc::PermutationStatistic + ?Sized>(
    stat: &S,
    method: MethodArg,
    b: usize,
    seed: u64,
) -> Result<TestResult> {
    Ok(match method {
        MethodArg::Permutation => permutation_test(stat, &TestPlan::permutation(b, seed))?,
        MethodArg::Exact => exact_permutation_test(stat, &TestPlan::exact(seed))?,
        MethodArg::Pearson3 => {
            return Err(CliError::Invalid(
                "pearson3 is available for --kind rv only".into(),
            ))
        }
    })
}

fn cmd_test(args: TestArgs) -> Result<()> {
    let mut extra: Vec<(&str, serde_json::Value)> = Vec::new();
    let result: TestResult = match args.kind {
        KindArg::Rv if args.method == MethodArg::Pearson3 => {
            let tx = io::load_table(&args.x, args.row_ids)?;
            let ty = io::load_table(&args.y, args.row_ids)?;
            pearson3_test(&tx, &ty, &TestPlan::pearson3(args.b, args.seed))?
        }
        KindArg::Rv => {
            let tx = io::load_table(&args.x, args.row_ids)?;
            let ty = io::load_table(&args.y, args.row_ids)?;
            run_plan(&rv_statistic(&tx, &ty)?, args.method, args.b, args.seed)?
        }
        KindArg::Dcov => {
            let tx = io::load_table(&args.x, args.row_ids)?;
            let ty = io::load_table(&args.y, args.row_ids)?;
            extra.push(("alpha", report::float(args.alpha)));
            run_plan(
                &dcov_statistic(&tx, &ty, args.alpha)?,
                args.method,
                args.b,
                args.seed,
            )?
        }
        KindArg::Dcor => {
            let tx = io::load_table(&args.x, args.row_ids)?;
            let ty = io::load_table(&args.y, args.row_ids)?;
            extra.push(("alpha", report::float(args.alpha)));
            run_plan(
                &dcor_statistic(&tx, &ty, args.alpha)?,
                args.method,
                args.b,
                args.seed,
            )?
        }
        KindArg::DcorStar => {
            let tx = io::load_table(&args.x, args.row_ids)?;
            let ty = io::load_table(&args.y, args.row_ids)?;
            run_plan(
                &dcor_star_statistic(&tx, &ty)?,
                args.method,
                args.b,
                args.seed,
            )?
        }
        KindArg::Mantel | KindArg::Grv => {
            let (dx, dy) = distances_from_inputs(&args.x, &args.y, args.matrix, args.row_ids)?;
            match args.kind {
                KindArg::Mantel => run_plan(
                    &mantel_statistic(&dx, &dy)?,
                    args.method,
                    args.b,
                    args.seed,
                )?,
                _ => run_plan(&grv_statistic(&dx, &dy)?, args.method, args.b, args.seed)?,
            }
        }
        KindArg::Hsic => {
            let tx = io::load_table(&args.x, args.row_ids)?;
            let ty = io::load_table(&args.y, args.row_ids)?;
            let (kx, bx) = gaussian_kernel(&tx, None)?;
            let (ky, by) = gaussian_kernel(&ty, None)?;
            extra.push(("bandwidth_x", report::float(bx)));
            extra.push(("bandwidth_y", report::float(by)));
            run_plan(
                &hsic_statistic(&kx, &ky, true)?,
                args.method,
                args.b,
                args.seed,
            )?
        }
        KindArg::Graph | KindArg::Mst => {
            let (dx, dy) = distances_from_inputs(&args.x, &args.y, args.matrix, args.row_ids)?;
            let kind = match args.kind {
                KindArg::Graph => GraphKind::Knn(args.k),
                _ => GraphKind::Mst(args.k.max(1)),
            };
            extra.push(("k", json!(args.k)));
            let plan = match args.method {
                MethodArg::Permutation => TestPlan::permutation(args.b, args.seed),
                MethodArg::Exact => TestPlan::exact(args.seed),
                MethodArg::Pearson3 => {
                    return Err(CliError::Invalid(
                        "pearson3 is available for --kind rv only".into(),
                    ))
                }
            };
            graph_test(&dx, &dy, kind, &plan)?
        }
        KindArg::RvMod | KindArg::RvAdj | KindArg::Rls | KindArg::Lg | KindArg::RvDebiased => {
            let mode = if args.kind == KindArg::RvAdj {
                PreprocessMode::Standardize
            } else {
                args.preprocess.mode()
            };
            let tx = io::load_table(&args.x, args.row_ids)?.preprocess(mode)?;
            let ty = io::load_table(&args.y, args.row_ids)?.preprocess(mode)?;
            let kind = args.kind;
            let stat = row_permute_statistic(&tx, &ty, move |a, b| {
                let v = match kind {
                    KindArg::RvMod => rv_mod(a, b)?,
                    KindArg::RvAdj => rv_adj(a, b)?,
                    KindArg::Rls => rls(a, b)?,
                    KindArg::Lg => lg(a, b)?,
                    _ => rv_debiased(a, b)?,
                };
                Ok(v.value)
            })?;
            run_plan(&stat, args.method, args.b, args.seed)?
        }
    };
    let mut fields = vec![
        ("kind", json!(args.kind.as_str())),
        ("observed", report::float(result.observed)),
        ("p_value", report::float(result.p_value)),
        ("method", json!(result.method.as_str())),
        ("replicates", json!(result.replicates_used)),
        ("seed", json!(result.seed)),
        (
            "inputs",
            json!([args.x.display().to_string(), args.y.display().to_string()]),
        ),
    ];
    if let Some(m) = &result.null_moments {
        fields.push((
            "null_moments",
            json!({
                "mean": m.mean,
                "variance": m.variance,
                "skewness": m.skewness,
            }),
        ));
    }
    fields.extend(extra);
    let rep = report::report("test", fields);
    let content = match args.format {
        FormatArg::Json => report::to_string(&rep),
        FormatArg::Csv => format!(
            "kind,observed,p_value,method,replicates,seed\n{},{},{},{},{},{}\n",
            args.kind.as_str(),
            result.observed,
            result.p_value,
            result.method.as_str(),
            result.replicates_used,
            result.seed,
        ),
    };
    io::emit(args.out.as_deref(), &content)
}

fn cmd_pairwise(args: PairwiseArgs) -> Result<()> {
    if args.tables.len() < 2 {
        return Err(CliError::Invalid("pairwise needs at least two tables".into()));
    }
    let kind = args.kind.coefficient_kind().ok_or_else(|| {
        CliError::Invalid("graph statistics are not pairwise coefficients".into())
    })?;
    let tables: Vec<DataTable> = args
        .tables
        .iter()
        .map(|p| io::load_table(p, args.row_ids))
        .collect::<Result<_>>()?;
    let labels: Vec<String> = args
        .tables
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    let am = association_matrix(&tables, kind, Some(args.alpha))?;
    let mut fields = vec![
        ("kind", json!(kind.as_str())),
        ("labels", json!(labels)),
        ("matrix", report::matrix(am.values())),
    ];
    if args.b > 0 {
        let k = tables.len();
        let mut pvals = nalgebra::DMatrix::from_element(k, k, f64::NAN);
        let plan = TestPlan::permutation(args.b, args.seed);
        for i in 0..k {
            for j in (i + 1)..k {
                let p = match kind {
                    CoefficientKind::Rv => {
                        permutation_test(&rv_statistic(&tables[i], &tables[j])?, &plan)?.p_value
                    }
                    CoefficientKind::Dcov => permutation_test(
                        &dcov_statistic(&tables[i], &tables[j], args.alpha)?,
                        &plan,
                    )?
                    .p_value,
                    CoefficientKind::Dcor => permutation_test(
                        &dcor_statistic(&tables[i], &tables[j], args.alpha)?,
                        &plan,
                    )?
                    .p_value,
                    CoefficientKind::DcorStar => {
                        permutation_test(&dcor_star_statistic(&tables[i], &tables[j])?, &plan)?
                            .p_value
                    }
                    _ => {
                        let ti = tables[i].centered()?;
                        let tj = tables[j].centered()?;
                        let stat = row_permute_statistic(&ti, &tj, |a, b| {
                            Ok(match kind {
                                CoefficientKind::Rls => rls(a, b)?.value,
                                CoefficientKind::Lg => lg(a, b)?.value,
                                CoefficientKind::RvMod => rv_mod(a, b)?.value,
                                _ => rv(a, b)?.value,
                            })
                        })?;
                        permutation_test(&stat, &plan)?.p_value
                    }
                };
                pvals[(i, j)] = p;
                pvals[(j, i)] = p;
            }
        }
        fields.push(("p_values", report::matrix(&pvals)));
        fields.push(("b", json!(args.b)));
        fields.push(("seed", json!(args.seed)));
    }
    let rep = report::report("pairwise", fields);
    let content = match args.format {
        FormatArg::Json => report::to_string(&rep),
        FormatArg::Csv => {
            let mut s = String::from("table_a,table_b,value\n");
            for i in 0..labels.len() {
                for j in 0..labels.len() {
                    s.push_str(&format!(
                        "{},{},{}\n",
                        labels[i],
                        labels[j],
                        am.values()[(i, j)]
                    ));
                }
            }
            s
        }
    };
    io::emit(args.out.as_deref(), &content)
}

fn cmd_statis(args: StatisArgs) -> Result<()> {
    if args.tables.is_empty() {
        return Err(CliError::Invalid("statis needs at least one table".into()));
    }
    let tables: Vec<DataTable> = args
        .tables
        .iter()
        .map(|p| io::load_table(p, args.row_ids))
        .collect::<Result<_>>()?;
    let labels: Vec<String> = args
        .tables
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    let model = statis_compromise(&tables)?;
    let group = mfa_group_coordinates(&tables, &model, args.dims)?;
    let obs_dims = args.dims.min(model.compromise_coordinates.ncols());
    let obs = model
        .compromise_coordinates
        .columns(0, obs_dims)
        .into_owned();
    let mut fields = vec![
        ("labels", json!(labels)),
        ("weights", report::float_vec(&model.weights)),
        (
            "compromise_eigenvalues",
            report::float_vec(&model.compromise_eigenvalues),
        ),
        ("observation_coordinates", report::matrix(&obs)),
        ("group_coordinates", report::matrix(&group)),
    ];
    if tables.len() >= 2 {
        let am = association_matrix(&tables, CoefficientKind::Rv, None)?;
        let emb = between_structure(&am, args.dims)?;
        fields.push(("rv_matrix", report::matrix(am.values())));
        fields.push(("table_coordinates", report::matrix(&emb.coordinates)));
    }
    let rep = report::report("statis", fields);
    let content = match args.format {
        FormatArg::Json => report::to_string(&rep),
        FormatArg::Csv => {
            let mut s = String::from("table,weight\n");
            for (l, w) in labels.iter().zip(&model.weights) {
                s.push_str(&format!("{l},{w}\n"));
            }
            s
        }
    };
    io::emit(args.out.as_deref(), &content)
}

fn cmd_mds(args: MdsArgs) -> Result<()> {
    let (d, labels) = if args.matrix {
        let (m, labels) = io::load_square(&args.input, args.row_ids)?;
        (SquareMatrix::distance(m)?, labels)
    } else {
        let t = io::load_table(&args.input, args.row_ids)?;
        let labels = t.row_labels().to_vec();
        (pairwise_distance(&t, 1.0)?, labels)
    };
    let emb = mds(&d, args.dims)?;
    let content = match args.format {
        FormatArg::Csv => {
            let m = emb.coordinates.ncols();
            let mut s = String::from("id");
            for d in 0..m {
                s.push_str(&format!(",dim{}", d + 1));
            }
            s.push('\n');
            for i in 0..emb.coordinates.nrows() {
                s.push_str(&labels[i]);
                for d in 0..m {
                    s.push_str(&format!(",{}", emb.coordinates[(i, d)]));
                }
                s.push('\n');
            }
            s
        }
        FormatArg::Json => {
            let rep = report::report(
                "mds",
                vec![
                    ("labels", json!(labels)),
                    ("coordinates", report::matrix(&emb.coordinates)),
                    ("eigenvalues", report::float_vec(&emb.eigenvalues)),
                    ("dropped_negative", json!(emb.dropped_negative)),
                ],
            );
            report::to_string(&rep)
        }
    };
    io::emit(args.out.as_deref(), &content)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let content = match args.design {
        DesignArg::NullGaussian | DesignArg::LinearBlock | DesignArg::LogSquare => {
            let design = match args.design {
                DesignArg::NullGaussian => Table4Design::NullGaussian,
                DesignArg::LinearBlock => Table4Design::LinearBlock,
                _ => Table4Design::LogSquare,
            };
            let cfg = Table4Config {
                design,
                n: *args.n.first().unwrap_or(&43),
                p: args.p,
                q: args.q,
                replicates: if args.paper_scale { 1000 } else { args.replicates },
                b: if args.paper_scale { 999 } else { args.b },
                seed: args.seed,
            };
            let result = table4_run(&cfg)?;
            match args.format {
                FormatArg::Csv => format!(
                    "# schema=1 design={} n={} p={} q={} replicates={} b={} seed={} noise_variance=0.02\n{}",
                    cfg.design.as_str(),
                    cfg.n,
                    cfg.p,
                    cfg.q,
                    cfg.replicates,
                    cfg.b,
                    cfg.seed,
                    table4_csv(&cfg, &result)
                ),
                FormatArg::Json => {
                    let rows: Vec<serde_json::Value> = result
                        .rows
                        .iter()
                        .map(|r| report::float_vec(r))
                        .collect();
                    let rep = report::report(
                        "simulate",
                        vec![
                            ("design", json!(cfg.design.as_str())),
                            ("n", json!(cfg.n)),
                            ("p", json!(cfg.p)),
                            ("q", json!(cfg.q)),
                            ("replicates", json!(cfg.replicates)),
                            ("b", json!(cfg.b)),
                            ("seed", json!(cfg.seed)),
                            ("noise_variance", json!(0.02)),
                            ("metrics", json!(METRICS)),
                            ("rows", serde_json::Value::Array(rows)),
                            ("medians", report::float_vec(&result.medians)),
                            (
                                "rejection_rates",
                                report::float_vec(&result.rejection_rates),
                            ),
                        ],
                    );
                    report::to_string(&rep)
                }
            }
        }
        DesignArg::PowerLinear | DesignArg::PowerNonlinear => {
            let design = if args.design == DesignArg::PowerLinear {
                PowerDesign::Linear
            } else {
                PowerDesign::NonLinear
            };
            let mut cfg = if args.paper_scale {
                PowerConfig::paper_scale(design, args.seed)
            } else {
                let mut c = PowerConfig::desk_scale(design, args.seed);
                c.draws = args.replicates;
                c.b = args.b;
                c
            };
            if args.n != vec![43usize] {
                cfg.ns = args.n.clone();
            }
            cfg.cross_cov = args.cross_cov;
            let points = power_run(&cfg)?;
            match args.format {
                FormatArg::Csv => format!(
                    "# schema=1 design={} dims={} cross_cov={} draws={} b={} seed={}\n{}",
                    cfg.design.as_str(),
                    cfg.dim,
                    cfg.cross_cov,
                    cfg.draws,
                    cfg.b,
                    cfg.seed,
                    power_csv(&points)
                ),
                FormatArg::Json => {
                    let pts: Vec<serde_json::Value> = points
                        .iter()
                        .map(|p| {
                            json!({
                                "design": p.design,
                                "n": p.n,
                                "method": p.method,
                                "alpha": p.alpha,
                                "power": p.power,
                            })
                        })
                        .collect();
                    let rep = report::report(
                        "simulate",
                        vec![
                            ("design", json!(cfg.design.as_str())),
                            ("cross_cov", json!(cfg.cross_cov)),
                            ("draws", json!(cfg.draws)),
                            ("b", json!(cfg.b)),
                            ("seed", json!(cfg.seed)),
                            ("points", serde_json::Value::Array(pts)),
                        ],
                    );
                    report::to_string(&rep)
                }
            }
        }
    };
    io::emit(args.out.as_deref(), &content)
}
