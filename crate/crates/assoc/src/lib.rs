//! Association coefficients between data tables (RV and variants, distance
//! covariance and correlation, Procrustes, Lg, Mantel, GRV, HSIC), graph
//! based statistics, permutation and moment based inference, and K-table
//! follow-up analyses (STATIS compromise, between-structure embedding, MDS).

pub mod coefficients;
pub mod error;
pub mod geometry;
pub mod graphassoc;
pub mod inference;
pub mod multitable;

pub use coefficients::{
    dcor, dcor_gaussian, dcor_star, dcov, gaussian_kernel, grv, hsic, hsic_normalized,
    linear_kernel, lg, mantel, procrustes_align, rls, rv, rv_adj, rv_debiased, rv_mod,
    rv_null_expectation, CoefficientKind, CoefficientValue, ProcrustesAlignment,
};
pub use error::{AssocError, Result};
pub use geometry::{
    cross_product, double_center, frobenius_inner, gram_from_distance, mds, pairwise_distance,
    DataTable, Embedding, MatrixRole, PreprocessMode, Preprocessing, SquareMatrix,
};
pub use graphassoc::{
    common_edges, graph_statistic, graph_test, k_mst, knn_graph, mst, GraphKind, NeighborGraph,
};
pub use inference::{
    dcor_star_statistic, dcor_statistic, dcov_statistic, exact_permutation_test, grv_statistic,
    hsic_statistic, mantel_statistic, pearson3_test, permutation_test, row_permute_statistic,
    rv_statistic, NullMoments, PermutationStatistic, TestMethod, TestPlan, TestResult,
};
pub use multitable::{
    association_matrix, between_structure, compromise_objective, mfa_group_coordinates,
    statis_compromise, AssociationMatrix, StatisModel,
};
