//! Pooling, regression, score mapping and evaluation.

pub mod cv;
pub mod logistic;
pub mod metrics;
pub mod pool;
pub mod svr;
pub mod table;

pub use cv::{cross_validate, fold_assignment, out_of_fold, CvConfig, Dataset, SplitMode};
pub use logistic::{logistic_fit, LogisticParams};
pub use metrics::{metrics, mid_ranks, pearson, rmse, spearman, EvalSummary, IterationRecord};
pub use pool::{pool, OrientationFeatures, PooledFeatures, DEFAULT_WEIGHTS};
pub use svr::{svr_predict, svr_predict_batch, svr_train, QualityModel, SvrGrid};
pub use table::{feature_columns, FeatureTable, Sidecar, FEATURE_LEN};
