//! Label encoding, splitting, target scaling, the composite diagnoser and
//! its metrics.

mod label;
mod metrics;
mod model;
mod scaler;
mod split;

pub use label::{decode_output, encode_label, location_code, location_name, DecodedOutput, FaultLabel};
pub use metrics::{case_report, case_rms, correlation, mse, split_metrics, CaseReport, Metrics, SplitMetrics};
pub use model::{
    diagnose, evaluate, train_diagnoser, train_on_splits, DiagnoserConfig, DiagnosisModel, FaultDiagnosis,
    SCHEMA_VERSION,
};
pub use scaler::TargetScaler;
pub use split::{
    split_by_case, split_counts, split_dataset, split_indices, DatasetSplits, SplitIndices, TrainSplit,
    DEFAULT_FRACTIONS,
};
