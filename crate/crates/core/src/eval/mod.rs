//! Accuracy metrics, input corruptions, text perturbation and robustness
//! reports.

mod corrupt;
mod metrics;
mod perturb;
mod report;

pub use corrupt::{corrupt_dataset, corrupt_image, Corruption, CorruptionSpec, ImageDims};
pub use metrics::{evaluate, evaluate_encoded, Metrics};
pub use perturb::{load_synonyms, parse_synonyms, perturb_documents, perturb_text, SynonymMap};
pub use report::{robustness_report, write_robustness_csv, RobustnessRow, REPORT_NOTE};
