//! Datasets, experiment sweeps, reports, image export and reconstruction.

mod cifar;
mod experiment;
mod export;
mod plan;
mod reconstruct;
mod report;
mod synthetic;

pub use cifar::{load_cifar10_batch, parse_cifar10_batch, DatasetError, CIFAR_RECORD_LEN, CIFAR_SIDE};
pub use experiment::{attack_seed, run_experiment, ConfigSummary, ExperimentEntry, ExperimentSummary};
pub use export::{export_png, load_png, quantize};
pub use plan::{ExperimentPlan, LabeledImage, PlanError, PlanFile, PlannedAttack, TargetSelection};
pub use reconstruct::{reconstruct, reconstruct_from, ReconstructionResult};
pub use report::{adversarial_png_name, read_records, write_report, ReportError, RECORDS_FILE, SUMMARY_FILE};
pub use synthetic::{gradient_image, synthetic_images};
