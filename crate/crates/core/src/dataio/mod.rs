//! Data loading, synthetic data, splits and model bundles.

pub mod bundle;
pub mod dataset;
pub mod formats;
pub mod split;
pub mod synth;

pub use bundle::{load_model, save_model, BundleMeta, KernelDesc, Manifest, ModelBundle};
pub use dataset::{
    input_kernel, load_dataset, DataSpec, Dataset, InputFormat, Inputs, OutputKind, Outputs,
};
pub use split::{split, Fold, SplitScheme};
pub use synth::synth_remark1;
