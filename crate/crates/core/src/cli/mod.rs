//! Dataset loading and batch evaluation behind the `snn-soc` binary.

pub mod batch;
pub mod idx;

pub use batch::{run_batch, run_batch_data, BatchError, BatchOptions, BatchReport, SampleRecord};
pub use idx::{
    load_idx_images, load_idx_labels, parse_idx_images, parse_idx_labels, write_idx_images,
    write_idx_labels, IdxImages,
};
