//! Dataset files, seeded splits and model persistence.

pub mod dataset;
pub mod model_io;
pub mod split;

pub use dataset::{
    parse_sparse, parse_sparse_str, parse_sparse_with_dim, Document, LabeledDataset,
};
pub use split::{split, split_indices, SplitSpec};

pub use model_io::{
    load_model, model_from_str, model_to_string, read_model, save_model, write_model,
};
