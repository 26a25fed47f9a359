//! Normalization, labeled examples, splitting and the binary dataset cache.

mod cache;
mod examples;
mod norm;
mod split;

pub use cache::{cache_read, cache_write, decode_cache, encode_cache, CACHE_MAGIC, CACHE_VERSION};
pub use examples::{input_len, make_examples, record_to_input, LabeledExample};
pub use norm::{
    compute_norm_stats, demographic_values, normalize, normalize_demographics, DemographicStats,
    NormStats, DEMOGRAPHIC_FEATURES,
};
pub use split::{split, split_three, train_size, DatasetSplit};
