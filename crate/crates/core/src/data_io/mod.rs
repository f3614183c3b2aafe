//! Attention dumps, manifests, feature files, dataset splits and the
//! synthetic corpus generator.

mod dump;
mod feature_file;
mod manifest;
mod split;
mod synthetic;

pub use dump::{
    decode_dump, encode_dump, read_dump, read_json_dump, write_dump, write_json_dump, AttentionDump, DumpError,
    DumpShape, DUMP_FORMAT_VERSION, HEADER_LEN, MAGIC,
};
pub use feature_file::{read_feature_meta, read_features, sidecar_path, write_features, FeatureFileMeta};
pub use manifest::{DumpManifest, DumpSet, ExampleEntry, FeatureSource, InMemoryCorpus, MANIFEST_FORMAT_VERSION};
pub use split::{split_dataset, split_indices, DEFAULT_VALIDATION_FRACTION};
pub use synthetic::{generate_synthetic, synthesize, SyntheticSpec, ROW_MASS};
