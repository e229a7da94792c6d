//! Turn annotations, trait tables and persisted results.

mod annotations;
mod results;
mod traits;

pub use annotations::{
    build_sequences, parse_annotations, write_annotations, Dataset, DelimitedFormat, Meeting,
    RawAnnotation, ANNOTATION_HEADER,
};
pub use results::{
    from_json_str, load_results, save_results, to_json_string, write_csv, EvaluationRow,
    EvaluationTable, LabeledFit, Payload, SCHEMA_VERSION,
};
pub use traits::{parse_traits, TRAIT_HEADER};
