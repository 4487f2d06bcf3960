//! Routing records, supervision targets, dataset construction and persistence.

mod build;
mod jsonl;
mod prompt;
mod record;
mod synth;

pub use build::{build_dataset, BuildOutput, BuildSummary, Diagnostic, RawLine};
pub use jsonl::{
    read_jsonl, read_jsonl_from, read_raw, read_raw_from, write_jsonl, write_jsonl_to,
    write_labeled, write_labeled_to, SCHEMA_NAME, SCHEMA_VERSION,
};
pub use prompt::render_prompt;
pub use record::{
    build_targets, preference_from_distances, Candidate, Dataset, Instance, PreferenceTarget,
    RawCandidate, RawEntry, RoutingRecord,
};
pub use synth::{synthesize, SynthConfig};
