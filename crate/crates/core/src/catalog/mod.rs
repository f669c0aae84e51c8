//! Persistence and batch generation: template documents and their schema,
//! the built-in template library, imported real flares, deterministic
//! per-sample seeding and dataset manifests.

mod dataset;
pub mod library;
mod seeds;
mod store;
mod template;

pub use dataset::{
    generate_dataset, plan_dataset, synthetic_asset, read_manifest, verify_manifest, Corpus, CorpusRecord, DatasetManifest,
    DatasetSpec, FileRecord, FlareChoice, FlareSources, ManifestFooter, ManifestHeader, PlannedSample, SampleRecord,
    VerifyReport, MANIFEST_FILE,
};
pub use seeds::{mix64, SeedSpec};
pub use store::{dominance_violations, Catalog, DominanceWarning, ImportReport, RealFlareMeta, DOMINANCE_TOLERANCE};
pub use template::{
    parse_template, parse_template_value, schema_violations, validate_template, Metadata, TemplateBody, TemplateDoc,
    SCHEMA_VERSION, TEMPLATE_SCHEMA,
};
