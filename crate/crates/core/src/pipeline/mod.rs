//! Configuration, recipes, manifests and output validation.

mod config;
mod manifest;
mod recipes;
mod validate;

pub use config::{
    LinkSection, MtSection, PipelineConfig, Recipe, SelectSection, SfSection, TagSection, Window,
};
pub use manifest::{sha256_file, sha256_hex, InputRecord, Manifest};
pub use recipes::{
    run_recipe, run_recipe_with_threads, select_relevant_sentences, tag_documents, MANIFEST_FILE,
    THREADS_VAR,
};
pub use validate::{validate_outputs, Schema, ValidationReport, Violation};
