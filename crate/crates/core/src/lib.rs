//! Deterministic building blocks for low-resource language incident
//! pipelines: in-domain data selection, parallel-corpus cleaning,
//! gazetteer tagging, entity linking, situation-frame detection, active
//! learning span selection and rule-based transliteration.

pub mod active;
pub mod corpus;
pub mod edit_distance;
pub mod error;
pub mod gazetteer;
pub mod io;
pub mod lexicon;
pub mod linking;
pub mod parallel;
pub mod pipeline;
pub mod relevance;
pub mod rng;
pub mod sf;
pub mod tags;
pub mod transliterate;

pub use error::{Error, Result};
