//! Parallel-corpus tooling: realignment, misalignment filtering, entity
//! augmentation, do-not-translate masking, lexicon transfer and phrase
//! selection for native-informant translation.

mod augment;
mod dnt;
mod filter;
mod ni;
mod realign;
mod transfer;

use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

pub use augment::{augment_with_entities, EntityMatcher, SpanPair};
pub use dnt::{dnt_restore, dnt_tag, DntMask, Restored};
pub use filter::{
    featurize, filter_parallel, log_loss_and_gradient, make_noisy_training, pair_features,
    train_filter, FilterModel, LengthBucket, TrainConfig, TrainReport, FEATURE_NAMES,
};
pub use ni::select_ni_phrases;
pub use realign::{alignment_cost, realign_document, AlignConfig, AlignMove, Alignment};
pub use transfer::translate_corpus_fallback;

use crate::corpus::tokenize_surfaces;
use crate::error::{Error, Result};
use crate::io::{open_reader, read_tsv};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    pub origin_doc: String,
    pub index: usize,
}

impl SentencePair {
    pub fn new(
        src: Vec<String>,
        tgt: Vec<String>,
        origin_doc: impl Into<String>,
        index: usize,
    ) -> Self {
        SentencePair {
            src,
            tgt,
            origin_doc: origin_doc.into(),
            index,
        }
    }

    pub fn from_text(src: &str, tgt: &str, origin_doc: impl Into<String>, index: usize) -> Self {
        SentencePair::new(
            tokenize_surfaces(src),
            tokenize_surfaces(tgt),
            origin_doc,
            index,
        )
    }
}

/// Reads a `src<TAB>tgt` parallel file. Rows with both sides empty are skipped.
pub fn load_parallel_tsv(path: &Path) -> Result<Vec<SentencePair>> {
    let origin = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut pairs = Vec::new();
    for (line, cols) in read_tsv(path)? {
        if cols.len() != 2 {
            return Err(Error::parse(
                path.display().to_string(),
                line,
                "expected src<TAB>tgt",
            ));
        }
        let pair = SentencePair::from_text(&cols[0], &cols[1], origin.clone(), pairs.len());
        if pair.src.is_empty() && pair.tgt.is_empty() {
            continue;
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

/// A document with untokenized source and target segments, as read from a
/// paired JSON-lines file: `{"doc_id": .., "src": [..], "tgt": [..]}`.
#[derive(Debug, Clone, Deserialize)]
pub struct ParallelDocument {
    pub doc_id: String,
    pub src: Vec<String>,
    pub tgt: Vec<String>,
}

pub fn load_parallel_documents(path: &Path) -> Result<Vec<ParallelDocument>> {
    let reader = open_reader(path)?;
    let mut docs = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: ParallelDocument = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path.display().to_string(), n + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}
