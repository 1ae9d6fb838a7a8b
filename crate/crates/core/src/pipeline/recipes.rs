//! End-to-end recipes. Each one reads the inputs named in the config,
//! runs its stages in order and writes its artifacts plus `manifest.json`
//! into the output directory.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use log::info;
use rayon::prelude::*;

use super::config::{PipelineConfig, Recipe, TagSection};
use super::manifest::Manifest;
use crate::corpus::{load_corpus, Document, Genre};
use crate::error::{Error, Result};
use crate::gazetteer::{
    mark_unknown_capitalized, negative_candidates, propagate_documents_with,
    propagate_edit_distance, propagate_gazetteer, CapStats, Gazetteer, TaggedDocument,
};
use crate::io::{create_writer, write_lines};
use crate::lexicon::Lexicon;
use crate::linking::{
    cluster_nil, link_mention, load_kb, mentions_from_tags, prune_kb, write_edl, KbIndex,
    LinkConfig,
};
use crate::parallel::{
    augment_with_entities, dnt_tag, featurize, filter_parallel, load_parallel_documents,
    make_noisy_training, realign_document, select_ni_phrases, train_filter, AlignConfig,
    EntityMatcher, SentencePair, SpanPair, TrainConfig,
};
use crate::relevance::{
    load_relevant_terms, rank_by_relevance_par, select_with_genre_ratio, DfTable, GenreRatio,
    ScoredCandidate,
};
use crate::sf::{
    assign_locations, candidate_keywords, expand_keywords, filter_by_affinity, filter_mean_std,
    filter_topk_per_doc, finalize_frames, load_affinity, load_keywords, load_labeled_documents,
    load_lemmas, load_neighbors, load_urgency, tag_sentences, write_frames, write_keywords,
    ExpandConfig, PlaceMention, SfType,
};
use crate::tags::{spans, write_conll, Tag, TaggedSentence};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Environment variable capping the worker pool size.
pub const THREADS_VAR: &str = "LOWRES_THREADS";

fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    info!("stage {name}");
    f().map_err(|e| e.in_stage(name))
}

fn thread_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(
                THREADS_VAR,
                format!("must be a positive integer, got `{v}`"),
            )),
        },
    }
}

/// Validates the config for `recipe`, then runs it. The worker pool has
/// `threads` workers, else `LOWRES_THREADS`, else rayon's default; results
/// do not depend on it.
pub fn run_recipe_with_threads(
    recipe: Recipe,
    config: &PipelineConfig,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<Manifest> {
    config.validate(recipe)?;
    let threads = match threads {
        Some(n) => Some(n),
        None => thread_count()?,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_in_pool(recipe, config, out_dir))
}

pub fn run_recipe(recipe: Recipe, config: &PipelineConfig, out_dir: &Path) -> Result<Manifest> {
    run_recipe_with_threads(recipe, config, out_dir, None)
}

fn run_in_pool(recipe: Recipe, config: &PipelineConfig, out_dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut manifest = stage("manifest", || Manifest::new(recipe, config))?;
    let mut out = Outputs {
        dir: out_dir,
        manifest: &mut manifest,
    };
    match recipe {
        Recipe::NerData => ner_data(config, &mut out)?,
        Recipe::Edl => edl(config, &mut out)?,
        Recipe::MtData => mt_data(config, &mut out)?,
        Recipe::Sf => sf(config, &mut out)?,
    }
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

struct Outputs<'a> {
    dir: &'a Path,
    manifest: &'a mut Manifest,
}

impl Outputs<'_> {
    /// Writes an artifact through `f` and records its hash.
    fn write(&mut self, name: &str, f: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        f(&path)?;
        self.manifest.record_output(self.dir, name)
    }

    fn count(&mut self, key: &str, value: usize) {
        self.manifest.count(key, value);
    }
}

fn required<'a>(p: &'a Option<std::path::PathBuf>, field: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::config(field, "missing"))
}

fn load_gazetteer(cfg: &PipelineConfig) -> Result<Gazetteer> {
    Gazetteer::load(
        required(&cfg.tag.gazetteer, "tag.gazetteer")?,
        cfg.tag.negatives.as_deref(),
    )
}

/// The `budget` sentences most similar to the relevant terms, honoring the
/// genre ratio (default: the corpus mix). Returns (document index, segment
/// index, score), best first.
pub fn select_relevant_sentences(
    docs: &[Document],
    terms: &[(String, f64)],
    budget: usize,
    ratio: Option<&GenreRatio>,
) -> Result<Vec<(usize, usize, f64)>> {
    let index: Vec<(usize, usize)> = docs
        .iter()
        .enumerate()
        .flat_map(|(d, doc)| (0..doc.segments.len()).map(move |s| (d, s)))
        .collect();
    let sentences: Vec<Vec<&str>> = index
        .iter()
        .map(|&(d, s)| docs[d].segments[s].surfaces())
        .collect();
    let table = DfTable::build(&sentences)?;
    let genres: Vec<Genre> = index.iter().map(|&(d, _)| docs[d].genre).collect();
    let ratio = match ratio {
        Some(r) => r.clone(),
        None => GenreRatio::from_counts(genres.iter().copied())?,
    };
    let scored: Vec<ScoredCandidate<(usize, f64)>> =
        rank_by_relevance_par(&sentences, terms, &table)
            .into_iter()
            .map(|(i, score)| ScoredCandidate {
                doc_ref: (i, score),
                genre: genres[i],
                score,
            })
            .collect();
    Ok(select_with_genre_ratio(&scored, &ratio, budget)?
        .into_iter()
        .map(|(i, score)| (index[i].0, index[i].1, score))
        .collect())
}

/// Narrows documents to the selected sentences, keeping segment order.
fn select_sentences(cfg: &PipelineConfig, docs: Vec<Document>) -> Result<Vec<Document>> {
    let (Some(terms), Some(budget)) = (&cfg.select.terms, cfg.select.budget) else {
        return Ok(docs);
    };
    let terms = load_relevant_terms(terms)?;
    let ratio = cfg
        .select
        .genre_ratio
        .as_deref()
        .map(GenreRatio::parse)
        .transpose()?;
    let mut keep: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); docs.len()];
    for (d, s, _) in select_relevant_sentences(&docs, &terms, budget, ratio.as_ref())? {
        keep[d].insert(s);
    }
    Ok(docs
        .into_iter()
        .zip(keep)
        .filter(|(_, segs)| !segs.is_empty())
        .map(|(mut doc, segs)| {
            let mut i = 0;
            doc.segments.retain(|_| {
                i += 1;
                segs.contains(&(i - 1))
            });
            doc
        })
        .collect())
}

fn tag_with(docs: &[Document], gaz: &Gazetteer, window: usize) -> Vec<TaggedDocument> {
    docs.par_iter()
        .map(|d| TaggedDocument {
            doc_id: d.doc_id.clone(),
            sentences: d
                .segments
                .iter()
                .map(|s| {
                    let tokens = s.owned_surfaces();
                    let tags = propagate_gazetteer(&tokens, gaz, window);
                    TaggedSentence::new(tokens, tags)
                })
                .collect(),
        })
        .collect()
}

/// Gazetteer propagation, optionally widened by edit-distance neighbors of
/// gazetteer words and then spread within and across documents. Unknown
/// marking is left to the caller.
pub fn tag_documents(
    docs: &[Document],
    gaz: &Gazetteer,
    t: &TagSection,
) -> Result<Vec<TaggedDocument>> {
    let mut tagged = stage("propagate", || Ok(tag_with(docs, gaz, t.window)))?;
    if t.edit_propagate {
        tagged = stage("edit-propagate", || {
            let vocab: BTreeSet<&str> = docs
                .iter()
                .flat_map(|d| &d.segments)
                .flat_map(|s| s.tokens.iter().map(|t| t.surface.as_str()))
                .collect();
            let extra = propagate_edit_distance(vocab, gaz, t.min_edit_dist);
            info!("{} provisional gazetteer words", extra.len());
            if extra.is_empty() {
                return Ok(tagged);
            }
            let mut wide = gaz.clone();
            wide.extend_provisional(extra);
            Ok(tag_with(docs, &wide, t.window))
        })?;
    }
    if t.doc_propagate {
        tagged = stage("doc-propagate", || {
            Ok(propagate_documents_with(&tagged, t.vote))
        })?;
    }
    Ok(tagged)
}

fn ner_data(cfg: &PipelineConfig, out: &mut Outputs) -> Result<()> {
    let docs = stage("load", || load_corpus(required(&cfg.corpus, "corpus")?))?;
    let gaz = stage("load", || load_gazetteer(cfg))?;
    let docs = stage("select", || select_sentences(cfg, docs))?;
    let mut tagged = tag_documents(&docs, &gaz, &cfg.tag)?;
    if cfg.tag.mark_unknown {
        stage("mark-unknown", || {
            for s in tagged.iter_mut().flat_map(|d| &mut d.sentences) {
                s.tags = mark_unknown_capitalized(&s.tags, &s.tokens, gaz.negatives());
            }
            Ok(())
        })?;
    }
    let sentences: Vec<TaggedSentence> = tagged.into_iter().flat_map(|d| d.sentences).collect();
    stage("write", || {
        out.write("ner.conll", |p| {
            write_conll(p, &sentences, cfg.tag.mark_unknown)
        })?;
        let stats =
            CapStats::from_corpus(docs.iter().flat_map(|d| &d.segments).map(|s| s.surfaces()));
        let candidates = negative_candidates(&stats, cfg.tag.negative_top_k);
        out.write("negative_candidates.txt", |p| write_lines(p, &candidates))
    })?;
    let tags = || sentences.iter().flat_map(|s| &s.tags);
    out.count("documents", docs.len());
    out.count("sentences", sentences.len());
    out.count("tokens", tags().count());
    out.count(
        "entities",
        sentences.iter().map(|s| spans(&s.tags).len()).sum(),
    );
    out.count(
        "unknown_tokens",
        tags().filter(|&&t| t == Tag::Unknown).count(),
    );
    Ok(())
}

fn edl(cfg: &PipelineConfig, out: &mut Outputs) -> Result<()> {
    let docs = stage("load", || load_corpus(required(&cfg.corpus, "corpus")?))?;
    let gaz = stage("load", || load_gazetteer(cfg))?;
    let tagged = tag_documents(&docs, &gaz, &cfg.tag)?;

    let l = &cfg.link;
    let kb = stage("prune", || {
        let kb = load_kb(required(&l.kb, "link.kb")?)?;
        let incident: HashSet<String> = l.incident_countries.iter().cloned().collect();
        let neighbors: HashSet<String> = l.neighbor_countries.iter().cloned().collect();
        let pruned = prune_kb(&kb, &incident, &neighbors, l.population_floor);
        info!("kb pruned from {} to {} entries", kb.len(), pruned.len());
        KbIndex::new(pruned)
    })?;
    let lexicons: Vec<Lexicon> = stage("load", || {
        l.lexicons.iter().map(|p| Lexicon::load(p)).collect()
    })?;

    let mentions: Vec<_> = tagged
        .iter()
        .flat_map(|d| {
            let mut n = 0;
            d.sentences
                .iter()
                .enumerate()
                .flat_map(|(seg, s)| {
                    let ms = mentions_from_tags(&d.doc_id, seg, &s.tokens, &s.tags, n);
                    n += ms.len();
                    ms
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let link_cfg = LinkConfig {
        threshold: l.threshold,
        k_per_token: l.k_per_token,
        gpe_loc_compatible: l.gpe_loc_compatible,
        nil_margin: l.nil_margin,
    };
    let mut results = stage("link", || {
        Ok(mentions
            .par_iter()
            .map(|m| link_mention(m, &kb, &lexicons, &link_cfg))
            .collect::<Vec<_>>())
    })?;
    stage("cluster", || {
        cluster_nil(&mut results);
        Ok(())
    })?;
    stage("write", || out.write("edl.tsv", |p| write_edl(p, &results)))?;
    let nil = results.iter().filter(|r| r.is_nil()).count();
    out.count("kb_entries", kb.entries().len());
    out.count("mentions", results.len());
    out.count("linked", results.len() - nil);
    out.count("nil", nil);
    out.count(
        "nil_clusters",
        results
            .iter()
            .filter_map(|r| r.nil_id.as_ref())
            .collect::<HashSet<_>>()
            .len(),
    );
    Ok(())
}

fn write_pairs(path: &Path, pairs: &[SentencePair]) -> Result<()> {
    write_lines(
        path,
        pairs
            .iter()
            .map(|p| format!("{}\t{}", p.src.join(" "), p.tgt.join(" "))),
    )
}

fn mt_data(cfg: &PipelineConfig, out: &mut Outputs) -> Result<()> {
    let m = &cfg.mt;
    let lexicon = stage("load", || {
        Lexicon::load(required(&m.lexicon, "mt.lexicon")?)
    })?;
    let pairs = stage("realign", || {
        let docs = load_parallel_documents(required(&m.parallel, "mt.parallel")?)?;
        let align = AlignConfig {
            penalty_insert_delete: m.penalty_insert_delete,
            penalty_merge: m.penalty_merge,
            variance: m.variance,
            ..AlignConfig::default()
        };
        let aligned: Vec<Vec<SentencePair>> = docs
            .par_iter()
            .map(|d| {
                let a = realign_document(&d.src, &d.tgt, &align)
                    .map_err(|e| Error::InvalidArgument(format!("document `{}`: {e}", d.doc_id)))?;
                Ok(a.beads
                    .into_iter()
                    .filter(|(s, t)| !s.is_empty() && !t.is_empty())
                    .enumerate()
                    .map(|(i, (s, t))| {
                        SentencePair::from_text(
                            &d.src[s].join(" "),
                            &d.tgt[t].join(" "),
                            d.doc_id.clone(),
                            i,
                        )
                    })
                    .collect::<Vec<_>>())
            })
            .collect::<Result<_>>()?;
        Ok(aligned.into_iter().flatten().collect::<Vec<_>>())
    })?;
    out.count("aligned_pairs", pairs.len());

    let (kept, removed) = stage("filter", || {
        let noisy = make_noisy_training(&pairs, m.swap_rate, cfg.seed)?;
        let report = train_filter(
            &featurize(&noisy, &lexicon),
            &TrainConfig {
                l2: m.l2,
                epochs: m.epochs,
                learning_rate: m.learning_rate,
                batch_size: m.batch_size,
                seed: cfg.seed,
            },
        )?;
        out.write("filter_model.json", |p| report.model.save(p))?;
        Ok(filter_parallel(
            &pairs,
            &report.model,
            &lexicon,
            m.filter_threshold,
        ))
    })?;
    out.count("kept", kept.len());
    out.count("removed", removed.len());
    stage("write", || {
        out.write("clean.tsv", |p| write_pairs(p, &kept))?;
        out.write("removed.tsv", |p| write_pairs(p, &removed))
    })?;

    stage("dnt", || {
        out.write("dnt.jsonl", |p| {
            let mut w = create_writer(p)?;
            let io_err = |e| Error::io(p, e);
            let mut masked_total = 0;
            for pair in &kept {
                let mask = dnt_tag(&pair.src);
                masked_total += mask.slots.len();
                let line = serde_json::json!({
                    "doc_id": pair.origin_doc,
                    "index": pair.index,
                    "masked": mask.masked.join(" "),
                    "slots": mask.slots,
                });
                writeln!(w, "{line}").map_err(io_err)?;
            }
            info!("{masked_total} do-not-translate tokens");
            w.flush().map_err(io_err)
        })
    })?;

    if let Some(path) = &m.entity_lexicon {
        stage("augment", || {
            let ent = Lexicon::load(path)?;
            let matcher = EntityMatcher::new(&ent);
            let marked: Vec<(SentencePair, Vec<SpanPair>)> = kept
                .iter()
                .map(|p| (p.clone(), matcher.spans(p)))
                .filter(|(_, s)| !s.is_empty())
                .collect();
            let (with_entities, spans): (Vec<_>, Vec<_>) = marked.into_iter().unzip();
            let synthetic = if with_entities.is_empty() {
                Vec::new()
            } else {
                augment_with_entities(&with_entities, &spans, &ent, m.n_copies, cfg.seed)?
                    .split_off(with_entities.len())
            };
            out.count("augmented", synthetic.len());
            let all: Vec<SentencePair> = kept.iter().cloned().chain(synthetic).collect();
            out.write("augmented.tsv", |p| write_pairs(p, &all))
        })?;
    }

    if let Some(path) = &m.monolingual {
        stage("ni-phrases", || {
            let mono: Vec<Vec<String>> = load_corpus(path)?
                .iter()
                .flat_map(|d| &d.segments)
                .map(|s| s.owned_surfaces())
                .collect();
            let bilingual: Vec<Vec<String>> = pairs.iter().map(|p| p.src.clone()).collect();
            let phrases = select_ni_phrases(&mono, &bilingual, m.ni_n_max, m.ni_top_n);
            out.count("ni_phrases", phrases.len());
            out.write("ni_phrases.tsv", |p| {
                write_lines(
                    p,
                    phrases.iter().map(|(g, c)| format!("{}\t{c}", g.join(" "))),
                )
            })
        })?;
    }
    Ok(())
}

fn sf(cfg: &PipelineConfig, out: &mut Outputs) -> Result<()> {
    let s = &cfg.sf;
    let docs = stage("load", || load_corpus(required(&cfg.corpus, "corpus")?))?;
    let keywords = stage("keywords", || {
        if let Some(path) = &s.keywords {
            return load_keywords(path);
        }
        let labeled = load_labeled_documents(required(&s.labeled, "sf.labeled")?)?;
        let present: BTreeSet<SfType> = labeled
            .iter()
            .flat_map(|d| d.types.iter().copied())
            .collect();
        let types: Vec<SfType> = present.into_iter().collect();
        let candidates = candidate_keywords(&labeled, &types, s.top_n)?;
        let neighbors = match &s.neighbors {
            Some(p) => load_neighbors(p)?,
            None => HashMap::new(),
        };
        let expanded = expand_keywords(
            &candidates,
            &neighbors,
            &ExpandConfig {
                max_neighbors: s.max_neighbors,
                min_cosine: s.neighbor_cos,
            },
        );
        let affinity = load_affinity(required(&s.affinity, "sf.affinity")?)?;
        Ok(filter_by_affinity(&expanded, &affinity, s.th1))
    })?;
    out.write("keywords.tsv", |p| write_keywords(p, &keywords))?;
    out.count("keywords", keywords.len());

    let predictions = stage("tag", || {
        let lemmas = s.lemmas.as_deref().map(load_lemmas).transpose()?;
        Ok(tag_sentences(&docs, &keywords, lemmas.as_ref(), s.top_t))
    })?;
    out.count("sentence_predictions", predictions.len());
    let predictions = stage("filter", || {
        let kept = filter_mean_std(&predictions, s.lambda);
        if !s.topk {
            return Ok(kept);
        }
        let counts: HashMap<String, usize> = docs
            .iter()
            .map(|d| (d.doc_id.clone(), d.segments.len()))
            .collect();
        Ok(filter_topk_per_doc(&kept, &counts, s.k_cap))
    })?;
    out.count("filtered_predictions", predictions.len());

    let places = stage("locations", || {
        let mut places: HashMap<String, Vec<PlaceMention>> = HashMap::new();
        if cfg.tag.gazetteer.is_some() {
            let gaz = load_gazetteer(cfg)?;
            for d in tag_with(&docs, &gaz, cfg.tag.window) {
                let list = places.entry(d.doc_id).or_default();
                for (seg_id, sent) in d.sentences.iter().enumerate() {
                    for (start, end, ty) in spans(&sent.tags) {
                        if !ty.is_place() {
                            continue;
                        }
                        let id = gaz
                            .lookup(&sent.tokens[start..end])
                            .and_then(|e| e.kb_id.clone());
                        list.push(PlaceMention {
                            seg_id,
                            start,
                            place: id.unwrap_or_else(|| "NIL".into()),
                        });
                    }
                }
            }
        }
        Ok(assign_locations(
            &predictions,
            &places,
            s.location_window.as_option(),
        ))
    })?;
    let frames = stage("frames", || {
        let urgency = match &s.urgency {
            Some(p) => load_urgency(p)?,
            None => HashMap::new(),
        };
        Ok(finalize_frames(&predictions, &places, &urgency))
    })?;
    out.write("frames.jsonl", |p| write_frames(p, &frames))?;
    out.count("frames", frames.len());
    Ok(())
}
