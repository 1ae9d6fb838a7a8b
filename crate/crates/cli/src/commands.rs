use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;
use std::process::ExitCode;

use log::{info, warn};
use lowres_core::active::{
    fallback_rank_sentences, load_marginals, select_uncertain_spans, write_spans,
};
use lowres_core::corpus::{load_corpus, tokenize_surfaces};
use lowres_core::gazetteer::{mark_unknown_capitalized, Gazetteer};
use lowres_core::io::{create_writer, open_reader, read_lines, write_lines};
use lowres_core::lexicon::Lexicon;
use lowres_core::linking::{
    cluster_nil, link_mention, load_kb, mentions_from_tags, prune_kb, write_edl, KbIndex,
    LinkConfig,
};
use lowres_core::parallel::{
    augment_with_entities, dnt_restore, dnt_tag, featurize, filter_parallel,
    load_parallel_documents, load_parallel_tsv, make_noisy_training, realign_document,
    select_ni_phrases, train_filter, AlignConfig, DntMask, EntityMatcher, FilterModel,
    SentencePair, SpanPair, TrainConfig,
};
use lowres_core::pipeline::{
    run_recipe_with_threads, select_relevant_sentences, tag_documents, validate_outputs,
    PipelineConfig, Recipe, TagSection, Window,
};
use lowres_core::relevance::{load_relevant_terms, DfTable, GenreRatio};
use lowres_core::tags::{read_conll, write_conll, TaggedSentence};
use lowres_core::transliterate::{g2p_backoff, load_chain, reromanize, RuleTable};
use lowres_core::{Error, Result};

use crate::*;

pub fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Select(a) => select(a),
        Command::FilterParallel(a) => filter(a),
        Command::Realign(a) => realign(a),
        Command::AugmentEntities(a) => augment(a),
        Command::Dnt(a) => dnt(a),
        Command::NiPhrases(a) => ni_phrases(a),
        Command::Tag(a) => tag(a),
        Command::Link(a) => link(a),
        Command::Sf(a) => sf(a),
        Command::Al(a) => al(a),
        Command::Ipa(a) => ipa(a),
        Command::Run(a) => run(a),
        Command::Validate(a) => return validate(a),
    }
    .map(|()| ExitCode::SUCCESS)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn parse_ratio(spec: Option<&str>) -> Result<Option<GenreRatio>> {
    spec.map(GenreRatio::parse).transpose()
}

fn write_pairs(path: &Path, pairs: &[SentencePair]) -> Result<()> {
    write_lines(
        path,
        pairs
            .iter()
            .map(|p| format!("{}\t{}", p.src.join(" "), p.tgt.join(" "))),
    )
}

fn select(a: SelectArgs) -> Result<()> {
    let docs = load_corpus(&a.corpus)?;
    let ratio = parse_ratio(a.genre_ratio.as_deref())?;
    let rows: Vec<String> = match &a.terms {
        Some(terms) => {
            let terms = load_relevant_terms(terms)?;
            select_relevant_sentences(&docs, &terms, a.budget, ratio.as_ref())?
                .into_iter()
                .map(|(d, s, score)| {
                    let (doc, seg) = (&docs[d], &docs[d].segments[s]);
                    format!("{}\t{}\t{score:.6}\t{}", doc.doc_id, seg.seg_id, seg.raw)
                })
                .collect()
        }
        None => {
            let table =
                DfTable::build(docs.iter().flat_map(|d| &d.segments).map(|s| s.surfaces()))?;
            let ratio = match ratio {
                Some(r) => r,
                None => GenreRatio::from_counts(
                    docs.iter().flat_map(|d| d.segments.iter().map(|_| d.genre)),
                )?,
            };
            let raw: std::collections::HashMap<(&str, usize), &str> = docs
                .iter()
                .flat_map(|d| {
                    d.segments
                        .iter()
                        .map(|s| ((d.doc_id.as_str(), s.seg_id), s.raw.as_str()))
                })
                .collect();
            fallback_rank_sentences(&docs, &table, &ratio, a.budget)?
                .into_iter()
                .map(|(doc, seg)| format!("{doc}\t{seg}\t-\t{}", raw[&(doc.as_str(), seg)]))
                .collect()
        }
    };
    info!("selected {} sentences", rows.len());
    write_lines(&a.out, rows)
}

fn filter(a: FilterArgs) -> Result<()> {
    let pairs = load_parallel_tsv(&a.input)?;
    let lexicon = Lexicon::load(&a.lexicon)?;
    let model = match &a.model {
        Some(p) => FilterModel::load(p)?,
        None => {
            let noisy = make_noisy_training(&pairs, a.swap_rate, a.seed)?;
            let cfg = TrainConfig {
                l2: a.l2,
                epochs: a.epochs,
                learning_rate: a.learning_rate,
                batch_size: a.batch_size,
                seed: a.seed,
            };
            let report = train_filter(&featurize(&noisy, &lexicon), &cfg)?;
            info!(
                "trained on {} pairs, loss {:.4} -> {:.4}",
                noisy.len(),
                report.losses[0],
                report.losses.last().copied().unwrap_or(f64::NAN)
            );
            report.model
        }
    };
    if let Some(p) = &a.save_model {
        model.save(p)?;
    }
    let (kept, removed) = filter_parallel(&pairs, &model, &lexicon, a.threshold);
    info!("kept {} pairs, removed {}", kept.len(), removed.len());
    write_pairs(&a.out, &kept)?;
    if let Some(p) = &a.removed {
        write_pairs(p, &removed)?;
    }
    Ok(())
}

fn realign(a: RealignArgs) -> Result<()> {
    let cfg = AlignConfig {
        penalty_insert_delete: a.penalty_insert_delete,
        penalty_merge: a.penalty_merge,
        variance: a.variance,
        ..AlignConfig::default()
    };
    let mut lines = Vec::new();
    for doc in load_parallel_documents(&a.input)? {
        let alignment = realign_document(&doc.src, &doc.tgt, &cfg)
            .map_err(|e| Error::InvalidArgument(format!("document `{}`: {e}", doc.doc_id)))?;
        for (s, t) in alignment.beads {
            if s.is_empty() || t.is_empty() {
                continue;
            }
            lines.push(format!(
                "{}\t{}",
                doc.src[s].join(" "),
                doc.tgt[t].join(" ")
            ));
        }
    }
    info!("{} aligned pairs", lines.len());
    write_lines(&a.out, lines)
}

fn augment(a: AugmentArgs) -> Result<()> {
    let pairs = load_parallel_tsv(&a.input)?;
    let lex = Lexicon::load(&a.entity_lexicon)?;
    let matcher = EntityMatcher::new(&lex);
    let spans: Vec<Vec<SpanPair>> = pairs.iter().map(|p| matcher.spans(p)).collect();
    let (marked, marks): (Vec<SentencePair>, Vec<Vec<SpanPair>>) = pairs
        .iter()
        .cloned()
        .zip(spans)
        .filter(|(_, s)| !s.is_empty())
        .unzip();
    let synthetic = if marked.is_empty() {
        warn!("no entity pairs found; nothing to augment");
        Vec::new()
    } else {
        augment_with_entities(&marked, &marks, &lex, a.n_copies, a.seed)?.split_off(marked.len())
    };
    info!(
        "{} pairs with entities, {} synthetic pairs",
        marked.len(),
        synthetic.len()
    );
    let all: Vec<SentencePair> = pairs.into_iter().chain(synthetic).collect();
    write_pairs(&a.out, &all)
}

fn dnt(a: DntArgs) -> Result<()> {
    let lines = read_lines(&a.input)?;
    if a.restore {
        let mut masks = Vec::new();
        for (n, line) in open_reader(&a.slots)?.lines().enumerate() {
            let line = line.map_err(io_err(&a.slots))?;
            let mask: DntMask = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: a.slots.display().to_string(),
                line: n + 1,
                message: e.to_string(),
            })?;
            masks.push(mask);
        }
        if masks.len() != lines.len() {
            return Err(Error::InvalidArgument(format!(
                "{} masks for {} lines",
                masks.len(),
                lines.len()
            )));
        }
        let mut missing = 0;
        let out: Vec<String> = lines
            .iter()
            .zip(&masks)
            .map(|(line, mask)| {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                let r = dnt_restore(&tokens, mask);
                missing += r.missing.len();
                r.tokens.join(" ")
            })
            .collect();
        if missing > 0 {
            warn!("{missing} placeholders missing from the translation were appended");
        }
        return write_lines(&a.out, out);
    }
    let masks: Vec<DntMask> = lines
        .iter()
        .map(|l| dnt_tag(&tokenize_surfaces(l)))
        .collect();
    info!(
        "{} tokens masked",
        masks.iter().map(|m| m.slots.len()).sum::<usize>()
    );
    write_lines(&a.out, masks.iter().map(|m| m.masked.join(" ")))?;
    let mut w = create_writer(&a.slots)?;
    for m in &masks {
        serde_json::to_writer(&mut w, m)?;
        writeln!(w).map_err(io_err(&a.slots))?;
    }
    w.flush().map_err(io_err(&a.slots))
}

fn ni_phrases(a: NiArgs) -> Result<()> {
    let mono: Vec<Vec<String>> = load_corpus(&a.monolingual)?
        .iter()
        .flat_map(|d| &d.segments)
        .map(|s| s.owned_surfaces())
        .collect();
    let known: Vec<Vec<String>> = load_parallel_tsv(&a.bilingual)?
        .into_iter()
        .map(|p| p.src)
        .collect();
    let phrases = select_ni_phrases(&mono, &known, a.n_max, a.top_n);
    info!("{} phrases", phrases.len());
    write_lines(
        &a.out,
        phrases.iter().map(|(g, c)| format!("{}\t{c}", g.join(" "))),
    )
}

fn tag(a: TagArgs) -> Result<()> {
    if a.window == 0 || a.min_edit_dist == 0 {
        return Err(Error::InvalidArgument(
            "window and min-edit-dist must be at least 1".into(),
        ));
    }
    let docs = load_corpus(&a.corpus)?;
    let gaz = Gazetteer::load(&a.gazetteer, a.negatives.as_deref())?;
    let section = TagSection {
        window: a.window,
        edit_propagate: !a.no_edit_propagate,
        min_edit_dist: a.min_edit_dist,
        doc_propagate: !a.no_doc_propagate,
        vote: a.vote.into(),
        mark_unknown: !a.no_unknown,
        ..TagSection::default()
    };
    let mut sentences: Vec<TaggedSentence> = tag_documents(&docs, &gaz, &section)?
        .into_iter()
        .flat_map(|d| d.sentences)
        .collect();
    if section.mark_unknown {
        for s in &mut sentences {
            s.tags = mark_unknown_capitalized(&s.tags, &s.tokens, gaz.negatives());
        }
    }
    info!("tagged {} sentences", sentences.len());
    write_conll(&a.out, &sentences, section.mark_unknown)
}

fn link(a: LinkArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(Error::InvalidArgument("threshold must be in [0, 1]".into()));
    }
    let sentences = read_conll(&a.input)?;
    let doc_id = match a.doc_id {
        Some(d) => d,
        None => a
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let kb = load_kb(&a.kb)?;
    let incident: HashSet<String> = a.incident_country.into_iter().collect();
    let neighbors: HashSet<String> = a.neighbors.into_iter().collect();
    let index = KbIndex::new(prune_kb(&kb, &incident, &neighbors, a.population_floor))?;
    info!(
        "kb: {} of {} entries after pruning",
        index.entries().len(),
        kb.len()
    );
    let lexicons: Vec<Lexicon> = a
        .lexicon
        .iter()
        .map(|p| Lexicon::load(p))
        .collect::<Result<_>>()?;
    let cfg = LinkConfig {
        threshold: a.threshold,
        k_per_token: a.k_per_token,
        gpe_loc_compatible: !a.strict_types,
        nil_margin: a.nil_margin,
    };
    let mut mentions = Vec::new();
    for (seg, s) in sentences.iter().enumerate() {
        let found = mentions_from_tags(&doc_id, seg, &s.tokens, &s.tags, mentions.len());
        mentions.extend(found);
    }
    let mut results: Vec<_> = mentions
        .iter()
        .map(|m| link_mention(m, &index, &lexicons, &cfg))
        .collect();
    cluster_nil(&mut results);
    info!(
        "{} mentions, {} linked",
        results.len(),
        results.iter().filter(|r| !r.is_nil()).count()
    );
    write_edl(&a.out, &results)
}

fn sf(a: SfArgs) -> Result<()> {
    let mut cfg = PipelineConfig {
        seed: a.seed,
        corpus: Some(a.corpus),
        ..PipelineConfig::default()
    };
    cfg.tag.gazetteer = a.gazetteer;
    let s = &mut cfg.sf;
    s.keywords = a.keywords;
    s.labeled = a.labeled;
    s.affinity = a.affinity;
    s.neighbors = a.neighbors;
    s.lemmas = a.lemmas;
    s.urgency = a.urgency;
    s.th1 = a.th1;
    s.lambda = a.lambda;
    s.top_t = a.top_t;
    s.topk = a.topk;
    s.k_cap = a.k_cap;
    s.location_window = a.location_window.parse::<Window>()?;
    run_recipe_with_threads(Recipe::Sf, &cfg, &a.out_dir, None).map(|_| ())
}

fn al(a: AlArgs) -> Result<()> {
    match (&a.marginals, &a.corpus) {
        (Some(m), _) => {
            let marginals = load_marginals(m)?;
            let spans =
                select_uncertain_spans(&marginals, a.budget, a.max_span_len, a.max_per_sentence);
            info!("{} spans selected", spans.len());
            write_spans(&a.out, &spans)
        }
        (None, Some(c)) => {
            let docs = load_corpus(c)?;
            let table =
                DfTable::build(docs.iter().flat_map(|d| &d.segments).map(|s| s.surfaces()))?;
            let ratio = match parse_ratio(a.genre_ratio.as_deref())? {
                Some(r) => r,
                None => GenreRatio::from_counts(
                    docs.iter().flat_map(|d| d.segments.iter().map(|_| d.genre)),
                )?,
            };
            let picked = fallback_rank_sentences(&docs, &table, &ratio, a.budget)?;
            write_lines(&a.out, picked.iter().map(|(d, s)| format!("{d}\t{s}")))
        }
        (None, None) => Err(Error::InvalidArgument(
            "give --marginals or --corpus".into(),
        )),
    }
}

fn ipa(a: IpaArgs) -> Result<()> {
    let chain = load_chain(&a.chain)?;
    let roman = a.roman.as_deref().map(RuleTable::resolve).transpose()?;
    let out: Vec<String> = read_lines(&a.input)?
        .iter()
        .map(|line| {
            line.split_whitespace()
                .map(|tok| {
                    let ipa = g2p_backoff(tok, &chain);
                    match &roman {
                        Some(t) => reromanize(&ipa, t),
                        None => ipa,
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    write_lines(&a.out, out)
}

fn run(a: RunArgs) -> Result<()> {
    let cfg = PipelineConfig::load(&a.config)?;
    let recipe = match (a.recipe.map(Recipe::from), cfg.recipe) {
        (Some(r), Some(c)) if r != c => {
            return Err(Error::Config {
                field: "recipe".into(),
                message: format!("config is for `{c}`, not `{r}`"),
            })
        }
        (Some(r), _) | (None, Some(r)) => r,
        (None, None) => {
            return Err(Error::Config {
                field: "recipe".into(),
                message: "no recipe on the command line or in the config".into(),
            })
        }
    };
    let out_dir = a
        .output_dir
        .or(cfg.output_dir.clone())
        .ok_or_else(|| Error::Config {
            field: "output_dir".into(),
            message: "no --output-dir and none in the config".into(),
        })?;
    if a.threads == Some(0) {
        return Err(Error::InvalidArgument(
            "--threads must be at least 1".into(),
        ));
    }
    let manifest = run_recipe_with_threads(recipe, &cfg, &out_dir, a.threads)?;
    info!("{recipe} done: {:?}", manifest.counts);
    info!("config hash {}", manifest.config_hash);
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<ExitCode> {
    let report = validate_outputs(&a.path, a.schema.into())?;
    for v in &report.violations {
        log::error!("{}:{v}", a.path.display());
    }
    if report.is_ok() {
        info!("{}: {} records OK", a.path.display(), report.records);
        Ok(ExitCode::SUCCESS)
    } else {
        info!(
            "{}: {} violations",
            a.path.display(),
            report.violations.len()
        );
        Ok(ExitCode::from(EXIT_VALIDATION))
    }
}
