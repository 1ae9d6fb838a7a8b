use std::path::{Path, PathBuf};

use lowres_core::pipeline::{
    run_recipe, validate_outputs, Manifest, PipelineConfig, Recipe, Schema,
};
use lowres_core::Error;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

fn run(config: &str, recipe: Recipe) -> (tempfile::TempDir, Manifest) {
    let cfg = PipelineConfig::load(&fixture(config)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_recipe(recipe, &cfg, dir.path()).unwrap();
    (dir, manifest)
}

fn assert_valid(path: &Path, schema: Schema) -> usize {
    let report = validate_outputs(path, schema).unwrap();
    assert!(
        report.is_ok(),
        "{}: {:?}",
        path.display(),
        report.violations
    );
    report.records
}

#[test]
fn ner_data_recipe() {
    let (dir, m) = run("ner/ner.toml", Recipe::NerData);
    assert_eq!(
        assert_valid(&dir.path().join("ner.conll"), Schema::Conll),
        40
    );
    assert_eq!(m.counts["sentences"], 40);
    assert!(m.counts["entities"] > 0);
    assert!(m.outputs.contains_key("negative_candidates.txt"));
    let on_disk = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(on_disk, m);
}

#[test]
fn edl_recipe() {
    let (dir, m) = run("edl/edl.toml", Recipe::Edl);
    let n = assert_valid(&dir.path().join("edl.tsv"), Schema::EdlTsv);
    assert_eq!(n as u64, m.counts["mentions"]);
    assert!(
        m.counts["linked"] > 0 && m.counts["nil"] > 0,
        "{:?}",
        m.counts
    );
    let text = std::fs::read_to_string(dir.path().join("edl.tsv")).unwrap();
    // transliterated surface linked through the lexicon
    assert!(
        text.lines()
            .any(|l| l.contains("\tKigari\t") && l.contains("\tKB-G001\t")),
        "{text}"
    );
    assert!(!text.contains("KB-G100"));
}

#[test]
fn mt_data_recipe() {
    let (dir, m) = run("mt/mt.toml", Recipe::MtData);
    let kept = m.counts["kept"];
    let removed = m.counts["removed"];
    assert_eq!(kept + removed, m.counts["aligned_pairs"]);
    assert!(removed > 0 && kept > removed, "{:?}", m.counts);
    for f in [
        "clean.tsv",
        "removed.tsv",
        "dnt.jsonl",
        "augmented.tsv",
        "ni_phrases.tsv",
        "filter_model.json",
    ] {
        assert!(m.outputs.contains_key(f), "{f}");
        assert!(dir.path().join(f).is_file());
    }
    let dnt = std::fs::read_to_string(dir.path().join("dnt.jsonl")).unwrap();
    assert!(m.counts["augmented"] > 0);
    assert!(dnt.contains("DNT_0") && !dnt.contains("\"masked\":\"https"));
}

#[test]
fn sf_recipe() {
    let (dir, m) = run("sf/sf.toml", Recipe::Sf);
    let n = assert_valid(&dir.path().join("frames.jsonl"), Schema::FramesJsonl);
    assert_eq!(n as u64, m.counts["frames"]);
    assert!(n > 0);
}

#[test]
fn missing_kb_names_the_field() {
    let mut cfg = PipelineConfig::load(&fixture("edl/edl.toml")).unwrap();
    cfg.link.kb = None;
    let dir = tempfile::tempdir().unwrap();
    let err = run_recipe(Recipe::Edl, &cfg, dir.path()).unwrap_err();
    assert!(
        matches!(&err, Error::Config { field, .. } if field == "link.kb"),
        "{err}"
    );
    assert!(err.is_validation());
}

#[test]
fn stage_errors_carry_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    std::fs::write(&corpus, "not json\n").unwrap();
    let mut cfg = PipelineConfig::load(&fixture("sf/sf.toml")).unwrap();
    cfg.corpus = Some(corpus);
    let err = run_recipe(Recipe::Sf, &cfg, &dir.path().join("out")).unwrap_err();
    assert!(matches!(&err, Error::Stage { stage: "load", .. }), "{err}");
}
