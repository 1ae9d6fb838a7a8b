//! TOML pipeline configuration.
//!
//! One section per stage; every tunable defaults to the value the original
//! system used. Relative paths are resolved against the config file's
//! directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gazetteer::SurfaceVote;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    NerData,
    Edl,
    MtData,
    Sf,
}

impl Recipe {
    pub const ALL: [Recipe; 4] = [Recipe::NerData, Recipe::Edl, Recipe::MtData, Recipe::Sf];

    pub fn as_str(self) -> &'static str {
        match self {
            Recipe::NerData => "ner-data",
            Recipe::Edl => "edl",
            Recipe::MtData => "mt-data",
            Recipe::Sf => "sf",
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| {
                Error::config(
                    "recipe",
                    format!("unknown recipe `{s}` (expected ner-data, edl, mt-data or sf)"),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectSection {
    /// Relevant terms with frequencies; selection is skipped when absent.
    pub terms: Option<PathBuf>,
    pub budget: Option<usize>,
    /// e.g. `NW=0.5,SN=0.3,WL=0.2`; defaults to the corpus mix.
    pub genre_ratio: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TagSection {
    pub gazetteer: Option<PathBuf>,
    pub negatives: Option<PathBuf>,
    pub window: usize,
    pub edit_propagate: bool,
    pub min_edit_dist: usize,
    pub doc_propagate: bool,
    pub vote: SurfaceVote,
    pub mark_unknown: bool,
    pub negative_top_k: usize,
}

impl Default for TagSection {
    fn default() -> Self {
        TagSection {
            gazetteer: None,
            negatives: None,
            window: 5,
            edit_propagate: true,
            min_edit_dist: 2,
            doc_propagate: true,
            vote: SurfaceVote::Majority,
            mark_unknown: true,
            negative_top_k: 1500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub kb: Option<PathBuf>,
    /// In priority order.
    pub lexicons: Vec<PathBuf>,
    pub threshold: f64,
    pub k_per_token: usize,
    pub gpe_loc_compatible: bool,
    pub nil_margin: Option<f64>,
    pub incident_countries: Vec<String>,
    pub neighbor_countries: Vec<String>,
    pub population_floor: u64,
}

impl Default for LinkSection {
    fn default() -> Self {
        LinkSection {
            kb: None,
            lexicons: Vec::new(),
            threshold: 0.5,
            k_per_token: 3,
            gpe_loc_compatible: true,
            nil_margin: None,
            incident_countries: Vec::new(),
            neighbor_countries: Vec::new(),
            population_floor: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MtSection {
    /// Paired JSON-lines documents `{doc_id, src, tgt}`.
    pub parallel: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub entity_lexicon: Option<PathBuf>,
    /// Monolingual corpus for native-informant phrase selection.
    pub monolingual: Option<PathBuf>,
    pub swap_rate: f64,
    pub filter_threshold: f64,
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub n_copies: usize,
    pub ni_n_max: usize,
    pub ni_top_n: usize,
    pub penalty_insert_delete: f64,
    pub penalty_merge: f64,
    pub variance: f64,
}

impl Default for MtSection {
    fn default() -> Self {
        MtSection {
            parallel: None,
            lexicon: None,
            entity_lexicon: None,
            monolingual: None,
            swap_rate: 0.1,
            filter_threshold: 0.5,
            l2: 1e-4,
            epochs: 300,
            learning_rate: 0.5,
            batch_size: 32,
            n_copies: 1,
            ni_n_max: 3,
            ni_top_n: 100,
            penalty_insert_delete: 4.0,
            penalty_merge: 1.5,
            variance: 6.8,
        }
    }
}

/// Sentence distance for frame location search: a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Sentences(usize),
    Unbounded,
}

impl Window {
    pub fn as_option(self) -> Option<usize> {
        match self {
            Window::Sentences(n) => Some(n),
            Window::Unbounded => None,
        }
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "unbounded" => Ok(Window::Unbounded),
            n => n.parse().map(Window::Sentences).map_err(|_| {
                Error::InvalidArgument(format!("window must be a number or `inf`, got `{n}`"))
            }),
        }
    }
}

impl Serialize for Window {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Window::Sentences(n) => s.serialize_u64(*n as u64),
            Window::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Window::Sentences(n as usize)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SfSection {
    /// Labeled documents `{doc_id, segments, types}` for keyword induction.
    pub labeled: Option<PathBuf>,
    pub affinity: Option<PathBuf>,
    pub neighbors: Option<PathBuf>,
    /// Ready-made keyword list; induction is skipped when given.
    pub keywords: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub urgency: Option<PathBuf>,
    pub top_n: usize,
    pub max_neighbors: usize,
    pub neighbor_cos: f64,
    pub th1: f64,
    pub top_t: usize,
    pub lambda: f64,
    /// Use the per-document top-k filter instead of the mean/std filter.
    pub topk: bool,
    pub k_cap: usize,
    pub location_window: Window,
}

impl Default for SfSection {
    fn default() -> Self {
        SfSection {
            labeled: None,
            affinity: None,
            neighbors: None,
            keywords: None,
            lemmas: None,
            urgency: None,
            top_n: 100,
            max_neighbors: 30,
            neighbor_cos: 0.70,
            th1: 0.8,
            top_t: 2,
            lambda: -1.5,
            topk: false,
            k_cap: 3,
            location_window: Window::Sentences(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub recipe: Option<Recipe>,
    pub seed: u64,
    /// Monolingual JSON-lines corpus shared by the ner-data, edl and sf recipes.
    pub corpus: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub select: SelectSection,
    pub tag: TagSection,
    pub link: LinkSection,
    pub mt: MtSection,
    pub sf: SfSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            recipe: None,
            seed: 13,
            corpus: None,
            output_dir: None,
            select: SelectSection::default(),
            tag: TagSection::default(),
            link: LinkSection::default(),
            mt: MtSection::default(),
            sf: SfSection::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("config")
                .to_string();
            Error::config(field, e.to_string().trim().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Makes every relative path absolute with respect to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in self.path_slots() {
            resolve(base, p);
        }
        for p in &mut self.link.lexicons {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    fn path_slots(&mut self) -> Vec<&mut Option<PathBuf>> {
        vec![
            &mut self.corpus,
            &mut self.output_dir,
            &mut self.select.terms,
            &mut self.tag.gazetteer,
            &mut self.tag.negatives,
            &mut self.link.kb,
            &mut self.mt.parallel,
            &mut self.mt.lexicon,
            &mut self.mt.entity_lexicon,
            &mut self.mt.monolingual,
            &mut self.sf.labeled,
            &mut self.sf.affinity,
            &mut self.sf.neighbors,
            &mut self.sf.keywords,
            &mut self.sf.lemmas,
            &mut self.sf.urgency,
        ]
    }

    /// Every input file set in the config, keyed by field name.
    pub fn inputs(&self) -> Vec<(String, PathBuf)> {
        let named: [(&str, &Option<PathBuf>); 15] = [
            ("corpus", &self.corpus),
            ("select.terms", &self.select.terms),
            ("tag.gazetteer", &self.tag.gazetteer),
            ("tag.negatives", &self.tag.negatives),
            ("link.kb", &self.link.kb),
            ("mt.parallel", &self.mt.parallel),
            ("mt.lexicon", &self.mt.lexicon),
            ("mt.entity_lexicon", &self.mt.entity_lexicon),
            ("mt.monolingual", &self.mt.monolingual),
            ("sf.labeled", &self.sf.labeled),
            ("sf.affinity", &self.sf.affinity),
            ("sf.neighbors", &self.sf.neighbors),
            ("sf.keywords", &self.sf.keywords),
            ("sf.lemmas", &self.sf.lemmas),
            ("sf.urgency", &self.sf.urgency),
        ];
        let mut out: Vec<(String, PathBuf)> = named
            .into_iter()
            .filter_map(|(k, p)| p.clone().map(|p| (k.to_string(), p)))
            .collect();
        out.extend(
            self.link
                .lexicons
                .iter()
                .enumerate()
                .map(|(i, p)| (format!("link.lexicons[{i}]"), p.clone())),
        );
        out
    }

    /// The configuration with all file paths removed: what is left are the
    /// tunables.
    pub fn tunables(&self) -> PipelineConfig {
        let mut t = self.clone();
        for p in t.path_slots() {
            *p = None;
        }
        t.link.lexicons.clear();
        t
    }

    /// Checks that the recipe has every input it needs, that those files
    /// exist, and that tunables are in range.
    pub fn validate(&self, recipe: Recipe) -> Result<()> {
        let need = |field: &str, p: &Option<PathBuf>| -> Result<()> {
            match p {
                None => Err(Error::config(
                    field,
                    format!("required by the {recipe} recipe"),
                )),
                Some(_) => Ok(()),
            }
        };
        match recipe {
            Recipe::NerData => {
                need("corpus", &self.corpus)?;
                need("tag.gazetteer", &self.tag.gazetteer)?;
                if self.select.terms.is_some() != self.select.budget.is_some() {
                    return Err(Error::config(
                        "select.budget",
                        "select.terms and select.budget go together",
                    ));
                }
            }
            Recipe::Edl => {
                need("corpus", &self.corpus)?;
                need("tag.gazetteer", &self.tag.gazetteer)?;
                need("link.kb", &self.link.kb)?;
            }
            Recipe::MtData => {
                need("mt.parallel", &self.mt.parallel)?;
                need("mt.lexicon", &self.mt.lexicon)?;
            }
            Recipe::Sf => {
                need("corpus", &self.corpus)?;
                if self.sf.keywords.is_none() {
                    need("sf.labeled", &self.sf.labeled)?;
                    need("sf.affinity", &self.sf.affinity)?;
                }
            }
        }
        for (field, path) in self.inputs() {
            if !path.is_file() {
                return Err(Error::config(
                    field,
                    format!("file not found: {}", path.display()),
                ));
            }
        }
        self.check_ranges()
    }

    fn check_ranges(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(field, msg))
            }
        };
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        check(self.tag.window >= 1, "tag.window", "must be at least 1")?;
        check(
            self.tag.min_edit_dist >= 1,
            "tag.min_edit_dist",
            "must be at least 1",
        )?;
        check(
            unit(self.link.threshold),
            "link.threshold",
            "must be in [0, 1]",
        )?;
        check(
            self.link.k_per_token >= 1,
            "link.k_per_token",
            "must be at least 1",
        )?;
        check(
            self.link.nil_margin.is_none_or(|m| m >= 0.0),
            "link.nil_margin",
            "must be non-negative",
        )?;
        check(
            (0.0..=0.5).contains(&self.mt.swap_rate),
            "mt.swap_rate",
            "must be in [0, 0.5]",
        )?;
        check(
            unit(self.mt.filter_threshold),
            "mt.filter_threshold",
            "must be in [0, 1]",
        )?;
        check(self.mt.l2 >= 0.0, "mt.l2", "must be non-negative")?;
        check(
            self.mt.learning_rate > 0.0,
            "mt.learning_rate",
            "must be positive",
        )?;
        check(
            self.mt.batch_size >= 1,
            "mt.batch_size",
            "must be at least 1",
        )?;
        check(self.mt.ni_n_max >= 1, "mt.ni_n_max", "must be at least 1")?;
        check(self.mt.variance > 0.0, "mt.variance", "must be positive")?;
        check(
            (-1.0..=1.0).contains(&self.sf.th1),
            "sf.th1",
            "must be in [-1, 1]",
        )?;
        check(
            (-1.0..=1.0).contains(&self.sf.neighbor_cos),
            "sf.neighbor_cos",
            "must be in [-1, 1]",
        )?;
        check(self.sf.top_t >= 1, "sf.top_t", "must be at least 1")?;
        check(self.sf.k_cap >= 1, "sf.k_cap", "must be at least 1")?;
        check(self.sf.lambda.is_finite(), "sf.lambda", "must be finite")?;
        if let Some(r) = &self.select.genre_ratio {
            crate::relevance::GenreRatio::parse(r)
                .map_err(|e| Error::config("select.genre_ratio", e.to_string()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_original_system() {
        let c = PipelineConfig::parse("").unwrap();
        assert_eq!(c.mt.swap_rate, 0.1);
        assert_eq!(c.mt.filter_threshold, 0.5);
        assert_eq!(c.tag.min_edit_dist, 2);
        assert_eq!(c.link.population_floor, 50_000);
        assert_eq!(c.sf.th1, 0.8);
        assert_eq!(c.sf.neighbor_cos, 0.70);
        assert_eq!(c.sf.lambda, -1.5);
        assert_eq!(c.sf.k_cap, 3);
        assert_eq!(c.tag.window, 5);
        assert_eq!(c.tag.negative_top_k, 1500);
    }

    #[test]
    fn parsing() {
        let c = PipelineConfig::parse(
            "recipe = \"sf\"\ncorpus = \"c.jsonl\"\n[sf]\nlocation_window = \"inf\"\nth1 = 0.9\n[tag]\nvote = \"first-seen\"\n",
        )
        .unwrap();
        assert_eq!(c.recipe, Some(Recipe::Sf));
        assert_eq!(c.sf.location_window, Window::Unbounded);
        assert_eq!(c.sf.th1, 0.9);
        assert_eq!(c.tag.vote, SurfaceVote::FirstSeen);
        let c = PipelineConfig::parse("[sf]\nlocation_window = 2\n").unwrap();
        assert_eq!(c.sf.location_window, Window::Sentences(2));

        let err = PipelineConfig::parse("[sf]\nth_one = 0.9\n").unwrap_err();
        assert!(
            matches!(&err, Error::Config { field, .. } if field == "th_one"),
            "{err}"
        );
        assert!(err.is_validation());
    }

    #[test]
    fn validation_names_the_field() {
        let c = PipelineConfig::parse(
            "corpus = \"/nonexistent/c.jsonl\"\n[tag]\ngazetteer = \"/nonexistent/g.tsv\"",
        )
        .unwrap();
        let err = c.validate(Recipe::Edl).unwrap_err();
        assert!(
            matches!(&err, Error::Config { field, .. } if field == "link.kb"),
            "{err}"
        );
        let err = c.validate(Recipe::NerData).unwrap_err();
        assert!(
            matches!(&err, Error::Config { field, .. } if field == "corpus"),
            "{err}"
        );

        let mut c = PipelineConfig::default();
        c.mt.swap_rate = 0.7;
        assert!(
            matches!(c.check_ranges(), Err(Error::Config { field, .. }) if field == "mt.swap_rate")
        );
    }

    #[test]
    fn paths_resolve_against_base() {
        let mut c = PipelineConfig::parse(
            "corpus = \"data/c.jsonl\"\n[link]\nlexicons = [\"a.tsv\", \"/abs/b.tsv\"]",
        )
        .unwrap();
        c.resolve_paths(Path::new("/cfg"));
        assert_eq!(c.corpus.as_deref(), Some(Path::new("/cfg/data/c.jsonl")));
        assert_eq!(
            c.link.lexicons,
            [PathBuf::from("/cfg/a.tsv"), PathBuf::from("/abs/b.tsv")]
        );
        assert!(c.tunables().inputs().is_empty());
    }
}
