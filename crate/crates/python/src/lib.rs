//! Python bindings: `import lowres_kit`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use lowres_core::corpus::tokenize_surfaces;
use lowres_core::edit_distance::levenshtein;
use lowres_core::parallel::{dnt_restore, dnt_tag, DntMask};
use lowres_core::pipeline::{
    run_recipe_with_threads, validate_outputs, PipelineConfig, Recipe, Schema,
};
use lowres_core::transliterate::{g2p_backoff, load_chain};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: lowres_core::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else if matches!(e, lowres_core::Error::Io { .. }) {
        PyOSError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Run a recipe from a TOML config; returns the manifest counts.
#[pyfunction]
#[pyo3(signature = (config, recipe=None, output_dir=None, threads=None))]
fn run(
    py: Python<'_>,
    config: PathBuf,
    recipe: Option<&str>,
    output_dir: Option<PathBuf>,
    threads: Option<usize>,
) -> PyResult<BTreeMap<String, u64>> {
    let cfg = PipelineConfig::load(&config).map_err(to_py)?;
    let recipe: Recipe = match (recipe, cfg.recipe) {
        (Some(r), _) => r.parse().map_err(to_py)?,
        (None, Some(r)) => r,
        (None, None) => return Err(PyValueError::new_err("no recipe given")),
    };
    let out = output_dir
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| PyValueError::new_err("no output_dir given"))?;
    let manifest = py
        .detach(|| run_recipe_with_threads(recipe, &cfg, &out, threads))
        .map_err(to_py)?;
    Ok(manifest.counts)
}

/// Check an output file; returns `(records, [(line, message), ...])`.
#[pyfunction]
fn validate(path: PathBuf, schema: &str) -> PyResult<(usize, Vec<(usize, String)>)> {
    let schema: Schema = schema.parse().map_err(to_py)?;
    let report = validate_outputs(&path, schema).map_err(to_py)?;
    Ok((
        report.records,
        report
            .violations
            .into_iter()
            .map(|v| (v.line, v.message))
            .collect(),
    ))
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    tokenize_surfaces(text)
}

#[pyfunction]
fn edit_distance(a: &str, b: &str) -> usize {
    levenshtein(a, b)
}

/// Transcribe one token with a comma-separated chain of rule tables.
#[pyfunction]
fn g2p(token: &str, chain: &str) -> PyResult<String> {
    let chain = load_chain(chain).map_err(to_py)?;
    Ok(g2p_backoff(token, &chain))
}

/// Mask do-not-translate tokens; returns `(masked_tokens, slots)`.
#[pyfunction]
fn dnt_mask(tokens: Vec<String>) -> (Vec<String>, BTreeMap<String, String>) {
    let m = dnt_tag(&tokens);
    (m.masked, m.slots)
}

#[pyfunction]
fn dnt_unmask(tokens: Vec<String>, slots: BTreeMap<String, String>) -> Vec<String> {
    let mask = DntMask {
        masked: Vec::new(),
        slots,
    };
    dnt_restore(&tokens, &mask).tokens
}

#[pymodule]
fn lowres_kit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(edit_distance, m)?)?;
    m.add_function(wrap_pyfunction!(g2p, m)?)?;
    m.add_function(wrap_pyfunction!(dnt_mask, m)?)?;
    m.add_function(wrap_pyfunction!(dnt_unmask, m)?)?;
    Ok(())
}
