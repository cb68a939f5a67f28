//! Python bindings: `import cmxtag`.

use std::path::PathBuf;

use ::cmxtag::cmi::{cmi_from_tags, corpus_cmi_report_with, CmiReport, IndependentTags};
use ::cmxtag::crf::{load_model, save_model, train, CrfModel, TrainConfig};
use ::cmxtag::eval::{evaluate as evaluate_corpora, generate_synthetic_corpus, EvalReport, LangPair};
use ::cmxtag::features::FeatureConfig;
use ::cmxtag::tuning::{grid_search as run_grid, GridResult, GridSpec};
use ::cmxtag::{parse_corpus, split_corpus, write_corpus, Corpus, Error, LanguageTag, TagsetMode, Token, Utterance};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_arg<T: std::str::FromStr>(value: &str, what: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| PyValueError::new_err(format!("invalid {what} {value:?}: {e}")))
}

#[derive(FromPyObject)]
enum TokenTuple {
    Labelled(String, String, Option<String>),
    Bare(String, String),
}

/// An annotated corpus: utterances of (form, lang, pos) tokens.
#[pyclass(name = "Corpus", module = "cmxtag", frozen)]
pub struct PyCorpus {
    inner: Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Builds a corpus from a list of utterances, each a list of
    /// `(form, lang)` or `(form, lang, pos)` tuples.
    #[new]
    fn new(utterances: Vec<Vec<TokenTuple>>) -> PyResult<Self> {
        let mut utts = Vec::with_capacity(utterances.len());
        for tokens in utterances {
            let mut out = Vec::with_capacity(tokens.len());
            for token in tokens {
                let (form, lang, pos) = match token {
                    TokenTuple::Labelled(f, l, p) => (f, l, p),
                    TokenTuple::Bare(f, l) => (f, l, None),
                };
                let lang: LanguageTag = parse_arg(&lang, "language tag")?;
                let token = Token::new(form, lang, pos.as_deref());
                token.validate().map_err(PyValueError::new_err)?;
                out.push(token);
            }
            if out.is_empty() {
                return Err(PyValueError::new_err("utterances must have at least one token"));
            }
            utts.push(Utterance::new(out));
        }
        Ok(PyCorpus {
            inner: Corpus::new(utts),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (text, mode = "open", strict = false))]
    fn parse(text: &str, mode: &str, strict: bool) -> PyResult<Self> {
        let mode: TagsetMode = parse_arg(mode, "tagset mode")?;
        let inner = parse_corpus(text, mode, strict).map_err(to_py)?;
        Ok(PyCorpus { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, mode = "open", strict = false))]
    fn read(path: PathBuf, mode: &str, strict: bool) -> PyResult<Self> {
        let text =
            std::fs::read_to_string(&path).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text, mode, strict)
    }

    fn to_tsv(&self) -> PyResult<String> {
        write_corpus(&self.inner).map_err(to_py)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        let text = self.to_tsv()?;
        std::fs::write(&path, text).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus(utterances={}, tokens={})",
            self.inner.len(),
            self.inner.token_count()
        )
    }

    #[getter]
    fn token_count(&self) -> usize {
        self.inner.token_count()
    }

    /// Utterances as lists of `(form, lang, pos)` tuples.
    #[getter]
    fn utterances(&self) -> Vec<Vec<(String, String, Option<String>)>> {
        self.inner
            .utterances
            .iter()
            .map(|u| {
                u.tokens
                    .iter()
                    .map(|t| (t.form.clone(), t.lang.to_string(), t.pos.clone()))
                    .collect()
            })
            .collect()
    }

    #[getter]
    fn meta(&self) -> Vec<(String, String)> {
        self.inner.meta.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    /// Corpus-level CMI statistics as a dict.
    #[pyo3(signature = (univ_only = false))]
    fn cmi<'py>(&self, py: Python<'py>, univ_only: bool) -> PyResult<Bound<'py, PyDict>> {
        let independent = if univ_only {
            IndependentTags::UnivOnly
        } else {
            IndependentTags::AllNonLanguage
        };
        let report = corpus_cmi_report_with(&self.inner, independent).map_err(to_py)?;
        cmi_dict(py, &report)
    }

    /// K-fold `(train, held_out)` pairs after a seeded shuffle.
    #[pyo3(signature = (folds = 5, seed = 42))]
    fn split(&self, folds: usize, seed: u64) -> PyResult<Vec<(PyCorpus, PyCorpus)>> {
        let parts = split_corpus(&self.inner, folds, seed).map_err(to_py)?;
        Ok(parts
            .into_iter()
            .map(|(a, b)| (PyCorpus { inner: a }, PyCorpus { inner: b }))
            .collect())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

fn cmi_dict<'py>(py: Python<'py>, r: &CmiReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("cmi_all", r.cmi_all)?;
    d.set_item("cmi_mixed", r.cmi_mixed)?;
    d.set_item("mixed_pct", r.mixed_pct)?;
    d.set_item("num_utt", r.num_utt)?;
    d.set_item(
        "per_utterance",
        r.per_utterance.iter().map(|v| v.value()).collect::<Vec<f64>>(),
    )?;
    Ok(d)
}

fn eval_dict<'py>(py: Python<'py>, r: &EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let per_tag = PyDict::new(py);
    for (tag, s) in &r.per_tag {
        let row = PyDict::new(py);
        row.set_item("precision", s.precision)?;
        row.set_item("recall", s.recall)?;
        row.set_item("f1", s.f1)?;
        row.set_item("support", s.support)?;
        per_tag.set_item(tag, row)?;
    }
    let d = PyDict::new(py);
    d.set_item("weighted_f1", r.weighted_f1)?;
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("token_count", r.token_count)?;
    d.set_item("per_tag", per_tag)?;
    Ok(d)
}

fn grid_dict<'py>(py: Python<'py>, r: &GridResult) -> PyResult<Bound<'py, PyDict>> {
    let rows = r
        .rows
        .iter()
        .map(|row| {
            let d = PyDict::new(py);
            d.set_item("c1", row.c1)?;
            d.set_item("c2", row.c2)?;
            d.set_item("fold_scores", row.fold_scores.clone())?;
            d.set_item("mean_f1", row.mean_f1)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let d = PyDict::new(py);
    d.set_item("rows", rows)?;
    d.set_item("best_c1", r.best_c1)?;
    d.set_item("best_c2", r.best_c2)?;
    Ok(d)
}

#[allow(clippy::too_many_arguments)]
fn train_config(
    c1: f64,
    c2: f64,
    max_iterations: usize,
    tolerance: f64,
    window: usize,
    max_ngram: usize,
    min_count: u32,
    use_lang: bool,
) -> TrainConfig {
    TrainConfig {
        c1,
        c2,
        max_iterations,
        tolerance,
        features: FeatureConfig {
            window,
            max_ngram,
            min_count,
            use_lang,
            ..FeatureConfig::default()
        },
    }
}

/// A trained linear-chain CRF tagger.
#[pyclass(name = "Model", module = "cmxtag", frozen)]
pub struct PyModel {
    inner: CrfModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (
        corpus, c1 = 0.05, c2 = 0.1, max_iterations = 200, tolerance = 1e-5,
        window = 2, max_ngram = 3, min_count = 1, use_lang = true
    ))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        corpus: PyRef<'_, PyCorpus>,
        c1: f64,
        c2: f64,
        max_iterations: usize,
        tolerance: f64,
        window: usize,
        max_ngram: usize,
        min_count: u32,
        use_lang: bool,
    ) -> PyResult<Self> {
        let config = train_config(
            c1,
            c2,
            max_iterations,
            tolerance,
            window,
            max_ngram,
            min_count,
            use_lang,
        );
        let corpus = &corpus.inner;
        let inner = py.detach(|| train(corpus, &config)).map_err(to_py)?;
        Ok(PyModel { inner })
    }

    /// Returns a copy of `corpus` with predicted POS labels.
    fn tag(&self, py: Python<'_>, corpus: PyRef<'_, PyCorpus>) -> PyResult<PyCorpus> {
        let corpus = &corpus.inner;
        let inner = py.detach(|| self.inner.tag_corpus(corpus)).map_err(to_py)?;
        Ok(PyCorpus { inner })
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn num_features(&self) -> usize {
        self.inner.feature_index().len()
    }

    #[getter]
    fn zero_state_weights(&self) -> usize {
        self.inner.zero_state_weights()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &save_model(&self.inner))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PyModel {
            inner: load_model(data).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        std::fs::write(&path, save_model(&self.inner))
            .map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let data = std::fs::read(&path).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&data)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(labels={}, features={})",
            self.inner.labels().len(),
            self.inner.feature_index().len()
        )
    }
}

/// Synthetic code-mixed corpus with a learnable tagging function.
#[pyfunction]
#[pyo3(signature = (num_utterances = 100, langpair = "hi", mixing = 0.3, seed = 42))]
fn synth(num_utterances: usize, langpair: &str, mixing: f64, seed: u64) -> PyResult<PyCorpus> {
    let pair: LangPair = parse_arg(langpair, "language pair")?;
    let inner = generate_synthetic_corpus(seed, num_utterances, pair, mixing).map_err(to_py)?;
    Ok(PyCorpus { inner })
}

/// CMI of a single utterance given its language tags.
#[pyfunction]
#[pyo3(signature = (tags, univ_only = false))]
fn utterance_cmi(tags: Vec<String>, univ_only: bool) -> PyResult<f64> {
    let tags = tags
        .iter()
        .map(|t| parse_arg::<LanguageTag>(t, "language tag"))
        .collect::<PyResult<Vec<_>>>()?;
    let independent = if univ_only {
        IndependentTags::UnivOnly
    } else {
        IndependentTags::AllNonLanguage
    };
    Ok(cmi_from_tags(tags, independent).value())
}

#[pyfunction]
fn evaluate<'py>(
    py: Python<'py>,
    gold: PyRef<'_, PyCorpus>,
    pred: PyRef<'_, PyCorpus>,
) -> PyResult<Bound<'py, PyDict>> {
    let report = evaluate_corpora(&gold.inner, &pred.inner).map_err(to_py)?;
    eval_dict(py, &report)
}

#[pyfunction]
#[pyo3(signature = (
    corpus, c1_values = vec![0.0, 0.05, 0.5, 1.0], c2_values = vec![0.01, 0.1, 1.0],
    folds = 5, seed = 42, max_iterations = 200, tolerance = 1e-5
))]
#[allow(clippy::too_many_arguments)]
fn grid_search<'py>(
    py: Python<'py>,
    corpus: PyRef<'_, PyCorpus>,
    c1_values: Vec<f64>,
    c2_values: Vec<f64>,
    folds: usize,
    seed: u64,
    max_iterations: usize,
    tolerance: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = GridSpec {
        c1_values,
        c2_values,
        folds,
        seed,
    };
    let base = TrainConfig {
        max_iterations,
        tolerance,
        ..TrainConfig::default()
    };
    let corpus = &corpus.inner;
    let result = py.detach(|| run_grid(corpus, &grid, &base)).map_err(to_py)?;
    grid_dict(py, &result)
}

#[pymodule]
#[pyo3(name = "cmxtag")]
fn cmxtag_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(utterance_cmi, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
