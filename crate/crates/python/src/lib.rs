//! Python bindings for the repoctx context engine.

use std::path::PathBuf;

use pyo3::exceptions::{PyLookupError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use repoctx::eval::{self, SynthConfig};
use repoctx::{
    AssembledContext, AssemblyOptions, ChunkConfig, ChunkStore, CompletionQuery, ContextEngine, Error,
    ExtensionFilter, HashingEmbedder, NeighborOrder, PositionedHit, RankedHit, RecentFile, RetrievalConfig,
    Side,
};

fn to_py(err: Error) -> PyErr {
    let message = err.to_string();
    match err.category() {
        "config" | "parse" | "integrity" => PyValueError::new_err(message),
        "lookup" => PyLookupError::new_err(message),
        "io" => PyOSError::new_err(message),
        _ => PyRuntimeError::new_err(message),
    }
}

#[pyclass(name = "Chunk", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyChunk {
    id: String,
    file_path: String,
    start_line: usize,
    end_line: usize,
    text: String,
    prev_id: Option<String>,
    next_id: Option<String>,
}

impl From<&repoctx::Chunk> for PyChunk {
    fn from(c: &repoctx::Chunk) -> Self {
        Self {
            id: c.id.clone(),
            file_path: c.file_path.clone(),
            start_line: c.start_line,
            end_line: c.end_line,
            text: c.text.clone(),
            prev_id: c.prev_id.clone(),
            next_id: c.next_id.clone(),
        }
    }
}

#[pymethods]
impl PyChunk {
    fn __repr__(&self) -> String {
        format!("Chunk({:?})", self.id)
    }
}

#[pyclass(name = "Hit", frozen, get_all)]
struct PyHit {
    similar: PyChunk,
    neighbor: Option<PyChunk>,
    side: String,
    score: f64,
    rank: usize,
}

impl From<&PositionedHit> for PyHit {
    fn from(h: &PositionedHit) -> Self {
        Self {
            similar: (&h.similar).into(),
            neighbor: h.neighbor.as_ref().map(Into::into),
            side: h.side.to_string(),
            score: h.fused_score,
            rank: h.rank,
        }
    }
}

#[pymethods]
impl PyHit {
    fn __repr__(&self) -> String {
        format!("Hit({} {} {:?} {:.6})", self.side, self.rank, self.similar.id, self.score)
    }
}

#[pyclass(name = "Section", frozen, get_all)]
struct PySection {
    label: String,
    source_path: String,
    start_line: usize,
    end_line: usize,
    chunk_id: Option<String>,
    text: String,
}

#[pyclass(name = "Context", frozen, get_all)]
struct PyContext {
    rendered: String,
    size: usize,
    sections: Vec<Py<PySection>>,
}

impl PyContext {
    fn new(py: Python<'_>, ctx: AssembledContext) -> PyResult<Self> {
        let sections = ctx
            .sections
            .iter()
            .map(|s| {
                let label = serde_json::to_value(s.label)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default();
                Py::new(
                    py,
                    PySection {
                        label,
                        source_path: s.source_path.clone(),
                        start_line: s.start_line,
                        end_line: s.end_line,
                        chunk_id: s.chunk_id.clone(),
                        text: s.text.clone(),
                    },
                )
            })
            .collect::<PyResult<_>>()?;
        Ok(Self {
            rendered: ctx.rendered,
            size: ctx.size,
            sections,
        })
    }
}

#[pymethods]
impl PyContext {
    fn __str__(&self) -> String {
        self.rendered.clone()
    }

    fn __len__(&self) -> usize {
        self.size
    }
}

fn retrieval_config(k: usize, w_lexical: f64, w_semantic: f64, rrf_k: f64, top_n: usize) -> RetrievalConfig {
    let mut config = RetrievalConfig {
        k,
        candidate_pool: top_n,
        ..RetrievalConfig::default()
    };
    config.fusion.weights = vec![w_lexical, w_semantic];
    config.fusion.rrf_k = rrf_k;
    config.fusion.top_n = top_n;
    config
}

/// An indexed repository answering completion-context queries.
#[pyclass(name = "Engine", frozen)]
struct PyEngine {
    inner: ContextEngine,
}

#[pymethods]
impl PyEngine {
    #[staticmethod]
    #[pyo3(signature = (repo_root, chunk_lines=20, overlap_lines=5, extensions=None, dim=384))]
    fn from_repo(
        py: Python<'_>,
        repo_root: PathBuf,
        chunk_lines: usize,
        overlap_lines: usize,
        extensions: Option<Vec<String>>,
        dim: usize,
    ) -> PyResult<Self> {
        let config = ChunkConfig::new(chunk_lines, overlap_lines).map_err(to_py)?;
        let filter = extensions.map(ExtensionFilter::new).unwrap_or_default();
        let embedder = HashingEmbedder::new(dim).map_err(to_py)?;
        let inner = py
            .detach(|| {
                ContextEngine::index_repository(
                    &repo_root,
                    &filter,
                    &config,
                    Box::new(embedder),
                    RetrievalConfig::default(),
                )
            })
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Loads a chunk store file; the repository id is the path as given.
    #[staticmethod]
    #[pyo3(signature = (store_path, dim=384))]
    fn from_store(py: Python<'_>, store_path: PathBuf, dim: usize) -> PyResult<Self> {
        let embedder = HashingEmbedder::new(dim).map_err(to_py)?;
        let inner = py
            .detach(|| {
                let store = ChunkStore::load(&store_path)?;
                ContextEngine::new(
                    store_path.display().to_string(),
                    store,
                    Box::new(embedder),
                    repoctx::Bm25Params::default(),
                    RetrievalConfig::default(),
                )
            })
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn repo_id(&self) -> &str {
        self.inner.repo_id()
    }

    fn __len__(&self) -> usize {
        self.inner.store().len()
    }

    fn get(&self, chunk_id: &str) -> Option<PyChunk> {
        self.inner.store().get(chunk_id).map(Into::into)
    }

    fn save_store(&self, path: PathBuf) -> PyResult<()> {
        self.inner.store().save(&path).map_err(to_py)
    }

    /// Fused (chunk_id, score) list for free text.
    #[pyo3(signature = (text, top_n=30, w_lexical=0.2, w_semantic=0.8, rrf_k=60.0))]
    fn retrieve(&self, text: &str, top_n: usize, w_lexical: f64, w_semantic: f64, rrf_k: f64) -> PyResult<Vec<(String, f64)>> {
        let config = retrieval_config(top_n, w_lexical, w_semantic, rrf_k, top_n);
        let hits = self.inner.retrieve(text, &config).map_err(to_py)?;
        Ok(hits.into_iter().map(|h| (h.chunk_id, h.score)).collect())
    }

    /// Positioned hits for one side ("prefix" or "suffix").
    #[pyo3(signature = (side, prefix, suffix, completion_file_path="", completion_file_content="", recent_files=None, k=10, w_lexical=0.2, w_semantic=0.8, rrf_k=60.0, top_n=30))]
    #[allow(clippy::too_many_arguments)]
    fn collect(
        &self,
        side: &str,
        prefix: &str,
        suffix: &str,
        completion_file_path: &str,
        completion_file_content: &str,
        recent_files: Option<Vec<(String, String)>>,
        k: usize,
        w_lexical: f64,
        w_semantic: f64,
        rrf_k: f64,
        top_n: usize,
    ) -> PyResult<Vec<PyHit>> {
        let side = match side {
            "prefix" => Side::Prefix,
            "suffix" => Side::Suffix,
            other => return Err(PyValueError::new_err(format!("side must be prefix or suffix, got {other:?}"))),
        };
        let q = self.query(prefix, suffix, completion_file_path, completion_file_content, recent_files);
        let config = retrieval_config(k, w_lexical, w_semantic, rrf_k, top_n);
        let hits = self.inner.collect_hits(&q, side, &config).map_err(to_py)?;
        Ok(hits.iter().map(Into::into).collect())
    }

    #[pyo3(signature = (prefix, suffix, completion_file_path="", completion_file_content="", recent_files=None, k=10, budget_chars=32000, neighbors=true, neighbor_first=false, completion_file=true, recent=true, prefix_hits=true, suffix_hits=true))]
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &self,
        py: Python<'_>,
        prefix: &str,
        suffix: &str,
        completion_file_path: &str,
        completion_file_content: &str,
        recent_files: Option<Vec<(String, String)>>,
        k: usize,
        budget_chars: usize,
        neighbors: bool,
        neighbor_first: bool,
        completion_file: bool,
        recent: bool,
        prefix_hits: bool,
        suffix_hits: bool,
    ) -> PyResult<PyContext> {
        if budget_chars == 0 {
            return Err(PyValueError::new_err("config: budget_chars must be at least 1"));
        }
        let q = self.query(prefix, suffix, completion_file_path, completion_file_content, recent_files);
        let config = RetrievalConfig {
            k,
            ..self.inner.retrieval().clone()
        };
        let options = AssemblyOptions {
            include_completion_file: completion_file,
            include_recent_files: recent,
            include_prefix_hits: prefix_hits,
            include_suffix_hits: suffix_hits,
            attach_neighbors: neighbors,
            neighbor_order: if neighbor_first {
                NeighborOrder::NeighborFirst
            } else {
                NeighborOrder::SimilarFirst
            },
            budget_chars,
        };
        let ctx = self.inner.build_context(&q, &config, &options).map_err(to_py)?;
        PyContext::new(py, ctx)
    }

    fn __repr__(&self) -> String {
        format!("Engine(repo_id={:?}, chunks={})", self.inner.repo_id(), self.inner.store().len())
    }
}

impl PyEngine {
    fn query(
        &self,
        prefix: &str,
        suffix: &str,
        completion_file_path: &str,
        completion_file_content: &str,
        recent_files: Option<Vec<(String, String)>>,
    ) -> CompletionQuery {
        CompletionQuery {
            prefix: prefix.into(),
            suffix: suffix.into(),
            completion_file_path: completion_file_path.into(),
            completion_file_content: completion_file_content.into(),
            recent_files: recent_files
                .unwrap_or_default()
                .into_iter()
                .map(|(path, content)| RecentFile { path, content })
                .collect(),
            repo_id: self.inner.repo_id().into(),
        }
    }
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    repoctx::tokenize(text)
}

#[pyfunction]
#[pyo3(signature = (file_path, content, chunk_lines=20, overlap_lines=5))]
fn chunk_file(file_path: &str, content: &str, chunk_lines: usize, overlap_lines: usize) -> PyResult<Vec<PyChunk>> {
    let config = ChunkConfig::new(chunk_lines, overlap_lines).map_err(to_py)?;
    let chunks = repoctx::chunk_file(file_path, content, &config).map_err(to_py)?;
    Ok(chunks.iter().map(Into::into).collect())
}

#[pyfunction]
#[pyo3(signature = (text, dim=384))]
fn embed_hashing(text: &str, dim: usize) -> PyResult<Vec<f64>> {
    if dim == 0 {
        return Err(PyValueError::new_err("config: embedding dimension must be at least 1"));
    }
    Ok(repoctx::embed_hashing(text, dim).values().to_vec())
}

/// Weighted reciprocal rank fusion of ranked id lists.
#[pyfunction]
#[pyo3(signature = (lists, weights, rrf_k=60.0, top_n=30))]
fn rrf_fuse(lists: Vec<Vec<String>>, weights: Vec<f64>, rrf_k: f64, top_n: usize) -> PyResult<Vec<(String, f64)>> {
    let lists: Vec<Vec<RankedHit>> = lists
        .into_iter()
        .map(|ids| {
            ids.into_iter()
                .enumerate()
                .map(|(i, chunk_id)| RankedHit {
                    chunk_id,
                    score: 0.0,
                    rank: i + 1,
                })
                .collect()
        })
        .collect();
    let config = repoctx::FusionConfig { weights, rrf_k, top_n };
    let fused = repoctx::rrf_fuse(&lists, &config).map_err(to_py)?;
    Ok(fused.into_iter().map(|h| (h.chunk_id, h.score)).collect())
}

#[pyfunction]
#[pyo3(signature = (reference, hypothesis, n_max=6, beta=2.0))]
fn chrf(reference: &str, hypothesis: &str, n_max: usize, beta: f64) -> f64 {
    eval::chrf(reference, hypothesis, n_max, beta)
}

#[pyfunction]
fn context_recall(context: &str, middle: &str) -> f64 {
    eval::context_recall(context, middle)
}

/// Writes a synthetic repository under `root` and returns its records as
/// dicts with prefix, suffix, middle and completion file fields.
#[pyfunction]
#[pyo3(signature = (root, seed=0, file_count=200, pattern_count=20))]
fn generate_synthetic_repo(
    py: Python<'_>,
    root: PathBuf,
    seed: u64,
    file_count: usize,
    pattern_count: usize,
) -> PyResult<Vec<Py<PyAny>>> {
    let repo = eval::generate_synthetic_repo(&root, &SynthConfig::new(seed, file_count, pattern_count))
        .map_err(to_py)?;
    repo.records
        .iter()
        .map(|r| {
            let d = pyo3::types::PyDict::new(py);
            d.set_item("prefix", &r.query.prefix)?;
            d.set_item("suffix", &r.query.suffix)?;
            d.set_item("middle", &r.middle)?;
            d.set_item("completion_file_path", &r.query.completion_file_path)?;
            d.set_item("completion_file_content", &r.query.completion_file_content)?;
            let recent: Vec<(String, String)> = r
                .query
                .recent_files
                .iter()
                .map(|f| (f.path.clone(), f.content.clone()))
                .collect();
            d.set_item("recent_files", recent)?;
            Ok(d.into_any().unbind())
        })
        .collect()
}

#[pymodule(name = "repoctx")]
fn repoctx_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChunk>()?;
    m.add_class::<PyHit>()?;
    m.add_class::<PySection>()?;
    m.add_class::<PyContext>()?;
    m.add_class::<PyEngine>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(chunk_file, m)?)?;
    m.add_function(wrap_pyfunction!(embed_hashing, m)?)?;
    m.add_function(wrap_pyfunction!(rrf_fuse, m)?)?;
    m.add_function(wrap_pyfunction!(chrf, m)?)?;
    m.add_function(wrap_pyfunction!(context_recall, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic_repo, m)?)?;
    Ok(())
}
