//! Valence-pattern queries and the JSON documents the HTTP service returns.
//!
//! Responses are built here so that the service and library callers
//! serialize byte-identical documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fndata::{
    corpus_stats, jsonl, AnnoSetId, AnnotationSet, Corpus, Frame, FrameId, LuId, Pos,
};
use crate::valence::{parse_units, ValenceError, ValenceIndex, ValencePattern};

pub const API_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("malformed query: {0}")]
    Malformed(#[from] ValenceError),
    #[error("limit must be at least 1")]
    BadLimit,
    #[error("unknown frame {0:?}")]
    UnknownFrame(String),
    #[error("no frame has all of the frame elements {0:?}")]
    UnresolvedFrame(Vec<String>),
    #[error("frame elements {fes:?} occur in several frames: {frames:?}")]
    AmbiguousFrame {
        fes: Vec<String>,
        frames: Vec<String>,
    },
    #[error("unknown {0}")]
    NotFound(String),
}

impl QueryError {
    /// HTTP status for the error.
    pub fn status(&self) -> u16 {
        match self {
            QueryError::Malformed(_) | QueryError::BadLimit => 400,
            QueryError::UnknownFrame(_)
            | QueryError::UnresolvedFrame(_)
            | QueryError::NotFound(_) => 404,
            QueryError::AmbiguousFrame { .. } => 422,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            QueryError::Malformed(_) => "malformed_query",
            QueryError::BadLimit => "bad_limit",
            QueryError::UnknownFrame(_) => "unknown_frame",
            QueryError::UnresolvedFrame(_) => "unresolved_frame",
            QueryError::AmbiguousFrame { .. } => "ambiguous_frame",
            QueryError::NotFound(_) => "not_found",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub vp: String,
    pub frame: Option<String>,
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LuMatch {
    pub lu_id: LuId,
    pub lemma: String,
    pub pos: Pos,
    pub annosets: Vec<AnnoSetId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VpResponse {
    pub api_version: &'static str,
    pub query: String,
    pub frame: String,
    pub frame_id: FrameId,
    pub total: usize,
    pub offset: usize,
    pub limit: Option<usize>,
    pub results: Vec<LuMatch>,
}

fn resolve_frame<'a>(
    corpus: &'a Corpus,
    fes: &[String],
    explicit: Option<&str>,
) -> Result<&'a Frame, QueryError> {
    if let Some(name) = explicit {
        let frame = corpus
            .frame_by_name(name)
            .ok_or_else(|| QueryError::UnknownFrame(name.to_string()))?;
        if fes.iter().all(|fe| frame.has_fe(fe)) {
            return Ok(frame);
        }
        return Err(QueryError::UnresolvedFrame(fes.to_vec()));
    }
    let owners: Vec<&Frame> = corpus
        .frames
        .values()
        .filter(|f| fes.iter().all(|fe| f.has_fe(fe)))
        .collect();
    match owners.as_slice() {
        [] => Err(QueryError::UnresolvedFrame(fes.to_vec())),
        [one] => Ok(one),
        many => Err(QueryError::AmbiguousFrame {
            fes: fes.to_vec(),
            frames: many.iter().map(|f| f.name.clone()).collect(),
        }),
    }
}

/// Lexical units whose annotation loosely matches the queried pattern,
/// sorted by lemma, then paginated.
pub fn handle_vp_query(
    req: &QueryRequest,
    idx: &ValenceIndex,
    corpus: &Corpus,
) -> Result<VpResponse, QueryError> {
    let units = parse_units(&req.vp)?;
    if req.limit == Some(0) {
        return Err(QueryError::BadLimit);
    }
    let mut fes: Vec<String> = units.iter().map(|u| u.fe.clone()).collect();
    fes.sort();
    fes.dedup();
    let frame = resolve_frame(corpus, &fes, req.frame.as_deref())?;
    let pattern = ValencePattern::new(frame.id, units);

    let mut by_lu: BTreeMap<LuId, Vec<AnnoSetId>> = BTreeMap::new();
    for e in idx.lookup(&pattern) {
        if corpus.lu(e.lu_id).is_some_and(|lu| lu.frame_id == frame.id) {
            by_lu.entry(e.lu_id).or_default().push(e.annoset_id);
        }
    }
    let mut results: Vec<LuMatch> = by_lu
        .into_iter()
        .map(|(lu_id, mut annosets)| {
            annosets.sort();
            let lu = &corpus.lexical_units[&lu_id];
            LuMatch {
                lu_id,
                lemma: lu.lemma.clone(),
                pos: lu.pos,
                annosets,
            }
        })
        .collect();
    results.sort_by(|a, b| a.lemma.cmp(&b.lemma).then(a.lu_id.cmp(&b.lu_id)));
    let total = results.len();
    let offset = req.offset.unwrap_or(0);
    let results = results
        .into_iter()
        .skip(offset)
        .take(req.limit.unwrap_or(usize::MAX))
        .collect();
    Ok(VpResponse {
        api_version: API_VERSION,
        query: pattern.canonical_string(),
        frame: frame.name.clone(),
        frame_id: frame.id,
        total,
        offset,
        limit: req.limit,
        results,
    })
}

/// The serialized `/vp` body.
pub fn vp_json(
    req: &QueryRequest,
    idx: &ValenceIndex,
    corpus: &Corpus,
) -> Result<String, QueryError> {
    handle_vp_query(req, idx, corpus).map(|r| to_json(&r))
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string(doc).expect("response documents serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub api_version: &'static str,
    pub error: &'static str,
    pub message: String,
}

impl From<&QueryError> for ErrorBody {
    fn from(e: &QueryError) -> Self {
        ErrorBody {
            api_version: API_VERSION,
            error: e.kind(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LuResponse {
    pub api_version: &'static str,
    pub lu_id: LuId,
    pub lemma: String,
    pub pos: Pos,
    pub frame: String,
    pub frame_id: FrameId,
    pub annosets: Vec<AnnoSetId>,
}

pub fn lu_response(corpus: &Corpus, id: LuId) -> Result<LuResponse, QueryError> {
    let lu = corpus
        .lu(id)
        .ok_or_else(|| QueryError::NotFound(format!("lexical unit {id}")))?;
    let frame = corpus
        .frame(lu.frame_id)
        .map(|f| f.name.clone())
        .unwrap_or_default();
    Ok(LuResponse {
        api_version: API_VERSION,
        lu_id: lu.id,
        lemma: lu.lemma.clone(),
        pos: lu.pos,
        frame,
        frame_id: lu.frame_id,
        annosets: corpus
            .annotation_sets
            .values()
            .filter(|a| a.lu_id == id)
            .map(|a| a.id)
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnosetResponse {
    pub api_version: &'static str,
    pub text: String,
    pub frame: String,
    #[serde(flatten)]
    pub annoset: AnnotationSet,
}

pub fn annoset_response(corpus: &Corpus, id: AnnoSetId) -> Result<AnnosetResponse, QueryError> {
    let a = corpus
        .annotation_set(id)
        .ok_or_else(|| QueryError::NotFound(format!("annotation set {id}")))?;
    Ok(AnnosetResponse {
        api_version: API_VERSION,
        text: corpus
            .sentence(a.sentence_id)
            .map(|s| s.text.clone())
            .unwrap_or_default(),
        frame: corpus
            .frame(a.frame_id)
            .map(|f| f.name.clone())
            .unwrap_or_default(),
        annoset: a.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HealthResponse {
    pub api_version: &'static str,
    pub status: &'static str,
    pub frames: usize,
    pub lexical_units: usize,
    pub sentences: usize,
    pub annosets: usize,
    pub index_entries: usize,
    pub corpus_fingerprint: String,
}

/// SHA-256 over the canonical JSON Lines serialization.
pub fn corpus_fingerprint(c: &Corpus) -> String {
    let bytes = jsonl::to_bytes(c);
    hex::encode(Sha256::digest(&bytes))
}

pub fn health_response(corpus: &Corpus, idx: &ValenceIndex, fingerprint: &str) -> HealthResponse {
    let stats = corpus_stats(corpus);
    HealthResponse {
        api_version: API_VERSION,
        status: "ok",
        frames: corpus.frames.len(),
        lexical_units: corpus.lexical_units.len(),
        sentences: stats.n_sentences,
        annosets: stats.n_annosets,
        index_entries: idx.len(),
        corpus_fingerprint: fingerprint.to_string(),
    }
}
