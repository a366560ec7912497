//! Data model for the annotated lexicon and its corpora.
//!
//! A [`Corpus`] bundles frames, lexical units, frame relations, sentences and
//! annotation sets keyed by id. Corpora are read from the native JSON Lines
//! format ([`jsonl`]) or from a FrameNet release directory
//! ([`framenet_xml`]), validated, split into train/dev/test and counted.

pub mod framenet_xml;
pub mod jsonl;
mod model;
mod split;
mod stats;

use std::path::Path;

use thiserror::Error;

pub use model::*;
pub use split::{split_corpus, RemovalReason, Split};
pub use stats::{corpus_stats, CorpusStats};

#[derive(Debug, Error)]
pub enum FnDataError {
    #[error("parse error at {position}: {reason}")]
    Parse { position: String, reason: String },
    #[error("integrity error: {0}")]
    Integrity(#[from] IntegrityError),
    #[error("annotation set {id} rejected: {reason}")]
    Rejected { id: AnnoSetId, reason: RejectReason },
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
    #[error("document {0:?} listed in both dev and test")]
    DocumentConflict(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FnDataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        FnDataError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// A reference that does not resolve.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrityError {
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },
    #[error("lexical unit {lu} references unknown frame {frame}")]
    LuFrame { lu: LuId, frame: FrameId },
    #[error("annotation set {annoset} references unknown sentence {sentence}")]
    AnnosetSentence {
        annoset: AnnoSetId,
        sentence: SentenceId,
    },
    #[error("annotation set {annoset} references unknown lexical unit {lu}")]
    AnnosetLu { annoset: AnnoSetId, lu: LuId },
    #[error("annotation set {annoset} references unknown frame {frame}")]
    AnnosetFrame { annoset: AnnoSetId, frame: FrameId },
    #[error("annotation set {annoset}: lexical unit {lu} does not belong to frame {frame}")]
    LuFrameMismatch {
        annoset: AnnoSetId,
        lu: LuId,
        frame: FrameId,
    },
    #[error("annotation set {annoset}: frame element {fe:?} is not in frame {frame}")]
    UnknownFrameElement {
        annoset: AnnoSetId,
        fe: String,
        frame: String,
    },
    #[error("relation references unknown frame {0}")]
    RelationFrame(FrameId),
    #[error("relation {parent}->{child} maps unknown frame element {fe:?}")]
    RelationFe {
        parent: FrameId,
        child: FrameId,
        fe: String,
    },
    #[error("frame {frame}: duplicate frame element {fe:?}")]
    DuplicateFe { frame: String, fe: String },
}

/// Why an annotation set failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RejectReason {
    #[error("no target span")]
    NoTarget,
    #[error("target span {0:?} outside the sentence")]
    TargetOutOfRange(CharSpan),
    #[error("label {0:?} has a missing index")]
    MissingIndex(String),
    #[error("label {0:?} starts before the sentence")]
    NegativeStart(String),
    #[error("label {0:?} ends past the sentence")]
    EndOutOfRange(String),
    #[error("label {0:?} has start > end")]
    InvertedSpan(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validation {
    Valid,
    Reject(RejectReason),
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validation::Valid)
    }
}

/// Checks target and overt label offsets against the sentence.
/// Null-instantiated labels carry no offsets and are never rejected.
pub fn validate_annotation_set(a: &AnnotationSet, s: &Sentence) -> Validation {
    let len = s.char_len();
    if a.targets.is_empty() {
        return Validation::Reject(RejectReason::NoTarget);
    }
    for t in &a.targets {
        if t.start > t.end || t.end >= len {
            return Validation::Reject(RejectReason::TargetOutOfRange(*t));
        }
    }
    for label in a.overt_labels() {
        let (start, end) = match (label.start, label.end) {
            (Some(s), Some(e)) => (s, e),
            _ => return Validation::Reject(RejectReason::MissingIndex(label.fe.clone())),
        };
        let reason = if start < 0 {
            RejectReason::NegativeStart(label.fe.clone())
        } else if end >= len as i64 {
            RejectReason::EndOutOfRange(label.fe.clone())
        } else if start > end {
            RejectReason::InvertedSpan(label.fe.clone())
        } else {
            continue;
        };
        return Validation::Reject(reason);
    }
    Validation::Valid
}

/// Checks every id reference in the corpus.
pub fn check_integrity(c: &Corpus) -> Result<(), IntegrityError> {
    for frame in c.frames.values() {
        for (i, fe) in frame.frame_elements.iter().enumerate() {
            if frame.frame_elements[..i].iter().any(|o| o.name == fe.name) {
                return Err(IntegrityError::DuplicateFe {
                    frame: frame.name.clone(),
                    fe: fe.name.clone(),
                });
            }
        }
    }
    for lu in c.lexical_units.values() {
        if !c.frames.contains_key(&lu.frame_id) {
            return Err(IntegrityError::LuFrame {
                lu: lu.id,
                frame: lu.frame_id,
            });
        }
    }
    for rel in &c.relations {
        let parent = c
            .frame(rel.parent)
            .ok_or(IntegrityError::RelationFrame(rel.parent))?;
        let child = c
            .frame(rel.child)
            .ok_or(IntegrityError::RelationFrame(rel.child))?;
        for (pfe, cfe) in &rel.fe_mappings {
            for (frame, fe) in [(parent, pfe), (child, cfe)] {
                if !frame.has_fe(fe) {
                    return Err(IntegrityError::RelationFe {
                        parent: rel.parent,
                        child: rel.child,
                        fe: fe.clone(),
                    });
                }
            }
        }
    }
    for a in c.annotation_sets.values() {
        if !c.sentences.contains_key(&a.sentence_id) {
            return Err(IntegrityError::AnnosetSentence {
                annoset: a.id,
                sentence: a.sentence_id,
            });
        }
        let frame = c.frame(a.frame_id).ok_or(IntegrityError::AnnosetFrame {
            annoset: a.id,
            frame: a.frame_id,
        })?;
        let lu = c.lu(a.lu_id).ok_or(IntegrityError::AnnosetLu {
            annoset: a.id,
            lu: a.lu_id,
        })?;
        if lu.frame_id != a.frame_id {
            return Err(IntegrityError::LuFrameMismatch {
                annoset: a.id,
                lu: a.lu_id,
                frame: a.frame_id,
            });
        }
        for label in &a.labels {
            if !frame.has_fe(&label.fe) {
                return Err(IntegrityError::UnknownFrameElement {
                    annoset: a.id,
                    fe: label.fe.clone(),
                    frame: frame.name.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Input formats accepted by [`ingest_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    NativeJsonl,
    FrameNetXml,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Turn collected issues into hard errors.
    pub strict: bool,
    /// Also read `lu/*.xml` exemplar annotation (FrameNet XML only).
    pub exemplars: bool,
}

/// A problem found during ingestion that did not abort it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IngestIssue {
    Malformed { position: String, reason: String },
    Rejected { id: AnnoSetId, reason: RejectReason },
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub issues: Vec<IngestIssue>,
}

impl IngestReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

#[derive(Debug)]
pub struct Ingested {
    pub corpus: Corpus,
    pub report: IngestReport,
}

/// Reads a corpus, checks referential integrity and drops (and reports)
/// annotation sets that fail [`validate_annotation_set`].
pub fn ingest_corpus(
    path: &Path,
    format: CorpusFormat,
    opts: IngestOptions,
) -> Result<Ingested, FnDataError> {
    let (mut corpus, mut report) = match format {
        CorpusFormat::NativeJsonl => jsonl::read_path(path, opts)?,
        CorpusFormat::FrameNetXml => framenet_xml::read_release(path, opts)?,
    };
    corpus.link();
    check_integrity(&corpus)?;
    let rejected: Vec<(AnnoSetId, RejectReason)> = corpus
        .annotation_sets
        .values()
        .filter_map(|a| {
            let s = &corpus.sentences[&a.sentence_id];
            match validate_annotation_set(a, s) {
                Validation::Valid => None,
                Validation::Reject(r) => Some((a.id, r)),
            }
        })
        .collect();
    if opts.strict {
        if let Some((id, reason)) = rejected.into_iter().next() {
            return Err(FnDataError::Rejected { id, reason });
        }
    } else {
        for (id, reason) in rejected {
            corpus.annotation_sets.remove(&id);
            report.issues.push(IngestIssue::Rejected { id, reason });
        }
    }
    Ok(Ingested { corpus, report })
}
