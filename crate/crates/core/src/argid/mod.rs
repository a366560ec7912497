//! Argument identification: given a sentence's dependency tree, a gold
//! target and its frame, assign each frame element a span or the null span.
//!
//! Options for every role are the tree's candidate spans plus the null
//! span. A sparse linear model scores (role, option) pairs over hashed
//! indicator features; it is trained online with a squared structured hinge
//! loss and AdaDelta, and decoded with a beam that forbids overlapping
//! overt spans.

mod decode;
mod features;
mod hierarchy;
mod model;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deptree::{candidate_spans, DependencyTree, Span};
use crate::fndata::{AnnoSetId, AnnotationSet, CharSpan, Corpus, FrameId, LuId, SentenceId};

pub use decode::{decode_table, role_order, Hypothesis};
pub use features::{
    conjoin, extract_feature_names, extract_features, feature_id, FeatureVector, RoleKey,
    TargetContext, TemplateConfig,
};
pub use hierarchy::hierarchy_expand;
pub use model::{
    evaluate, instance_loss, train, EpochStats, Hyperparams, Model, TrainInstance, TrainOptions,
    MODEL_FORMAT_VERSION,
};

#[derive(Debug, Error)]
pub enum ArgIdError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("bad model file: {0}")]
    ModelFormat(String),
    #[error("cycle in frame hierarchy at {frame}.{fe}")]
    CycleDetected { frame: String, fe: String },
    #[error("annotation set {0} has no target")]
    NoTarget(AnnoSetId),
    #[error("annotation set {0} references an unknown frame or lexical unit")]
    UnknownReference(AnnoSetId),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ArgIdError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ArgIdError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// A target prepared for featurization: token-level target, roles in
/// decoding order and candidate spans.
struct Prepared<'a> {
    ctx: TargetContext<'a>,
    roles: Vec<RoleKey>,
    spans: Vec<Span>,
}

fn prepare<'a>(
    corpus: &'a Corpus,
    tree: &'a DependencyTree,
    a: &AnnotationSet,
    templates: &TemplateConfig,
) -> Result<Prepared<'a>, ArgIdError> {
    let extent = a.target_extent().ok_or(ArgIdError::NoTarget(a.id))?;
    let (target, _) = tree.align(extent).ok_or(ArgIdError::NoTarget(a.id))?;
    let frame = corpus
        .frame(a.frame_id)
        .ok_or(ArgIdError::UnknownReference(a.id))?;
    let lu = corpus
        .lu(a.lu_id)
        .ok_or(ArgIdError::UnknownReference(a.id))?;
    let mut roles = Vec::new();
    for fe in role_order(frame) {
        let mut key = RoleKey::new(&frame.name, &fe);
        if templates.hierarchy {
            key.ancestors = hierarchy_expand(corpus, frame.id, &fe)?
                .into_iter()
                .skip(1)
                .collect();
        }
        roles.push(key);
    }
    Ok(Prepared {
        ctx: TargetContext::new(tree, target, frame, &lu.lemma, lu.pos),
        roles,
        spans: candidate_spans(tree).into_iter().collect(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InstanceReport {
    pub annosets: usize,
    pub instances: usize,
    pub missing_tree: Vec<AnnoSetId>,
    pub unusable: Vec<AnnoSetId>,
    /// Gold spans that were not among the candidates and were added.
    pub gold_added: usize,
    /// Gold labels whose characters do not fall on token boundaries.
    pub gold_unaligned: usize,
}

/// One training instance per (annotation set, frame element), with the
/// null span as gold for roles the set leaves unfilled.
pub fn build_instances(
    corpus: &Corpus,
    trees: &BTreeMap<SentenceId, DependencyTree>,
    templates: &TemplateConfig,
) -> Result<(Vec<TrainInstance>, InstanceReport), ArgIdError> {
    let mut report = InstanceReport::default();
    let mut out = Vec::new();
    for a in corpus.annotation_sets.values() {
        let Some(tree) = trees.get(&a.sentence_id) else {
            report.missing_tree.push(a.id);
            continue;
        };
        let prepared = match prepare(corpus, tree, a, templates) {
            Ok(p) => p,
            Err(ArgIdError::NoTarget(id)) | Err(ArgIdError::UnknownReference(id)) => {
                report.unusable.push(id);
                continue;
            }
            Err(e) => return Err(e),
        };
        report.annosets += 1;
        for role in &prepared.roles {
            let mut options: Vec<Option<Span>> = vec![None];
            options.extend(prepared.spans.iter().copied().map(Some));
            let gold_chars = a
                .overt_labels()
                .find(|l| l.fe == role.fe)
                .and_then(|l| l.char_span());
            let gold = match gold_chars.and_then(|c| tree.align(c)) {
                None => 0,
                Some((span, exact)) => {
                    if !exact {
                        report.gold_unaligned += 1;
                    }
                    match options.iter().position(|o| *o == Some(span)) {
                        Some(i) => i,
                        None => {
                            report.gold_added += 1;
                            options.push(Some(span));
                            options.len() - 1
                        }
                    }
                }
            };
            let features = options
                .iter()
                .map(|o| extract_features(&prepared.ctx, role, *o, templates))
                .collect();
            out.push(TrainInstance {
                options,
                features,
                gold,
            });
        }
    }
    report.instances = out.len();
    Ok((out, report))
}

/// Scores every role against every option and runs the beam.
pub fn decode(
    m: &Model,
    ctx: &TargetContext,
    roles: &[RoleKey],
    spans: &[Span],
    k: usize,
) -> (Vec<Vec<f64>>, Vec<Hypothesis>) {
    let mut bases = vec![ctx.base_features(None)];
    bases.extend(spans.iter().map(|s| ctx.base_features(Some(*s))));
    let scores: Vec<Vec<f64>> = roles
        .iter()
        .map(|role| {
            bases
                .iter()
                .map(|b| m.score(&FeatureVector::from_names(&conjoin(b, role, &m.templates))))
                .collect()
        })
        .collect();
    let beam = decode_table(&scores, spans, k);
    (scores, beam)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedArgument {
    pub fe: String,
    /// 1-based inclusive token indices.
    pub tokens: (usize, usize),
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

impl PredictedArgument {
    pub fn char_span(&self) -> CharSpan {
        CharSpan::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub annoset_id: AnnoSetId,
    pub sentence_id: SentenceId,
    pub frame_id: FrameId,
    pub lu_id: LuId,
    pub score: f64,
    pub arguments: Vec<PredictedArgument>,
}

pub fn predict_annoset(
    m: &Model,
    corpus: &Corpus,
    tree: &DependencyTree,
    a: &AnnotationSet,
    k: usize,
) -> Result<Prediction, ArgIdError> {
    let prepared = prepare(corpus, tree, a, &m.templates)?;
    let (scores, beam) = decode(m, &prepared.ctx, &prepared.roles, &prepared.spans, k);
    let best = &beam[0];
    let arguments = best
        .choice
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(r, &c)| {
            let span = prepared.spans[c - 1];
            let chars = tree.char_span(span);
            PredictedArgument {
                fe: prepared.roles[r].fe.clone(),
                tokens: (span.start, span.end),
                start: chars.start,
                end: chars.end,
                score: scores[r][c],
            }
        })
        .collect();
    Ok(Prediction {
        annoset_id: a.id,
        sentence_id: a.sentence_id,
        frame_id: a.frame_id,
        lu_id: a.lu_id,
        score: best.score,
        arguments,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PredictReport {
    pub predicted: usize,
    pub missing_tree: Vec<AnnoSetId>,
    pub unusable: Vec<AnnoSetId>,
}

/// Decodes every annotation set of `corpus` (gold targets and frames),
/// in parallel, returning predictions in annotation-set id order.
pub fn predict(
    m: &Model,
    corpus: &Corpus,
    trees: &BTreeMap<SentenceId, DependencyTree>,
    k: usize,
) -> Result<(Vec<Prediction>, PredictReport), ArgIdError> {
    let sets: Vec<&AnnotationSet> = corpus.annotation_sets.values().collect();
    let results: Vec<Option<Result<Prediction, ArgIdError>>> = sets
        .par_iter()
        .map(|a| {
            trees
                .get(&a.sentence_id)
                .map(|tree| predict_annoset(m, corpus, tree, a, k))
        })
        .collect();
    let mut report = PredictReport::default();
    let mut out = Vec::new();
    for (a, r) in sets.iter().zip(results) {
        match r {
            None => report.missing_tree.push(a.id),
            Some(Ok(p)) => out.push(p),
            Some(Err(ArgIdError::NoTarget(id) | ArgIdError::UnknownReference(id))) => {
                report.unusable.push(id)
            }
            Some(Err(e)) => return Err(e),
        }
    }
    report.predicted = out.len();
    Ok((out, report))
}

pub fn write_predictions<W: Write>(preds: &[Prediction], mut w: W) -> std::io::Result<()> {
    for p in preds {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_predictions(s: &str) -> Result<Vec<Prediction>, serde_json::Error> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
