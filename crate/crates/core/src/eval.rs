//! Weighted span scoring and paired bootstrap significance.
//!
//! Each gold overt label is worth `core_weight` when its frame element is
//! core (or core-unexpressed) and `noncore_weight` otherwise; predictions
//! are weighted the same way by their own frame element. A prediction
//! matches when both the frame element and the exact character span agree,
//! and each gold label can be matched once.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::argid::Prediction;
use crate::fndata::{AnnoSetId, AnnotationSet, CharSpan, Corpus, Frame, SentenceId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("frame {frame} has no frame element {fe:?}")]
    UnknownFrameElement { fe: String, frame: String },
    #[error("empty test set")]
    EmptyTestSet,
    #[error("systems scored on different sentences ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("prediction for annotation set {0} which is not in the gold corpus")]
    UnknownAnnoset(AnnoSetId),
}

/// Match (M), Score (S) and Gold (G) sums.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTally {
    #[serde(rename = "M")]
    pub matched: f64,
    #[serde(rename = "S")]
    pub score: f64,
    #[serde(rename = "G")]
    pub gold: f64,
}

impl Add for ScoreTally {
    type Output = ScoreTally;

    fn add(self, o: ScoreTally) -> ScoreTally {
        ScoreTally {
            matched: self.matched + o.matched,
            score: self.score + o.score,
            gold: self.gold + o.gold,
        }
    }
}

impl AddAssign for ScoreTally {
    fn add_assign(&mut self, o: ScoreTally) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ScoreTally {
    fn sum<I: Iterator<Item = ScoreTally>>(iter: I) -> Self {
        iter.fold(ScoreTally::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub core_weight: f64,
    pub noncore_weight: f64,
    /// Add one extra point to M, S and G per annotation set for the gold
    /// frame.
    pub frame_credit: bool,
    pub frame_credit_weight: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            core_weight: 1.0,
            noncore_weight: 0.5,
            frame_credit: false,
            frame_credit_weight: 1.0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.core_weight > 0.0 && self.noncore_weight > 0.0 && self.frame_credit_weight > 0.0 {
            Ok(())
        } else {
            Err(EvalError::InvalidConfig("weights must be positive".into()))
        }
    }

    pub fn weight(&self, frame: &Frame, fe: &str) -> Result<f64, EvalError> {
        match frame.is_core(fe) {
            Some(true) => Ok(self.core_weight),
            Some(false) => Ok(self.noncore_weight),
            None => Err(EvalError::UnknownFrameElement {
                fe: fe.to_string(),
                frame: frame.name.clone(),
            }),
        }
    }
}

/// A predicted (frame element, span) pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredSpan {
    pub fe: String,
    pub span: CharSpan,
}

impl PredSpan {
    pub fn new(fe: &str, start: usize, end: usize) -> Self {
        PredSpan {
            fe: fe.to_string(),
            span: CharSpan::new(start, end),
        }
    }
}

/// For each prediction, the index of the gold overt label it matches.
/// Gold labels are consumed in order so duplicates earn nothing extra.
pub(crate) fn match_predictions(gold: &AnnotationSet, pred: &[PredSpan]) -> Vec<Option<usize>> {
    let mut used = vec![false; gold.labels.len()];
    pred.iter()
        .map(|p| {
            let hit = gold
                .labels
                .iter()
                .enumerate()
                .position(|(i, l)| !used[i] && l.fe == p.fe && l.char_span() == Some(p.span));
            if let Some(i) = hit {
                used[i] = true;
            }
            hit
        })
        .collect()
}

pub fn score_annoset(
    gold: &AnnotationSet,
    pred: &[PredSpan],
    frame: &Frame,
    cfg: &EvalConfig,
) -> Result<ScoreTally, EvalError> {
    let mut t = ScoreTally::default();
    for l in gold.overt_labels() {
        t.gold += cfg.weight(frame, &l.fe)?;
    }
    for (p, hit) in pred.iter().zip(match_predictions(gold, pred)) {
        let w = cfg.weight(frame, &p.fe)?;
        t.score += w;
        if hit.is_some() {
            t.matched += w;
        }
    }
    if cfg.frame_credit {
        t.matched += cfg.frame_credit_weight;
        t.score += cfg.frame_credit_weight;
        t.gold += cfg.frame_credit_weight;
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Micro-averaged P, R and F1; a zero denominator yields 0.
pub fn aggregate(tallies: &[ScoreTally]) -> Prf {
    prf(tallies.iter().copied().sum())
}

pub fn prf(t: ScoreTally) -> Prf {
    let precision = if t.score > 0.0 {
        t.matched / t.score
    } else {
        0.0
    };
    let recall = if t.gold > 0.0 {
        t.matched / t.gold
    } else {
        0.0
    };
    // 2PR/(P+R) simplifies to 2M/(S+G) when both sums are positive
    let f1 = if precision + recall > 0.0 {
        2.0 * t.matched / (t.score + t.gold)
    } else {
        0.0
    };
    Prf {
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnosetScore {
    pub annoset_id: AnnoSetId,
    pub sentence_id: SentenceId,
    #[serde(flatten)]
    pub tally: ScoreTally,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub per_annoset: Vec<AnnosetScore>,
    pub total: ScoreTally,
    #[serde(flatten)]
    pub prf: Prf,
    /// Gold annotation sets with no prediction, scored as empty.
    pub unpredicted: usize,
}

impl EvalReport {
    /// Tallies summed per sentence, in sentence id order.
    pub fn per_sentence(&self) -> BTreeMap<SentenceId, ScoreTally> {
        let mut out: BTreeMap<SentenceId, ScoreTally> = BTreeMap::new();
        for a in &self.per_annoset {
            *out.entry(a.sentence_id).or_default() += a.tally;
        }
        out
    }
}

pub fn prediction_spans(p: &Prediction) -> Vec<PredSpan> {
    p.arguments
        .iter()
        .map(|a| PredSpan {
            fe: a.fe.clone(),
            span: a.char_span(),
        })
        .collect()
}

/// Scores predictions against every annotation set of `gold`.
pub fn score_predictions(
    gold: &Corpus,
    preds: &[Prediction],
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    cfg.validate()?;
    let mut by_annoset: BTreeMap<AnnoSetId, Vec<PredSpan>> = BTreeMap::new();
    for p in preds {
        if gold.annotation_set(p.annoset_id).is_none() {
            return Err(EvalError::UnknownAnnoset(p.annoset_id));
        }
        by_annoset
            .entry(p.annoset_id)
            .or_default()
            .extend(prediction_spans(p));
    }
    let mut per_annoset = Vec::with_capacity(gold.annotation_sets.len());
    let mut unpredicted = 0;
    for a in gold.annotation_sets.values() {
        let Some(frame) = gold.frame(a.frame_id) else {
            continue;
        };
        let pred = match by_annoset.get(&a.id) {
            Some(p) => p.as_slice(),
            None => {
                unpredicted += 1;
                &[]
            }
        };
        per_annoset.push(AnnosetScore {
            annoset_id: a.id,
            sentence_id: a.sentence_id,
            tally: score_annoset(a, pred, frame, cfg)?,
        });
    }
    let total: ScoreTally = per_annoset.iter().map(|a| a.tally).sum();
    Ok(EvalReport {
        per_annoset,
        total,
        prf: prf(total),
        unpredicted,
    })
}

/// Indices of the `i`-th bootstrap resample of `n` items: `n` uniform
/// draws with replacement from a ChaCha8 stream keyed by (seed, i).
pub fn resample_indices(n: usize, seed: u64, i: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

fn f1_delta(a: ScoreTally, b: ScoreTally) -> f64 {
    prf(a).f1 - prf(b).f1
}

/// Number of resamples whose F1 difference exceeds `threshold`.
pub fn bootstrap_exceedances(
    a: &[ScoreTally],
    b: &[ScoreTally],
    resamples: usize,
    seed: u64,
    threshold: f64,
) -> Result<usize, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let n = a.len();
    let count = (0..resamples as u64)
        .filter(|&i| {
            let idx = resample_indices(n, seed, i);
            let sa: ScoreTally = idx.iter().map(|&j| a[j]).sum();
            let sb: ScoreTally = idx.iter().map(|&j| b[j]).sum();
            f1_delta(sa, sb) > threshold
        })
        .count();
    Ok(count)
}

/// Paired bootstrap p-value for system A over system B from per-sentence
/// tallies: the share of resamples whose F1 difference exceeds twice the
/// observed one.
pub fn bootstrap_p(
    a: &[ScoreTally],
    b: &[ScoreTally],
    resamples: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    if resamples == 0 {
        return Err(EvalError::InvalidConfig(
            "at least one resample is needed".into(),
        ));
    }
    if a.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let observed = f1_delta(a.iter().copied().sum(), b.iter().copied().sum());
    let s = bootstrap_exceedances(a, b, resamples, seed, 2.0 * observed)?;
    Ok(s as f64 / resamples as f64)
}
