//! Error-analysis metrics over gold corpora and predictions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::argid::Prediction;
use crate::eval::{
    match_predictions, prediction_spans, prf, EvalConfig, EvalError, Prf, ScoreTally,
};
use crate::fndata::{AnnoSetId, Corpus};
use crate::valence::extract_valence_pattern;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("frame element {0:?} never occurs")]
    NoOccurrences(String),
    #[error("unknown item kind {0:?}: expected lu, fe, vu or vp")]
    UnknownKind(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeReport {
    pub fe: String,
    pub train_count: usize,
    pub eval_count: usize,
    #[serde(flatten)]
    pub tally: ScoreTally,
    #[serde(flatten)]
    pub prf: Prf,
}

fn predictions_by_annoset(preds: &[Prediction]) -> BTreeMap<AnnoSetId, Vec<crate::eval::PredSpan>> {
    let mut out: BTreeMap<AnnoSetId, Vec<_>> = BTreeMap::new();
    for p in preds {
        out.entry(p.annoset_id)
            .or_default()
            .extend(prediction_spans(p));
    }
    out
}

fn fe_counts(c: &Corpus) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for a in c.annotation_sets.values() {
        for l in a.overt_labels() {
            *counts.entry(l.fe.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Micro tallies restricted to each frame element name, sorted by name.
/// Frame credit is not applied. The per-FE tallies sum to the global ones.
pub fn per_fe_scores(
    gold: &Corpus,
    preds: &[Prediction],
    train: Option<&Corpus>,
    cfg: &EvalConfig,
) -> Result<Vec<FeReport>, AnalysisError> {
    let by_annoset = predictions_by_annoset(preds);
    let mut tallies: BTreeMap<String, ScoreTally> = BTreeMap::new();
    for a in gold.annotation_sets.values() {
        let Some(frame) = gold.frame(a.frame_id) else {
            continue;
        };
        for l in a.overt_labels() {
            tallies.entry(l.fe.clone()).or_default().gold += cfg.weight(frame, &l.fe)?;
        }
        let pred = by_annoset.get(&a.id).map(Vec::as_slice).unwrap_or(&[]);
        for (p, hit) in pred.iter().zip(match_predictions(a, pred)) {
            let w = cfg.weight(frame, &p.fe)?;
            let t = tallies.entry(p.fe.clone()).or_default();
            t.score += w;
            if hit.is_some() {
                t.matched += w;
            }
        }
    }
    let eval_counts = fe_counts(gold);
    let train_counts = train.map(fe_counts).unwrap_or_default();
    Ok(tallies
        .into_iter()
        .map(|(fe, tally)| FeReport {
            train_count: train_counts.get(&fe).copied().unwrap_or(0),
            eval_count: eval_counts.get(&fe).copied().unwrap_or(0),
            prf: prf(tally),
            tally,
            fe,
        })
        .collect())
}

/// Occurrence counts behind a febar ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FebarRow {
    pub fe: String,
    pub occurrences: usize,
    pub bearing: usize,
    pub ratio: f64,
}

/// Share of a frame element's overt occurrences whose span is exactly one
/// of the annotation set's target spans.
pub fn febar_ratio(corpus: &Corpus, fe: &str) -> Result<f64, AnalysisError> {
    febar_table(corpus)
        .into_iter()
        .find(|r| r.fe == fe)
        .map(|r| r.ratio)
        .ok_or_else(|| AnalysisError::NoOccurrences(fe.to_string()))
}

/// febar rows for every frame element, sorted by name.
pub fn febar_table(corpus: &Corpus) -> Vec<FebarRow> {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for a in corpus.annotation_sets.values() {
        for l in a.overt_labels() {
            let e = counts.entry(&l.fe).or_insert((0, 0));
            e.0 += 1;
            if l.char_span().is_some_and(|s| a.targets.contains(&s)) {
                e.1 += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(fe, (n, b))| FebarRow {
            fe: fe.to_string(),
            occurrences: n,
            bearing: b,
            ratio: b as f64 / n as f64,
        })
        .collect()
}

/// A syntactic-realization group; `None` collects predictions with no
/// gold label on their span.
pub type PtGf = Option<(String, String)>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub eval_count: usize,
    #[serde(flatten)]
    pub tally: ScoreTally,
    #[serde(flatten)]
    pub prf: Prf,
    /// No predictions were attributed to the group, so precision is
    /// reported as 0.
    pub precision_undefined: bool,
}

pub fn ptgf_breakdown(
    gold: &Corpus,
    preds: &[Prediction],
    cfg: &EvalConfig,
) -> Result<BTreeMap<PtGf, GroupReport>, AnalysisError> {
    let by_annoset = predictions_by_annoset(preds);
    let mut groups: BTreeMap<PtGf, (usize, ScoreTally)> = BTreeMap::new();
    let group_of = |l: &crate::fndata::LabelSpan| -> PtGf {
        match (&l.pt, &l.gf) {
            (Some(pt), Some(gf)) => Some((pt.clone(), gf.clone())),
            _ => None,
        }
    };
    for a in gold.annotation_sets.values() {
        let Some(frame) = gold.frame(a.frame_id) else {
            continue;
        };
        for l in a.overt_labels() {
            let g = groups.entry(group_of(l)).or_default();
            g.0 += 1;
            g.1.gold += cfg.weight(frame, &l.fe)?;
        }
        let pred = by_annoset.get(&a.id).map(Vec::as_slice).unwrap_or(&[]);
        for (p, hit) in pred.iter().zip(match_predictions(a, pred)) {
            let w = cfg.weight(frame, &p.fe)?;
            let key = match hit {
                Some(i) => group_of(&a.labels[i]),
                None => a
                    .overt_labels()
                    .find(|l| l.char_span() == Some(p.span))
                    .and_then(group_of),
            };
            let g = &mut groups.entry(key).or_default().1;
            g.score += w;
            if hit.is_some() {
                g.matched += w;
            }
        }
    }
    Ok(groups
        .into_iter()
        .map(|(k, (eval_count, tally))| {
            (
                k,
                GroupReport {
                    eval_count,
                    prf: prf(tally),
                    precision_undefined: tally.score == 0.0,
                    tally,
                },
            )
        })
        .collect())
}

/// Item kinds tracked by coverage and frequency profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ItemKind {
    LexicalUnit,
    FrameElement,
    ValenceUnit,
    ValencePattern,
}

impl ItemKind {
    pub const ALL: [ItemKind; 4] = [
        ItemKind::LexicalUnit,
        ItemKind::FrameElement,
        ItemKind::ValenceUnit,
        ItemKind::ValencePattern,
    ];

    pub fn short(self) -> &'static str {
        match self {
            ItemKind::LexicalUnit => "lu",
            ItemKind::FrameElement => "fe",
            ItemKind::ValenceUnit => "vu",
            ItemKind::ValencePattern => "vp",
        }
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for ItemKind {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ItemKind::ALL
            .into_iter()
            .find(|k| k.short() == s)
            .ok_or_else(|| AnalysisError::UnknownKind(s.to_string()))
    }
}

/// Every occurrence of `kind` in the corpus, as identity keys.
///
/// LU: `lemma.POS@frame` per annotation set; FE: `frame.FE` per label;
/// VU: `frame.FE.PT.GF` per overt label with both layers; VP: frame plus
/// canonical pattern string per annotation set with a usable pattern.
pub fn occurrences(c: &Corpus, kind: ItemKind) -> Vec<String> {
    let mut out = Vec::new();
    for a in c.annotation_sets.values() {
        let Some(frame) = c.frame(a.frame_id) else {
            continue;
        };
        match kind {
            ItemKind::LexicalUnit => {
                if let Some(lu) = c.lu(a.lu_id) {
                    out.push(format!("{}.{}@{}", lu.lemma, lu.pos, frame.name));
                }
            }
            ItemKind::FrameElement => {
                out.extend(a.labels.iter().map(|l| format!("{}.{}", frame.name, l.fe)));
            }
            ItemKind::ValenceUnit => {
                for l in a.overt_labels() {
                    if let (Some(pt), Some(gf)) = (&l.pt, &l.gf) {
                        out.push(format!("{}.{}.{pt}.{gf}", frame.name, l.fe));
                    }
                }
            }
            ItemKind::ValencePattern => {
                if let Ok(p) = extract_valence_pattern(a, frame) {
                    out.push(format!("{}: {}", frame.name, p.canonical_string()));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub kind: ItemKind,
    pub train_distinct: usize,
    pub eval_distinct: usize,
    /// Percentage of distinct eval items also seen in train, one decimal.
    pub overlap_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn row(&self, kind: ItemKind) -> &CoverageRow {
        self.rows
            .iter()
            .find(|r| r.kind == kind)
            .expect("all kinds present")
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

pub fn coverage_overlap(train: &Corpus, eval: &Corpus) -> CoverageReport {
    let rows = ItemKind::ALL
        .into_iter()
        .map(|kind| {
            let t: BTreeSet<String> = occurrences(train, kind).into_iter().collect();
            let e: BTreeSet<String> = occurrences(eval, kind).into_iter().collect();
            let shared = e.intersection(&t).count();
            let overlap_pct = if e.is_empty() {
                0.0
            } else {
                round1(100.0 * shared as f64 / e.len() as f64)
            };
            CoverageRow {
                kind,
                train_distinct: t.len(),
                eval_distinct: e.len(),
                overlap_pct,
            }
        })
        .collect();
    CoverageReport { rows }
}

/// Items with their counts, most frequent first, ties by key.
pub fn frequency_table(c: &Corpus, kind: ItemKind) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for k in occurrences(c, kind) {
        *counts.entry(k).or_insert(0) += 1;
    }
    let mut rows: Vec<(String, usize)> = counts.into_iter().collect();
    // stable sort keeps the key order among equal counts
    rows.sort_by_key(|r| std::cmp::Reverse(r.1));
    rows
}

/// (rank, count) pairs, ranks from 1.
pub fn rank_frequency(c: &Corpus, kind: ItemKind) -> Vec<(usize, usize)> {
    ranks(frequency_table(c, kind).into_iter().map(|r| r.1))
}

pub fn ranks(counts: impl IntoIterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut v: Vec<usize> = counts.into_iter().collect();
    v.sort_by(|a, b| b.cmp(a));
    v.into_iter().enumerate().map(|(i, c)| (i + 1, c)).collect()
}

/// Whitespace-separated `rank count` lines for log-log plotting.
pub fn gnuplot_data(profile: &[(usize, usize)]) -> String {
    let mut s = String::from("# rank count\n");
    for (r, c) in profile {
        s.push_str(&format!("{r} {c}\n"));
    }
    s
}

pub fn fe_reports_csv(rows: &[FeReport]) -> String {
    let mut s = String::from("fe,train_count,eval_count,M,S,G,precision,recall,f1\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{:.4},{:.4},{:.4}\n",
            r.fe,
            r.train_count,
            r.eval_count,
            r.tally.matched,
            r.tally.score,
            r.tally.gold,
            r.prf.precision,
            r.prf.recall,
            r.prf.f1
        ));
    }
    s
}

pub fn coverage_csv(r: &CoverageReport) -> String {
    let mut s = String::from("kind,train_distinct,eval_distinct,overlap_pct\n");
    for row in &r.rows {
        s.push_str(&format!(
            "{},{},{},{:.1}\n",
            row.kind, row.train_distinct, row.eval_distinct, row.overlap_pct
        ));
    }
    s
}
