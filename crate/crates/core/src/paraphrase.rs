//! Paraphrastic data augmentation.
//!
//! For each annotation set of a sentence, the lexical units of the same
//! frame whose annotation loosely matches its valence pattern become
//! paraphrastic candidates. The candidate sets of one sentence form a
//! lattice; every path through it that replaces at least one target yields
//! a new sentence, and every annotation set of the source sentence is
//! projected onto it.
//!
//! Targets are replaced by the candidate lemma verbatim. Label offsets are
//! remapped around each replacement: labels before a target are unchanged,
//! labels after it shift by the length difference, and a label boundary
//! that coincides with a target boundary follows the replacement. A label
//! whose boundary falls strictly inside a replaced target cannot be
//! projected.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::deptree::{DependencyTree, Token};
use crate::embeddings::{semantic_filter, EmbeddingTable, FilterNote, SemanticFilterSpec};
use crate::fndata::{
    AnnoSetId, AnnotationSet, CharSpan, Corpus, LabelSpan, LuId, Origin, Pos, Sentence, SentenceId,
};
use crate::valence::{extract_valence_pattern, ValenceError, ValenceIndex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error("sentence {sentence}: label {fe:?} has a boundary inside replaced target {target:?}")]
    BoundaryInsideTarget {
        sentence: SentenceId,
        fe: String,
        target: CharSpan,
    },
    #[error("sentence {sentence}: target {target:?} of annotation set {annoset} lies inside a replaced target")]
    TargetInsideTarget {
        sentence: SentenceId,
        annoset: AnnoSetId,
        target: CharSpan,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("max_sentences_per_source must be at least 1")]
    ZeroCap,
    #[error(transparent)]
    Filter(#[from] crate::embeddings::FilterSpecError),
}

#[derive(Debug, Clone, Default)]
pub struct GenerationConfig {
    /// Keep only source annotation sets whose LU has one of these POS.
    pub pos_filter: Option<BTreeSet<Pos>>,
    /// Drop multi-lexeme source LUs and multi-lexeme candidate lemmas.
    pub mwe_filter: bool,
    pub semantic: SemanticFilterSpec,
    pub max_sentences_per_source: Option<usize>,
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_sentences_per_source == Some(0) {
            return Err(ConfigError::ZeroCap);
        }
        self.semantic.filter.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Candidate {
    pub lemma: String,
    pub lu_id: LuId,
}

/// Why an annotation set contributes no candidates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SkipReason {
    PosFiltered,
    MultiwordSource,
    DiscontinuousTarget,
    EmptyPattern,
    MissingLayer,
    OverlappingTarget,
    SourceOutOfVocabulary,
    NoEmbeddingTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateSet {
    pub annoset_id: AnnoSetId,
    pub source_lu_id: LuId,
    pub target: CharSpan,
    /// Sorted by lemma; never contains the source LU.
    pub candidates: Vec<Candidate>,
    /// Set when the annotation set was filtered out before matching, or
    /// when the semantic filter fell back to the unfiltered list.
    pub note: Option<SkipReason>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Paraphrastic candidates for one annotation set.
pub fn candidates_for_annoset(
    a: &AnnotationSet,
    corpus: &Corpus,
    idx: &ValenceIndex,
    cfg: &GenerationConfig,
    table: Option<&EmbeddingTable>,
) -> CandidateSet {
    let mut set = CandidateSet {
        annoset_id: a.id,
        source_lu_id: a.lu_id,
        target: a.target_extent().unwrap_or(CharSpan::new(0, 0)),
        candidates: Vec::new(),
        note: None,
    };
    let skip = |mut set: CandidateSet, reason| {
        set.note = Some(reason);
        set
    };
    let Some(source) = corpus.lu(a.lu_id) else {
        return set;
    };
    if let Some(allowed) = &cfg.pos_filter {
        if !allowed.contains(&source.pos) {
            return skip(set, SkipReason::PosFiltered);
        }
    }
    if a.targets.len() > 1 {
        return skip(set, SkipReason::DiscontinuousTarget);
    }
    if cfg.mwe_filter && source.is_multiword() {
        return skip(set, SkipReason::MultiwordSource);
    }
    let Some(frame) = corpus.frame(a.frame_id) else {
        return set;
    };
    let pattern = match extract_valence_pattern(a, frame) {
        Ok(p) => p,
        Err(ValenceError::EmptyPattern) => return skip(set, SkipReason::EmptyPattern),
        Err(_) => return skip(set, SkipReason::MissingLayer),
    };

    let mut by_lemma: BTreeMap<String, LuId> = BTreeMap::new();
    for lu_id in idx.compatible_lexical_units(&pattern) {
        let Some(lu) = corpus.lu(lu_id) else {
            continue;
        };
        if lu.id == source.id || lu.lemma == source.lemma {
            continue;
        }
        if cfg.mwe_filter && lu.is_multiword() {
            continue;
        }
        by_lemma.entry(lu.lemma.clone()).or_insert(lu.id);
    }
    let lemmas: Vec<String> = by_lemma.keys().cloned().collect();
    let filtered = semantic_filter(&source.lemma, &lemmas, &cfg.semantic, table);
    set.note = match filtered.note {
        Some(FilterNote::SourceOutOfVocabulary) => Some(SkipReason::SourceOutOfVocabulary),
        Some(FilterNote::NoTable) => Some(SkipReason::NoEmbeddingTable),
        None => None,
    };
    set.candidates = filtered
        .kept
        .into_iter()
        .map(|lemma| Candidate {
            lu_id: by_lemma[&lemma],
            lemma,
        })
        .collect();
    set.candidates.sort();
    set
}

/// Candidate sets of one sentence, ordered by target start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateLattice {
    pub sentence_id: SentenceId,
    pub sets: Vec<CandidateSet>,
    /// Sets dropped because their target overlaps an earlier one.
    pub excluded: Vec<CandidateSet>,
}

impl CandidateLattice {
    pub fn counts(&self) -> Vec<usize> {
        self.sets.iter().map(CandidateSet::len).collect()
    }
}

pub fn build_lattice(
    sentence_id: SentenceId,
    annosets: &[&AnnotationSet],
    corpus: &Corpus,
    idx: &ValenceIndex,
    cfg: &GenerationConfig,
    table: Option<&EmbeddingTable>,
) -> CandidateLattice {
    let mut ordered: Vec<&&AnnotationSet> = annosets.iter().collect();
    ordered.sort_by_key(|a| (a.target_extent().map(|t| t.start), a.id));
    let mut lattice = CandidateLattice {
        sentence_id,
        sets: Vec::new(),
        excluded: Vec::new(),
    };
    for a in ordered {
        let mut set = candidates_for_annoset(a, corpus, idx, cfg, table);
        if lattice.sets.iter().any(|s| s.target.overlaps(&set.target)) {
            set.candidates.clear();
            set.note = Some(SkipReason::OverlappingTarget);
            lattice.excluded.push(set);
        } else {
            lattice.sets.push(set);
        }
    }
    lattice
}

/// Number of paraphrastic sentences: the product of `(N_c + 1)` over the
/// lattice's candidate sets, minus the source sentence itself. Saturates.
pub fn count_paraphrases(lattice: &CandidateLattice) -> u128 {
    count_from_counts(&lattice.counts())
}

pub fn count_from_counts(counts: &[usize]) -> u128 {
    counts
        .iter()
        .try_fold(1u128, |acc, &n| acc.checked_mul(n as u128 + 1))
        .map(|p| p - 1)
        .unwrap_or(u128::MAX)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Substitution {
    pub annoset_id: AnnoSetId,
    pub from_lu: LuId,
    pub to_lu: LuId,
    pub lemma: String,
    pub source_target: CharSpan,
    pub new_target: CharSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ProjectionNote {
    /// A label spanning a replaced target plus other material was stretched.
    LabelContainsTarget { annoset_id: AnnoSetId, fe: String },
}

/// One generated sentence with provisional ids (those of the source);
/// [`export_augmented`] assigns fresh ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedSentence {
    pub source_sentence_id: SentenceId,
    pub sentence: Sentence,
    pub annotation_sets: Vec<AnnotationSet>,
    pub substitutions: Vec<Substitution>,
    pub notes: Vec<ProjectionNote>,
}

/// Replacement plan: sorted, non-overlapping (old span, new text) pairs.
struct Remap<'a> {
    sentence: SentenceId,
    subs: Vec<(CharSpan, &'a str, usize)>,
}

impl Remap<'_> {
    fn shift_before(&self, p: usize) -> isize {
        self.subs
            .iter()
            .filter(|(t, _, _)| t.end < p)
            .map(|(t, _, len)| *len as isize - t.width() as isize)
            .sum()
    }

    fn containing(&self, p: usize) -> Option<&(CharSpan, &str, usize)> {
        self.subs
            .iter()
            .find(|(t, _, _)| t.start <= p && p <= t.end)
    }

    fn start(&self, p: usize) -> Option<usize> {
        match self.containing(p) {
            Some((t, _, _)) if p != t.start => None,
            _ => Some((p as isize + self.shift_before(p)) as usize),
        }
    }

    fn end(&self, p: usize) -> Option<usize> {
        match self.containing(p) {
            Some((t, _, _)) if p != t.end => None,
            Some((t, _, len)) => {
                Some((t.start as isize + self.shift_before(t.start)) as usize + len - 1)
            }
            None => Some((p as isize + self.shift_before(p)) as usize),
        }
    }

    fn span(&self, s: CharSpan) -> Option<CharSpan> {
        Some(CharSpan::new(self.start(s.start)?, self.end(s.end)?))
    }

    fn strictly_contains_sub(&self, s: CharSpan) -> bool {
        self.subs
            .iter()
            .any(|(t, _, _)| s.start <= t.start && t.end <= s.end && s != *t)
    }

    fn text(&self, source: &str) -> String {
        let chars: Vec<char> = source.chars().collect();
        let mut out = String::with_capacity(source.len());
        let mut pos = 0;
        for (t, new, _) in &self.subs {
            out.extend(&chars[pos..t.start]);
            out.push_str(new);
            pos = t.end + 1;
        }
        out.extend(&chars[pos..]);
        out
    }
}

/// Applies one choice of candidates to a source sentence.
fn project(
    sentence: &Sentence,
    annosets: &[&AnnotationSet],
    choice: &[(&CandidateSet, &Candidate)],
) -> Result<GeneratedSentence, ProjectionError> {
    let mut subs: Vec<(CharSpan, &str, usize)> = choice
        .iter()
        .map(|(set, c)| (set.target, c.lemma.as_str(), c.lemma.chars().count()))
        .collect();
    subs.sort_by_key(|s| s.0);
    let remap = Remap {
        sentence: sentence.id,
        subs,
    };
    let substituted: BTreeMap<AnnoSetId, &Candidate> =
        choice.iter().map(|(set, c)| (set.annoset_id, *c)).collect();

    let mut notes = Vec::new();
    let mut projected = Vec::with_capacity(annosets.len());
    for a in annosets {
        let mut targets = Vec::with_capacity(a.targets.len());
        for t in &a.targets {
            targets.push(remap.span(*t).ok_or(ProjectionError::TargetInsideTarget {
                sentence: remap.sentence,
                annoset: a.id,
                target: *t,
            })?);
        }
        let mut labels = Vec::with_capacity(a.labels.len());
        for l in &a.labels {
            let Some(span) = l.char_span() else {
                labels.push(l.clone());
                continue;
            };
            let new = remap
                .span(span)
                .ok_or_else(|| ProjectionError::BoundaryInsideTarget {
                    sentence: remap.sentence,
                    fe: l.fe.clone(),
                    target: remap
                        .subs
                        .iter()
                        .find(|(t, _, _)| t.overlaps(&span))
                        .map(|s| s.0)
                        .unwrap_or(span),
                })?;
            if remap.strictly_contains_sub(span) {
                notes.push(ProjectionNote::LabelContainsTarget {
                    annoset_id: a.id,
                    fe: l.fe.clone(),
                });
            }
            labels.push(LabelSpan {
                start: Some(new.start as i64),
                end: Some(new.end as i64),
                ..l.clone()
            });
        }
        let lu_id = substituted.get(&a.id).map(|c| c.lu_id).unwrap_or(a.lu_id);
        projected.push(AnnotationSet {
            id: a.id,
            sentence_id: sentence.id,
            lu_id,
            frame_id: a.frame_id,
            targets,
            labels,
        });
    }

    let substitutions = choice
        .iter()
        .map(|(set, c)| Substitution {
            annoset_id: set.annoset_id,
            from_lu: set.source_lu_id,
            to_lu: c.lu_id,
            lemma: c.lemma.clone(),
            source_target: set.target,
            new_target: remap.span(set.target).expect("replaced targets always map"),
        })
        .collect();

    Ok(GeneratedSentence {
        source_sentence_id: sentence.id,
        sentence: Sentence {
            id: sentence.id,
            text: remap.text(&sentence.text),
            document: sentence.document.clone(),
            derived_from: Some(sentence.id),
        },
        annotation_sets: projected,
        substitutions,
        notes,
    })
}

/// Every sentence the lattice licenses, in odometer order: sets in target
/// order with the last set varying fastest, each set's digit running over
/// "keep original" then its candidates in lemma order. The all-original
/// combination is skipped. `cap` truncates the enumeration.
pub fn generate_sentences(
    lattice: &CandidateLattice,
    corpus: &Corpus,
    cap: Option<usize>,
) -> Result<Vec<GeneratedSentence>, ProjectionError> {
    let Some(sentence) = corpus.sentence(lattice.sentence_id) else {
        return Ok(Vec::new());
    };
    let annosets: Vec<&AnnotationSet> = corpus
        .annotation_sets
        .values()
        .filter(|a| a.sentence_id == sentence.id)
        .collect();
    generate_for(lattice, sentence, &annosets, cap)
}

fn generate_for(
    lattice: &CandidateLattice,
    sentence: &Sentence,
    annosets: &[&AnnotationSet],
    cap: Option<usize>,
) -> Result<Vec<GeneratedSentence>, ProjectionError> {
    let active: Vec<&CandidateSet> = lattice.sets.iter().filter(|s| !s.is_empty()).collect();
    let limit = cap.unwrap_or(usize::MAX);
    let mut out = Vec::new();
    if active.is_empty() || limit == 0 {
        return Ok(out);
    }
    let mut digits = vec![0usize; active.len()];
    loop {
        // increment, last position fastest
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] <= active[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
        let choice: Vec<(&CandidateSet, &Candidate)> = active
            .iter()
            .zip(&digits)
            .filter(|(_, &d)| d > 0)
            .map(|(set, &d)| (*set, &set.candidates[d - 1]))
            .collect();
        out.push(project(sentence, annosets, &choice)?);
        if out.len() >= limit {
            return Ok(out);
        }
    }
}

/// Re-keys a source tree onto a generated sentence: each replaced target's
/// tokens collapse into the candidate's lexemes, the first taking the
/// target head's attachment and the rest attaching to it as `flat`.
/// Returns `None` when a target is not token-aligned or the result is not
/// a tree.
pub fn project_tree(
    tree: &DependencyTree,
    generated: &GeneratedSentence,
    new_id: SentenceId,
) -> Option<DependencyTree> {
    let mut replacements: Vec<(usize, usize, Vec<&str>)> = Vec::new();
    for sub in &generated.substitutions {
        let (span, exact) = tree.align(sub.source_target)?;
        if !exact {
            return None;
        }
        replacements.push((span.start, span.end, sub.lemma.split_whitespace().collect()));
    }
    replacements.sort_by_key(|r| r.0);

    let n = tree.len();
    let mut old_to_new = vec![0usize; n + 1];
    let mut tokens: Vec<Token> = Vec::new();
    // (new index, old head source) for first tokens of replacements
    let mut heads_from: Vec<usize> = Vec::new();
    let mut i = 1;
    let mut r = 0;
    while i <= n {
        if r < replacements.len() && replacements[r].0 == i {
            let (start, end, ref forms) = replacements[r];
            let head_tok = tree.token(tree.span_head(crate::deptree::Span::new(start, end)));
            let first = tokens.len() + 1;
            old_to_new[start..=end].fill(first);
            for (j, form) in forms.iter().enumerate() {
                tokens.push(Token {
                    index: first + j,
                    form: form.to_string(),
                    lemma: form.to_string(),
                    pos: head_tok.pos.clone(),
                    head: 0,
                    deprel: if j == 0 {
                        head_tok.deprel.clone()
                    } else {
                        "flat".into()
                    },
                    char_start: 0,
                    char_end: 0,
                });
                heads_from.push(if j == 0 {
                    head_tok.head
                } else {
                    usize::MAX - first
                });
            }
            i = end + 1;
            r += 1;
        } else {
            let t = tree.token(i);
            old_to_new[i] = tokens.len() + 1;
            tokens.push(Token {
                index: tokens.len() + 1,
                ..t.clone()
            });
            heads_from.push(t.head);
            i += 1;
        }
    }
    for (t, from) in tokens.iter_mut().zip(heads_from) {
        t.head = if from > n {
            usize::MAX - from
        } else if from == 0 {
            0
        } else {
            old_to_new[from]
        };
    }
    crate::deptree::align_offsets(&mut tokens, &generated.sentence.text).ok()?;
    DependencyTree::new(Some(new_id), tokens).ok()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GenerationReport {
    pub source_sentences: usize,
    pub lattices_with_candidates: usize,
    pub possible_paraphrases: u128,
    pub generated_sentences: usize,
    pub generated_annosets: usize,
    pub skipped: BTreeMap<String, usize>,
    pub projection_failures: Vec<String>,
    pub stretched_labels: usize,
}

#[derive(Debug, Clone)]
pub struct GenerationOutput {
    pub generated: Vec<GeneratedSentence>,
    pub report: GenerationReport,
}

/// Runs candidate generation and projection over every sentence of
/// `corpus`, optionally on `jobs` threads. Output is ordered by source
/// sentence id regardless of thread count. Sentences whose projection
/// fails are skipped and listed in the report.
pub fn generate_corpus(
    corpus: &Corpus,
    idx: &ValenceIndex,
    cfg: &GenerationConfig,
    table: Option<&EmbeddingTable>,
    jobs: Option<usize>,
) -> GenerationOutput {
    let by_sentence = corpus.annosets_by_sentence();
    let work: Vec<(&SentenceId, &Vec<&AnnotationSet>)> = by_sentence.iter().collect();
    let run = |(sid, annosets): &(&SentenceId, &Vec<&AnnotationSet>)| {
        let lattice = build_lattice(**sid, annosets, corpus, idx, cfg, table);
        let sentence = &corpus.sentences[*sid];
        let result = generate_for(&lattice, sentence, annosets, cfg.max_sentences_per_source);
        (lattice, result)
    };
    let results: Vec<_> = match jobs {
        Some(1) => work.iter().map(run).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(|| work.par_iter().map(run).collect()))
            .unwrap_or_else(|_| work.iter().map(run).collect()),
        None => work.par_iter().map(run).collect(),
    };

    let mut report = GenerationReport {
        source_sentences: corpus.sentences.len(),
        ..Default::default()
    };
    let mut generated = Vec::new();
    for (lattice, result) in results {
        for set in lattice.sets.iter().chain(&lattice.excluded) {
            if let Some(reason) = &set.note {
                *report.skipped.entry(format!("{reason:?}")).or_insert(0) += 1;
            }
        }
        let n = count_paraphrases(&lattice);
        report.possible_paraphrases = report.possible_paraphrases.saturating_add(n);
        if n > 0 {
            report.lattices_with_candidates += 1;
        }
        match result {
            Ok(sentences) => {
                for g in &sentences {
                    report.generated_annosets += g.annotation_sets.len();
                    report.stretched_labels += g.notes.len();
                }
                report.generated_sentences += sentences.len();
                generated.extend(sentences);
            }
            Err(e) => report.projection_failures.push(e.to_string()),
        }
    }
    GenerationOutput { generated, report }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AugmentCounts {
    pub train_sentences: usize,
    pub train_annosets: usize,
    pub generated_sentences: usize,
    pub generated_annosets: usize,
    pub total_sentences: usize,
    pub total_annosets: usize,
}

#[derive(Debug, Clone)]
pub struct Augmented {
    pub corpus: Corpus,
    pub counts: AugmentCounts,
    /// Id assigned to each generated sentence, in input order.
    pub sentence_ids: Vec<SentenceId>,
}

/// Gold training data plus generated sentences under fresh ids above every
/// gold id.
pub fn export_augmented(train: &Corpus, generated: &[GeneratedSentence]) -> Augmented {
    let mut corpus = train.clone();
    if !generated.is_empty() {
        corpus.origin = Origin::Generated;
    }
    let first_sentence = train.max_sentence_id().map_or(1, |id| id.0 + 1);
    let mut next_annoset = train.max_annoset_id().map_or(1, |id| id.0 + 1);
    let mut sentence_ids = Vec::with_capacity(generated.len());
    for (next_sentence, g) in (first_sentence..).zip(generated) {
        let sid = SentenceId(next_sentence);
        sentence_ids.push(sid);
        corpus.sentences.insert(
            sid,
            Sentence {
                id: sid,
                ..g.sentence.clone()
            },
        );
        for a in &g.annotation_sets {
            let aid = AnnoSetId(next_annoset);
            next_annoset += 1;
            corpus.annotation_sets.insert(
                aid,
                AnnotationSet {
                    id: aid,
                    sentence_id: sid,
                    ..a.clone()
                },
            );
        }
    }
    let counts = AugmentCounts {
        train_sentences: train.sentences.len(),
        train_annosets: train.annotation_sets.len(),
        generated_sentences: generated.len(),
        generated_annosets: generated.iter().map(|g| g.annotation_sets.len()).sum(),
        total_sentences: corpus.sentences.len(),
        total_annosets: corpus.annotation_sets.len(),
    };
    Augmented {
        corpus,
        counts,
        sentence_ids,
    }
}
