use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($($(#[$meta:meta])* $name:ident),* $(,)?) => {$(
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    )*};
}

id_type! {
    /// Frame identifier, unique corpus-wide.
    FrameId,
    /// Lexical unit identifier.
    LuId,
    SentenceId,
    AnnoSetId,
}

/// Core status of a frame element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CoreType {
    Core,
    Peripheral,
    #[serde(rename = "Extra-Thematic")]
    ExtraThematic,
    #[serde(rename = "Core-Unexpressed")]
    CoreUnexpressed,
}

impl CoreType {
    /// Core and core-unexpressed elements count as core; everything else is non-core.
    pub fn is_core(self) -> bool {
        matches!(self, CoreType::Core | CoreType::CoreUnexpressed)
    }

    pub fn from_framenet(s: &str) -> Option<CoreType> {
        match s {
            "Core" => Some(CoreType::Core),
            "Peripheral" => Some(CoreType::Peripheral),
            "Extra-Thematic" => Some(CoreType::ExtraThematic),
            "Core-Unexpressed" => Some(CoreType::CoreUnexpressed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameElement {
    pub name: String,
    pub core_type: CoreType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub id: FrameId,
    pub name: String,
    #[serde(rename = "fes")]
    pub frame_elements: Vec<FrameElement>,
    /// Filled in from the lexical unit records when the corpus is linked.
    #[serde(skip)]
    pub lexical_units: Vec<LuId>,
}

impl Frame {
    pub fn fe(&self, name: &str) -> Option<&FrameElement> {
        self.frame_elements.iter().find(|fe| fe.name == name)
    }

    pub fn has_fe(&self, name: &str) -> bool {
        self.fe(name).is_some()
    }

    /// `None` when the frame has no element with that name.
    pub fn is_core(&self, name: &str) -> Option<bool> {
        self.fe(name).map(|fe| fe.core_type.is_core())
    }
}

/// Coarse part of speech of a lexical unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    N,
    V,
    A,
    #[serde(rename = "ADV")]
    Adv,
    #[serde(rename = "PREP")]
    Prep,
    Other,
}

impl Pos {
    pub fn from_tag(tag: &str) -> Pos {
        match tag.to_ascii_uppercase().as_str() {
            "N" => Pos::N,
            "V" => Pos::V,
            "A" => Pos::A,
            "ADV" => Pos::Adv,
            "PREP" => Pos::Prep,
            _ => Pos::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::N => "N",
            Pos::V => "V",
            Pos::A => "A",
            Pos::Adv => "ADV",
            Pos::Prep => "PREP",
            Pos::Other => "Other",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexicalUnit {
    pub id: LuId,
    /// May hold several whitespace-separated lexemes ("hand out").
    pub lemma: String,
    pub pos: Pos,
    pub frame_id: FrameId,
}

impl LexicalUnit {
    pub fn is_multiword(&self) -> bool {
        self.lemma.split_whitespace().nth(1).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    Inheritance,
    SubFrame,
    Other,
}

/// Directed frame-to-frame relation with its frame element mappings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRelation {
    #[serde(rename = "type")]
    pub kind: RelationKind,
    pub parent: FrameId,
    pub child: FrameId,
    /// (parent FE, child FE) pairs.
    #[serde(default)]
    pub fe_mappings: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: SentenceId,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document: Option<String>,
    /// Source sentence of a generated paraphrase.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<SentenceId>,
}

impl Sentence {
    /// Length in Unicode scalar values, the unit of every offset in the corpus.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// Substring for an inclusive character span, `None` when out of range.
    pub fn slice(&self, span: CharSpan) -> Option<String> {
        if span.start > span.end || span.end >= self.char_len() {
            return None;
        }
        Some(
            self.text
                .chars()
                .skip(span.start)
                .take(span.end - span.start + 1)
                .collect(),
        )
    }
}

/// Inclusive character span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        CharSpan { start, end }
    }

    /// Number of characters covered.
    pub fn width(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn overlaps(&self, other: &CharSpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NullInstantiation {
    #[serde(rename = "INI")]
    Indefinite,
    #[serde(rename = "DNI")]
    Definite,
    #[serde(rename = "CNI")]
    Constructional,
}

impl NullInstantiation {
    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "INI" => Some(NullInstantiation::Indefinite),
            "DNI" => Some(NullInstantiation::Definite),
            "CNI" => Some(NullInstantiation::Constructional),
            _ => None,
        }
    }
}

/// One frame element label with its phrase type and grammatical function.
///
/// Offsets are kept as raw signed integers so corrupted records survive
/// ingestion and can be rejected by validation instead of failing to parse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpan {
    pub fe: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gf: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ni: Option<NullInstantiation>,
}

impl LabelSpan {
    pub fn overt(fe: &str, start: usize, end: usize, pt: &str, gf: &str) -> Self {
        LabelSpan {
            fe: fe.to_string(),
            start: Some(start as i64),
            end: Some(end as i64),
            pt: Some(pt.to_string()),
            gf: Some(gf.to_string()),
            ni: None,
        }
    }

    pub fn null(fe: &str, kind: NullInstantiation) -> Self {
        LabelSpan {
            fe: fe.to_string(),
            start: None,
            end: None,
            pt: None,
            gf: None,
            ni: Some(kind),
        }
    }

    pub fn is_overt(&self) -> bool {
        self.ni.is_none()
    }

    /// The span of an overt label with well-formed offsets.
    pub fn char_span(&self) -> Option<CharSpan> {
        if self.ni.is_some() {
            return None;
        }
        match (self.start, self.end) {
            (Some(s), Some(e)) if s >= 0 && s <= e => Some(CharSpan::new(s as usize, e as usize)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub id: AnnoSetId,
    pub sentence_id: SentenceId,
    pub lu_id: LuId,
    pub frame_id: FrameId,
    pub targets: Vec<CharSpan>,
    #[serde(default)]
    pub labels: Vec<LabelSpan>,
}

impl AnnotationSet {
    pub fn overt_labels(&self) -> impl Iterator<Item = &LabelSpan> {
        self.labels.iter().filter(|l| l.is_overt())
    }

    /// Smallest span covering every target piece.
    pub fn target_extent(&self) -> Option<CharSpan> {
        let start = self.targets.iter().map(|t| t.start).min()?;
        let end = self.targets.iter().map(|t| t.end).max()?;
        Some(CharSpan::new(start, end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    #[default]
    Fulltext,
    Exemplar,
    Generated,
}

/// An annotated lexicon plus its sentences. Immutable once ingested.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub origin: Origin,
    pub frames: BTreeMap<FrameId, Frame>,
    pub lexical_units: BTreeMap<LuId, LexicalUnit>,
    pub relations: Vec<FrameRelation>,
    pub sentences: BTreeMap<SentenceId, Sentence>,
    pub annotation_sets: BTreeMap<AnnoSetId, AnnotationSet>,
}

impl Corpus {
    pub fn frame(&self, id: FrameId) -> Option<&Frame> {
        self.frames.get(&id)
    }

    pub fn frame_by_name(&self, name: &str) -> Option<&Frame> {
        self.frames.values().find(|f| f.name == name)
    }

    pub fn lu(&self, id: LuId) -> Option<&LexicalUnit> {
        self.lexical_units.get(&id)
    }

    pub fn sentence(&self, id: SentenceId) -> Option<&Sentence> {
        self.sentences.get(&id)
    }

    pub fn annotation_set(&self, id: AnnoSetId) -> Option<&AnnotationSet> {
        self.annotation_sets.get(&id)
    }

    /// Annotation sets grouped by sentence, each group in id order.
    pub fn annosets_by_sentence(&self) -> BTreeMap<SentenceId, Vec<&AnnotationSet>> {
        let mut out: BTreeMap<SentenceId, Vec<&AnnotationSet>> = BTreeMap::new();
        for a in self.annotation_sets.values() {
            out.entry(a.sentence_id).or_default().push(a);
        }
        out
    }

    /// Rebuilds each frame's lexical unit list from the LU records.
    pub fn link(&mut self) {
        for frame in self.frames.values_mut() {
            frame.lexical_units.clear();
        }
        for lu in self.lexical_units.values() {
            if let Some(frame) = self.frames.get_mut(&lu.frame_id) {
                frame.lexical_units.push(lu.id);
            }
        }
    }

    /// Copy of the lexicon (frames, LUs, relations) without any sentences.
    pub fn lexicon_only(&self) -> Corpus {
        Corpus {
            origin: self.origin,
            frames: self.frames.clone(),
            lexical_units: self.lexical_units.clone(),
            relations: self.relations.clone(),
            sentences: BTreeMap::new(),
            annotation_sets: BTreeMap::new(),
        }
    }

    /// Document names in first-seen order of sentence id.
    pub fn documents(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for s in self.sentences.values() {
            if let Some(doc) = &s.document {
                if !seen.contains(doc) {
                    seen.push(doc.clone());
                }
            }
        }
        seen
    }

    pub fn max_sentence_id(&self) -> Option<SentenceId> {
        self.sentences.keys().next_back().copied()
    }

    pub fn max_annoset_id(&self) -> Option<AnnoSetId> {
        self.annotation_sets.keys().next_back().copied()
    }
}
