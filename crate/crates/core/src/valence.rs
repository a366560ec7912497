//! Valence patterns, their core signatures, and the loose-matching index.
//!
//! A valence pattern lists the `FE.PT.GF` triplets realized by one
//! annotation set. Two patterns of the same frame match loosely when their
//! core units agree as multisets; peripheral and extra-thematic units are
//! ignored.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fndata::{AnnoSetId, AnnotationSet, Corpus, Frame, FrameId, LuId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValenceError {
    #[error("label {0:?} lacks a phrase type or grammatical function")]
    MissingLayer(String),
    #[error("annotation set has no overt labels")]
    EmptyPattern,
    #[error("malformed valence unit {0:?}: expected FE.PT.GF")]
    Malformed(String),
    #[error("empty pattern query")]
    EmptyQuery,
}

/// One `FE.PT.GF` triplet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ValenceUnit {
    pub fe: String,
    pub pt: String,
    pub gf: String,
}

impl ValenceUnit {
    pub fn new(fe: &str, pt: &str, gf: &str) -> Self {
        ValenceUnit {
            fe: fe.to_string(),
            pt: pt.to_string(),
            gf: gf.to_string(),
        }
    }
}

impl fmt::Display for ValenceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.fe, self.pt, self.gf)
    }
}

impl FromStr for ValenceUnit {
    type Err = ValenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('.').collect();
        match parts.as_slice() {
            [fe, pt, gf] if !fe.is_empty() && !pt.is_empty() && !gf.is_empty() => {
                Ok(ValenceUnit::new(fe, pt, gf))
            }
            _ => Err(ValenceError::Malformed(s.to_string())),
        }
    }
}

/// Parses the whitespace-separated query grammar, e.g. `Buyer.NP.Ext Goods.NP.Obj`.
pub fn parse_units(query: &str) -> Result<Vec<ValenceUnit>, ValenceError> {
    let units = query
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<Vec<ValenceUnit>, _>>()?;
    if units.is_empty() {
        return Err(ValenceError::EmptyQuery);
    }
    Ok(units)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValencePattern {
    pub frame_id: FrameId,
    pub units: Vec<ValenceUnit>,
}

impl ValencePattern {
    pub fn new(frame_id: FrameId, units: Vec<ValenceUnit>) -> Self {
        ValencePattern { frame_id, units }
    }

    /// Units sorted canonically and joined with spaces.
    pub fn canonical_string(&self) -> String {
        let mut units = self.units.clone();
        units.sort();
        join_units(&units)
    }
}

impl fmt::Display for ValencePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join_units(&self.units))
    }
}

fn join_units(units: &[ValenceUnit]) -> String {
    units
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Canonically sorted multiset of core units.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct CoreSignature(pub Vec<ValenceUnit>);

impl CoreSignature {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One valence unit per overt label, in label order.
pub fn extract_valence_pattern(
    a: &AnnotationSet,
    frame: &Frame,
) -> Result<ValencePattern, ValenceError> {
    let mut units = Vec::new();
    for label in a.overt_labels() {
        match (&label.pt, &label.gf) {
            (Some(pt), Some(gf)) if !pt.is_empty() && !gf.is_empty() => {
                units.push(ValenceUnit::new(&label.fe, pt, gf))
            }
            _ => return Err(ValenceError::MissingLayer(label.fe.clone())),
        }
    }
    if units.is_empty() {
        return Err(ValenceError::EmptyPattern);
    }
    Ok(ValencePattern::new(frame.id, units))
}

fn signature_of<'a>(
    units: impl IntoIterator<Item = &'a ValenceUnit>,
    is_core: impl Fn(&str) -> bool,
) -> CoreSignature {
    let mut core: Vec<ValenceUnit> = units
        .into_iter()
        .filter(|u| is_core(&u.fe))
        .cloned()
        .collect();
    core.sort();
    CoreSignature(core)
}

/// Units whose FE is Core or Core-Unexpressed, sorted by (fe, pt, gf).
/// Units naming an FE the frame does not have are treated as non-core.
pub fn core_signature(p: &ValencePattern, frame: &Frame) -> CoreSignature {
    signature_of(&p.units, |fe| frame.is_core(fe).unwrap_or(false))
}

/// True iff both patterns have the same core multiset.
pub fn loose_match(p1: &ValencePattern, p2: &ValencePattern, frame: &Frame) -> bool {
    p1.frame_id == p2.frame_id && core_signature(p1, frame) == core_signature(p2, frame)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexEntry {
    pub lu_id: LuId,
    pub annoset_id: AnnoSetId,
    /// Empty for annotation sets with only null-instantiated labels.
    pub units: Vec<ValenceUnit>,
}

/// Annotation sets skipped while building the index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedAnnoset {
    pub annoset_id: AnnoSetId,
    pub reason: ValenceError,
}

/// Inverted index from (frame, core signature) to annotation sets.
#[derive(Debug, Clone, Default)]
pub struct ValenceIndex {
    buckets: HashMap<(FrameId, CoreSignature), Vec<IndexEntry>>,
    core_fes: HashMap<FrameId, BTreeSet<String>>,
    lu_frames: HashMap<LuId, FrameId>,
    pub skipped: Vec<SkippedAnnoset>,
}

impl ValenceIndex {
    /// Indexes every annotation set of `c`. Sets with a missing PT/GF layer
    /// are skipped and reported; sets with only null instantiations go under
    /// the empty signature.
    pub fn build(c: &Corpus) -> ValenceIndex {
        let mut idx = ValenceIndex {
            core_fes: c
                .frames
                .values()
                .map(|f| {
                    let core = f
                        .frame_elements
                        .iter()
                        .filter(|fe| fe.core_type.is_core())
                        .map(|fe| fe.name.clone())
                        .collect();
                    (f.id, core)
                })
                .collect(),
            lu_frames: c
                .lexical_units
                .values()
                .map(|lu| (lu.id, lu.frame_id))
                .collect(),
            ..Default::default()
        };
        for a in c.annotation_sets.values() {
            let Some(frame) = c.frame(a.frame_id) else {
                continue;
            };
            let units = match extract_valence_pattern(a, frame) {
                Ok(p) => p.units,
                Err(ValenceError::EmptyPattern) => Vec::new(),
                Err(reason) => {
                    idx.skipped.push(SkippedAnnoset {
                        annoset_id: a.id,
                        reason,
                    });
                    continue;
                }
            };
            let key = (a.frame_id, idx.signature_units(a.frame_id, &units));
            idx.buckets.entry(key).or_default().push(IndexEntry {
                lu_id: a.lu_id,
                annoset_id: a.id,
                units,
            });
        }
        idx
    }

    fn signature_units(&self, frame: FrameId, units: &[ValenceUnit]) -> CoreSignature {
        let core = self.core_fes.get(&frame);
        signature_of(units, |fe| core.is_some_and(|c| c.contains(fe)))
    }

    pub fn signature(&self, p: &ValencePattern) -> CoreSignature {
        self.signature_units(p.frame_id, &p.units)
    }

    /// Entries loosely matching `p`, in annotation-set id order.
    pub fn lookup(&self, p: &ValencePattern) -> &[IndexEntry] {
        self.buckets
            .get(&(p.frame_id, self.signature(p)))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn lookup_signature(&self, frame: FrameId, sig: &CoreSignature) -> &[IndexEntry] {
        self.buckets
            .get(&(frame, sig.clone()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Bucket sizes keyed by (frame, signature), for inspection.
    pub fn bucket_sizes(&self) -> BTreeMap<(FrameId, CoreSignature), usize> {
        self.buckets
            .iter()
            .map(|(k, v)| (k.clone(), v.len()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    /// LUs of the pattern's frame with at least one loosely matching set.
    pub fn compatible_lexical_units(&self, p: &ValencePattern) -> BTreeSet<LuId> {
        self.lookup(p)
            .iter()
            .filter(|e| self.lu_frames.get(&e.lu_id) == Some(&p.frame_id))
            .map(|e| e.lu_id)
            .collect()
    }
}

/// Free-function form of [`ValenceIndex::compatible_lexical_units`].
pub fn compatible_lexical_units(idx: &ValenceIndex, p: &ValencePattern) -> BTreeSet<LuId> {
    idx.compatible_lexical_units(p)
}
