use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Corpus, Pos};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct CorpusStats {
    pub n_sentences: usize,
    pub n_annosets: usize,
    /// Distinct lexical units attested in annotation sets, per POS.
    pub lus_by_pos: BTreeMap<Pos, usize>,
}

pub fn corpus_stats(c: &Corpus) -> CorpusStats {
    let attested: BTreeSet<_> = c.annotation_sets.values().map(|a| a.lu_id).collect();
    let mut lus_by_pos = BTreeMap::new();
    for lu in attested.iter().filter_map(|id| c.lu(*id)) {
        *lus_by_pos.entry(lu.pos).or_insert(0) += 1;
    }
    CorpusStats {
        n_sentences: c.sentences.len(),
        n_annosets: c.annotation_sets.len(),
        lus_by_pos,
    }
}
