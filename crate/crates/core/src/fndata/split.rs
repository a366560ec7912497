use std::collections::{BTreeSet, HashSet};

use super::{AnnoSetId, AnnotationSet, Corpus, FnDataError};

/// Why an annotation set is absent from every split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalReason {
    /// Target with a frame but no frame element labels, dropped from train.
    Incomplete,
    /// Duplicate of an annotation set already kept in the test split.
    Duplicate,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
    pub removed: Vec<(AnnoSetId, RemovalReason)>,
}

/// Identity of an annotation set independent of its id and sentence.
fn annoset_signature(a: &AnnotationSet) -> String {
    serde_json::to_string(&(a.lu_id, a.frame_id, &a.targets, &a.labels))
        .expect("annotation sets always serialize")
}

/// Partitions a corpus by document name.
///
/// Sentences whose document is listed in `test_docs` or `dev_docs` go to
/// that split; everything else (including sentences with no document)
/// goes to train. Train loses annotation sets with no FE labels. Test is
/// deduplicated: a sentence with the same text and the same annotation
/// signatures as an earlier one is dropped, and duplicate annotation sets
/// within a kept sentence are dropped.
pub fn split_corpus(
    c: &Corpus,
    test_docs: &[String],
    dev_docs: &[String],
) -> Result<Split, FnDataError> {
    let known: BTreeSet<String> = c.documents().into_iter().collect();
    for doc in test_docs.iter().chain(dev_docs) {
        if !known.contains(doc) {
            return Err(FnDataError::UnknownDocument(doc.clone()));
        }
    }
    if let Some(doc) = test_docs.iter().find(|d| dev_docs.contains(d)) {
        return Err(FnDataError::DocumentConflict(doc.clone()));
    }

    let mut train = c.lexicon_only();
    let mut dev = c.lexicon_only();
    let mut test = c.lexicon_only();
    let mut removed = Vec::new();

    let by_sentence = c.annosets_by_sentence();
    let mut seen_test_sentences: HashSet<(String, Vec<String>)> = HashSet::new();

    for s in c.sentences.values() {
        let doc = s.document.as_deref();
        let in_docs = |docs: &[String]| doc.is_some_and(|d| docs.iter().any(|x| x == d));
        let annosets = by_sentence.get(&s.id).map(Vec::as_slice).unwrap_or(&[]);
        if in_docs(test_docs) {
            let mut sigs: Vec<String> = annosets.iter().map(|a| annoset_signature(a)).collect();
            sigs.sort();
            if !seen_test_sentences.insert((s.text.clone(), sigs)) {
                removed.extend(annosets.iter().map(|a| (a.id, RemovalReason::Duplicate)));
                continue;
            }
            test.sentences.insert(s.id, s.clone());
            let mut seen = HashSet::new();
            for a in annosets {
                if seen.insert(annoset_signature(a)) {
                    test.annotation_sets.insert(a.id, (*a).clone());
                } else {
                    removed.push((a.id, RemovalReason::Duplicate));
                }
            }
        } else if in_docs(dev_docs) {
            dev.sentences.insert(s.id, s.clone());
            for a in annosets {
                dev.annotation_sets.insert(a.id, (*a).clone());
            }
        } else {
            train.sentences.insert(s.id, s.clone());
            for a in annosets {
                if a.labels.is_empty() {
                    removed.push((a.id, RemovalReason::Incomplete));
                } else {
                    train.annotation_sets.insert(a.id, (*a).clone());
                }
            }
        }
    }
    Ok(Split {
        train,
        dev,
        test,
        removed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fndata::*;

    fn corpus() -> Corpus {
        let mut c = Corpus::default();
        c.frames.insert(
            FrameId(1),
            Frame {
                id: FrameId(1),
                name: "F".into(),
                frame_elements: vec![FrameElement {
                    name: "A".into(),
                    core_type: CoreType::Core,
                }],
                lexical_units: vec![],
            },
        );
        c.lexical_units.insert(
            LuId(1),
            LexicalUnit {
                id: LuId(1),
                lemma: "go".into(),
                pos: Pos::V,
                frame_id: FrameId(1),
            },
        );
        let docs = ["d1", "d1", "d2", "d3", "d3"];
        for (i, doc) in docs.iter().enumerate() {
            let id = SentenceId(i as u32 + 1);
            let text = if i >= 3 { "we go" } else { "they go" };
            c.sentences.insert(
                id,
                Sentence {
                    id,
                    text: text.into(),
                    document: Some(doc.to_string()),
                    derived_from: None,
                },
            );
            let labels = if i == 1 {
                vec![]
            } else {
                vec![LabelSpan::overt("A", 0, 1, "NP", "Ext")]
            };
            let aid = AnnoSetId(i as u32 + 10);
            c.annotation_sets.insert(
                aid,
                AnnotationSet {
                    id: aid,
                    sentence_id: id,
                    lu_id: LuId(1),
                    frame_id: FrameId(1),
                    targets: vec![CharSpan::new(text.len() - 2, text.len() - 1)],
                    labels,
                },
            );
        }
        c.link();
        c
    }

    fn ids(c: &Corpus) -> BTreeSet<AnnoSetId> {
        c.annotation_sets.keys().copied().collect()
    }

    #[test]
    fn all_train_drops_only_incomplete() {
        let c = corpus();
        let s = split_corpus(&c, &[], &[]).unwrap();
        assert!(s.dev.annotation_sets.is_empty() && s.test.annotation_sets.is_empty());
        assert_eq!(s.train.annotation_sets.len(), 4);
        assert_eq!(s.removed, vec![(AnnoSetId(11), RemovalReason::Incomplete)]);
    }

    #[test]
    fn duplicate_test_sentence_kept_once() {
        let c = corpus();
        let s = split_corpus(&c, &["d3".to_string()], &["d2".to_string()]).unwrap();
        assert_eq!(s.test.sentences.len(), 1);
        assert_eq!(s.test.annotation_sets.len(), 1);
        assert!(s
            .removed
            .contains(&(AnnoSetId(14), RemovalReason::Duplicate)));

        // pairwise disjoint, and union with removed equals input
        let (tr, dv, te) = (ids(&s.train), ids(&s.dev), ids(&s.test));
        assert!(tr.is_disjoint(&dv) && tr.is_disjoint(&te) && dv.is_disjoint(&te));
        let mut all: BTreeSet<_> = tr.union(&dv).copied().collect();
        all.extend(te);
        all.extend(s.removed.iter().map(|r| r.0));
        assert_eq!(all, ids(&c));
    }

    #[test]
    fn conflicting_and_unknown_documents_fail() {
        let c = corpus();
        let d = vec!["d2".to_string()];
        assert!(matches!(
            split_corpus(&c, &d, &d),
            Err(FnDataError::DocumentConflict(_))
        ));
        assert!(matches!(
            split_corpus(&c, &["nope".to_string()], &[]),
            Err(FnDataError::UnknownDocument(_))
        ));
    }
}
