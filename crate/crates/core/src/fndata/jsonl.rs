//! Native JSON Lines corpus format.
//!
//! One JSON object per line, discriminated by a `"kind"` field:
//!
//! | kind       | fields |
//! |------------|--------|
//! | `corpus`   | `origin` (`fulltext`, `exemplar`, `generated`); optional header |
//! | `frame`    | `id`, `name`, `fes: [{name, core_type}]` |
//! | `lu`       | `id`, `lemma`, `pos`, `frame_id` |
//! | `relation` | `type`, `parent`, `child`, `fe_mappings: [[parent_fe, child_fe]]` |
//! | `sentence` | `id`, `text`, optional `document`, `derived_from` |
//! | `annoset`  | `id`, `sentence_id`, `lu_id`, `frame_id`, `targets: [{start, end}]`, `labels` |
//!
//! Offsets are inclusive and count Unicode scalar values. [`write`] emits the
//! canonical order (header, frames, LUs, relations, sentences, annotation
//! sets, each by ascending id) so a canonical file round-trips byte for byte.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    AnnotationSet, Corpus, FnDataError, Frame, FrameRelation, IngestIssue, IngestOptions,
    IngestReport, IntegrityError, LexicalUnit, Origin, Sentence,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Corpus { origin: Origin },
    Frame(Frame),
    Lu(LexicalUnit),
    Relation(FrameRelation),
    Sentence(Sentence),
    Annoset(AnnotationSet),
}

pub(crate) fn read_path(
    path: &Path,
    opts: IngestOptions,
) -> Result<(Corpus, IngestReport), FnDataError> {
    let file = File::open(path).map_err(|e| FnDataError::io(path, e))?;
    read(BufReader::new(file), opts)
}

/// Parses records; malformed lines are collected unless `opts.strict`.
/// Integrity and validation checks are left to the caller.
pub fn read<R: Read>(
    reader: R,
    opts: IngestOptions,
) -> Result<(Corpus, IngestReport), FnDataError> {
    let mut corpus = Corpus::default();
    let mut report = IngestReport::default();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let position = format!("line {}", lineno + 1);
        let line = line.map_err(|e| FnDataError::Parse {
            position: position.clone(),
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) if !opts.strict => {
                report.issues.push(IngestIssue::Malformed {
                    position,
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => {
                return Err(FnDataError::Parse {
                    position,
                    reason: e.to_string(),
                })
            }
        };
        insert(&mut corpus, record)?;
    }
    Ok((corpus, report))
}

fn insert(c: &mut Corpus, record: Record) -> Result<(), IntegrityError> {
    fn dup(kind: &'static str, id: u32) -> IntegrityError {
        IntegrityError::DuplicateId { kind, id }
    }
    match record {
        Record::Corpus { origin } => c.origin = origin,
        Record::Frame(f) => {
            if c.frames.insert(f.id, f.clone()).is_some() {
                return Err(dup("frame", f.id.0));
            }
        }
        Record::Lu(lu) => {
            if c.lexical_units.insert(lu.id, lu.clone()).is_some() {
                return Err(dup("lu", lu.id.0));
            }
        }
        Record::Relation(r) => c.relations.push(r),
        Record::Sentence(s) => {
            if c.sentences.insert(s.id, s.clone()).is_some() {
                return Err(dup("sentence", s.id.0));
            }
        }
        Record::Annoset(a) => {
            if c.annotation_sets.insert(a.id, a.clone()).is_some() {
                return Err(dup("annoset", a.id.0));
            }
        }
    }
    Ok(())
}

fn line<W: Write>(w: &mut W, record: &Record) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, record)?;
    w.write_all(b"\n")
}

/// Writes the corpus in canonical order.
pub fn write<W: Write>(c: &Corpus, mut w: W) -> std::io::Result<()> {
    line(&mut w, &Record::Corpus { origin: c.origin })?;
    for f in c.frames.values() {
        line(&mut w, &Record::Frame(f.clone()))?;
    }
    for lu in c.lexical_units.values() {
        line(&mut w, &Record::Lu(lu.clone()))?;
    }
    for r in &c.relations {
        line(&mut w, &Record::Relation(r.clone()))?;
    }
    for s in c.sentences.values() {
        line(&mut w, &Record::Sentence(s.clone()))?;
    }
    for a in c.annotation_sets.values() {
        line(&mut w, &Record::Annoset(a.clone()))?;
    }
    w.flush()
}

pub fn to_bytes(c: &Corpus) -> Vec<u8> {
    let mut out = Vec::new();
    write(c, &mut out).expect("writing to a Vec cannot fail");
    out
}

pub fn write_path(c: &Corpus, path: &Path) -> Result<(), FnDataError> {
    let file = File::create(path).map_err(|e| FnDataError::io(path, e))?;
    write(c, std::io::BufWriter::new(file)).map_err(|e| FnDataError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fndata::{ingest_corpus, CorpusFormat, FnDataError, IntegrityError};

    const FIXTURE: &str = concat!(
        r#"{"kind":"corpus","origin":"fulltext"}"#,
        "\n",
        r#"{"kind":"frame","id":1,"name":"Commerce_buy","fes":[{"name":"Buyer","core_type":"Core"},{"name":"Goods","core_type":"Core"},{"name":"Time","core_type":"Peripheral"}]}"#,
        "\n",
        r#"{"kind":"lu","id":10,"lemma":"buy","pos":"V","frame_id":1}"#,
        "\n",
        r#"{"kind":"sentence","id":100,"text":"John bought a car","document":"doc1"}"#,
        "\n",
        r#"{"kind":"annoset","id":1000,"sentence_id":100,"lu_id":10,"frame_id":1,"targets":[{"start":5,"end":10}],"labels":[{"fe":"Buyer","start":0,"end":3,"pt":"NP","gf":"Ext"},{"fe":"Goods","start":12,"end":16,"pt":"NP","gf":"Obj"}]}"#,
        "\n",
    );

    fn ingest_str(s: &str) -> Result<crate::fndata::Ingested, FnDataError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, s).unwrap();
        ingest_corpus(&path, CorpusFormat::NativeJsonl, Default::default())
    }

    #[test]
    fn empty_file_gives_empty_corpus() {
        let ing = ingest_str("").unwrap();
        assert_eq!(ing.corpus.sentences.len(), 0);
        assert_eq!(ing.corpus.annotation_sets.len(), 0);
    }

    #[test]
    fn fixture_round_trips_byte_identically() {
        let ing = ingest_str(FIXTURE).unwrap();
        assert!(ing.report.is_clean());
        assert_eq!(ing.corpus.sentences.len(), 1);
        assert_eq!(ing.corpus.annotation_sets.len(), 1);
        let a = ing.corpus.annotation_sets.values().next().unwrap();
        assert_eq!(a.labels.len(), 2);
        assert_eq!(String::from_utf8(to_bytes(&ing.corpus)).unwrap(), FIXTURE);
    }

    #[test]
    fn unknown_fe_is_an_integrity_error() {
        let bad = FIXTURE.replace(r#""fe":"Goods""#, r#""fe":"Bogus""#);
        match ingest_str(&bad) {
            Err(FnDataError::Integrity(IntegrityError::UnknownFrameElement { fe, .. })) => {
                assert_eq!(fe, "Bogus")
            }
            other => panic!("expected integrity error, got {other:?}"),
        }
        let msg = ingest_str(&bad).unwrap_err().to_string();
        assert!(msg.contains("Bogus"));
    }

    #[test]
    fn malformed_lines_are_collected_or_fatal_when_strict() {
        let text = format!("{FIXTURE}{{not json\n");
        let ing = ingest_str(&text).unwrap();
        assert_eq!(ing.report.issues.len(), 1);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, &text).unwrap();
        let strict = IngestOptions {
            strict: true,
            ..Default::default()
        };
        assert!(matches!(
            ingest_corpus(&path, CorpusFormat::NativeJsonl, strict),
            Err(FnDataError::Parse { .. })
        ));
    }

    #[test]
    fn invalid_annosets_are_reported_not_dropped_silently() {
        let bad = FIXTURE.replace(r#""start":12,"end":16"#, r#""start":12,"end":99"#);
        let ing = ingest_str(&bad).unwrap();
        assert_eq!(ing.corpus.annotation_sets.len(), 0);
        assert!(matches!(ing.report.issues[0], IngestIssue::Rejected { .. }));
    }
}
