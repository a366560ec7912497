//! Adapter for the FrameNet 1.5/1.7 release layout.
//!
//! Reads `frame/*.xml` (frames, frame elements, lexical units),
//! `frRelation.xml` (frame and FE relations, optional), `fulltext/*.xml`
//! (one document per file) and, on request, `lu/*.xml` exemplars. Only
//! rank-1 layers are used; phrase type and grammatical function labels are
//! attached to the FE label with the same offsets.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use roxmltree::{Document, Node};

use super::{
    AnnoSetId, AnnotationSet, CharSpan, CoreType, Corpus, FnDataError, Frame, FrameElement,
    FrameId, FrameRelation, IngestIssue, IngestOptions, IngestReport, LabelSpan, LexicalUnit, LuId,
    NullInstantiation, Origin, Pos, RelationKind, Sentence, SentenceId,
};

fn xml_files(dir: &Path) -> Result<Vec<PathBuf>, FnDataError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| FnDataError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "xml"))
        .collect();
    files.sort();
    Ok(files)
}

fn parse_err(path: &Path, reason: impl ToString) -> FnDataError {
    FnDataError::Parse {
        position: path.display().to_string(),
        reason: reason.to_string(),
    }
}

fn attr_u32(node: Node, name: &str) -> Option<u32> {
    node.attribute(name).and_then(|v| v.parse().ok())
}

fn children<'a, 'i>(node: Node<'a, 'i>, tag: &'a str) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children()
        .filter(move |c| c.is_element() && c.tag_name().name() == tag)
}

/// Splits an LU name such as `buy.v` or `hand out.v` into lemma and POS.
fn split_lu_name(name: &str, pos_attr: Option<&str>) -> (String, Pos) {
    match name.rsplit_once('.') {
        Some((lemma, pos)) => (lemma.to_string(), Pos::from_tag(pos_attr.unwrap_or(pos))),
        None => (name.to_string(), Pos::from_tag(pos_attr.unwrap_or(""))),
    }
}

pub(crate) fn read_release(
    root: &Path,
    opts: IngestOptions,
) -> Result<(Corpus, IngestReport), FnDataError> {
    if !root.is_dir() {
        return Err(parse_err(root, "not a FrameNet release directory"));
    }
    let mut corpus = Corpus::default();
    let mut report = IngestReport::default();

    for path in xml_files(&root.join("frame"))? {
        let text = fs::read_to_string(&path).map_err(|e| FnDataError::io(&path, e))?;
        let doc = Document::parse(&text).map_err(|e| parse_err(&path, e))?;
        read_frame(&doc, &mut corpus).map_err(|r| parse_err(&path, r))?;
    }

    let relations = root.join("frRelation.xml");
    if relations.is_file() {
        let text = fs::read_to_string(&relations).map_err(|e| FnDataError::io(&relations, e))?;
        let doc = Document::parse(&text).map_err(|e| parse_err(&relations, e))?;
        read_relations(&doc, &mut corpus);
    }

    for path in xml_files(&root.join("fulltext"))? {
        let text = fs::read_to_string(&path).map_err(|e| FnDataError::io(&path, e))?;
        let doc = Document::parse(&text).map_err(|e| parse_err(&path, e))?;
        let document = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        for s in doc
            .descendants()
            .filter(|n| n.has_tag_name_local("sentence"))
        {
            read_sentence(
                s,
                Some(&document),
                None,
                &mut corpus,
                &mut report,
                opts,
                &path,
            )?;
        }
    }

    if opts.exemplars {
        if corpus.sentences.is_empty() {
            corpus.origin = Origin::Exemplar;
        }
        for path in xml_files(&root.join("lu"))? {
            let text = fs::read_to_string(&path).map_err(|e| FnDataError::io(&path, e))?;
            let doc = Document::parse(&text).map_err(|e| parse_err(&path, e))?;
            let lu_node = doc.root_element();
            let lu = match (attr_u32(lu_node, "ID"), attr_u32(lu_node, "frameID")) {
                (Some(lu), Some(frame)) => (LuId(lu), FrameId(frame)),
                _ => return Err(parse_err(&path, "lexUnit without ID/frameID")),
            };
            for s in doc
                .descendants()
                .filter(|n| n.has_tag_name_local("sentence"))
            {
                read_sentence(s, None, Some(lu), &mut corpus, &mut report, opts, &path)?;
            }
        }
    }
    Ok((corpus, report))
}

trait LocalName {
    fn has_tag_name_local(&self, name: &str) -> bool;
}

impl LocalName for Node<'_, '_> {
    fn has_tag_name_local(&self, name: &str) -> bool {
        self.is_element() && self.tag_name().name() == name
    }
}

fn read_frame(doc: &Document, corpus: &mut Corpus) -> Result<(), String> {
    let root = doc.root_element();
    let id = FrameId(attr_u32(root, "ID").ok_or("frame without ID")?);
    let name = root
        .attribute("name")
        .ok_or("frame without name")?
        .to_string();
    let mut frame_elements = Vec::new();
    for fe in children(root, "FE") {
        let fe_name = fe.attribute("name").ok_or("FE without name")?;
        let core_type = fe
            .attribute("coreType")
            .and_then(CoreType::from_framenet)
            .ok_or_else(|| format!("FE {fe_name} has an unknown coreType"))?;
        frame_elements.push(FrameElement {
            name: fe_name.to_string(),
            core_type,
        });
    }
    for lu in children(root, "lexUnit") {
        let lu_id = LuId(attr_u32(lu, "ID").ok_or("lexUnit without ID")?);
        let (lemma, pos) = split_lu_name(lu.attribute("name").unwrap_or(""), lu.attribute("POS"));
        corpus.lexical_units.insert(
            lu_id,
            LexicalUnit {
                id: lu_id,
                lemma,
                pos,
                frame_id: id,
            },
        );
    }
    corpus.frames.insert(
        id,
        Frame {
            id,
            name,
            frame_elements,
            lexical_units: Vec::new(),
        },
    );
    Ok(())
}

fn read_relations(doc: &Document, corpus: &mut Corpus) {
    for rtype in doc
        .descendants()
        .filter(|n| n.has_tag_name_local("frameRelationType"))
    {
        let kind = match rtype.attribute("name") {
            Some("Inheritance") => RelationKind::Inheritance,
            Some("Subframe") | Some("SubFrame") => RelationKind::SubFrame,
            _ => RelationKind::Other,
        };
        for rel in children(rtype, "frameRelation") {
            let (Some(parent), Some(child)) = (attr_u32(rel, "supID"), attr_u32(rel, "subID"))
            else {
                continue;
            };
            let fe_mappings = children(rel, "FERelation")
                .filter_map(|m| {
                    Some((
                        m.attribute("superFEName")?.to_string(),
                        m.attribute("subFEName")?.to_string(),
                    ))
                })
                .collect();
            corpus.relations.push(FrameRelation {
                kind,
                parent: FrameId(parent),
                child: FrameId(child),
                fe_mappings,
            });
        }
    }
}

fn label_offsets(label: Node) -> (Option<i64>, Option<i64>) {
    let parse = |a: &str| label.attribute(a).and_then(|v| v.parse::<i64>().ok());
    (parse("start"), parse("end"))
}

#[allow(clippy::too_many_arguments)]
fn read_sentence(
    node: Node,
    document: Option<&str>,
    exemplar_lu: Option<(LuId, FrameId)>,
    corpus: &mut Corpus,
    report: &mut IngestReport,
    opts: IngestOptions,
    path: &Path,
) -> Result<(), FnDataError> {
    let Some(id) = attr_u32(node, "ID").map(SentenceId) else {
        return malformed(report, opts, path, "sentence without ID");
    };
    let text = children(node, "text")
        .next()
        .and_then(|t| t.text())
        .unwrap_or("")
        .to_string();
    if text.is_empty() {
        return malformed(report, opts, path, &format!("sentence {id} has no text"));
    }
    corpus.sentences.entry(id).or_insert_with(|| Sentence {
        id,
        text,
        document: document.map(str::to_string),
        derived_from: None,
    });

    for aset in children(node, "annotationSet") {
        let Some(aid) = attr_u32(aset, "ID").map(AnnoSetId) else {
            continue;
        };
        let (lu_id, frame_id) = match exemplar_lu {
            Some(pair) => pair,
            None => match (attr_u32(aset, "luID"), attr_u32(aset, "frameID")) {
                (Some(lu), Some(frame)) => (LuId(lu), FrameId(frame)),
                // sentence-level layers (PENN, NER, ...) carry no LU
                _ => continue,
            },
        };
        let mut targets = Vec::new();
        let mut fe_labels: Vec<LabelSpan> = Vec::new();
        let mut pt: HashMap<(Option<i64>, Option<i64>), String> = HashMap::new();
        let mut gf: HashMap<(Option<i64>, Option<i64>), String> = HashMap::new();
        for layer in children(aset, "layer") {
            if layer.attribute("rank").is_some_and(|r| r != "1") {
                continue;
            }
            let lname = layer.attribute("name").unwrap_or("");
            for label in children(layer, "label") {
                let offsets = label_offsets(label);
                let name = label.attribute("name").unwrap_or("").to_string();
                match lname {
                    "Target" => {
                        if let (Some(s), Some(e)) = offsets {
                            if s >= 0 && e >= s {
                                targets.push(CharSpan::new(s as usize, e as usize));
                            }
                        }
                    }
                    "FE" => {
                        let ni = label
                            .attribute("itype")
                            .and_then(NullInstantiation::from_tag);
                        fe_labels.push(LabelSpan {
                            fe: name,
                            start: if ni.is_some() { None } else { offsets.0 },
                            end: if ni.is_some() { None } else { offsets.1 },
                            pt: None,
                            gf: None,
                            ni,
                        });
                    }
                    "PT" if label.attribute("itype").is_none() => {
                        pt.insert(offsets, name);
                    }
                    "GF" if label.attribute("itype").is_none() => {
                        gf.insert(offsets, name);
                    }
                    _ => {}
                }
            }
        }
        if targets.is_empty() && exemplar_lu.is_none() && fe_labels.is_empty() {
            continue;
        }
        targets.sort();
        for l in fe_labels.iter_mut().filter(|l| l.ni.is_none()) {
            let key = (l.start, l.end);
            l.pt = pt.get(&key).cloned();
            l.gf = gf.get(&key).cloned();
        }
        corpus.annotation_sets.insert(
            aid,
            AnnotationSet {
                id: aid,
                sentence_id: id,
                lu_id,
                frame_id,
                targets,
                labels: fe_labels,
            },
        );
    }
    Ok(())
}

fn malformed(
    report: &mut IngestReport,
    opts: IngestOptions,
    path: &Path,
    reason: &str,
) -> Result<(), FnDataError> {
    if opts.strict {
        return Err(parse_err(path, reason));
    }
    report.issues.push(IngestIssue::Malformed {
        position: path.display().to_string(),
        reason: reason.to_string(),
    });
    Ok(())
}
