//! Dependency trees and the candidate argument-span heuristic.
//!
//! CoNLL input uses the CoNLL-X column layout (`ID FORM LEMMA CPOSTAG
//! POSTAG FEATS HEAD DEPREL [PHEAD PDEPREL]`); the 8-column variant without
//! the projective columns is accepted too. POS comes from POSTAG, falling
//! back to CPOSTAG when POSTAG is `_`. Blocks may carry `# sent_id = N` and
//! `# text = ...` comments; token character offsets are aligned against
//! the text when present, otherwise against the forms joined by single
//! spaces. Multiword-token (`1-2`) and empty-node (`1.1`) lines are skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fndata::{CharSpan, Corpus, SentenceId};

#[derive(Debug, Error)]
pub enum DepTreeError {
    #[error("parse error at {position}: {reason}")]
    Parse { position: String, reason: String },
    #[error("not a tree at {position}: {reason}")]
    NotATree { position: String, reason: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub pos: String,
    /// 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub char_start: usize,
    /// Inclusive.
    pub char_end: usize,
}

/// Inclusive 1-based token interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn single(i: usize) -> Self {
        Span { start: i, end: i }
    }

    pub fn width(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyTree {
    pub sentence_id: Option<SentenceId>,
    pub tokens: Vec<Token>,
}

impl DependencyTree {
    /// Checks indices, the single root, and acyclicity.
    pub fn new(sentence_id: Option<SentenceId>, tokens: Vec<Token>) -> Result<Self, DepTreeError> {
        let position = match sentence_id {
            Some(id) => format!("sentence {id}"),
            None => "tree".to_string(),
        };
        let not_a_tree = |reason: String| DepTreeError::NotATree {
            position: position.clone(),
            reason,
        };
        let n = tokens.len();
        if n == 0 {
            return Err(not_a_tree("no tokens".into()));
        }
        for (i, t) in tokens.iter().enumerate() {
            if t.index != i + 1 {
                return Err(not_a_tree(format!("token {} out of sequence", t.index)));
            }
            if t.head > n {
                return Err(not_a_tree(format!(
                    "token {} has head {} > {n}",
                    t.index, t.head
                )));
            }
            if t.head == t.index {
                return Err(not_a_tree(format!("token {} heads itself", t.index)));
            }
        }
        let roots = tokens.iter().filter(|t| t.head == 0).count();
        if roots != 1 {
            return Err(not_a_tree(format!("{roots} roots")));
        }
        // every token must reach the root within n steps
        for t in &tokens {
            let mut cur = t.index;
            let mut steps = 0;
            while cur != 0 {
                cur = tokens[cur - 1].head;
                steps += 1;
                if steps > n {
                    return Err(not_a_tree(format!("cycle through token {}", t.index)));
                }
            }
        }
        Ok(DependencyTree {
            sentence_id,
            tokens,
        })
    }

    /// Builds a tree from `(form, pos, head, deprel)` rows over the
    /// space-joined forms; lemmas are the lowercased forms.
    pub fn from_rows(rows: &[(&str, &str, usize, &str)]) -> Result<Self, DepTreeError> {
        let mut offset = 0;
        let tokens = rows
            .iter()
            .enumerate()
            .map(|(i, &(form, pos, head, deprel))| {
                let width = form.chars().count();
                let t = Token {
                    index: i + 1,
                    form: form.to_string(),
                    lemma: form.to_lowercase(),
                    pos: pos.to_string(),
                    head,
                    deprel: deprel.to_string(),
                    char_start: offset,
                    char_end: offset + width - 1,
                };
                offset += width + 1;
                t
            })
            .collect();
        DependencyTree::new(None, tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, index: usize) -> &Token {
        &self.tokens[index - 1]
    }

    pub fn root(&self) -> usize {
        self.tokens
            .iter()
            .find(|t| t.head == 0)
            .map(|t| t.index)
            .unwrap_or(1)
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.len() + 1];
        for t in &self.tokens {
            ch[t.head].push(t.index);
        }
        ch
    }

    /// (min index, max index, size) of every token's subtree, indexed by token.
    fn subtree_extents(&self) -> Vec<(usize, usize, usize)> {
        let n = self.len();
        let children = self.children();
        let mut ext: Vec<(usize, usize, usize)> = (0..=n).map(|i| (i, i, 1)).collect();
        // post-order via explicit stack
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![self.root()];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(&children[v]);
        }
        for &v in order.iter().rev() {
            for &c in &children[v] {
                let (cmin, cmax, csize) = ext[c];
                let e = &mut ext[v];
                e.0 = e.0.min(cmin);
                e.1 = e.1.max(cmax);
                e.2 += csize;
            }
        }
        ext
    }

    /// Token of `span` whose head lies outside it (the first such token).
    pub fn span_head(&self, span: Span) -> usize {
        (span.start..=span.end)
            .find(|&i| !span.contains(self.token(i).head))
            .unwrap_or(span.start)
    }

    /// Path of tokens from `i` up to the root, starting with `i`.
    pub fn ancestors(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut cur = i;
        while self.token(cur).head != 0 {
            cur = self.token(cur).head;
            out.push(cur);
        }
        out
    }

    /// Minimal token interval covering a character span, with a flag telling
    /// whether its ends coincide with token boundaries.
    pub fn align(&self, chars: CharSpan) -> Option<(Span, bool)> {
        let covering: Vec<&Token> = self
            .tokens
            .iter()
            .filter(|t| t.char_start <= chars.end && chars.start <= t.char_end)
            .collect();
        let first = covering.first()?;
        let last = covering.last()?;
        let exact = first.char_start == chars.start && last.char_end == chars.end;
        Some((Span::new(first.index, last.index), exact))
    }

    pub fn char_span(&self, span: Span) -> CharSpan {
        CharSpan::new(
            self.token(span.start).char_start,
            self.token(span.end).char_end,
        )
    }

    /// Space-joined forms; the text offsets refer to when no `# text` is given.
    pub fn joined_text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.form.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Candidate argument spans: every single token, plus the yield of every
/// token whose subtree covers a contiguous interval.
pub fn candidate_spans(t: &DependencyTree) -> BTreeSet<Span> {
    let mut spans: BTreeSet<Span> = (1..=t.len()).map(Span::single).collect();
    for (min, max, size) in t.subtree_extents().into_iter().skip(1) {
        if max + 1 - min == size {
            spans.insert(Span::new(min, max));
        }
    }
    spans
}

/// Assigns character offsets by finding each form in `text`, left to right.
pub(crate) fn align_offsets(tokens: &mut [Token], text: &str) -> Result<(), String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    for t in tokens.iter_mut() {
        let form: Vec<char> = t.form.chars().collect();
        let found = (pos..=chars.len().saturating_sub(form.len()))
            .find(|&i| chars[i..i + form.len()] == form[..])
            .ok_or_else(|| format!("token {} {:?} not found in text", t.index, t.form))?;
        t.char_start = found;
        t.char_end = found + form.len() - 1;
        pos = found + form.len();
    }
    Ok(())
}

/// Parses CoNLL blocks from a reader.
pub fn read_conll<R: BufRead>(reader: R) -> Result<Vec<DependencyTree>, DepTreeError> {
    let mut trees = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut sent_id: Option<SentenceId> = None;
    let mut text: Option<String> = None;
    let mut block_start = 1;

    let mut finish = |tokens: &mut Vec<Token>,
                      sent_id: &mut Option<SentenceId>,
                      text: &mut Option<String>,
                      line: usize|
     -> Result<(), DepTreeError> {
        if tokens.is_empty() {
            return Ok(());
        }
        let mut toks = std::mem::take(tokens);
        let text = text.take().unwrap_or_else(|| {
            toks.iter()
                .map(|t| t.form.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        });
        align_offsets(&mut toks, &text).map_err(|reason| DepTreeError::Parse {
            position: format!("line {line}"),
            reason,
        })?;
        let tree = DependencyTree::new(sent_id.take(), toks).map_err(|e| match e {
            DepTreeError::NotATree { reason, .. } => DepTreeError::NotATree {
                position: format!("block at line {line}"),
                reason,
            },
            other => other,
        })?;
        trees.push(tree);
        Ok(())
    };

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            finish(&mut tokens, &mut sent_id, &mut text, block_start)?;
            block_start = lineno + 1;
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => {
                        let id = value.trim().parse().map_err(|_| DepTreeError::Parse {
                            position: format!("line {lineno}"),
                            reason: format!("sent_id {:?} is not an integer", value.trim()),
                        })?;
                        sent_id = Some(SentenceId(id));
                    }
                    "text" => text = Some(value.strip_prefix(' ').unwrap_or(value).to_string()),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        let parse_err = |reason: String| DepTreeError::Parse {
            position: format!("line {lineno}"),
            reason,
        };
        if cols.len() != 10 && cols.len() != 8 {
            return Err(parse_err(format!(
                "expected 8 or 10 columns, found {}",
                cols.len()
            )));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| parse_err(format!("bad token id {:?}", cols[0])))?;
        let head: usize = cols[6]
            .parse()
            .map_err(|_| parse_err(format!("bad head {:?}", cols[6])))?;
        let pos = if cols[4] != "_" { cols[4] } else { cols[3] };
        tokens.push(Token {
            index,
            form: cols[1].to_string(),
            lemma: if cols[2] == "_" { cols[1] } else { cols[2] }.to_string(),
            pos: pos.to_string(),
            head,
            deprel: cols[7].to_string(),
            char_start: 0,
            char_end: 0,
        });
    }
    finish(&mut tokens, &mut sent_id, &mut text, block_start)?;
    Ok(trees)
}

pub fn ingest_conll(path: &Path) -> Result<Vec<DependencyTree>, DepTreeError> {
    read_conll(BufReader::new(File::open(path)?))
}

/// Writes trees in 10-column CoNLL-X with `sent_id`/`text` comments.
pub fn write_conll<W: Write>(
    trees: &[DependencyTree],
    texts: &BTreeMap<SentenceId, String>,
    mut w: W,
) -> std::io::Result<()> {
    for t in trees {
        if let Some(id) = t.sentence_id {
            writeln!(w, "# sent_id = {id}")?;
            if let Some(text) = texts.get(&id) {
                writeln!(w, "# text = {text}")?;
            }
        }
        for tok in &t.tokens {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t_\t{}\t{}\t_\t_",
                tok.index, tok.form, tok.lemma, tok.pos, tok.pos, tok.head, tok.deprel
            )?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Trees keyed by sentence id; trees without an id are numbered by position
/// (1-based) in file order.
pub fn index_trees(trees: Vec<DependencyTree>) -> BTreeMap<SentenceId, DependencyTree> {
    trees
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t.sentence_id.unwrap_or(SentenceId(i as u32 + 1)), t))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallReport {
    pub recall: f64,
    pub gold_spans: usize,
    pub covered: usize,
    /// Labels whose offsets do not fall on token boundaries.
    pub misaligned: usize,
    /// Labels on sentences without a tree.
    pub unparsed: usize,
}

/// Fraction of gold overt argument spans that appear among the candidate spans.
pub fn span_oracle_recall(
    trees: &BTreeMap<SentenceId, DependencyTree>,
    gold: &Corpus,
) -> RecallReport {
    let mut report = RecallReport {
        recall: 0.0,
        gold_spans: 0,
        covered: 0,
        misaligned: 0,
        unparsed: 0,
    };
    let mut cache: BTreeMap<SentenceId, BTreeSet<Span>> = BTreeMap::new();
    for a in gold.annotation_sets.values() {
        let Some(tree) = trees.get(&a.sentence_id) else {
            report.unparsed += a.overt_labels().count();
            continue;
        };
        let spans = cache
            .entry(a.sentence_id)
            .or_insert_with(|| candidate_spans(tree));
        for label in a.overt_labels() {
            let Some(chars) = label.char_span() else {
                continue;
            };
            report.gold_spans += 1;
            match tree.align(chars) {
                Some((span, exact)) => {
                    if !exact {
                        report.misaligned += 1;
                    }
                    if spans.contains(&span) {
                        report.covered += 1;
                    }
                }
                None => report.misaligned += 1,
            }
        }
    }
    if report.gold_spans > 0 {
        report.recall = report.covered as f64 / report.gold_spans as f64;
    }
    report
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Tree from head indices, forms `w1 w2 ...`.
    pub(crate) fn tree_from_heads(heads: &[usize]) -> DependencyTree {
        let mut offset = 0;
        let tokens = heads
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                let form = format!("w{}", i + 1);
                let t = Token {
                    index: i + 1,
                    lemma: form.clone(),
                    pos: "NN".into(),
                    head: h,
                    deprel: if h == 0 { "root".into() } else { "dep".into() },
                    char_start: offset,
                    char_end: offset + form.len() - 1,
                    form,
                };
                offset = t.char_end + 2;
                t
            })
            .collect();
        DependencyTree::new(None, tokens).unwrap()
    }

    fn conll(rows: &[(&str, usize, &str)]) -> String {
        rows.iter()
            .enumerate()
            .map(|(i, (form, head, rel))| {
                format!(
                    "{}\t{form}\t{form}\tNN\tNN\t_\t{head}\t{rel}\t_\t_\n",
                    i + 1
                )
            })
            .collect()
    }

    #[test]
    fn single_token_sentence() {
        let trees = read_conll(conll(&[("Hi", 0, "root")]).as_bytes()).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].tokens[0].head, 0);
        assert_eq!(
            candidate_spans(&trees[0]),
            BTreeSet::from([Span::single(1)])
        );
    }

    #[test]
    fn cycle_is_rejected() {
        let text = conll(&[("a", 2, "x"), ("b", 1, "x"), ("c", 0, "root")]);
        assert!(matches!(
            read_conll(text.as_bytes()),
            Err(DepTreeError::NotATree { .. })
        ));
        let two_roots = conll(&[("a", 0, "root"), ("b", 0, "root")]);
        assert!(matches!(
            read_conll(two_roots.as_bytes()),
            Err(DepTreeError::NotATree { .. })
        ));
    }

    #[test]
    fn john_bought_apples() {
        let text = format!(
            "# sent_id = 7\n# text = John bought apples\n{}",
            conll(&[
                ("John", 2, "nsubj"),
                ("bought", 0, "root"),
                ("apples", 2, "dobj")
            ])
        );
        let trees = read_conll(text.as_bytes()).unwrap();
        let t = &trees[0];
        assert_eq!(t.sentence_id, Some(SentenceId(7)));
        assert_eq!(t.root(), 2);
        assert_eq!((t.tokens[2].char_start, t.tokens[2].char_end), (12, 17));
    }

    #[test]
    fn chain_spans() {
        // 2 heads 3? no: 3 heads 2... chain 1 <- 2 <- 3 rooted at 1
        let t = tree_from_heads(&[0, 1, 2]);
        let spans = candidate_spans(&t);
        let want = BTreeSet::from([
            Span::single(1),
            Span::single(2),
            Span::single(3),
            Span::new(1, 3),
            Span::new(2, 3),
        ]);
        assert_eq!(spans, want);
    }

    #[test]
    fn discontiguous_subtree_gives_no_span() {
        // token 3 has descendants {3, 5}; token 4 hangs off the root
        let t = tree_from_heads(&[2, 0, 2, 2, 3]);
        let spans = candidate_spans(&t);
        assert!(!spans.iter().any(|s| s.start == 3 && s.end > 3));
        assert!(spans.contains(&Span::new(1, 5)));
    }

    #[test]
    fn appositive_gold_span_is_unrecoverable() {
        // "President Jacob Zuma said": President and Jacob both depend on Zuma
        let text = format!(
            "# sent_id = 1\n# text = President Jacob Zuma said\n{}",
            conll(&[
                ("President", 3, "nn"),
                ("Jacob", 3, "nn"),
                ("Zuma", 4, "nsubj"),
                ("said", 0, "root"),
            ])
        );
        let tree = read_conll(text.as_bytes()).unwrap().remove(0);
        let (jacob_zuma, exact) = tree.align(CharSpan::new(10, 19)).unwrap();
        assert!(exact);
        assert_eq!(jacob_zuma, Span::new(2, 3));
        assert!(!candidate_spans(&tree).contains(&jacob_zuma));
    }

    #[test]
    fn align_flags_partial_tokens() {
        let t = tree_from_heads(&[0, 1]);
        assert_eq!(t.align(CharSpan::new(0, 1)), Some((Span::single(1), true)));
        assert_eq!(t.align(CharSpan::new(1, 4)), Some((Span::new(1, 2), false)));
    }

    #[test]
    fn round_trips_through_writer() {
        let text = format!(
            "# sent_id = 3\n# text = John bought apples\n{}",
            conll(&[
                ("John", 2, "nsubj"),
                ("bought", 0, "root"),
                ("apples", 2, "dobj")
            ])
        );
        let trees = read_conll(text.as_bytes()).unwrap();
        let texts = BTreeMap::from([(SentenceId(3), "John bought apples".to_string())]);
        let mut out = Vec::new();
        write_conll(&trees, &texts, &mut out).unwrap();
        assert_eq!(read_conll(&out[..]).unwrap(), trees);
    }
}
