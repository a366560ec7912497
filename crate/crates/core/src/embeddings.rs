//! Word-vector tables and semantic filters over paraphrastic candidates.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch at {position}: expected {expected}, found {found}")]
    DimensionMismatch {
        position: String,
        expected: usize,
        found: usize,
    },
    #[error("parse error at {position}: {reason}")]
    Parse { position: String, reason: String },
    #[error("zero vector")]
    ZeroVector,
    #[error("table is empty; dimension undefined")]
    EmptyTable,
    #[error("{0:?} is not in the table")]
    OutOfVocabulary(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    /// Optional `count dim` header, then `lemma v1 ... vd` per line.
    TextVec,
    /// word2vec binary: `count dim\n`, then per entry `lemma ` plus `dim`
    /// little-endian f32 values.
    BinaryVec,
}

/// Cosine similarity. Fails on zero vectors or differing dimensions.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimensionMismatch {
            position: "cosine".into(),
            expected: u.len(),
            found: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dimension: Option<usize>,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dimension(&self) -> Option<usize> {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Adds a vector; returns `false` (keeping the old one) for a duplicate lemma.
    pub fn insert(&mut self, lemma: &str, vector: Vec<f64>) -> Result<bool, EmbeddingError> {
        match self.dimension {
            Some(d) if d != vector.len() => {
                return Err(EmbeddingError::DimensionMismatch {
                    position: format!("lemma {lemma:?}"),
                    expected: d,
                    found: vector.len(),
                })
            }
            None if vector.is_empty() => {
                return Err(EmbeddingError::Parse {
                    position: format!("lemma {lemma:?}"),
                    reason: "empty vector".into(),
                })
            }
            _ => {}
        }
        if self.vectors.contains_key(lemma) {
            return Ok(false);
        }
        self.dimension = Some(vector.len());
        self.vectors.insert(lemma.to_string(), vector);
        Ok(true)
    }

    pub fn get(&self, lemma: &str) -> Option<&[f64]> {
        self.vectors.get(lemma).map(Vec::as_slice)
    }

    /// Vector for a possibly multi-lexeme lemma: the underscore-joined key
    /// if present, otherwise the mean of the per-token vectors when every
    /// token is known.
    pub fn lookup(&self, lemma: &str) -> Option<Vec<f64>> {
        if let Some(v) = self.get(lemma) {
            return Some(v.to_vec());
        }
        let tokens: Vec<&str> = lemma.split_whitespace().collect();
        if tokens.len() < 2 {
            return None;
        }
        if let Some(v) = self.get(&tokens.join("_")) {
            return Some(v.to_vec());
        }
        let mut mean = vec![0.0; self.dimension?];
        for t in &tokens {
            for (m, x) in mean.iter_mut().zip(self.get(t)?) {
                *m += x;
            }
        }
        let n = tokens.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Some(mean)
    }

    /// Cosine similarity between two lemmas.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64, EmbeddingError> {
        if self.dimension.is_none() {
            return Err(EmbeddingError::EmptyTable);
        }
        let u = self
            .lookup(a)
            .ok_or_else(|| EmbeddingError::OutOfVocabulary(a.to_string()))?;
        let v = self
            .lookup(b)
            .ok_or_else(|| EmbeddingError::OutOfVocabulary(b.to_string()))?;
        cosine(&u, &v)
    }

    pub fn load(path: &Path, format: TableFormat) -> Result<EmbeddingTable, EmbeddingError> {
        let file = File::open(path)?;
        match format {
            TableFormat::TextVec => Self::read_text(BufReader::new(file)),
            TableFormat::BinaryVec => Self::read_binary(BufReader::new(file)),
        }
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<EmbeddingTable, EmbeddingError> {
        let mut table = EmbeddingTable::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let position = format!("line {}", i + 1);
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if i == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                continue;
            }
            let vector = fields[1..]
                .iter()
                .map(|f| f64::from_str(f))
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| EmbeddingError::Parse {
                    position: position.clone(),
                    reason: e.to_string(),
                })?;
            table.insert_reporting(fields[0], vector, &position)?;
        }
        Ok(table)
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<EmbeddingTable, EmbeddingError> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        let parse_err = |position: usize, reason: &str| EmbeddingError::Parse {
            position: format!("byte {position}"),
            reason: reason.to_string(),
        };
        let mut table = EmbeddingTable::new();
        if bytes.is_empty() {
            return Ok(table);
        }
        let header_end = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| parse_err(0, "missing header"))?;
        let header = std::str::from_utf8(&bytes[..header_end])
            .map_err(|_| parse_err(0, "header is not UTF-8"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(0, "header must be `count dim`"))?;
        let [count, dim] = dims[..] else {
            return Err(parse_err(0, "header must be `count dim`"));
        };
        let mut pos = header_end + 1;
        for _ in 0..count {
            while pos < bytes.len() && bytes[pos] == b'\n' {
                pos += 1;
            }
            let word_end = bytes[pos..]
                .iter()
                .position(|&b| b == b' ')
                .map(|o| pos + o)
                .ok_or_else(|| parse_err(pos, "truncated entry"))?;
            let word = std::str::from_utf8(&bytes[pos..word_end])
                .map_err(|_| parse_err(pos, "lemma is not UTF-8"))?
                .to_string();
            pos = word_end + 1;
            let end = pos + 4 * dim;
            if end > bytes.len() {
                return Err(parse_err(pos, "truncated vector"));
            }
            let vector = bytes[pos..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            pos = end;
            table.insert_reporting(&word, vector, &format!("byte {pos}"))?;
        }
        Ok(table)
    }

    fn insert_reporting(
        &mut self,
        lemma: &str,
        vector: Vec<f64>,
        position: &str,
    ) -> Result<(), EmbeddingError> {
        match self.insert(lemma, vector) {
            Ok(true) => Ok(()),
            Ok(false) => {
                warn!("duplicate lemma {lemma:?} at {position}; keeping the first vector");
                Ok(())
            }
            Err(EmbeddingError::DimensionMismatch {
                expected, found, ..
            }) => Err(EmbeddingError::DimensionMismatch {
                position: position.to_string(),
                expected,
                found,
            }),
            Err(e) => Err(e),
        }
    }
}

/// Which semantic filter to apply to a candidate list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum SemanticFilter {
    #[default]
    None,
    Random(usize),
    Top(usize),
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid semantic filter {0:?}: expected none, random-N, top-N or threshold-T")]
pub struct FilterSpecError(pub String);

impl FromStr for SemanticFilter {
    type Err = FilterSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || FilterSpecError(s.to_string());
        if s == "none" {
            return Ok(SemanticFilter::None);
        }
        let (mode, value) = s.split_once('-').ok_or_else(err)?;
        let filter = match mode {
            "random" => SemanticFilter::Random(value.parse().map_err(|_| err())?),
            "top" => SemanticFilter::Top(value.parse().map_err(|_| err())?),
            "threshold" => SemanticFilter::Threshold(value.parse().map_err(|_| err())?),
            _ => return Err(err()),
        };
        filter.validate().map_err(|_| err())?;
        Ok(filter)
    }
}

impl fmt::Display for SemanticFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemanticFilter::None => f.write_str("none"),
            SemanticFilter::Random(n) => write!(f, "random-{n}"),
            SemanticFilter::Top(n) => write!(f, "top-{n}"),
            SemanticFilter::Threshold(t) => write!(f, "threshold-{t}"),
        }
    }
}

impl SemanticFilter {
    pub fn validate(&self) -> Result<(), FilterSpecError> {
        let ok = match *self {
            SemanticFilter::None => true,
            SemanticFilter::Random(n) | SemanticFilter::Top(n) => n >= 1,
            SemanticFilter::Threshold(t) => (-1.0..=1.0).contains(&t),
        };
        if ok {
            Ok(())
        } else {
            Err(FilterSpecError(self.to_string()))
        }
    }

    pub fn needs_table(&self) -> bool {
        matches!(self, SemanticFilter::Top(_) | SemanticFilter::Threshold(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticFilterSpec {
    pub filter: SemanticFilter,
    /// Seed for [`SemanticFilter::Random`].
    pub seed: u64,
}

impl Default for SemanticFilterSpec {
    fn default() -> Self {
        SemanticFilterSpec {
            filter: SemanticFilter::None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterNote {
    /// The source lemma is missing from the table; the list passed unfiltered.
    SourceOutOfVocabulary,
    /// No table was supplied for a similarity-based filter.
    NoTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<String>,
    pub note: Option<FilterNote>,
}

/// Filters paraphrastic candidates by similarity to the source lemma.
///
/// Random picks `n` candidates without replacement from the lemma-sorted
/// list and returns them in lemma order. Top and Threshold rank by cosine
/// to the source (descending, lemma ascending on ties); a candidate missing
/// from the table scores `-inf` and is never kept, while a missing source
/// disables the filter for this list. Threshold keeps similarity `>= t`.
pub fn semantic_filter(
    source: &str,
    candidates: &[String],
    spec: &SemanticFilterSpec,
    table: Option<&EmbeddingTable>,
) -> FilterOutcome {
    let unchanged = |note| FilterOutcome {
        kept: candidates.to_vec(),
        note,
    };
    let mut sorted: Vec<String> = candidates.to_vec();
    sorted.sort();
    match spec.filter {
        SemanticFilter::None => unchanged(None),
        SemanticFilter::Random(n) => {
            if n >= sorted.len() {
                return FilterOutcome {
                    kept: sorted,
                    note: None,
                };
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut picked = sample(&mut rng, sorted.len(), n).into_vec();
            picked.sort_unstable();
            FilterOutcome {
                kept: picked.into_iter().map(|i| sorted[i].clone()).collect(),
                note: None,
            }
        }
        SemanticFilter::Top(_) | SemanticFilter::Threshold(_) => {
            let Some(table) = table else {
                return unchanged(Some(FilterNote::NoTable));
            };
            let Some(src) = table.lookup(source) else {
                return unchanged(Some(FilterNote::SourceOutOfVocabulary));
            };
            let mut scored: Vec<(f64, String)> = sorted
                .into_iter()
                .map(|c| {
                    let sim = table
                        .lookup(&c)
                        .and_then(|v| cosine(&src, &v).ok())
                        .unwrap_or(f64::NEG_INFINITY);
                    (sim, c)
                })
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            let finite = scored.into_iter().filter(|(s, _)| s.is_finite());
            let kept = match spec.filter {
                SemanticFilter::Top(n) => finite.take(n).map(|(_, c)| c).collect(),
                SemanticFilter::Threshold(t) => {
                    finite.filter(|(s, _)| *s >= t).map(|(_, c)| c).collect()
                }
                _ => unreachable!(),
            };
            FilterOutcome { kept, note: None }
        }
    }
}
