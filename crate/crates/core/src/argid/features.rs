use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::deptree::{DependencyTree, Span};
use crate::fndata::{Frame, Pos};

/// Sparse feature vector, ids sorted and unique.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<(u64, f64)>);

impl FeatureVector {
    /// Builds a vector from (id, value) pairs; repeated ids are summed.
    pub fn from_pairs(mut pairs: Vec<(u64, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut out: Vec<(u64, f64)> = Vec::with_capacity(pairs.len());
        for (id, v) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == id => last.1 += v,
                _ => out.push((id, v)),
            }
        }
        FeatureVector(out)
    }

    /// Binary vector over hashed names; duplicates collapse to 1.0.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        let mut ids: Vec<u64> = names.iter().map(|n| feature_id(n.as_ref())).collect();
        ids.sort_unstable();
        ids.dedup();
        FeatureVector(ids.into_iter().map(|id| (id, 1.0)).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().map(|p| p.0)
    }

    /// `a * self + b * other`, dropping exact zeros.
    pub fn combine(&self, a: f64, other: &FeatureVector, b: f64) -> FeatureVector {
        let mut pairs: Vec<(u64, f64)> = self.iter().map(|(i, v)| (i, a * v)).collect();
        pairs.extend(other.iter().map(|(i, v)| (i, b * v)));
        let mut fv = FeatureVector::from_pairs(pairs);
        fv.0.retain(|p| p.1 != 0.0);
        fv
    }
}

/// 64-bit FNV-1a of the feature name.
pub fn feature_id(name: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(name.as_bytes());
    h.finish()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateConfig {
    /// Also conjoin every template with the role's ancestors through
    /// inheritance and subframe relations.
    pub hierarchy: bool,
}

/// A role as seen by the feature templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleKey {
    pub fe: String,
    pub frame: String,
    /// (frame, FE) ancestors excluding the role itself.
    pub ancestors: Vec<(String, String)>,
}

impl RoleKey {
    pub fn new(frame: &str, fe: &str) -> Self {
        RoleKey {
            fe: fe.to_string(),
            frame: frame.to_string(),
            ancestors: Vec::new(),
        }
    }
}

/// Everything about one target that the span templates look at.
#[derive(Debug, Clone)]
pub struct TargetContext<'a> {
    pub tree: &'a DependencyTree,
    pub target: Span,
    pub frame: &'a Frame,
    pub lemma: &'a str,
    pub pos: Pos,
    target_head: usize,
    passive: bool,
}

impl<'a> TargetContext<'a> {
    pub fn new(
        tree: &'a DependencyTree,
        target: Span,
        frame: &'a Frame,
        lemma: &'a str,
        pos: Pos,
    ) -> Self {
        let target_head = tree.span_head(target);
        let passive = tree
            .tokens
            .iter()
            .filter(|t| t.head == target_head)
            .any(|t| t.deprel.contains("subjpass") || t.deprel.ends_with(":pass"));
        TargetContext {
            tree,
            target,
            frame,
            lemma,
            pos,
            target_head,
            passive,
        }
    }

    /// Role-agnostic template instances for one option.
    pub fn base_features(&self, span: Option<Span>) -> Vec<String> {
        let tl = format!("tl={}", self.lemma);
        let tp = format!("tp={}", self.pos);
        let Some(span) = span else {
            return vec!["null".into(), format!("null|{tl}"), format!("null|{tp}")];
        };
        let tree = self.tree;
        let head = tree.token(tree.span_head(span));
        let first = tree.token(span.start);
        let last = tree.token(span.end);
        let position = if span.overlaps(&self.target) {
            "overlap"
        } else if span.end < self.target.start {
            "before"
        } else {
            "after"
        };
        let voice = if self.passive { "passive" } else { "active" };
        vec![
            "bias".into(),
            format!("hl={}", head.lemma),
            format!("hp={}", head.pos),
            format!("ff={}", first.form.to_lowercase()),
            format!("lf={}", last.form.to_lowercase()),
            format!("len={}", length_bucket(span.width())),
            tl.clone(),
            tp,
            format!("path={}", self.path_to(head.index)),
            format!("pos={position}"),
            format!("voice={voice}"),
            format!("voice={voice}|pos={position}"),
            format!("{tl}|hl={}", head.lemma),
        ]
    }

    /// Dependency path from the target head to `to`: `u:` steps up with the
    /// relation of the token left, `d:` steps down with the relation of the
    /// token entered.
    fn path_to(&self, to: usize) -> String {
        let up = self.tree.ancestors(self.target_head);
        let down = self.tree.ancestors(to);
        let common = up.iter().copied().find(|a| down.contains(a)).unwrap_or(0);
        let mut steps: Vec<String> = up
            .iter()
            .take_while(|&&t| t != common)
            .map(|&t| format!("u:{}", self.tree.token(t).deprel))
            .collect();
        let mut downs: Vec<String> = down
            .iter()
            .take_while(|&&t| t != common)
            .map(|&t| format!("d:{}", self.tree.token(t).deprel))
            .collect();
        downs.reverse();
        steps.extend(downs);
        if steps.len() > 6 {
            "LONG".into()
        } else if steps.is_empty() {
            "SELF".into()
        } else {
            steps.join("/")
        }
    }
}

fn length_bucket(n: usize) -> &'static str {
    match n {
        1 => "1",
        2 => "2",
        3 => "3",
        4 => "4",
        5..=9 => "5-9",
        _ => "10+",
    }
}

/// Every base template in its role-agnostic, FE-conjoined and
/// FE+frame-conjoined variants, plus ancestor variants when enabled.
pub fn conjoin(base: &[String], role: &RoleKey, cfg: &TemplateConfig) -> Vec<String> {
    let per = 3 + if cfg.hierarchy {
        role.ancestors.len()
    } else {
        0
    };
    let mut out = Vec::with_capacity(base.len() * per);
    for f in base {
        out.push(f.clone());
        out.push(format!("{f}|fe={}", role.fe));
        out.push(format!("{f}|fe={}|fr={}", role.fe, role.frame));
        if cfg.hierarchy {
            for (frame, fe) in &role.ancestors {
                out.push(format!("{f}|anc={frame}.{fe}"));
            }
        }
    }
    out
}

/// Feature names for one (role, option), sorted and deduplicated.
pub fn extract_feature_names(
    ctx: &TargetContext,
    role: &RoleKey,
    span: Option<Span>,
    cfg: &TemplateConfig,
) -> Vec<String> {
    let mut names = conjoin(&ctx.base_features(span), role, cfg);
    names.sort();
    names.dedup();
    names
}

pub fn extract_features(
    ctx: &TargetContext,
    role: &RoleKey,
    span: Option<Span>,
    cfg: &TemplateConfig,
) -> FeatureVector {
    FeatureVector::from_names(&conjoin(&ctx.base_features(span), role, cfg))
}
