use std::cmp::Ordering;

use serde::Serialize;

use crate::deptree::Span;
use crate::fndata::Frame;

/// A full assignment: for each role (in decoding order) an index into the
/// option list, where 0 is the null span and `i > 0` is `spans[i - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub choice: Vec<usize>,
    pub score: f64,
}

fn rank(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.choice.cmp(&b.choice))
}

/// Beam search over a role-by-option score table.
///
/// `scores[r][0]` is role `r`'s null score and `scores[r][i]` its score
/// for `spans[i - 1]`. Overt spans may not overlap. Returns the final beam,
/// best first; ties go to the lexicographically smaller choice vector.
pub fn decode_table(scores: &[Vec<f64>], spans: &[Span], k: usize) -> Vec<Hypothesis> {
    assert!(k >= 1, "beam width must be at least 1");
    let mut beam = vec![Hypothesis {
        choice: Vec::new(),
        score: 0.0,
    }];
    for row in scores {
        let mut next = Vec::with_capacity(beam.len() * row.len());
        for hyp in &beam {
            for (j, s) in row.iter().enumerate() {
                if j > 0 {
                    let span = spans[j - 1];
                    let clash = hyp
                        .choice
                        .iter()
                        .any(|&c| c > 0 && spans[c - 1].overlaps(&span));
                    if clash {
                        continue;
                    }
                }
                let mut choice = hyp.choice.clone();
                choice.push(j);
                next.push(Hypothesis {
                    choice,
                    score: hyp.score + s,
                });
            }
        }
        next.sort_by(rank);
        next.truncate(k);
        beam = next;
    }
    beam
}

/// Decoding order: core roles first, then the rest, alphabetical within
/// each group.
pub fn role_order(frame: &Frame) -> Vec<String> {
    let mut roles: Vec<(bool, &str)> = frame
        .frame_elements
        .iter()
        .map(|fe| (!fe.core_type.is_core(), fe.name.as_str()))
        .collect();
    roles.sort();
    roles.into_iter().map(|(_, n)| n.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fndata::{CoreType, FrameElement, FrameId};

    #[test]
    fn no_roles_gives_empty_assignment() {
        let out = decode_table(&[], &[Span::single(1)], 4);
        assert_eq!(
            out,
            vec![Hypothesis {
                choice: vec![],
                score: 0.0
            }]
        );
    }

    #[test]
    fn both_roles_wanting_one_span_never_overlap() {
        let spans = [Span::new(1, 2), Span::single(3)];
        let scores = vec![vec![0.0, 5.0, 0.1], vec![0.0, 4.0, -1.0]];
        let best = &decode_table(&scores, &spans, 10)[0];
        assert_eq!(best.choice, vec![1, 0]);
        assert_eq!(best.score, 5.0);
    }

    #[test]
    fn overlapping_spans_are_excluded() {
        let spans = [Span::new(1, 3), Span::single(2)];
        let scores = vec![vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.5]];
        let best = &decode_table(&scores, &spans, 10)[0];
        assert_eq!(best.choice, vec![1, 0]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let spans = [Span::single(1), Span::single(2)];
        let scores = vec![vec![0.0, 1.0, 1.0]];
        let out = decode_table(&scores, &spans, 3);
        assert_eq!(out[0].choice, vec![1]);
        assert_eq!(out[1].choice, vec![2]);
    }

    #[test]
    fn core_roles_come_first() {
        let fe = |n: &str, c| FrameElement {
            name: n.into(),
            core_type: c,
        };
        let frame = Frame {
            id: FrameId(1),
            name: "F".into(),
            frame_elements: vec![
                fe("Time", CoreType::Peripheral),
                fe("Goods", CoreType::Core),
                fe("Buyer", CoreType::Core),
                fe("Manner", CoreType::ExtraThematic),
            ],
            lexical_units: vec![],
        };
        assert_eq!(role_order(&frame), vec!["Buyer", "Goods", "Manner", "Time"]);
    }
}
