use std::collections::BTreeSet;

use proptest::prelude::*;

use framekit::analysis::{coverage_overlap, febar_table, per_fe_scores, ItemKind};
use framekit::argid::{
    decode, decode_table, extract_feature_names, instance_loss, FeatureVector, Model, RoleKey,
    TargetContext, TemplateConfig, TrainInstance,
};
use framekit::argid::{PredictedArgument, Prediction};
use framekit::deptree::{candidate_spans, DependencyTree, Span};
use framekit::eval::{
    aggregate, bootstrap_exceedances, prf, score_annoset, EvalConfig, PredSpan, ScoreTally,
};
use framekit::fndata::{
    ingest_corpus, AnnoSetId, CharSpan, CoreType, CorpusFormat, Frame, FrameElement, FrameId,
    LabelSpan, LuId, Pos, SentenceId,
};
use framekit::valence::{core_signature, loose_match, ValencePattern, ValenceUnit};
use framekit::{AnnotationSet, Corpus};

fn heads_from_seeds(seeds: &[u64]) -> Vec<usize> {
    let n = seeds.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (seeds[i], i));
    let mut heads = vec![0usize; n];
    for k in 1..n {
        let parent = order[(seeds[order[k]] % k as u64) as usize];
        heads[order[k]] = parent + 1;
    }
    heads
}

fn tree(heads: &[usize]) -> DependencyTree {
    let forms: Vec<String> = (1..=heads.len()).map(|i| format!("w{i}")).collect();
    let rows: Vec<(&str, &str, usize, &str)> = heads
        .iter()
        .zip(&forms)
        .map(|(&h, f)| (f.as_str(), "NN", h, if h == 0 { "root" } else { "dep" }))
        .collect();
    DependencyTree::from_rows(&rows).unwrap()
}

fn frame() -> Frame {
    let fe = |n: &str, c| FrameElement {
        name: n.into(),
        core_type: c,
    };
    Frame {
        id: FrameId(1),
        name: "F".into(),
        frame_elements: vec![
            fe("A", CoreType::Core),
            fe("B", CoreType::Core),
            fe("C", CoreType::Peripheral),
            fe("D", CoreType::ExtraThematic),
        ],
        lexical_units: vec![],
    }
}

fn unit_strategy() -> impl Strategy<Value = ValenceUnit> {
    (
        prop::sample::select(vec!["A", "B", "C", "D"]),
        prop::sample::select(vec!["NP", "PP"]),
        prop::sample::select(vec!["Ext", "Obj"]),
    )
        .prop_map(|(fe, pt, gf)| ValenceUnit::new(fe, pt, gf))
}

fn pattern_strategy() -> impl Strategy<Value = ValencePattern> {
    prop::collection::vec(unit_strategy(), 1..4).prop_map(|u| ValencePattern::new(FrameId(1), u))
}

proptest! {
    #[test]
    fn loose_match_is_an_equivalence(p in pattern_strategy(), q in pattern_strategy(), r in pattern_strategy()) {
        let f = frame();
        prop_assert!(loose_match(&p, &p, &f));
        prop_assert_eq!(loose_match(&p, &q, &f), loose_match(&q, &p, &f));
        if loose_match(&p, &q, &f) && loose_match(&q, &r, &f) {
            prop_assert!(loose_match(&p, &r, &f));
        }
        // reordering units never changes the signature
        let mut rev = p.clone();
        rev.units.reverse();
        prop_assert_eq!(core_signature(&p, &f), core_signature(&rev, &f));
    }

    #[test]
    fn candidate_spans_are_subtree_yields(seeds in prop::collection::vec(any::<u64>(), 1..10)) {
        let heads = heads_from_seeds(&seeds);
        let t = tree(&heads);
        let spans = candidate_spans(&t);
        for i in 1..=t.len() {
            prop_assert!(spans.contains(&Span::single(i)));
        }
        for s in &spans {
            if s.width() > 1 {
                // a multi-token candidate is exactly some token's descendants
                let h = t.span_head(*s);
                let inside = (1..=t.len()).filter(|&j| t.ancestors(j).contains(&h)).count();
                prop_assert_eq!(inside, s.width());
            }
        }
    }

    #[test]
    fn decoding_is_shift_invariant_per_role(
        raw in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 5), 1..4),
        shift in -5.0f64..5.0,
        role in 0usize..4,
    ) {
        let spans = [Span::new(1, 2), Span::single(2), Span::single(3), Span::new(3, 4)];
        let best = decode_table(&raw, &spans, 64)[0].clone();
        let mut shifted = raw.clone();
        let r = role % raw.len();
        for s in shifted[r].iter_mut() {
            *s += shift;
        }
        let moved = decode_table(&shifted, &spans, 64)[0].clone();
        prop_assert_eq!(&best.choice, &moved.choice);
        let chosen: Vec<Span> = best.choice.iter().filter(|&&c| c > 0).map(|&c| spans[c - 1]).collect();
        for (i, a) in chosen.iter().enumerate() {
            for b in &chosen[i + 1..] {
                prop_assert!(!a.overlaps(b));
            }
        }
    }

    #[test]
    fn loss_is_nonnegative_and_zero_only_with_margin(
        feats in prop::collection::vec(prop::collection::vec((0u64..6, -1.0f64..1.0), 1..4), 1..5),
        gold_pick in any::<prop::sample::Index>(),
        weights in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let features: Vec<FeatureVector> = feats.into_iter().map(FeatureVector::from_pairs).collect();
        let gold = gold_pick.index(features.len());
        let inst = TrainInstance { options: vec![None; features.len()], features, gold };
        let mut m = Model::default();
        for (i, w) in weights.iter().enumerate() {
            m.weights.insert(i as u64, *w);
        }
        let (loss, grad) = instance_loss(&m, &inst);
        prop_assert!(loss >= 0.0);
        let gs = m.score(&inst.features[gold]);
        let margin_ok = inst.features.iter().enumerate().all(|(j, f)| j == gold || m.score(f) + 1.0 <= gs);
        prop_assert_eq!(loss == 0.0, margin_ok);
        if loss == 0.0 {
            prop_assert!(grad.is_empty());
        }
    }

    #[test]
    fn scoring_is_order_free_and_bounded(
        picks in prop::collection::vec((0usize..4, 0usize..3), 0..6),
        seed in any::<u64>(),
    ) {
        let gold = AnnotationSet {
            id: AnnoSetId(1),
            sentence_id: SentenceId(1),
            lu_id: LuId(1),
            frame_id: FrameId(1),
            targets: vec![CharSpan::new(0, 1)],
            labels: vec![
                LabelSpan::overt("A", 3, 5, "NP", "Ext"),
                LabelSpan::overt("C", 7, 9, "PP", "Dep"),
            ],
        };
        let fes = ["A", "B", "C", "D"];
        let spans = [(3, 5), (7, 9), (3, 9)];
        let pred: Vec<PredSpan> = picks.iter().map(|&(f, s)| PredSpan::new(fes[f], spans[s].0, spans[s].1)).collect();
        let cfg = EvalConfig::default();
        let t = score_annoset(&gold, &pred, &frame(), &cfg).unwrap();
        let mut shuffled = pred.clone();
        let k = shuffled.len().max(1);
        shuffled.rotate_left((seed as usize) % k);
        shuffled.reverse();
        prop_assert_eq!(score_annoset(&gold, &shuffled, &frame(), &cfg).unwrap(), t);
        prop_assert!(t.matched <= t.score && t.matched <= t.gold);
        prop_assert!(t.matched <= 1.5);
        let p = prf(t);
        for x in [p.precision, p.recall, p.f1] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        prop_assert!(p.f1 <= p.precision.max(p.recall) + 1e-12);
    }

    #[test]
    fn bootstrap_count_falls_as_threshold_rises(
        raw in prop::collection::vec((0u8..3, 0u8..3, 0u8..3, 0u8..3), 2..12),
        seed in any::<u64>(),
        lo in -0.5f64..0.5,
        gap in 0.0f64..0.5,
    ) {
        let tally = |m: u8, s: u8| ScoreTally { matched: m.min(s) as f64 * 0.5, score: s as f64 * 0.5 + 0.5, gold: 1.5 };
        let a: Vec<ScoreTally> = raw.iter().map(|r| tally(r.0, r.1)).collect();
        let b: Vec<ScoreTally> = raw.iter().map(|r| tally(r.2, r.3)).collect();
        let low = bootstrap_exceedances(&a, &b, 50, seed, lo).unwrap();
        let high = bootstrap_exceedances(&a, &b, 50, seed, lo + gap).unwrap();
        prop_assert!(high <= low);
        let total = aggregate(&a);
        prop_assert!(total.f1 <= 1.0);
    }
}

fn toy() -> Corpus {
    let path =
        std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/toy/corpus.jsonl");
    ingest_corpus(&path, CorpusFormat::NativeJsonl, Default::default())
        .unwrap()
        .corpus
}

/// Predictions that copy, shift or relabel gold labels depending on `mode`.
fn noisy_predictions(c: &Corpus, mode: u64) -> Vec<Prediction> {
    c.annotation_sets
        .values()
        .map(|a| {
            let arguments = a
                .overt_labels()
                .enumerate()
                .filter_map(|(i, l)| {
                    let s = l.char_span()?;
                    let pick = (mode
                        .wrapping_mul(31)
                        .wrapping_add(a.id.0 as u64 * 7 + i as u64))
                        % 3;
                    let end = if pick == 1 {
                        s.end.saturating_sub(1).max(s.start)
                    } else {
                        s.end
                    };
                    (pick != 2).then(|| PredictedArgument {
                        fe: l.fe.clone(),
                        tokens: (0, 0),
                        start: s.start,
                        end,
                        score: 0.0,
                    })
                })
                .collect();
            Prediction {
                annoset_id: a.id,
                sentence_id: a.sentence_id,
                frame_id: a.frame_id,
                lu_id: a.lu_id,
                score: 0.0,
                arguments,
            }
        })
        .collect()
}

#[test]
fn per_fe_tallies_partition_the_global_tally() {
    let c = toy();
    let cfg = EvalConfig::default();
    for mode in 0..5 {
        let preds = noisy_predictions(&c, mode);
        let report = framekit::eval::score_predictions(&c, &preds, &cfg).unwrap();
        let rows = per_fe_scores(&c, &preds, Some(&c), &cfg).unwrap();
        let sum: ScoreTally = rows.iter().map(|r| r.tally).sum();
        assert_eq!(sum, report.total);
    }
    let perfect = per_fe_scores(&c, &noisy_predictions(&c, u64::MAX), None, &cfg);
    assert!(perfect.is_ok());
}

#[test]
fn perfect_predictions_score_one_per_fe() {
    let c = toy();
    let preds: Vec<Prediction> = c
        .annotation_sets
        .values()
        .map(|a| Prediction {
            annoset_id: a.id,
            sentence_id: a.sentence_id,
            frame_id: a.frame_id,
            lu_id: a.lu_id,
            score: 0.0,
            arguments: a
                .overt_labels()
                .map(|l| {
                    let s = l.char_span().unwrap();
                    PredictedArgument {
                        fe: l.fe.clone(),
                        tokens: (0, 0),
                        start: s.start,
                        end: s.end,
                        score: 0.0,
                    }
                })
                .collect(),
        })
        .collect();
    for r in per_fe_scores(&c, &preds, None, &EvalConfig::default()).unwrap() {
        assert_eq!(
            (r.prf.precision, r.prf.recall, r.prf.f1),
            (1.0, 1.0, 1.0),
            "{}",
            r.fe
        );
    }
}

#[test]
fn febar_ignores_annoset_order_and_coverage_of_self_is_full() {
    let c = toy();
    let before = febar_table(&c);
    let mut shuffled = c.clone();
    let max = c.max_annoset_id().unwrap().0;
    shuffled.annotation_sets = c
        .annotation_sets
        .values()
        .map(|a| {
            let id = AnnoSetId(2 * max - a.id.0);
            (id, AnnotationSet { id, ..a.clone() })
        })
        .collect();
    assert_eq!(febar_table(&shuffled), before);
    for row in &before {
        assert!((0.0..=1.0).contains(&row.ratio));
    }
    let cov = coverage_overlap(&c, &c);
    for kind in ItemKind::ALL {
        assert_eq!(cov.row(kind).overlap_pct, 100.0);
    }
}

#[test]
fn feature_names_match_golden_file() {
    let tree = DependencyTree::from_rows(&[
        ("Kim", "NNP", 2, "nsubj"),
        ("saw", "VBD", 0, "root"),
        ("Lee", "NNP", 2, "dobj"),
    ])
    .unwrap();
    let frame = Frame {
        id: FrameId(9),
        name: "Perception_experience".into(),
        frame_elements: vec![],
        lexical_units: vec![],
    };
    let ctx = TargetContext::new(&tree, Span::single(2), &frame, "see", Pos::V);
    let names = extract_feature_names(
        &ctx,
        &RoleKey::new("Perception_experience", "Agent"),
        Some(Span::single(1)),
        &TemplateConfig::default(),
    );
    let golden = include_str!("golden/features_agent.txt");
    let expected: Vec<&str> = golden.lines().collect();
    assert_eq!(names, expected);
}

#[test]
fn saved_model_decodes_identically() {
    let tree = DependencyTree::from_rows(&[
        ("Kim", "NNP", 2, "nsubj"),
        ("saw", "VBD", 0, "root"),
        ("the", "DT", 4, "det"),
        ("film", "NN", 2, "dobj"),
    ])
    .unwrap();
    let f = frame();
    let ctx = TargetContext::new(&tree, Span::single(2), &f, "see", Pos::V);
    let roles: Vec<RoleKey> = ["A", "B", "C"]
        .iter()
        .map(|r| RoleKey::new("F", r))
        .collect();
    let spans: Vec<Span> = candidate_spans(&tree).into_iter().collect();
    let mut m = Model::default();
    for (i, name) in ["hl=kim|fe=A", "hl=film|fe=B", "null|fe=C", "bias|fe=C"]
        .iter()
        .enumerate()
    {
        m.weights
            .insert(framekit::argid::feature_id(name), 1.0 + i as f64 * 0.25);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    m.save(&path).unwrap();
    let loaded = Model::load(&path).unwrap();
    let a = decode(&m, &ctx, &roles, &spans, 100);
    let b = decode(&loaded, &ctx, &roles, &spans, 100);
    assert_eq!(a, b);
    let chosen: BTreeSet<usize> = a.1[0].choice.iter().copied().collect();
    assert!(chosen.len() > 1);
}
