use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use framekit::argid::decode_table;
use framekit::deptree::{candidate_spans, DependencyTree, Span};
use framekit::embeddings::cosine;
use framekit::fndata::{ingest_corpus, CorpusFormat};
use framekit::paraphrase::{build_lattice, generate_sentences, GenerationConfig};
use framekit::{SentenceId, ValenceIndex};

fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> DependencyTree {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n];
    for k in 1..n {
        heads[order[k] - 1] = order[rng.gen_range(0..k)];
    }
    let forms: Vec<String> = (1..=n).map(|i| format!("w{i}")).collect();
    let rows: Vec<(&str, &str, usize, &str)> = heads
        .iter()
        .zip(&forms)
        .map(|(&h, f)| (f.as_str(), "NN", h, if h == 0 { "root" } else { "dep" }))
        .collect();
    DependencyTree::from_rows(&rows).unwrap()
}

fn spans(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("candidate_spans");
    for n in [10, 40, 120] {
        let tree = random_tree(&mut rng, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &tree, |b, t| {
            b.iter(|| candidate_spans(black_box(t)))
        });
    }
    group.finish();
}

fn decode(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tree = random_tree(&mut rng, 30);
    let spans: Vec<Span> = candidate_spans(&tree).into_iter().collect();
    let mut group = c.benchmark_group("decode_table");
    for roles in [3, 8] {
        let scores: Vec<Vec<f64>> = (0..roles)
            .map(|_| {
                (0..=spans.len())
                    .map(|_| rng.gen_range(-2.0..2.0))
                    .collect()
            })
            .collect();
        for k in [10, 100] {
            group.bench_function(format!("roles={roles}/k={k}"), |b| {
                b.iter(|| decode_table(black_box(&scores), &spans, k))
            });
        }
    }
    group.finish();
}

fn generation(c: &mut Criterion) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/toy/corpus.jsonl");
    let corpus = ingest_corpus(&path, CorpusFormat::NativeJsonl, Default::default())
        .unwrap()
        .corpus;
    let idx = ValenceIndex::build(&corpus);
    let by = corpus.annosets_by_sentence();
    let sid = SentenceId(1);
    let lattice = build_lattice(
        sid,
        &by[&sid],
        &corpus,
        &idx,
        &GenerationConfig::default(),
        None,
    );
    c.bench_function("generate_sentences/goodwill", |b| {
        b.iter(|| generate_sentences(black_box(&lattice), &corpus, None).unwrap())
    });
}

fn similarity(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut group = c.benchmark_group("cosine");
    for dim in [50, 300] {
        let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        group.bench_function(BenchmarkId::from_parameter(dim), |b| {
            b.iter(|| cosine(black_box(&u), black_box(&v)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, spans, decode, generation, similarity);
criterion_main!(benches);
