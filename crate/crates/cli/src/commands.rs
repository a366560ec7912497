use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Serialize;

use framekit::analysis::{
    coverage_csv, coverage_overlap, fe_reports_csv, febar_table, gnuplot_data, per_fe_scores,
    ptgf_breakdown, rank_frequency, GroupReport, ItemKind,
};
use framekit::argid::{
    build_instances, predict, read_predictions, train, write_predictions, Hyperparams, Model,
    Prediction, TemplateConfig, TrainOptions,
};
use framekit::deptree::{index_trees, ingest_conll, write_conll, DependencyTree};
use framekit::embeddings::{EmbeddingTable, SemanticFilter, SemanticFilterSpec, TableFormat};
use framekit::eval::{bootstrap_p, score_predictions, EvalConfig, ScoreTally};
use framekit::fndata::{
    corpus_stats, ingest_corpus, jsonl, split_corpus, CorpusFormat, IngestOptions, Pos,
};
use framekit::paraphrase::{export_augmented, generate_corpus, project_tree, GenerationConfig};
use framekit::{Corpus, SentenceId, ValenceIndex};
use framekit_service::Service;

use crate::config::FileConfig;
use crate::error::{core, CliError};
use crate::{Command, GlobalArgs, InputFormat};

const DEFAULT_EPOCHS: usize = 10;
const DEFAULT_BEAM: usize = 100;
const DEFAULT_PORT: u16 = 8080;
const PORT_ENV: &str = "FRAMEKIT_PORT";

/// Fills unset flags from the manifest.
fn merge(mut g: GlobalArgs) -> Result<GlobalArgs, CliError> {
    let Some(path) = g.config.clone() else {
        return Ok(g);
    };
    let f = FileConfig::load(&path)?;
    macro_rules! fill {
        ($($field:ident),*) => {$( if g.$field.is_none() { g.$field = f.$field; } )*};
    }
    fill!(
        corpus,
        embeddings,
        conll,
        model,
        out,
        predictions,
        train,
        pos_filter,
        sem_filter,
        max_per_source,
        lambda,
        rho,
        epsilon,
        epochs,
        beam,
        seed,
        jobs,
        port
    );
    g.mwe_filter |= f.mwe_filter.unwrap_or(false);
    g.hierarchy |= f.hierarchy.unwrap_or(false);
    g.frame_credit |= f.frame_credit.unwrap_or(false);
    Ok(g)
}

fn require<'a>(value: &'a Option<PathBuf>, name: &'static str) -> Result<&'a Path, CliError> {
    value.as_deref().ok_or(CliError::Missing(name))
}

/// Directories are read as FrameNet releases unless a format is given.
fn corpus_format(path: &Path, format: Option<InputFormat>) -> CorpusFormat {
    match format {
        Some(InputFormat::Xml) => CorpusFormat::FrameNetXml,
        Some(InputFormat::Jsonl) => CorpusFormat::NativeJsonl,
        None if path.is_dir() => CorpusFormat::FrameNetXml,
        None => CorpusFormat::NativeJsonl,
    }
}

fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    let ingested =
        ingest_corpus(path, corpus_format(path, None), IngestOptions::default()).map_err(core)?;
    for issue in &ingested.report.issues {
        log::warn!("{}: {issue:?}", path.display());
    }
    Ok(ingested.corpus)
}

fn load_trees(path: &Path) -> Result<BTreeMap<SentenceId, DependencyTree>, CliError> {
    Ok(index_trees(ingest_conll(path).map_err(core)?))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

fn write_corpus(c: &Corpus, path: &Path) -> Result<(), CliError> {
    write_file(path, &jsonl::to_bytes(c))
}

fn json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("reports serialize")
}

fn emit<T: Serialize>(doc: &T) {
    println!("{}", serde_json::to_string(doc).expect("reports serialize"));
}

fn read_preds(path: &Path) -> Result<Vec<Prediction>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    read_predictions(&text).map_err(|source| CliError::Predictions {
        path: path.display().to_string(),
        source,
    })
}

fn parse_pos_filter(spec: &str) -> Result<BTreeSet<Pos>, CliError> {
    spec.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match Pos::from_tag(t) {
            Pos::Other if !t.eq_ignore_ascii_case("other") => {
                Err(CliError::Config(format!("unknown POS tag {t:?}")))
            }
            p => Ok(p),
        })
        .collect()
}

fn generation_config(g: &GlobalArgs) -> Result<GenerationConfig, CliError> {
    let filter = match &g.sem_filter {
        Some(s) => s.parse::<SemanticFilter>().map_err(core)?,
        None => SemanticFilter::None,
    };
    let cfg = GenerationConfig {
        pos_filter: g.pos_filter.as_deref().map(parse_pos_filter).transpose()?,
        mwe_filter: g.mwe_filter,
        semantic: SemanticFilterSpec {
            filter,
            seed: g.seed.unwrap_or(0),
        },
        max_sentences_per_source: g.max_per_source,
    };
    cfg.validate().map_err(core)?;
    Ok(cfg)
}

fn load_embeddings(path: &Path) -> Result<EmbeddingTable, CliError> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => TableFormat::BinaryVec,
        _ => TableFormat::TextVec,
    };
    EmbeddingTable::load(path, format).map_err(core)
}

fn eval_config(g: &GlobalArgs) -> EvalConfig {
    EvalConfig {
        frame_credit: g.frame_credit,
        ..EvalConfig::default()
    }
}

pub fn run(global: GlobalArgs, command: Command) -> Result<(), CliError> {
    let g = merge(global)?;
    if let Some(jobs) = g.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        // a second call only fails if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match command {
        Command::Ingest {
            format,
            strict,
            exemplars,
            test_docs,
            dev_docs,
        } => ingest(
            &g,
            format,
            IngestOptions { strict, exemplars },
            &test_docs,
            &dev_docs,
        ),
        Command::Stats => stats(&g),
        Command::Augment => augment(&g),
        Command::Train => train_cmd(&g),
        Command::Predict => predict_cmd(&g),
        Command::Score {
            baseline,
            resamples,
        } => score(&g, baseline.as_deref(), resamples),
        Command::Analyze => analyze(&g),
        Command::Serve { bind } => serve(&g, &bind),
    }
}

#[derive(Serialize)]
struct IngestSummary {
    sentences: usize,
    annosets: usize,
    issues: Vec<String>,
}

#[derive(Serialize)]
struct SplitSummary {
    train: (usize, usize),
    dev: (usize, usize),
    test: (usize, usize),
    removed: usize,
}

fn ingest(
    g: &GlobalArgs,
    format: Option<InputFormat>,
    opts: IngestOptions,
    test_docs: &[String],
    dev_docs: &[String],
) -> Result<(), CliError> {
    let path = require(&g.corpus, "corpus")?;
    let out = require(&g.out, "out")?;
    let ingested = ingest_corpus(path, corpus_format(path, format), opts).map_err(core)?;
    let c = &ingested.corpus;
    if test_docs.is_empty() && dev_docs.is_empty() {
        write_corpus(c, out)?;
        emit(&IngestSummary {
            sentences: c.sentences.len(),
            annosets: c.annotation_sets.len(),
            issues: ingested
                .report
                .issues
                .iter()
                .map(|i| format!("{i:?}"))
                .collect(),
        });
        return Ok(());
    }
    let split = split_corpus(c, test_docs, dev_docs).map_err(core)?;
    let size = |c: &Corpus| (c.sentences.len(), c.annotation_sets.len());
    write_corpus(&split.train, &out.join("train.jsonl"))?;
    write_corpus(&split.dev, &out.join("dev.jsonl"))?;
    write_corpus(&split.test, &out.join("test.jsonl"))?;
    emit(&SplitSummary {
        train: size(&split.train),
        dev: size(&split.dev),
        test: size(&split.test),
        removed: split.removed.len(),
    });
    Ok(())
}

#[derive(Serialize)]
struct StatsSummary {
    frames: usize,
    lexical_units: usize,
    #[serde(flatten)]
    stats: framekit::fndata::CorpusStats,
}

fn stats(g: &GlobalArgs) -> Result<(), CliError> {
    let c = load_corpus(require(&g.corpus, "corpus")?)?;
    emit(&StatsSummary {
        frames: c.frames.len(),
        lexical_units: c.lexical_units.len(),
        stats: corpus_stats(&c),
    });
    Ok(())
}

#[derive(Serialize)]
struct AugmentSummary {
    generation: framekit::paraphrase::GenerationReport,
    counts: framekit::paraphrase::AugmentCounts,
    trees_written: Option<usize>,
}

fn augment(g: &GlobalArgs) -> Result<(), CliError> {
    let c = load_corpus(require(&g.corpus, "corpus")?)?;
    let out = require(&g.out, "out")?;
    let cfg = generation_config(g)?;
    let table = g.embeddings.as_deref().map(load_embeddings).transpose()?;
    if cfg.semantic.filter.needs_table() && table.is_none() {
        return Err(CliError::Config(format!(
            "--sem-filter {} needs --embeddings",
            cfg.semantic.filter
        )));
    }
    let idx = ValenceIndex::build(&c);
    let output = generate_corpus(&c, &idx, &cfg, table.as_ref(), g.jobs);
    let aug = export_augmented(&c, &output.generated);
    write_corpus(&aug.corpus, &out.join("augmented.jsonl"))?;

    let trees_written = match &g.conll {
        None => None,
        Some(conll) => {
            let gold = load_trees(conll)?;
            // only the input's own trees: other sentences may share the fresh ids
            let mut trees: Vec<DependencyTree> = gold
                .into_iter()
                .filter(|(id, _)| c.sentences.contains_key(id))
                .map(|(_, t)| t)
                .collect();
            for (gen, id) in output.generated.iter().zip(&aug.sentence_ids) {
                let source = trees
                    .iter()
                    .find(|t| t.sentence_id == Some(gen.source_sentence_id));
                match source.and_then(|t| project_tree(t, gen, *id)) {
                    Some(t) => trees.push(t),
                    None => log::warn!("no tree for generated sentence {id}"),
                }
            }
            let texts: BTreeMap<SentenceId, String> = aug
                .corpus
                .sentences
                .values()
                .map(|s| (s.id, s.text.clone()))
                .collect();
            let path = out.join("augmented.conll");
            let mut w = create(&path)?;
            write_conll(&trees, &texts, &mut w).map_err(|e| CliError::io(&path, e))?;
            Some(trees.len())
        }
    };
    let summary = AugmentSummary {
        generation: output.report,
        counts: aug.counts,
        trees_written,
    };
    write_file(&out.join("report.json"), json(&summary).as_bytes())?;
    emit(&summary);
    Ok(())
}

fn train_cmd(g: &GlobalArgs) -> Result<(), CliError> {
    let c = load_corpus(require(&g.corpus, "corpus")?)?;
    let trees = load_trees(require(&g.conll, "conll")?)?;
    let model_path = require(&g.model, "model")?;
    let defaults = Hyperparams::default();
    let hyper = Hyperparams {
        lambda: g.lambda.unwrap_or(defaults.lambda),
        rho: g.rho.unwrap_or(defaults.rho),
        epsilon: g.epsilon.unwrap_or(defaults.epsilon),
    };
    let templates = TemplateConfig {
        hierarchy: g.hierarchy,
    };
    let (instances, report) = build_instances(&c, &trees, &templates).map_err(core)?;
    if !report.missing_tree.is_empty() {
        log::warn!("{} annotation sets have no tree", report.missing_tree.len());
    }
    let mut model = Model::new(hyper, templates).map_err(core)?;
    let opts = TrainOptions {
        epochs: g.epochs.unwrap_or(DEFAULT_EPOCHS),
        seed: g.seed.unwrap_or(0),
    };
    let history = train(&mut model, &instances, opts).map_err(core)?;
    model.save(model_path).map_err(core)?;
    let mut log_lines = String::new();
    for s in &history {
        log_lines.push_str(&serde_json::to_string(s).expect("stats serialize"));
        log_lines.push('\n');
    }
    if let Some(out) = &g.out {
        write_file(out, log_lines.as_bytes())?;
    }
    print!("{log_lines}");
    Ok(())
}

fn predict_cmd(g: &GlobalArgs) -> Result<(), CliError> {
    let c = load_corpus(require(&g.corpus, "corpus")?)?;
    let trees = load_trees(require(&g.conll, "conll")?)?;
    let model = Model::load(require(&g.model, "model")?).map_err(core)?;
    let out = require(&g.out, "out")?;
    let beam = g.beam.unwrap_or(DEFAULT_BEAM);
    if beam == 0 {
        return Err(CliError::Config("--beam must be at least 1".into()));
    }
    let (preds, report) = predict(&model, &c, &trees, beam).map_err(core)?;
    let mut w = create(out)?;
    write_predictions(&preds, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(out, e))?;
    emit(&report);
    Ok(())
}

#[derive(Serialize)]
struct ScoreSummary {
    precision: f64,
    recall: f64,
    f1: f64,
    #[serde(flatten)]
    total: ScoreTally,
    annosets: usize,
    unpredicted: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_value: Option<f64>,
}

fn score(g: &GlobalArgs, baseline: Option<&Path>, resamples: usize) -> Result<(), CliError> {
    let gold = load_corpus(require(&g.corpus, "corpus")?)?;
    let preds = read_preds(require(&g.predictions, "predictions")?)?;
    let cfg = eval_config(g);
    let report = score_predictions(&gold, &preds, &cfg).map_err(core)?;
    let mut summary = ScoreSummary {
        precision: report.prf.precision,
        recall: report.prf.recall,
        f1: report.prf.f1,
        total: report.total,
        annosets: report.per_annoset.len(),
        unpredicted: report.unpredicted,
        baseline_f1: None,
        p_value: None,
    };
    if let Some(path) = baseline {
        let other = score_predictions(&gold, &read_preds(path)?, &cfg).map_err(core)?;
        let a: Vec<ScoreTally> = report.per_sentence().into_values().collect();
        let b: Vec<ScoreTally> = other.per_sentence().into_values().collect();
        summary.baseline_f1 = Some(other.prf.f1);
        summary.p_value = Some(bootstrap_p(&a, &b, resamples, g.seed.unwrap_or(0)).map_err(core)?);
    }
    if let Some(out) = &g.out {
        write_file(out, json(&summary).as_bytes())?;
    }
    emit(&summary);
    Ok(())
}

#[derive(Serialize)]
struct GroupRow<'a> {
    pt: Option<&'a str>,
    gf: Option<&'a str>,
    #[serde(flatten)]
    report: &'a GroupReport,
}

fn analyze(g: &GlobalArgs) -> Result<(), CliError> {
    let eval = load_corpus(require(&g.corpus, "corpus")?)?;
    let out = require(&g.out, "out")?;
    let train = g.train.as_deref().map(load_corpus).transpose()?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<(), CliError> {
        let path = out.join(name);
        write_file(&path, body.as_bytes())?;
        written.push(path.display().to_string());
        Ok(())
    };

    put("febar.json", json(&febar_table(&eval)))?;
    for kind in ItemKind::ALL {
        put(
            &format!("rank_{}.dat", kind.short()),
            gnuplot_data(&rank_frequency(&eval, kind)),
        )?;
    }
    if let Some(train) = &train {
        let cov = coverage_overlap(train, &eval);
        put("coverage.csv", coverage_csv(&cov))?;
        put("coverage.json", json(&cov))?;
    }
    if let Some(path) = &g.predictions {
        let preds = read_preds(path)?;
        let cfg = eval_config(g);
        let rows = per_fe_scores(&eval, &preds, train.as_ref(), &cfg).map_err(core)?;
        put("fe_scores.csv", fe_reports_csv(&rows))?;
        let groups = ptgf_breakdown(&eval, &preds, &cfg).map_err(core)?;
        let table: Vec<GroupRow> = groups
            .iter()
            .map(|(k, report)| GroupRow {
                pt: k.as_ref().map(|k| k.0.as_str()),
                gf: k.as_ref().map(|k| k.1.as_str()),
                report,
            })
            .collect();
        put("ptgf.json", json(&table))?;
    }
    emit(&written);
    Ok(())
}

fn serve(g: &GlobalArgs, bind: &str) -> Result<(), CliError> {
    let port = match std::env::var(PORT_ENV) {
        Ok(v) => v
            .parse::<u16>()
            .map_err(|_| CliError::Config(format!("{PORT_ENV}={v:?} is not a port")))?,
        Err(_) => g.port.unwrap_or(DEFAULT_PORT),
    };
    let addr: SocketAddr = format!("{bind}:{port}")
        .parse()
        .map_err(|_| CliError::Config(format!("cannot bind {bind}:{port}")))?;
    let c = load_corpus(require(&g.corpus, "corpus")?)?;
    let service = Service::new(c);
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::Serve)?;
    runtime
        .block_on(framekit_service::serve(service, addr))
        .map_err(CliError::Serve)
}
