use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::json;
use stancegen::data::{
    build_vocab, encode_corpus, load_embeddings, make_split, parse_semeval_tsv, tokenize,
    verify_counts, Corpus, EmbeddingMatrix, Example, Split, Vocabulary,
};
use stancegen::diagnostics::{run_gradcheck, GradcheckSummary, TOLERANCE};
use stancegen::eval::{dump_attention, evaluate, MetricsReport};
use stancegen::model::Checkpoint;
use stancegen::train::{train, TrainReport};
use stancegen::{Error, Model, ModelSpec, Result, Stance};

use crate::config::RunConfig;

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const EPOCH_LOG_FILE: &str = "epochs.tsv";
pub const METRICS_FILE: &str = "metrics.txt";
pub const SUMMARY_FILE: &str = "summary.tsv";
pub const VOCAB_FILE: &str = "vocab.txt";

/// Training data, vocabulary and embeddings shared by every seed.
pub struct Prepared {
    pub split: Split,
    pub vocab: Vocabulary,
    pub embeddings: Arc<EmbeddingMatrix<f32>>,
}

pub fn load_corpus(files: &[PathBuf]) -> Result<Corpus> {
    let mut all = Corpus::default();
    for f in files {
        all.extend(parse_semeval_tsv(f)?);
    }
    Ok(all)
}

pub fn embeddings_for(
    cfg: &RunConfig,
    vocab: &Vocabulary,
    dim: usize,
) -> Result<Arc<EmbeddingMatrix<f32>>> {
    let m = match &cfg.embeddings {
        Some(path) => load_embeddings(path, vocab, dim)?,
        None => EmbeddingMatrix::pseudo_random(vocab, dim),
    };
    Ok(Arc::new(m))
}

/// Loads and splits the configured data and rebuilds the training
/// vocabulary. Embeddings are loaded only when `embed_dim` is given.
pub fn prepare(cfg: &RunConfig, embed_dim: Option<usize>) -> Result<Prepared> {
    let split = make_split(&load_corpus(&cfg.data)?)?;
    if cfg.count_check {
        verify_counts(&split)?;
    }
    let vocab = build_vocab(&[&split.train], cfg.min_count);
    let embeddings = match embed_dim {
        Some(d) => embeddings_for(cfg, &vocab, d)?,
        None => Arc::new(EmbeddingMatrix::from_rows(1, vec![0.0; vocab.len()])),
    };
    Ok(Prepared {
        split,
        vocab,
        embeddings,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io(path, e))
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Outcome of one training seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub report: TrainReport,
    pub dev: MetricsReport,
    pub test: MetricsReport,
}

pub fn seed_dir(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("seed-{seed}"))
}

fn train_seed(cfg: &RunConfig, data: &Prepared, seed: u64, verbose: bool) -> Result<SeedRun> {
    let dir = seed_dir(&cfg.out_dir, seed);
    let hp = stancegen::train::Hyperparams {
        seed,
        ..cfg.hp.clone()
    };
    let spec = ModelSpec::new(
        cfg.variant,
        hp.embed_dim,
        hp.hidden_dim,
        data.split.domain_names.len(),
    );
    let mut model = Model::build(spec, seed, data.embeddings.clone())?;
    let train_set = encode_corpus(&data.split.train, &data.vocab);
    let dev_set = encode_corpus(&data.split.dev, &data.vocab);
    let test_set = encode_corpus(&data.split.test, &data.vocab);

    let mut log = String::from("epoch\tstance_loss\tdomain_loss\tdev_macro_f1\n");
    let report = train(&mut model, &train_set, &dev_set, &hp, &mut |r| {
        let line = r.log_line();
        if verbose {
            eprintln!("seed {seed}\t{line}");
        }
        log.push_str(&line);
        log.push('\n');
    })?;
    let dev = evaluate(&model, &dev_set)?;
    let test = evaluate(&model, &test_set)?;

    let mut metrics = format!(
        "best_epoch = {}\nstopped_epoch = {}\n\n",
        report.best_epoch, report.stopped_epoch
    );
    metrics.push_str(&dev.render("dev"));
    metrics.push('\n');
    metrics.push_str(&test.render("test"));

    let meta = json!({
        "seed": seed,
        "best_epoch": report.best_epoch,
        "stopped_epoch": report.stopped_epoch,
        "lambda": hp.lambda,
        "domains": data.split.domain_names,
    });
    write(&dir.join(EPOCH_LOG_FILE), &log)?;
    write(&dir.join(METRICS_FILE), &metrics)?;
    Checkpoint::from_model(&model, data.vocab.hash(), meta).save(dir.join(CHECKPOINT_FILE))?;
    eprintln!(
        "seed {seed}: best epoch {} of {}, dev macro-F1 {:.6}, {:.1}s",
        report.best_epoch,
        report.stopped_epoch,
        report.best_dev_macro_f1,
        report.wall_time.as_secs_f64()
    );
    Ok(SeedRun {
        seed,
        report,
        dev,
        test,
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn summary_table(runs: &[SeedRun]) -> String {
    let mut out = String::from("seed\tbest_epoch\tdev_macro_f1\ttest_macro_f1\n");
    for r in runs {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.6}\t{:.6}",
            r.seed, r.report.best_epoch, r.dev.macro_f1, r.test.macro_f1
        );
    }
    let dev: Vec<f64> = runs.iter().map(|r| r.dev.macro_f1).collect();
    let test: Vec<f64> = runs.iter().map(|r| r.test.macro_f1).collect();
    let _ = writeln!(out, "median\t-\t{:.6}\t{:.6}", median(&dev), median(&test));
    out
}

/// Trains one model per seed. Seeds run on separate threads when
/// `parallel` is set; outputs do not depend on it.
pub fn cmd_train(cfg: &RunConfig, parallel: bool) -> Result<Vec<SeedRun>> {
    let data = prepare(cfg, Some(cfg.hp.embed_dim))?;
    eprintln!(
        "train {} / dev {} / test {} examples, vocabulary {}",
        data.split.train.len(),
        data.split.dev.len(),
        data.split.test.len(),
        data.vocab.len()
    );
    write(&cfg.out_dir.join(VOCAB_FILE), &data.vocab.serialize())?;
    let runs: Vec<SeedRun> = if parallel && cfg.seeds.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = cfg
                .seeds
                .iter()
                .map(|&seed| {
                    let data = &data;
                    s.spawn(move || train_seed(cfg, data, seed, false))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training thread panicked"))
                .collect::<Result<_>>()
        })?
    } else {
        cfg.seeds
            .iter()
            .map(|&seed| train_seed(cfg, &data, seed, true))
            .collect::<Result<_>>()?
    };
    for r in &runs {
        print!("{}", r.test.render(&format!("test seed {}", r.seed)));
    }
    if runs.len() > 1 {
        let table = summary_table(&runs);
        write(&cfg.out_dir.join(SUMMARY_FILE), &table)?;
        print!("{table}");
    }
    Ok(runs)
}

/// A model restored from disk, checked against the configured vocabulary.
pub struct Restored {
    pub model: Model<f32>,
    pub prepared: Prepared,
}

pub fn restore(cfg: &RunConfig, checkpoint: &Path) -> Result<Restored> {
    let ckpt = Checkpoint::<f32>::load(checkpoint)?;
    restore_from(cfg, ckpt)
}

fn restore_from(cfg: &RunConfig, ckpt: Checkpoint<f32>) -> Result<Restored> {
    let mut prepared = prepare(cfg, None)?;
    let hash = prepared.vocab.hash();
    if hash != ckpt.vocab_hash {
        return Err(Error::Checkpoint(format!(
            "vocabulary hash mismatch: checkpoint {} vs rebuilt {hash}",
            ckpt.vocab_hash
        )));
    }
    prepared.embeddings = embeddings_for(cfg, &prepared.vocab, ckpt.spec.embed_dim)?;
    let model = ckpt.into_model(prepared.embeddings.clone())?;
    Ok(Restored { model, prepared })
}

/// Which examples to score: a named split or a separate TSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dataset {
    Train,
    Dev,
    Test,
    File(PathBuf),
}

impl Dataset {
    pub fn parse(s: &str) -> Dataset {
        match s {
            "train" => Dataset::Train,
            "dev" => Dataset::Dev,
            "test" => Dataset::Test,
            other => Dataset::File(PathBuf::from(other)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Dataset::Train => "train".into(),
            Dataset::Dev => "dev".into(),
            Dataset::Test => "test".into(),
            Dataset::File(p) => p.display().to_string(),
        }
    }

    pub fn examples(&self, prepared: &Prepared) -> Result<Vec<Example>> {
        let corpus = match self {
            Dataset::Train => prepared.split.train.clone(),
            Dataset::Dev => prepared.split.dev.clone(),
            Dataset::Test => prepared.split.test.clone(),
            Dataset::File(p) => parse_semeval_tsv(p)?,
        };
        if corpus.is_empty() {
            return Err(Error::Data(format!("dataset {} is empty", self.label())));
        }
        Ok(encode_corpus(&corpus, &prepared.vocab))
    }
}

pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path, dataset: &Dataset) -> Result<MetricsReport> {
    let r = restore(cfg, checkpoint)?;
    let examples = dataset.examples(&r.prepared)?;
    let report = evaluate(&r.model, &examples)?;
    print!("{}", report.render(&dataset.label()));
    Ok(report)
}

/// Class probabilities for one (target, text) pair.
pub fn cmd_predict(cfg: &RunConfig, checkpoint: &Path, target: &str, text: &str) -> Result<Stance> {
    let r = restore(cfg, checkpoint)?;
    let vocab = &r.prepared.vocab;
    let tokens = tokenize(text);
    let example = Example {
        sentence: tokens.iter().map(|t| vocab.id_or_unk(t)).collect(),
        target: tokenize(target)
            .iter()
            .map(|t| vocab.id_or_unk(t))
            .collect(),
        stance: Stance::None,
        domain: None,
        tokens,
        target_text: target.to_string(),
    };
    let out = r.model.predict(&example)?;
    let label = out.predicted();
    let probs: Vec<String> = Stance::ALL
        .iter()
        .map(|s| format!("{}={:.6}", s.as_str(), out.stance_probs[s.index()]))
        .collect();
    println!("{}\t{}", label.as_str(), probs.join("\t"));
    Ok(label)
}

pub const ATTENTION_JSONL: &str = "attention.jsonl";
pub const ATTENTION_HTML: &str = "attention.html";

pub fn cmd_dump_attention(
    cfg: &RunConfig,
    checkpoint: &Path,
    dataset: &Dataset,
    out_dir: &Path,
) -> Result<usize> {
    let ckpt = Checkpoint::<f32>::load(checkpoint)?;
    if !ckpt.spec.variant.has_attention() {
        return Err(Error::Capability(format!(
            "{} has no attention layer",
            ckpt.spec.variant
        )));
    }
    let r = restore_from(cfg, ckpt)?;
    let examples = dataset.examples(&r.prepared)?;
    let n = dump_attention(
        &r.model,
        &examples,
        &out_dir.join(ATTENTION_JSONL),
        Some(&out_dir.join(ATTENTION_HTML)),
    )?;
    println!("wrote {n} records to {}", out_dir.display());
    Ok(n)
}

pub fn render_gradcheck(summary: &GradcheckSummary) -> String {
    let mut out = String::new();
    for c in &summary.components {
        let _ = writeln!(
            out,
            "{:<28} {:>10.3e} {:>6} {}",
            c.name,
            c.max_rel_error,
            c.coordinates,
            if c.passed() { "PASS" } else { "FAIL" }
        );
    }
    let failed = summary.failures();
    let _ = writeln!(
        out,
        "{} components, {} failed, tolerance {TOLERANCE:e}",
        summary.components.len(),
        failed.len()
    );
    for name in failed {
        let _ = writeln!(out, "FAILED: {name}");
    }
    out
}

pub fn cmd_gradcheck(fault: Option<&str>) -> Result<GradcheckSummary> {
    let fault: Option<&'static str> = fault.map(|f| &*Box::leak(f.to_string().into_boxed_str()));
    let summary = run_gradcheck(fault)?;
    print!("{}", render_gradcheck(&summary));
    eprintln!("elapsed {:.2}s", summary.elapsed.as_secs_f64());
    Ok(summary)
}
