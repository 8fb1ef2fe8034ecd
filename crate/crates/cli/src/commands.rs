//! The six subcommands behind the `gcae` binary.

use crate::config::{ConfigError, RunConfig};
use crate::report::{
    comparison_table, curve_log, metrics_log, reconstruction_dump, vocab_frequencies, Provenance,
    ReconstructionBlock,
};
use gcae_core::corpus::{
    extract_methods, generate_synthetic, split_corpus, CorpusError, CorpusManifest, MethodText,
    Split,
};
use gcae_core::flowgraph::{analyze_flow, edges_for_regime, normalize, FlowError, Regime};
use gcae_core::lexer::{self, LexError, Vocabulary};
use gcae_core::neuralnet::gcae_forward;
use gcae_core::neuralnet::model_io::{self, ModelFile, ModelIoError};
use gcae_core::training::{evaluate, fit, prepare_method, FitResult, MetricsRecord, TrainError};
use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no methods found under {0}")]
    NoMethodsFound(PathBuf),
    #[error("{path}: expected exactly one method, found none")]
    NoMethodInFile { path: PathBuf },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelIoError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("regime {regime} failed: {message}")]
    RegimeFailed { regime: Regime, message: String },
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    fs::write(path, content).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn provenance(cfg: &RunConfig, vocab: &Vocabulary) -> Provenance {
    Provenance {
        seed: cfg.train.seed,
        config_checksum: cfg.checksum(),
        vocab_checksum: vocab.checksum(),
    }
}

fn write_corpus_outputs(
    cfg: &RunConfig,
    manifest: &CorpusManifest,
    vocab: &Vocabulary,
) -> Result<PathBuf, CliError> {
    let manifest_path = cfg.out_dir.join("manifest.txt");
    write_file(&manifest_path, &manifest.to_file_string())?;
    write_file(&cfg.out_dir.join("vocabulary.txt"), &vocab.to_file_string())?;
    Ok(manifest_path)
}

/// `synth`: generate a synthetic corpus, split it, write the manifest and
/// the vocabulary file.
pub fn cmd_synth(cfg: &RunConfig) -> Result<(), CliError> {
    let vocab = Vocabulary::builtin();
    let methods = generate_synthetic(cfg.train.seed, cfg.count, cfg.shape)?;
    let manifest = split_corpus(&methods, cfg.train.seed, cfg.test_fraction)?;
    let path = write_corpus_outputs(cfg, &manifest, &vocab)?;
    println!(
        "synth: {} methods ({} train / {} test) -> {}",
        manifest.entries.len(),
        manifest.train_count(),
        manifest.test_count(),
        path.display()
    );
    Ok(())
}

/// `ingest`: walk a source tree, extract methods, validate each against
/// the full pipeline, split, and write the manifest. Files or methods that
/// fail are logged to stderr and skipped.
pub fn cmd_ingest(cfg: &RunConfig, source_dir: &Path) -> Result<(), CliError> {
    let vocab = Vocabulary::builtin();
    let mut files = Vec::new();
    collect_sources(source_dir, &cfg.extension, &mut files)?;
    files.sort();

    let mut methods: Vec<MethodText> = Vec::new();
    let mut skipped = 0usize;
    for file in &files {
        let text = match fs::read_to_string(file) {
            Ok(text) => text,
            Err(e) => {
                eprintln!("skip {}: {e}", file.display());
                skipped += 1;
                continue;
            }
        };
        let extracted = match extract_methods(&text) {
            Ok(extracted) => extracted,
            Err(e) => {
                eprintln!("skip {}: {e}", file.display());
                skipped += 1;
                continue;
            }
        };
        for (k, mut method) in extracted.into_iter().enumerate() {
            method.origin = format!("{}#{k}", file.display());
            match validate_method(&method, &vocab) {
                Ok(()) => methods.push(method),
                Err(reason) => {
                    eprintln!("skip {} ({}): {reason}", method.origin, method.name);
                    skipped += 1;
                }
            }
        }
    }
    if methods.is_empty() {
        return Err(CliError::NoMethodsFound(source_dir.to_path_buf()));
    }
    let manifest = split_corpus(&methods, cfg.train.seed, cfg.test_fraction)?;
    let path = write_corpus_outputs(cfg, &manifest, &vocab)?;
    println!(
        "ingest: {} methods from {} files ({} skipped) -> {}",
        manifest.entries.len(),
        files.len(),
        skipped,
        path.display()
    );
    Ok(())
}

fn collect_sources(dir: &Path, extension: &str, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.is_dir() {
            collect_sources(&path, extension, out)?;
        } else if path.extension().is_some_and(|e| e == extension) {
            out.push(path);
        }
    }
    Ok(())
}

/// A method is usable when it lexes, anonymizes into the closed
/// vocabulary, and yields a well-formed flow graph.
fn validate_method(method: &MethodText, vocab: &Vocabulary) -> Result<(), String> {
    let raw = lexer::tokenize(&method.body).map_err(|e| e.to_string())?;
    let anon = lexer::anonymize(&raw, &method.name, &HashSet::new());
    let seq = lexer::numericalize(&anon, vocab).map_err(|e| e.to_string())?;
    edges_for_regime(&seq, Regime::Sequence).map_err(|e| e.to_string())?;
    Ok(())
}

/// Read a file expected to contain one method declaration.
fn single_method_from_file(path: &Path) -> Result<MethodText, CliError> {
    let text = read_file(path)?;
    let mut extracted = extract_methods(&text)?;
    if extracted.is_empty() {
        return Err(CliError::NoMethodInFile {
            path: path.to_path_buf(),
        });
    }
    if extracted.len() > 1 {
        eprintln!(
            "{}: {} methods found, using the first",
            path.display(),
            extracted.len()
        );
    }
    let mut method = extracted.swap_remove(0);
    method.origin = path.display().to_string();
    Ok(method)
}

/// `inspect-cfg`: print the edge list and rule-fire counts for one method.
pub fn cmd_inspect_cfg(method_file: &Path, regime: Regime) -> Result<(), CliError> {
    let vocab = Vocabulary::builtin();
    let method = single_method_from_file(method_file)?;
    let raw = lexer::tokenize(&method.body)?;
    let anon = lexer::anonymize(&raw, &method.name, &HashSet::new());
    let seq = lexer::numericalize(&anon, &vocab)?;
    match regime {
        Regime::Sequence => {
            let analysis = analyze_flow(&seq)?;
            print!("{}", analysis.graph.to_edge_list());
            let c = analysis.counts;
            println!(
                "rules: if={} else={} loop={} do={} recursion={} return={}",
                c.if_rule, c.else_rule, c.loop_rule, c.do_rule, c.recursion_rule, c.return_rule
            );
        }
        other => {
            let graph = edges_for_regime(&seq, other)?;
            print!("{}", graph.to_edge_list());
            println!("rules: if=0 else=0 loop=0 do=0 recursion=0 return=0");
        }
    }
    Ok(())
}

struct RegimeArtifacts {
    regime: Regime,
    fitted: FitResult,
    test: Option<MetricsRecord>,
}

fn train_one_regime(
    cfg: &RunConfig,
    manifest: &CorpusManifest,
    regime: Regime,
) -> Result<RegimeArtifacts, TrainError> {
    let mut train_cfg = cfg.train.clone();
    train_cfg.regime = regime;
    let fitted = fit(manifest, &train_cfg)?;
    let test = if manifest.test_count() > 0 {
        Some(evaluate(&fitted.params, manifest, &train_cfg)?)
    } else {
        None
    };
    Ok(RegimeArtifacts {
        regime,
        fitted,
        test,
    })
}

fn write_regime_outputs(
    cfg: &RunConfig,
    vocab: &Vocabulary,
    manifest: &CorpusManifest,
    artifacts: &RegimeArtifacts,
) -> Result<(), CliError> {
    let prov = provenance(cfg, vocab);
    let regime = artifacts.regime;
    let model = ModelFile {
        dims: cfg.train.dims(vocab.size()),
        vocab_checksum: vocab.checksum(),
        seed: cfg.train.seed,
        regime,
        final_activation: cfg.train.final_activation,
        params: artifacts.fitted.params.clone(),
    };
    write_file(
        &cfg.out_dir.join(format!("model-{}.txt", regime.tag())),
        &model_io::to_string(&model),
    )?;
    write_file(
        &cfg.out_dir.join(format!("metrics-{}.tsv", regime.tag())),
        &metrics_log(
            prov,
            regime,
            &artifacts.fitted.epoch_metrics,
            artifacts.test.as_ref(),
            manifest.train_count(),
        ),
    )?;
    write_file(
        &cfg.out_dir.join(format!("curve-{}.tsv", regime.tag())),
        &curve_log(prov, regime, &artifacts.fitted.curve),
    )?;
    Ok(())
}

/// `train`: one regime, one model; writes the model file, the metrics log,
/// and the per-epoch curve data.
pub fn cmd_train(cfg: &RunConfig, manifest_path: &Path) -> Result<(), CliError> {
    let vocab = Vocabulary::builtin();
    let manifest = CorpusManifest::from_file_string(&read_file(manifest_path)?)?;
    let artifacts = train_one_regime(cfg, &manifest, cfg.train.regime)?;
    write_regime_outputs(cfg, &vocab, &manifest, &artifacts)?;
    for rec in &artifacts.fitted.epoch_metrics {
        println!(
            "epoch {}: train loss {:.5} acc {:.4} [{:?}]",
            rec.epoch, rec.mean_loss, rec.mean_accuracy, rec.wall_clock
        );
    }
    match &artifacts.test {
        Some(rec) => println!(
            "test: loss {:.5} (σ {:.3}) acc {:.4} (σ {:.3})",
            rec.mean_loss, rec.loss_std, rec.mean_accuracy, rec.accuracy_std
        ),
        None => println!("test: split empty, skipped"),
    }
    println!(
        "train: wrote model-{0}.txt metrics-{0}.tsv curve-{0}.tsv under {1}",
        cfg.train.regime.tag(),
        cfg.out_dir.display()
    );
    Ok(())
}

/// Decode `entry` through a trained model: forward pass, then row-argmax
/// back to lexemes.
fn decode_entry(
    cfg: &RunConfig,
    vocab: &Vocabulary,
    entry: &gcae_core::corpus::ManifestEntry,
    regime: Regime,
    artifacts: &RegimeArtifacts,
) -> Result<Vec<String>, CliError> {
    let prepared = prepare_method(entry, regime, vocab)?;
    let trace = gcae_forward(
        &prepared.input,
        &prepared.propagation,
        &artifacts.fitted.params,
        cfg.train.final_activation,
    )
    .map_err(TrainError::from)?;
    let logits = trace.reconstruction();
    Ok((0..logits.rows())
        .map(|r| vocab.lexeme(logits.row_argmax(r)).to_string())
        .collect())
}

/// Reconstruction-dump methods: the first five test entries in manifest
/// order.
pub const RECONSTRUCTION_SAMPLE: usize = 5;

/// `compare`: train every requested regime on the same corpus, same split,
/// same seed-derived initial weights; write per-regime artifacts plus the
/// comparison report, the reconstruction dump, and the vocabulary
/// frequency table. Artifacts of regimes that finished are kept even if
/// another regime fails.
pub fn cmd_compare(cfg: &RunConfig, manifest_path: &Path) -> Result<(), CliError> {
    let vocab = Vocabulary::builtin();
    let manifest = CorpusManifest::from_file_string(&read_file(manifest_path)?)?;
    if manifest.test_count() == 0 {
        return Err(CliError::Train(TrainError::EmptySplit("test")));
    }

    // independent trainings; one thread per regime
    let results: Vec<(Regime, Result<RegimeArtifacts, TrainError>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .regimes
            .iter()
            .map(|&regime| {
                let manifest_ref = &manifest;
                scope.spawn(move || (regime, train_one_regime(cfg, manifest_ref, regime)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut completed: Vec<RegimeArtifacts> = Vec::new();
    let mut failures: Vec<(Regime, String)> = Vec::new();
    for (regime, result) in results {
        match result {
            Ok(artifacts) => completed.push(artifacts),
            Err(e) => failures.push((regime, e.to_string())),
        }
    }

    for artifacts in &completed {
        write_regime_outputs(cfg, &vocab, &manifest, artifacts)?;
    }

    let prov = provenance(cfg, &vocab);
    let rows: Vec<(Regime, &MetricsRecord)> = completed
        .iter()
        .filter_map(|a| a.test.as_ref().map(|t| (a.regime, t)))
        .collect();
    write_file(
        &cfg.out_dir.join("report-metrics.tsv"),
        &comparison_table(prov, &rows),
    )?;

    let sample: Vec<&gcae_core::corpus::ManifestEntry> = manifest
        .split_entries(Split::Test)
        .take(RECONSTRUCTION_SAMPLE)
        .collect();
    let mut blocks = Vec::with_capacity(sample.len());
    for entry in sample {
        let mut decoded = Vec::with_capacity(completed.len());
        for artifacts in &completed {
            decoded.push((
                artifacts.regime,
                decode_entry(cfg, &vocab, entry, artifacts.regime, artifacts)?,
            ));
        }
        blocks.push(ReconstructionBlock {
            origin: entry.origin.clone(),
            original: entry.lexemes.clone(),
            decoded,
        });
    }
    write_file(
        &cfg.out_dir.join("report-reconstructions.txt"),
        &reconstruction_dump(prov, &blocks),
    )?;

    write_file(
        &cfg.out_dir.join("report-vocab-frequencies.tsv"),
        &vocab_frequencies(prov, &manifest, &vocab),
    )?;

    println!("regime\tmean_loss\tloss_std\tmean_accuracy\taccuracy_std");
    for (regime, rec) in &rows {
        println!(
            "{}\t{:.5}\t{:.5}\t{:.4}\t{:.4}",
            regime.tag(),
            rec.mean_loss,
            rec.loss_std,
            rec.mean_accuracy,
            rec.accuracy_std
        );
    }
    println!("compare: reports written under {}", cfg.out_dir.display());

    if let Some((regime, message)) = failures.into_iter().next() {
        return Err(CliError::RegimeFailed { regime, message });
    }
    Ok(())
}

/// `reconstruct`: run one method through a saved model and print the
/// decoded token sequence.
pub fn cmd_reconstruct(model_path: &Path, method_file: &Path) -> Result<(), CliError> {
    let vocab = Vocabulary::builtin();
    let model = model_io::from_string(&read_file(model_path)?)?;
    model.verify_vocab(vocab.checksum())?;

    let method = single_method_from_file(method_file)?;
    let raw = lexer::tokenize(&method.body)?;
    let anon = lexer::anonymize(&raw, &method.name, &HashSet::new());
    let seq = lexer::numericalize(&anon, &vocab)?;
    let graph = edges_for_regime(&seq, model.regime)?;
    let propagation = normalize(&graph);
    let input = lexer::one_hot(&seq, vocab.size())?;
    let trace = gcae_forward(&input, &propagation, &model.params, model.final_activation)
        .map_err(TrainError::from)?;
    let logits = trace.reconstruction();
    let decoded: Vec<&str> = (0..logits.rows())
        .map(|r| vocab.lexeme(logits.row_argmax(r)))
        .collect();
    println!("{}", decoded.join(" "));
    Ok(())
}
