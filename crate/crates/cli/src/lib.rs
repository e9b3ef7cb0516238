//! Command-line front end for `primal-svm`.

pub mod args;
pub mod error;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use primal_svm::corpus::{
    binarize_label, build_vocabulary, corpus_stats, featurize, featurize_all, parse_phrases,
    parse_tsv, synth_corpus, tokenize, write_tsv, SynthVocab,
};
use primal_svm::eval::{
    cross_validate, fit, subsample, sweep, CvReport, ExperimentSpec, SweepGrid, SweepParam,
};
use primal_svm::svm::{load_model, save_model, Classifier, SavedModel};
use primal_svm::{Document, FeatureMode, Vocabulary};
use serde_json::json;

pub use args::{Cli, Command};
pub use error::CliError;

/// Environment variable capping worker threads; 0 runs sequentially.
pub const THREADS_ENV: &str = "PRIMAL_SVM_THREADS";

/// Thread cap from [`THREADS_ENV`], defaulting to the available parallelism.
pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a non-negative integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn load_docs(path: &Path, subset: Option<usize>, seed: u64) -> Result<Vec<Document>, CliError> {
    let records = parse_tsv(open(path)?)?;
    let mut docs: Vec<Document> = records.iter().map(Document::from_record).collect();
    if let Some(k) = subset {
        let keep = subsample(docs.len(), k, seed).map_err(|e| CliError::Usage(e.to_string()))?;
        docs = keep.into_iter().map(|i| docs[i].clone()).collect();
    }
    if docs.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: need at least 2 phrases, found {}",
            path.display(),
            docs.len()
        )));
    }
    Ok(docs)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn spec_labels(spec: &ExperimentSpec) -> (&'static str, &'static str, &'static str) {
    (
        spec.optimizer.algorithm().label(),
        spec.task.as_str(),
        spec.features.as_str(),
    )
}

pub fn run(cli: Cli, threads: usize, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Stats { data, json } => cmd_stats(&data, json, out),
        Command::Train { run, out: model } => {
            let spec = run.spec()?;
            let docs = load_docs(&run.data, run.subsample, run.seed)?;
            cmd_train(&docs, &spec, run.seed, &model, out)
        }
        Command::Predict {
            model,
            data,
            out: dest,
        } => match dest {
            Some(p) => {
                let f = File::create(&p).map_err(|e| CliError::io(&p, e))?;
                let mut w = BufWriter::new(f);
                cmd_predict(&model, &data, &mut w)?;
                w.flush().map_err(|e| CliError::io(&p, e))
            }
            None => cmd_predict(&model, &data, out),
        },
        Command::Cv { run, cv, json } => {
            let spec = run.spec()?;
            let docs = load_docs(&run.data, run.subsample, run.seed)?;
            let report = cross_validate(&docs[..], &spec, &cv.config(run.seed, threads))?;
            if json {
                write_json(out, &cv_json(&report))
            } else {
                let (alg, mode, data) = spec_labels(&spec);
                emit(out, "alg\tmode\tdata\taccuracy\ttime_sec")?;
                emit(
                    out,
                    &format!(
                        "{alg}\t{mode}\t{data}\t{:.4}\t{:.3}",
                        report.mean_accuracy,
                        secs(report.mean_time)
                    ),
                )
            }
        }
        Command::Sweep {
            run,
            cv,
            param,
            grid,
            json,
        } => {
            let param: SweepParam = param
                .parse()
                .map_err(|e: primal_svm::eval::EvalError| CliError::Usage(e.to_string()))?;
            let values = parse_grid(param, &grid)?;
            let grid = SweepGrid::new(param, values)?;
            let base = run.spec()?;
            // surface a parameter/algorithm mismatch before any training
            param.apply(&base, grid.values[0])?;
            let docs = load_docs(&run.data, run.subsample, run.seed)?;
            let report = sweep(&docs[..], &base, &grid, &cv.config(run.seed, threads));
            let best = report.best();
            if json {
                let cells: Vec<_> = report
                    .cells
                    .iter()
                    .map(|c| match &c.result {
                        Ok(r) => json!({ "value": c.value, "report": cv_json(r) }),
                        Err(e) => json!({ "value": c.value, "error": e.to_string() }),
                    })
                    .collect();
                write_json(
                    out,
                    &json!({
                        "param": param.name(),
                        "cells": cells,
                        "best": best.map(|(v, a)| json!({ "value": v, "accuracy": a })),
                    }),
                )?;
            } else {
                emit(out, "param\tvalue\taccuracy\ttime_sec")?;
                for c in &report.cells {
                    match &c.result {
                        Ok(r) => emit(
                            out,
                            &format!(
                                "{}\t{}\t{:.4}\t{:.3}",
                                param.name(),
                                c.value,
                                r.mean_accuracy,
                                secs(r.mean_time)
                            ),
                        )?,
                        Err(e) => {
                            eprintln!("{}={}: {e}", param.name(), c.value);
                            emit(out, &format!("{}\t{}\tNA\tNA", param.name(), c.value))?
                        }
                    }
                }
                if let Some((v, a)) = best {
                    emit(out, &format!("best\t{v}\t{a:.4}\t"))?;
                }
            }
            match best {
                Some(_) => Ok(()),
                None => Err(CliError::Train("every grid value failed".into())),
            }
        }
        Command::Synth {
            seed,
            n,
            pos,
            neg,
            neutral,
            min_len,
            max_len,
            out: path,
        } => {
            let vocab = SynthVocab {
                n_pos: pos,
                n_neg: neg,
                n_neutral: neutral,
            };
            let records = synth_corpus(seed, n, vocab, (min_len, max_len))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
            let mut w = BufWriter::new(f);
            write_tsv(&records, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(&path, e))
        }
    }
}

fn emit(out: &mut dyn Write, line: &str) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| match e.kind() {
        std::io::ErrorKind::BrokenPipe => CliError::BrokenPipe,
        _ => CliError::Data(format!("writing output: {e}")),
    })
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), CliError> {
    emit(
        out,
        &serde_json::to_string_pretty(value).expect("json values serialize"),
    )
}

fn parse_grid(param: SweepParam, grid: &str) -> Result<Vec<f64>, CliError> {
    if grid == "standard" || grid == "paper" {
        return param.standard_grid().ok_or_else(|| {
            CliError::Usage(format!(
                "no standard grid for `{}`; pass a comma-separated list",
                param.name()
            ))
        });
    }
    grid.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("grid value `{s}` is not a number")))
        })
        .collect()
}

fn cv_json(r: &CvReport) -> serde_json::Value {
    let (alg, mode, data) = spec_labels(&r.spec);
    json!({
        "alg": alg,
        "mode": mode,
        "data": data,
        "accuracy": r.mean_accuracy,
        "time_sec": secs(r.mean_time),
        "seed": r.config.seed,
        "holdout": r.config.holdout_fraction,
        "optimizer": format!("{:?}", r.spec.optimizer),
        "rounds": r.per_round.iter().enumerate().map(|(i, x)| json!({
            "round": i,
            "accuracy": x.accuracy,
            "time_sec": secs(x.train_time),
        })).collect::<Vec<_>>(),
    })
}

fn cmd_stats(path: &Path, as_json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let records = parse_tsv(open(path)?)?;
    if records.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no phrases after the header",
            path.display()
        )));
    }
    let vocab = build_vocabulary(&records)?;
    let docs: Vec<Document> = records.iter().map(Document::from_record).collect();
    let inst = featurize_all(&docs, &vocab, FeatureMode::Frequency)?;
    let s = corpus_stats(&inst, &vocab)?;
    if as_json {
        return write_json(
            out,
            &json!({
                "instances": s.n_instances,
                "distinct_words": s.n_distinct_words,
                "avg_words_per_phrase": s.avg_words_per_phrase,
                "avg_phrases_per_word": s.avg_phrases_per_word,
            }),
        );
    }
    emit(out, &format!("Number of data instances\t{}", s.n_instances))?;
    emit(
        out,
        &format!("Number of distinct words\t{}", s.n_distinct_words),
    )?;
    emit(
        out,
        &format!("Average words per phrase\t{:.2}", s.avg_words_per_phrase),
    )?;
    emit(
        out,
        &format!("Average phrases per word\t{:.2}", s.avg_phrases_per_word),
    )
}

fn cmd_train(
    docs: &[Document],
    spec: &ExperimentSpec,
    seed: u64,
    model_path: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let vocab = Vocabulary::from_tokens(docs.iter().map(|d| &d.tokens))?;
    let inst = featurize_all(docs, &vocab, spec.features)?;
    let classifier = fit(&inst, vocab.len(), spec, seed)?;
    let saved = SavedModel {
        features: spec.features,
        dim: vocab.len(),
        vocab,
        classifier,
    };
    save_model(&saved, model_path).map_err(|e| CliError::io(model_path, e))?;
    let (alg, mode, data) = spec_labels(spec);
    emit(
        out,
        &format!(
            "trained {alg}/{mode}/{data} on {} phrases ({} words), saved {}",
            docs.len(),
            saved.dim,
            model_path.display()
        ),
    )
}

fn cmd_predict(model_path: &Path, data: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let model = load_model(model_path).map_err(|e| CliError::model(model_path, e))?;
    if model.vocab.is_empty() {
        return Err(CliError::Data(format!(
            "{}: model has no vocabulary and cannot featurize phrases",
            model_path.display()
        )));
    }
    let phrases = parse_phrases(open(data)?)?;
    emit(out, "PhraseId\tPredictedLabel")?;
    let (mut hits, mut labelled) = (0usize, 0usize);
    for p in &phrases {
        let x = featurize(&tokenize(&p.phrase), &model.vocab, model.features);
        let label = model.classifier.predict(&x);
        emit(out, &format!("{}\t{label}", p.phrase_id))?;
        if let Some(s) = p.sentiment {
            let truth = match model.classifier {
                Classifier::Binary(_) => binarize_label(s)?,
                Classifier::Multi(_) => s as i8,
            };
            labelled += 1;
            hits += usize::from(truth == label);
        }
    }
    if labelled > 0 {
        eprintln!("accuracy\t{:.4}", hits as f64 / labelled as f64);
    }
    Ok(())
}
