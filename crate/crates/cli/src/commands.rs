use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wrapup::corpus::{
    average_across_subjects, build_eye_tracking_corpus, is_all_punctuation, normalize_text, read_fixations, read_spr,
    read_text_table, read_word_table, split_punctuation, write_word_table, AveragingReport, Modality, RtCorpus,
};
use wrapup::ngram::{train_kn, unigram_logfreq, KnModel, UnigramLogFreq};
use wrapup::predictors::{
    build_design, write_design_tsv, DesignInputs, DesignOptions, PositionClass, PositionSelect, ResponseTransform,
};
use wrapup::regression::{residual_diagnostic, sweep_k, DeltaLogLikResult, ResidualSummary};
use wrapup::surprisal::{
    annotate_imported, annotate_with_ngram, load_subword_surprisals, read_annotation_table, write_annotation_table,
    AnnotationTable,
};

use crate::{display, Context, Failure, RunConfig};

pub const WORDS: &str = "words.tsv";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const MODEL: &str = "model.json";
pub const ANNOTATION: &str = "annotation.tsv";
pub const DELTA_JSON: &str = "delta_loglik.json";
pub const DELTA_CSV: &str = "delta_loglik.csv";
pub const RESIDUALS: &str = "residuals.csv";

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

/// Writes `bytes` next to `path` and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure {
        message: format!("{}: {e}", path.display()),
        validation: false,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn csv_failure(e: csv::Error) -> Failure {
    Failure {
        message: format!("csv output: {e}"),
        validation: false,
    }
}

#[derive(Serialize, Deserialize)]
struct Stamped<T> {
    config_hash: String,
    config: RunConfig,
    #[serde(flatten)]
    body: T,
}

fn stamp<T>(cfg: &RunConfig, body: T) -> Stamped<T> {
    Stamped {
        config_hash: cfg.hash(),
        config: cfg.clone(),
        body,
    }
}

#[derive(Serialize)]
struct IngestReport {
    dataset: String,
    modality: Modality,
    rows_read: usize,
    words: usize,
    sentences: usize,
    subjects: usize,
    /// Eye-tracking (subject, word) pairs without any fixation.
    unfixated_pairs: usize,
    outliers: AveragingReport,
}

pub fn ingest(cfg: &RunConfig) -> Result<(), Failure> {
    let (raw, rows_read, unfixated) = match (&cfg.spr, &cfg.text, &cfg.fixations) {
        (Some(spr), _, _) => {
            let path = cfg.resolve(spr);
            let corpus = read_spr(open(&path)?, &cfg.dataset).context(display(&path))?;
            let rows = corpus.words().iter().map(|w| w.rt_by_subject.len()).sum();
            (corpus, rows, 0)
        }
        (None, Some(text), Some(fixations)) => {
            let (text, fixations) = (cfg.resolve(text), cfg.resolve(fixations));
            let rows = read_text_table(open(&text)?).context(display(&text))?;
            let fix = read_fixations(open(&fixations)?).context(display(&fixations))?;
            let n = fix.values().map(Vec::len).sum();
            let (corpus, unfixated) =
                build_eye_tracking_corpus(&cfg.dataset, &rows, &fix).context(display(&fixations))?;
            (corpus, n, unfixated)
        }
        _ => return Err(Failure::validation("ingest needs `spr`, or `text` and `fixations`")),
    };
    let (corpus, outliers) = average_across_subjects(&raw)?;
    let subjects: BTreeSet<&String> = raw
        .words()
        .iter()
        .flat_map(|w| w.rt_by_subject.keys().chain(w.go_past_by_subject.keys()))
        .collect();

    let out = cfg.out_dir();
    let mut preamble = cfg.preamble();
    preamble.push(format!("modality={}", corpus.modality()));
    let mut buf = Vec::new();
    write_word_table(&corpus, &mut buf, &preamble)?;
    write_atomic(&out.join(WORDS), &buf)?;
    let report = IngestReport {
        dataset: cfg.dataset.clone(),
        modality: corpus.modality(),
        rows_read,
        words: corpus.len(),
        sentences: corpus.sentences().len(),
        subjects: subjects.len(),
        unfixated_pairs: unfixated,
        outliers,
    };
    log::info!(
        "{} words, {} of {} RT values dropped as outliers",
        report.words,
        report.outliers.rt.values_dropped,
        report.outliers.rt.values_pooled
    );
    write_json(&out.join(INGEST_REPORT), &stamp(cfg, report))
}

/// Splits a line of training text into model tokens.
pub fn tokenize_line(line: &str) -> Vec<String> {
    normalize_text(line)
        .split_whitespace()
        .flat_map(split_punctuation)
        .collect()
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    model: KnModel,
}

pub fn train_lm(cfg: &RunConfig) -> Result<(), Failure> {
    let path = cfg
        .lm_train
        .as_ref()
        .map(|p| cfg.resolve(p))
        .ok_or_else(|| Failure::validation("train-lm needs `lm_train`"))?;
    let mut sentences = Vec::new();
    for line in open(&path)?.lines() {
        let line = line.map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
        let tokens = tokenize_line(&line);
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    let model = train_kn(&sentences, cfg.lm_order, cfg.lm_min_count).context(display(&path))?;
    log::info!(
        "trained order-{} model on {} sentences, |V| = {}",
        model.order(),
        sentences.len(),
        model.vocab_size()
    );
    let mut bytes = serde_json::to_vec(&stamp(cfg, ModelFile { model })).expect("model serializes");
    bytes.push(b'\n');
    write_atomic(&cfg.out_dir().join(MODEL), &bytes)
}

fn load_words(cfg: &RunConfig) -> Result<RtCorpus, Failure> {
    let path = cfg.out_dir().join(WORDS);
    if !path.exists() {
        return Err(Failure::validation(format!(
            "{} not found; run `ingest` first",
            path.display()
        )));
    }
    let table = read_word_table(open(&path)?, &cfg.dataset, cfg.modality).context(display(&path))?;
    Ok(table.corpus)
}

/// The word without leading or trailing punctuation, for frequency lookup.
fn word_core(word: &str) -> String {
    split_punctuation(word)
        .into_iter()
        .filter(|p| !is_all_punctuation(p))
        .collect()
}

pub fn annotate(cfg: &RunConfig) -> Result<(), Failure> {
    let corpus = load_words(cfg)?;
    let mut annotations = Vec::new();
    let unigram: UnigramLogFreq = if cfg.lm_train.is_some() {
        let path = cfg.out_dir().join(MODEL);
        if !path.exists() {
            return Err(Failure::validation(format!(
                "{} not found; run `train-lm` first",
                path.display()
            )));
        }
        let file: Stamped<ModelFile> = serde_json::from_reader(open(&path)?)
            .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
        let model = file.body.model;
        annotations.push(annotate_with_ngram(&model, model.order(), &corpus, cfg.punctuation)?);
        model.unigram().clone()
    } else {
        let words: Vec<String> = corpus.words().iter().map(|w| word_core(&w.text)).collect();
        unigram_logfreq(&[words])
    };
    for p in &cfg.imported {
        let path = cfg.resolve(p);
        let file = load_subword_surprisals(&path).context(display(&path))?;
        annotations.push(annotate_imported(&file, &corpus, cfg.punctuation).context(display(&path))?);
    }
    if annotations.is_empty() {
        return Err(Failure::validation("no surprisal source: set `lm_train` or `imported`"));
    }
    let names: BTreeSet<String> = annotations.iter().map(|a| a.source.to_string()).collect();
    if names.len() != annotations.len() {
        return Err(Failure::validation("two surprisal sources share a name"));
    }
    let logfreq: Vec<f64> = corpus
        .words()
        .iter()
        .map(|w| unigram.logprob(&word_core(&w.text)))
        .collect();
    let mut buf = Vec::new();
    write_annotation_table(&corpus, &logfreq, &annotations, &mut buf, &cfg.preamble())?;
    write_atomic(&cfg.out_dir().join(ANNOTATION), &buf)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sweep {
    pub position_class: PositionClass,
    pub n_rows: usize,
    pub results: Vec<DeltaLogLikResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub response: ResponseTransform,
    pub medial: ResidualSummary,
    pub clause_final: ResidualSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Analysis {
    pub dataset: String,
    pub measure: wrapup::corpus::Measure,
    pub model: String,
    /// Config hashes embedded in the input files.
    pub inputs: BTreeMap<String, Option<String>>,
    pub sweeps: Vec<Sweep>,
    pub residuals: ResidualReport,
}

fn only(class: PositionClass) -> PositionSelect {
    match class {
        PositionClass::ClauseFinal => PositionSelect::ClauseFinal,
        PositionClass::SentenceMedial => PositionSelect::Medial,
    }
}

/// The `config_hash=` value from a file's `#` preamble or JSON body.
pub fn embedded_hash(path: &Path) -> Option<String> {
    let text = fs::read_to_string(path).ok()?;
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value = serde_json::from_str(&text).ok()?;
        return v.get("config_hash")?.as_str().map(str::to_string);
    }
    text.lines().take_while(|l| l.starts_with('#')).find_map(|l| {
        l.trim_start_matches('#')
            .trim()
            .strip_prefix("config_hash=")
            .map(str::to_string)
    })
}

fn load_annotations(cfg: &RunConfig, corpus: &RtCorpus) -> Result<AnnotationTable, Failure> {
    let path = cfg.out_dir().join(ANNOTATION);
    if !path.exists() {
        return Err(Failure::validation(format!(
            "{} not found; run `annotate` first",
            path.display()
        )));
    }
    read_annotation_table(open(&path)?, corpus).context(display(&path))
}

pub fn analyze(cfg: &RunConfig) -> Result<(), Failure> {
    let out = cfg.out_dir();
    let corpus = load_words(cfg)?;
    let table = load_annotations(cfg, &corpus)?;
    let name = cfg
        .surprisal
        .clone()
        .unwrap_or_else(|| table.annotations[0].source.to_string());
    let surprisal = table.get(&name).ok_or_else(|| {
        let known: Vec<String> = table.annotations.iter().map(|a| a.source.to_string()).collect();
        Failure::validation(format!("no surprisal column `{name}` (have {})", known.join(", ")))
    })?;
    let inputs = DesignInputs {
        corpus: &corpus,
        surprisal,
        context_surprisal: surprisal,
        logfreq: &table.logfreq,
    };
    let options = |position| DesignOptions {
        position,
        measure: cfg.measure,
        response: cfg.response,
        scope: cfg.scope,
        k: None,
    };

    let sweeps = cfg
        .position
        .classes()
        .par_iter()
        .map(|&class| {
            let rows = build_design(&inputs, &options(only(class))).context(format!("{class} design"))?;
            let results = sweep_k(&rows, &cfg.k_grid, cfg.folds, cfg.seed).context(format!("{class} sweep"))?;
            Ok((
                Sweep {
                    position_class: class,
                    n_rows: rows.len(),
                    results,
                },
                rows,
            ))
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    let all_rows = build_design(
        &inputs,
        &DesignOptions {
            response: ResponseTransform::Log,
            ..options(PositionSelect::Both)
        },
    )
    .context("residual design")?;
    let diagnostic = residual_diagnostic(&all_rows).context("residual diagnostic")?;

    let preamble = cfg.preamble();
    let modality = corpus.modality();
    for (sweep, rows) in &sweeps {
        let mut buf = Vec::new();
        write_design_tsv(rows, modality, &mut buf, &preamble)?;
        write_atomic(&out.join(format!("design_{}.tsv", sweep.position_class)), &buf)?;
    }

    let mut buf = Vec::new();
    for line in &preamble {
        writeln!(buf, "# {line}").expect("write to memory");
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record([
        "dataset",
        "measure",
        "position_class",
        "model",
        "k",
        "mean_delta",
        "std_error",
    ])
    .map_err(csv_failure)?;
    for (sweep, _) in &sweeps {
        for r in &sweep.results {
            w.write_record([
                cfg.dataset.clone(),
                cfg.measure.to_string(),
                sweep.position_class.to_string(),
                name.clone(),
                r.k.to_string(),
                r.mean_delta.to_string(),
                r.std_error.to_string(),
            ])
            .map_err(csv_failure)?;
        }
    }
    let buf = w.into_inner().map_err(|e| csv_failure(e.into_error().into()))?;
    write_atomic(&out.join(DELTA_CSV), &buf)?;

    let mut buf = Vec::new();
    for line in &preamble {
        writeln!(buf, "# {line}").expect("write to memory");
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record([
        "word_index",
        "sentence_id",
        "word_pos",
        "word",
        "position_class",
        "residual",
    ])
    .map_err(csv_failure)?;
    for r in &diagnostic.residuals {
        let word = &corpus.words()[r.word_index];
        w.write_record([
            r.word_index.to_string(),
            word.sentence_id.clone(),
            word.position_in_sentence.to_string(),
            word.text.clone(),
            r.position_class.to_string(),
            r.value.to_string(),
        ])
        .map_err(csv_failure)?;
    }
    let buf = w.into_inner().map_err(|e| csv_failure(e.into_error().into()))?;
    write_atomic(&out.join(RESIDUALS), &buf)?;

    let analysis = Analysis {
        dataset: cfg.dataset.clone(),
        measure: cfg.measure,
        model: name,
        inputs: [WORDS, ANNOTATION]
            .into_iter()
            .map(|f| (f.to_string(), embedded_hash(&out.join(f))))
            .collect(),
        sweeps: sweeps.into_iter().map(|(s, _)| s).collect(),
        residuals: ResidualReport {
            response: ResponseTransform::Log,
            medial: diagnostic.medial,
            clause_final: diagnostic.clause_final,
        },
    };
    write_json(&out.join(DELTA_JSON), &stamp(cfg, analysis))
}

/// Prints the sweep table, the residual summary and the provenance of
/// every output in the directory.
pub fn report(cfg: &RunConfig, w: &mut impl Write) -> Result<(), Failure> {
    let out = cfg.out_dir();
    let path = out.join(DELTA_JSON);
    if !path.exists() {
        return Err(Failure::validation(format!(
            "{} not found; run `analyze` first",
            path.display()
        )));
    }
    let stamped: Stamped<Analysis> =
        serde_json::from_reader(open(&path)?).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
    let a = &stamped.body;
    let io = |e: std::io::Error| Failure {
        message: format!("report output: {e}"),
        validation: false,
    };
    (|| -> std::io::Result<()> {
        writeln!(
            w,
            "dataset {}  measure {}  surprisal {}  config {}",
            a.dataset,
            a.measure,
            a.model,
            &stamped.config_hash[..12]
        )?;
        for s in &a.sweeps {
            writeln!(w, "\n{} targets (n = {})", s.position_class, s.n_rows)?;
            writeln!(w, "  {:>5}  {:>12}  {:>10}", "k", "ΔLogLik", "SE")?;
            let best = s
                .results
                .iter()
                .max_by(|x, y| x.mean_delta.total_cmp(&y.mean_delta))
                .map(|r| r.k);
            for r in &s.results {
                let mark = if Some(r.k) == best { "  <- max" } else { "" };
                writeln!(w, "  {:>5.2}  {:>12.6}  {:>10.6}{mark}", r.k, r.mean_delta, r.std_error)?;
            }
        }
        writeln!(w, "\nresiduals of the baseline fit on medial words (log RT)")?;
        for (label, r) in [
            ("medial", &a.residuals.medial),
            ("clause-final", &a.residuals.clause_final),
        ] {
            writeln!(
                w,
                "  {label:<12}  n = {:<7} mean = {:>9.5} (SE {:.5})  sd = {:.5}  skew = {:>7.4}",
                r.n, r.mean, r.std_error, r.sd, r.skewness
            )?;
        }
        writeln!(w, "\nprovenance")?;
        let mut hashes = BTreeSet::new();
        for f in [
            WORDS,
            INGEST_REPORT,
            MODEL,
            ANNOTATION,
            DELTA_JSON,
            DELTA_CSV,
            RESIDUALS,
        ] {
            let p = out.join(f);
            if p.exists() {
                let h = embedded_hash(&p).unwrap_or_else(|| "missing".into());
                writeln!(w, "  {f:<20} {}", &h[..h.len().min(12)])?;
                hashes.insert(h);
            }
        }
        if hashes.len() > 1 {
            writeln!(w, "  note: outputs come from {} different configs", hashes.len())?;
        }
        Ok(())
    })()
    .map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_lines_are_tokenized_like_the_corpus() {
        assert_eq!(
            tokenize_line("“Stop,” she said—twice."),
            ["\"", "Stop", ",", "\"", "she", "said", "-", "twice", "."]
        );
        assert!(tokenize_line("   ").is_empty());
    }

    #[test]
    fn word_core_strips_edge_punctuation() {
        assert_eq!(word_core("(end)."), "end");
        assert_eq!(word_core("don't"), "don't");
        assert_eq!(word_core("..."), "");
    }
}
