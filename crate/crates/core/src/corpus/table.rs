//! TSV readers and writers for reading-time corpora.
//!
//! Inputs:
//!
//! * SPR: `subject_id  sentence_id  word_pos  word  rt_ms`, one row per
//!   (subject, word).
//! * Eye-tracking fixations: `subject_id  fixation_order  word_index
//!   duration_ms`, plus a text table giving the words themselves, either
//!   `sentence_id  word_pos  word` or a bare `word` column (sentences are
//!   then split after words ending in `. ! ?`).
//!
//! Output: the canonical word table, `sentence_id  word_pos  word  char_len
//! clause_final  mean_rt  mean_go_past  n_subjects_retained`, where absent
//! values are written as `NA`.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use super::fixation::{subject_measures, RawFixation};
use super::text::{ends_sentence, normalize_word};
use super::{Modality, RtCorpus, WordRecord};
use crate::error::{Error, Result};
use crate::tsv::{fmt_optional, parse_field, parse_optional_f64, write_preamble, Table};

/// Reads a self-paced reading table. Means are left empty; see
/// [`super::average_across_subjects`].
pub fn read_spr(reader: impl Read, name: &str) -> Result<RtCorpus> {
    let table = Table::read(reader)?;
    let subject = table.column("subject_id")?;
    let sentence = table.column("sentence_id")?;
    let pos = table.column("word_pos")?;
    let word = table.column("word")?;
    let rt = table.column("rt_ms")?;

    let mut order: Vec<String> = Vec::new();
    let mut sentences: HashMap<String, BTreeMap<usize, WordRecord>> = HashMap::new();
    for (line, row) in &table.rows {
        let line = *line;
        let position: usize = parse_field(line, "word_pos", &row[pos])?;
        let value: f64 = parse_field(line, "rt_ms", &row[rt])?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::parse(line, format!("rt_ms must be positive, found {value}")));
        }
        let text = normalize_word(&row[word]);
        if text.is_empty() || text.contains(char::is_whitespace) {
            return Err(Error::parse(line, format!("invalid word `{}`", row[word])));
        }
        let sid = &row[sentence];
        let words = sentences.entry(sid.clone()).or_insert_with(|| {
            order.push(sid.clone());
            BTreeMap::new()
        });
        let record = words
            .entry(position)
            .or_insert_with(|| WordRecord::new(text.clone(), sid.clone(), position));
        if record.text != text {
            return Err(Error::parse(
                line,
                format!(
                    "sentence `{sid}` position {position}: word `{text}` conflicts with `{}`",
                    record.text
                ),
            ));
        }
        if record.rt_by_subject.insert(row[subject].clone(), value).is_some() {
            return Err(Error::parse(
                line,
                format!(
                    "duplicate row for subject `{}` at sentence `{sid}` position {position}",
                    row[subject]
                ),
            ));
        }
    }

    let mut words = Vec::new();
    for sid in order {
        for (expected, (position, record)) in sentences.remove(&sid).unwrap_or_default().into_iter().enumerate() {
            if position != expected {
                return Err(Error::Validation(format!(
                    "sentence `{sid}` is missing word position {expected}"
                )));
            }
            words.push(record);
        }
    }
    RtCorpus::new(name, Modality::Spr, words)
}

/// A word of an eye-tracking text, in reading order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextRow {
    pub sentence_id: String,
    pub word_pos: usize,
    pub word: String,
}

/// Reads the text that fixation `word_index` values point into.
pub fn read_text_table(reader: impl Read) -> Result<Vec<TextRow>> {
    let table = Table::read(reader)?;
    let word = table.column("word")?;
    let mut rows = Vec::with_capacity(table.rows.len());
    match (table.try_column("sentence_id"), table.try_column("word_pos")) {
        (Some(sentence), Some(pos)) => {
            for (line, row) in &table.rows {
                rows.push(TextRow {
                    sentence_id: row[sentence].clone(),
                    word_pos: parse_field(*line, "word_pos", &row[pos])?,
                    word: normalize_word(&row[word]),
                });
            }
        }
        _ => {
            let (mut sentence, mut pos) = (0usize, 0usize);
            for (_, row) in &table.rows {
                let text = normalize_word(&row[word]);
                let last = ends_sentence(&text);
                rows.push(TextRow {
                    sentence_id: sentence.to_string(),
                    word_pos: pos,
                    word: text,
                });
                if last {
                    sentence += 1;
                    pos = 0;
                } else {
                    pos += 1;
                }
            }
        }
    }
    Ok(rows)
}

/// Reads a fixation log, grouped by subject.
pub fn read_fixations(reader: impl Read) -> Result<BTreeMap<String, Vec<RawFixation>>> {
    let table = Table::read(reader)?;
    let subject = table.column("subject_id")?;
    let order = table.column("fixation_order")?;
    let index = table.column("word_index")?;
    let duration = table.column("duration_ms")?;
    let mut out: BTreeMap<String, Vec<RawFixation>> = BTreeMap::new();
    for (line, row) in &table.rows {
        let line = *line;
        let d: f64 = parse_field(line, "duration_ms", &row[duration])?;
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::parse(line, format!("duration_ms must be positive, found {d}")));
        }
        out.entry(row[subject].clone()).or_default().push(RawFixation {
            subject_id: row[subject].clone(),
            word_index: parse_field(line, "word_index", &row[index])?,
            onset_order: parse_field(line, "fixation_order", &row[order])?,
            duration: d,
        });
    }
    Ok(out)
}

/// Builds an eye-tracking corpus with per-subject total fixation and go-past
/// times. Also returns the number of (subject, word) pairs with no fixation.
pub fn build_eye_tracking_corpus(
    name: &str,
    text: &[TextRow],
    fixations: &BTreeMap<String, Vec<RawFixation>>,
) -> Result<(RtCorpus, usize)> {
    let mut words: Vec<WordRecord> = text
        .iter()
        .map(|r| WordRecord::new(r.word.clone(), r.sentence_id.clone(), r.word_pos))
        .collect();
    let mut skipped = 0;
    for (subject, trial) in fixations {
        let (totals, go_past) = subject_measures(trial, words.len())?;
        skipped += words.len() - totals.len();
        for (w, t) in totals {
            words[w].rt_by_subject.insert(subject.clone(), t);
        }
        for (w, g) in go_past {
            words[w].go_past_by_subject.insert(subject.clone(), g);
        }
    }
    Ok((RtCorpus::new(name, Modality::EyeTracking, words)?, skipped))
}

pub const WORD_TABLE_COLUMNS: [&str; 8] = [
    "sentence_id",
    "word_pos",
    "word",
    "char_len",
    "clause_final",
    "mean_rt",
    "mean_go_past",
    "n_subjects_retained",
];

/// Writes the canonical word table. `preamble` lines are emitted as `# `
/// comments ahead of the header.
pub fn write_word_table(corpus: &RtCorpus, mut out: impl Write, preamble: &[String]) -> Result<()> {
    write_preamble(&mut out, preamble)?;
    writeln!(out, "{}", WORD_TABLE_COLUMNS.join("\t"))?;
    for w in corpus.words() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            w.sentence_id,
            w.position_in_sentence,
            w.text,
            w.char_len,
            u8::from(w.is_clause_final),
            fmt_optional(w.mean_rt),
            fmt_optional(w.mean_go_past),
            w.n_subjects_retained
        )?;
    }
    Ok(())
}

/// A word table read back from disk.
#[derive(Debug, Clone)]
pub struct WordTable {
    pub corpus: RtCorpus,
    pub preamble: Vec<String>,
}

/// Reads a canonical word table. The modality comes from `modality` when
/// given, else from a `# modality=...` preamble line.
pub fn read_word_table(reader: impl Read, name: &str, modality: Option<Modality>) -> Result<WordTable> {
    let table = Table::read(reader)?;
    let modality = match modality {
        Some(m) => m,
        None => table
            .preamble_value("modality")
            .ok_or_else(|| Error::Validation("word table does not declare its modality".into()))?
            .parse()?,
    };
    let cols: Vec<usize> = WORD_TABLE_COLUMNS
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<_>>()?;
    let mut words = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        let line = *line;
        let field = |i: usize| row[cols[i]].as_str();
        let mut w = WordRecord::new(field(2), field(0), parse_field(line, "word_pos", field(1))?);
        let char_len: usize = parse_field(line, "char_len", field(3))?;
        let clause_final = match field(4) {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(Error::parse(
                    line,
                    format!("clause_final must be 0 or 1, found `{other}`"),
                ))
            }
        };
        if char_len != w.char_len || clause_final != w.is_clause_final {
            return Err(Error::parse(line, "char_len/clause_final disagree with the word text"));
        }
        w.mean_rt = parse_optional_f64(line, "mean_rt", field(5))?;
        w.mean_go_past = parse_optional_f64(line, "mean_go_past", field(6))?;
        w.n_subjects_retained = parse_field(line, "n_subjects_retained", field(7))?;
        words.push(w);
    }
    Ok(WordTable {
        corpus: RtCorpus::new(name, modality, words)?,
        preamble: table.preamble,
    })
}
