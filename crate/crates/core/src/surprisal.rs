//! Word-level surprisal annotations: from the built-in n-gram model, or from
//! per-subword scores computed elsewhere (e.g. by a neural LM).
//!
//! Imported scores use a JSON-lines file. The first line is a header,
//! every following line one subword token:
//!
//! ```text
//! {"unit":"bits","marker":"prefix-space","model":"gpt2"}
//! {"t":"ĠThe","s":3.2}
//! {"t":"Ġend","s":7.9}
//! {"t":".","s":1.1}
//! ```
//!
//! `unit` is `nats` or `bits` (bits are multiplied by ln 2). `marker` names
//! the word-boundary convention of the tokenizer: `prefix-space` strips a
//! leading space, `Ġ` or `▁`; `hash-continuation` strips a leading `##`;
//! `none` leaves tokens untouched. Whitespace inside tokens is always
//! dropped.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{is_all_punctuation, is_punctuation, split_punctuation, RtCorpus};
use crate::error::{Error, Result};
use crate::ngram::{sequence_surprisals, LanguageModel};
use crate::tsv::{parse_field, write_preamble, Table};

/// Where a surprisal annotation came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurprisalSource {
    /// Built-in Kneser–Ney model of the given order.
    NGram {
        order: usize,
    },
    Imported(String),
}

impl fmt::Display for SurprisalSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurprisalSource::NGram { order } => write!(f, "kn{order}"),
            SurprisalSource::Imported(name) => f.write_str(name),
        }
    }
}

/// Whether punctuation tokens contribute to a word's surprisal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Punctuation {
    #[default]
    Include,
    Exclude,
}

impl FromStr for Punctuation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "include" => Ok(Punctuation::Include),
            "exclude" => Ok(Punctuation::Exclude),
            other => Err(Error::Argument(format!("unknown punctuation mode `{other}`"))),
        }
    }
}

/// Per-word surprisals (nats) from one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurprisalAnnotation {
    pub source: SurprisalSource,
    pub values: Vec<f64>,
    pub includes_punctuation: bool,
    /// Words whose trailing punctuation was fused into a subword with other
    /// characters and so could not be excluded. All false when punctuation
    /// is included.
    pub fused_punctuation: Vec<bool>,
}

impl SurprisalAnnotation {
    pub fn new(source: SurprisalSource, values: Vec<f64>, punctuation: Punctuation) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Validation(format!(
                "surprisal of word {i} is {v}; expected a finite value >= 0"
            )));
        }
        let n = values.len();
        Ok(Self {
            source,
            values,
            includes_punctuation: punctuation == Punctuation::Include,
            fused_punctuation: vec![false; n],
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    Nats,
    Bits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMarker {
    PrefixSpace,
    HashContinuation,
    None,
}

impl BoundaryMarker {
    fn strip<'a>(&self, token: &'a str) -> &'a str {
        match self {
            BoundaryMarker::PrefixSpace => token
                .strip_prefix(' ')
                .or_else(|| token.strip_prefix('Ġ'))
                .or_else(|| token.strip_prefix('▁'))
                .unwrap_or(token),
            BoundaryMarker::HashContinuation => token.strip_prefix("##").unwrap_or(token),
            BoundaryMarker::None => token,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubwordHeader {
    pub unit: Unit,
    pub marker: BoundaryMarker,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubwordToken {
    /// Raw token text, boundary marker included.
    pub text: String,
    /// Nats.
    pub surprisal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubwordFile {
    pub header: SubwordHeader,
    pub tokens: Vec<SubwordToken>,
}

#[derive(Deserialize)]
struct TokenLine {
    t: String,
    s: f64,
}

/// Parses the JSON-lines subword format, converting to nats.
pub fn parse_subword_surprisals(reader: impl Read) -> Result<SubwordFile> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let header: SubwordHeader = loop {
        match lines.next() {
            None => return Err(Error::parse(1, "missing header line")),
            Some((i, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, format!("bad header: {e}")))?;
            }
        }
    };
    let scale = match header.unit {
        Unit::Nats => 1.0,
        Unit::Bits => std::f64::consts::LN_2,
    };
    let mut tokens = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tok: TokenLine = serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if !(tok.s.is_finite() && tok.s >= 0.0) {
            return Err(Error::Validation(format!(
                "line {}: surprisal {} is negative",
                i + 1,
                tok.s
            )));
        }
        tokens.push(SubwordToken {
            text: tok.t,
            surprisal: tok.s * scale,
        });
    }
    Ok(SubwordFile { header, tokens })
}

pub fn load_subword_surprisals(path: impl AsRef<Path>) -> Result<SubwordFile> {
    parse_subword_surprisals(File::open(path)?)
}

/// Word-level sums produced by [`align_subwords_to_words`].
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub values: Vec<f64>,
    pub fused_punctuation: Vec<bool>,
}

/// Sums subword surprisals into the words they spell out.
///
/// Subwords are consumed greedily left to right against the concatenated
/// characters of `words` (markers and whitespace removed). Each subword must
/// lie inside a single word. Tokens that are empty after stripping are
/// charged to the word that starts at the current position. With
/// [`Punctuation::Exclude`], subwords made only of punctuation contribute
/// nothing; a word whose final punctuation is fused into a mixed subword
/// keeps that surprisal and is flagged in `fused_punctuation`.
///
/// ```
/// use wrapup::surprisal::{align_subwords_to_words, BoundaryMarker, Punctuation, SubwordToken};
/// let toks: Vec<SubwordToken> = [("don", 1.0), ("'t", 0.5), ("Ġst", 2.0), ("op", 0.25)]
///     .iter()
///     .map(|(t, s)| SubwordToken { text: t.to_string(), surprisal: *s })
///     .collect();
/// let a = align_subwords_to_words(&toks, BoundaryMarker::PrefixSpace, &["don't", "stop"], Punctuation::Include)
///     .unwrap();
/// assert_eq!(a.values, [1.5, 2.25]);
/// ```
pub fn align_subwords_to_words<S: AsRef<str>>(
    tokens: &[SubwordToken],
    marker: BoundaryMarker,
    words: &[S],
    punctuation: Punctuation,
) -> Result<Alignment> {
    let words: Vec<Vec<char>> = words.iter().map(|w| w.as_ref().chars().collect()).collect();
    if words.iter().any(Vec::is_empty) {
        return Err(Error::Argument("words must be non-empty".into()));
    }
    let mut values = vec![0.0; words.len()];
    let mut fused = vec![false; words.len()];
    if words.is_empty() {
        return if tokens.iter().all(|t| marker.strip(&t.text).trim().is_empty()) {
            Ok(Alignment {
                values,
                fused_punctuation: fused,
            })
        } else {
            Err(Error::Alignment {
                offset: 0,
                message: "subtokens given but no words".into(),
            })
        };
    }

    let (mut wi, mut ci, mut offset) = (0usize, 0usize, 0usize);
    for tok in tokens {
        let text: String = marker.strip(&tok.text).chars().filter(|c| !c.is_whitespace()).collect();
        if text.is_empty() {
            let target = if ci == words[wi].len() && wi + 1 < words.len() {
                wi + 1
            } else {
                wi
            };
            values[target] += tok.surprisal;
            continue;
        }
        if ci == words[wi].len() {
            wi += 1;
            ci = 0;
            if wi == words.len() {
                return Err(Error::Alignment {
                    offset,
                    message: format!("subtoken `{}` runs past the last word", tok.text),
                });
            }
        }
        let word = &words[wi];
        for ch in text.chars() {
            if ci == word.len() {
                let next: String = words.get(wi + 1).map(|w| w.iter().collect()).unwrap_or_default();
                return Err(Error::Alignment {
                    offset,
                    message: format!(
                        "subtoken `{}` straddles words `{}` and `{next}`",
                        tok.text,
                        word.iter().collect::<String>()
                    ),
                });
            }
            if word[ci] != ch {
                return Err(Error::Alignment {
                    offset,
                    message: format!("subtoken `{}` has `{ch}` where the text has `{}`", tok.text, word[ci]),
                });
            }
            ci += 1;
            offset += 1;
        }
        let all_punct = is_all_punctuation(&text);
        if !(all_punct && punctuation == Punctuation::Exclude) {
            values[wi] += tok.surprisal;
        }
        let ends_word = ci == word.len();
        if punctuation == Punctuation::Exclude && ends_word && !all_punct && is_punctuation(word[ci - 1]) {
            fused[wi] = true;
        }
    }
    if wi + 1 < words.len() || ci < words[wi].len() {
        return Err(Error::Alignment {
            offset,
            message: "subtoken stream ends before the text does".into(),
        });
    }
    Ok(Alignment {
        values,
        fused_punctuation: fused,
    })
}

/// Word surprisals without the contribution of punctuation-only subwords.
pub fn strip_punctuation_surprisal<S: AsRef<str>>(
    tokens: &[SubwordToken],
    marker: BoundaryMarker,
    words: &[S],
) -> Result<Vec<f64>> {
    Ok(align_subwords_to_words(tokens, marker, words, Punctuation::Exclude)?.values)
}

/// Aligns an imported subword file to every word of `corpus`, in order.
pub fn annotate_imported(
    file: &SubwordFile,
    corpus: &RtCorpus,
    punctuation: Punctuation,
) -> Result<SurprisalAnnotation> {
    let words: Vec<&str> = corpus.words().iter().map(|w| w.text.as_str()).collect();
    let aligned = align_subwords_to_words(&file.tokens, file.header.marker, &words, punctuation)?;
    let mut ann = SurprisalAnnotation::new(
        SurprisalSource::Imported(file.header.model.clone()),
        aligned.values,
        punctuation,
    )?;
    ann.fused_punctuation = aligned.fused_punctuation;
    Ok(ann)
}

/// Scores each sentence of `corpus` with an n-gram model.
///
/// Words are split into punctuation and core pieces (as in pre-tokenized
/// training text); a word's surprisal is the sum over its pieces.
pub fn annotate_with_ngram<M: LanguageModel + ?Sized>(
    model: &M,
    order: usize,
    corpus: &RtCorpus,
    punctuation: Punctuation,
) -> Result<SurprisalAnnotation> {
    let mut values = Vec::with_capacity(corpus.len());
    for range in corpus.sentences() {
        let mut pieces = Vec::new();
        let mut owner = Vec::new();
        for (i, w) in corpus.words()[range.clone()].iter().enumerate() {
            for p in split_punctuation(&w.text) {
                pieces.push(p);
                owner.push(i);
            }
        }
        let scores = sequence_surprisals(model, &pieces);
        let mut sums = vec![0.0; range.len()];
        for ((piece, &i), s) in pieces.iter().zip(&owner).zip(scores) {
            if punctuation == Punctuation::Include || !is_all_punctuation(piece) {
                sums[i] += s;
            }
        }
        values.extend(sums);
    }
    SurprisalAnnotation::new(SurprisalSource::NGram { order }, values, punctuation)
}

/// Per-word log-frequencies and surprisal columns for one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationTable {
    pub logfreq: Vec<f64>,
    pub annotations: Vec<SurprisalAnnotation>,
    pub preamble: Vec<String>,
}

impl AnnotationTable {
    /// The annotation whose source displays as `name`.
    pub fn get(&self, name: &str) -> Option<&SurprisalAnnotation> {
        self.annotations.iter().find(|a| a.source.to_string() == name)
    }
}

fn parse_source(name: &str) -> SurprisalSource {
    match name.strip_prefix("kn").and_then(|o| o.parse().ok()) {
        Some(order) => SurprisalSource::NGram { order },
        None => SurprisalSource::Imported(name.to_string()),
    }
}

/// Writes `sentence_id, word_pos, word, logfreq`, then `surprisal_<source>`
/// and `fused_<source>` for each annotation. The punctuation mode goes into
/// a `# punctuation=` preamble line.
pub fn write_annotation_table(
    corpus: &RtCorpus,
    logfreq: &[f64],
    annotations: &[SurprisalAnnotation],
    mut out: impl Write,
    preamble: &[String],
) -> Result<()> {
    let n = corpus.len();
    if logfreq.len() != n || annotations.iter().any(|a| a.len() != n) {
        return Err(Error::Validation(format!(
            "annotations must have one value per word ({n})"
        )));
    }
    let Some(first) = annotations.first() else {
        return Err(Error::Validation("no surprisal annotation to write".into()));
    };
    if annotations
        .iter()
        .any(|a| a.includes_punctuation != first.includes_punctuation)
    {
        return Err(Error::Validation("annotations disagree on punctuation handling".into()));
    }
    let mode = if first.includes_punctuation {
        "include"
    } else {
        "exclude"
    };
    let mut lines = preamble.to_vec();
    lines.push(format!("punctuation={mode}"));
    write_preamble(&mut out, &lines)?;
    write!(out, "sentence_id\tword_pos\tword\tlogfreq")?;
    for a in annotations {
        write!(out, "\tsurprisal_{0}\tfused_{0}", a.source)?;
    }
    writeln!(out)?;
    for (i, w) in corpus.words().iter().enumerate() {
        write!(
            out,
            "{}\t{}\t{}\t{}",
            w.sentence_id, w.position_in_sentence, w.text, logfreq[i]
        )?;
        for a in annotations {
            write!(out, "\t{}\t{}", a.values[i], u8::from(a.fused_punctuation[i]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads an annotation table and checks that its rows are the words of
/// `corpus`, in order.
pub fn read_annotation_table(reader: impl Read, corpus: &RtCorpus) -> Result<AnnotationTable> {
    let table = Table::read(reader)?;
    let punctuation: Punctuation = table
        .preamble_value("punctuation")
        .ok_or_else(|| Error::Validation("annotation table does not declare its punctuation mode".into()))?
        .parse()?;
    let [sid, pos, word, lf] = ["sentence_id", "word_pos", "word", "logfreq"].map(|c| table.column(c));
    let (sid, pos, word, lf) = (sid?, pos?, word?, lf?);
    let sources: Vec<(String, usize, usize)> = table
        .header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("surprisal_").map(|name| (name.to_string(), i)))
        .map(|(name, i)| {
            let fused = table.column(&format!("fused_{name}"))?;
            Ok((name, i, fused))
        })
        .collect::<Result<_>>()?;
    if sources.is_empty() {
        return Err(Error::Validation(
            "annotation table has no surprisal_<source> column".into(),
        ));
    }
    if table.rows.len() != corpus.len() {
        return Err(Error::Validation(format!(
            "annotation table has {} rows for {} words",
            table.rows.len(),
            corpus.len()
        )));
    }
    let mut logfreq = Vec::with_capacity(corpus.len());
    let mut values = vec![Vec::with_capacity(corpus.len()); sources.len()];
    let mut fused = vec![Vec::with_capacity(corpus.len()); sources.len()];
    for ((line, row), w) in table.rows.iter().zip(corpus.words()) {
        let line = *line;
        let word_pos: usize = parse_field(line, "word_pos", &row[pos])?;
        if row[sid] != w.sentence_id || word_pos != w.position_in_sentence || row[word] != w.text {
            return Err(Error::parse(
                line,
                format!(
                    "row {}/{}/{} does not match word {}/{}/{}",
                    row[sid], row[pos], row[word], w.sentence_id, w.position_in_sentence, w.text
                ),
            ));
        }
        logfreq.push(parse_field(line, "logfreq", &row[lf])?);
        for (j, (name, col, fcol)) in sources.iter().enumerate() {
            values[j].push(parse_field(line, &format!("surprisal_{name}"), &row[*col])?);
            fused[j].push(match row[*fcol].as_str() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::parse(
                        line,
                        format!("fused_{name} must be 0 or 1, found `{other}`"),
                    ))
                }
            });
        }
    }
    let annotations = sources
        .iter()
        .zip(values.into_iter().zip(fused))
        .map(|((name, _, _), (v, f))| {
            let mut a = SurprisalAnnotation::new(parse_source(name), v, punctuation)?;
            a.fused_punctuation = f;
            Ok(a)
        })
        .collect::<Result<_>>()?;
    Ok(AnnotationTable {
        logfreq,
        annotations,
        preamble: table.preamble,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(pairs: &[(&str, f64)]) -> Vec<SubwordToken> {
        pairs
            .iter()
            .map(|(t, s)| SubwordToken {
                text: t.to_string(),
                surprisal: *s,
            })
            .collect()
    }

    #[test]
    fn parses_header_and_tokens() {
        let text = "{\"unit\":\"nats\",\"marker\":\"none\",\"model\":\"m\"}\n{\"t\":\"a\",\"s\":1.5}\n{\"t\":\"b\",\"s\":0.5}\n";
        let f = parse_subword_surprisals(text.as_bytes()).unwrap();
        assert_eq!(f.header.model, "m");
        assert_eq!(f.tokens.len(), 2);
        assert_eq!(f.tokens[1].text, "b");
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn bits_are_converted() {
        let text = "{\"unit\":\"bits\",\"marker\":\"none\",\"model\":\"m\"}\n{\"t\":\"a\",\"s\":1.0}\n";
        let f = parse_subword_surprisals(text.as_bytes()).unwrap();
        assert!((f.tokens[0].surprisal - 0.693_147_180_559_945_3).abs() < 1e-15);
    }

    #[test]
    fn bad_lines_are_reported() {
        let missing = "{\"unit\":\"nats\",\"marker\":\"none\",\"model\":\"m\"}\n{\"t\":\"a\",\"s\":1}\n{\"t\":\"b\"}\n";
        assert!(matches!(
            parse_subword_surprisals(missing.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let negative = "{\"unit\":\"nats\",\"marker\":\"none\",\"model\":\"m\"}\n{\"t\":\"a\",\"s\":-1}\n";
        assert!(matches!(
            parse_subword_surprisals(negative.as_bytes()),
            Err(Error::Validation(_))
        ));
        let header = "{\"unit\":\"decibans\",\"marker\":\"none\",\"model\":\"m\"}\n";
        assert!(matches!(
            parse_subword_surprisals(header.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn span_sums() {
        let t = toks(&[("don", 1.0), ("'t", 0.5), ("st", 2.0), ("op", 0.25)]);
        let a = align_subwords_to_words(&t, BoundaryMarker::None, &["don't", "stop"], Punctuation::Include).unwrap();
        assert_eq!(a.values, [1.5, 2.25]);
    }

    #[test]
    fn one_token_per_word_is_identity() {
        let t = toks(&[("The", 3.0), ("Ġcat", 4.0), ("Ġsat", 5.0)]);
        let a = align_subwords_to_words(
            &t,
            BoundaryMarker::PrefixSpace,
            &["The", "cat", "sat"],
            Punctuation::Include,
        )
        .unwrap();
        assert_eq!(a.values, [3.0, 4.0, 5.0]);
        let t = toks(&[("un", 1.0), ("##happy", 2.0), ("day", 0.5)]);
        let a = align_subwords_to_words(
            &t,
            BoundaryMarker::HashContinuation,
            &["unhappy", "day"],
            Punctuation::Include,
        )
        .unwrap();
        assert_eq!(a.values, [3.0, 0.5]);
    }

    #[test]
    fn straddling_and_mismatch_are_errors() {
        let t = toks(&[("las", 1.0), ("tst", 1.0), ("op", 1.0)]);
        match align_subwords_to_words(&t, BoundaryMarker::None, &["last", "stop"], Punctuation::Include) {
            Err(Error::Alignment { offset, message }) => {
                assert_eq!(offset, 4);
                assert!(message.contains("straddles"));
            }
            other => panic!("{other:?}"),
        }
        let t = toks(&[("ca", 1.0), ("r", 1.0)]);
        assert!(matches!(
            align_subwords_to_words(&t, BoundaryMarker::None, &["cat"], Punctuation::Include),
            Err(Error::Alignment { offset: 2, .. })
        ));
        let t = toks(&[("ca", 1.0)]);
        assert!(matches!(
            align_subwords_to_words(&t, BoundaryMarker::None, &["cat"], Punctuation::Include),
            Err(Error::Alignment { offset: 2, .. })
        ));
    }

    #[test]
    fn punctuation_exclusion() {
        let t = toks(&[("end", 1.2), (".", 0.3)]);
        let inc = align_subwords_to_words(&t, BoundaryMarker::None, &["end."], Punctuation::Include).unwrap();
        let exc = align_subwords_to_words(&t, BoundaryMarker::None, &["end."], Punctuation::Exclude).unwrap();
        assert!((inc.values[0] - 1.5).abs() < 1e-15);
        assert_eq!(exc.values, [1.2]);
        assert_eq!(exc.fused_punctuation, [false]);

        let t = toks(&[("word", 2.0)]);
        assert_eq!(
            strip_punctuation_surprisal(&t, BoundaryMarker::None, &["word"]).unwrap(),
            [2.0]
        );

        let t = toks(&[("so", 1.0), ("…", 4.0)]);
        let exc = strip_punctuation_surprisal(&t, BoundaryMarker::None, &["so", "…"]).unwrap();
        assert_eq!(exc, [1.0, 0.0]);
    }

    #[test]
    fn fused_punctuation_is_flagged() {
        let t = toks(&[("the", 1.0), ("end.", 2.0)]);
        let exc = align_subwords_to_words(&t, BoundaryMarker::None, &["the", "end."], Punctuation::Exclude).unwrap();
        assert_eq!(exc.values, [1.0, 2.0]);
        assert_eq!(exc.fused_punctuation, [false, true]);
    }

    #[test]
    fn ngram_annotation_sums_pieces() {
        use crate::corpus::Modality;
        use crate::ngram::{surprisal, train_kn};
        let m = train_kn(&[vec!["the", "end", "."], vec!["the", "cat", "."]], 2, 1).unwrap();
        let corpus = RtCorpus::from_sentences("c", Modality::Spr, &[vec!["the", "end."]]).unwrap();
        let inc = annotate_with_ngram(&m, 2, &corpus, Punctuation::Include).unwrap();
        let exc = annotate_with_ngram(&m, 2, &corpus, Punctuation::Exclude).unwrap();
        let s_end = surprisal(&m, "end", &["the"]);
        let s_dot = surprisal(&m, ".", &["the", "end"]);
        assert!((inc.values[1] - (s_end + s_dot)).abs() < 1e-12);
        assert!((exc.values[1] - s_end).abs() < 1e-12);
        assert_eq!(inc.values[0], exc.values[0]);
        assert_eq!(inc.source.to_string(), "kn2");
    }

    proptest! {
        #[test]
        fn surprisal_is_conserved(
            words in prop::collection::vec("[a-z,.']{1,6}", 1..8),
            cuts in prop::collection::vec(0u8..4, 0..60),
            scores in prop::collection::vec(0u32..64, 60),
        ) {
            // Split each word into random-length pieces; dyadic scores sum exactly.
            let mut tokens = Vec::new();
            let mut c = 0;
            for w in &words {
                let chars: Vec<char> = w.chars().collect();
                let mut i = 0;
                while i < chars.len() {
                    let len = 1 + cuts.get(c).copied().unwrap_or(0) as usize;
                    let end = (i + len).min(chars.len());
                    tokens.push(SubwordToken {
                        text: chars[i..end].iter().collect(),
                        surprisal: scores[c % scores.len()] as f64 / 8.0,
                    });
                    c += 1;
                    i = end;
                }
            }
            let a = align_subwords_to_words(&tokens, BoundaryMarker::None, &words, Punctuation::Include).unwrap();
            let total: f64 = tokens.iter().map(|t| t.surprisal).sum();
            prop_assert_eq!(a.values.iter().sum::<f64>(), total);
            let again = align_subwords_to_words(&tokens, BoundaryMarker::None, &words, Punctuation::Include).unwrap();
            prop_assert_eq!(a, again);
        }

        #[test]
        fn bits_and_nats_agree(values in prop::collection::vec(0.0f64..30.0, 1..20)) {
            let mut bits = String::from("{\"unit\":\"bits\",\"marker\":\"none\",\"model\":\"m\"}\n");
            let mut nats = String::from("{\"unit\":\"nats\",\"marker\":\"none\",\"model\":\"m\"}\n");
            for v in &values {
                bits.push_str(&format!("{{\"t\":\"x\",\"s\":{v}}}\n"));
                nats.push_str(&format!("{{\"t\":\"x\",\"s\":{}}}\n", v * std::f64::consts::LN_2));
            }
            let b = parse_subword_surprisals(bits.as_bytes()).unwrap();
            let n = parse_subword_surprisals(nats.as_bytes()).unwrap();
            for (x, y) in b.tokens.iter().zip(&n.tokens) {
                prop_assert!((x.surprisal - y.surprisal).abs() <= 1e-12);
            }
        }
    }
}
