//! Reading-time corpora: word records, outlier filtering and subject averaging.
//!
//! Both self-paced reading and eye-tracking data end up as an [`RtCorpus`]:
//! an ordered list of [`WordRecord`]s grouped into contiguous sentences, each
//! carrying per-subject reading times and their filtered means.

mod fixation;
mod table;
mod text;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fixation::{aggregate_fixations, compute_go_past, go_past_times, subject_measures, RawFixation};
pub use table::{
    build_eye_tracking_corpus, read_fixations, read_spr, read_text_table, read_word_table, write_word_table, TextRow,
    WordTable,
};
pub use text::{
    ends_sentence, is_all_punctuation, is_clause_final, is_punctuation, mark_clause_final, normalize_text,
    normalize_word, split_punctuation, CLAUSE_FINAL_PUNCTUATION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    Spr,
    EyeTracking,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Spr => "spr",
            Modality::EyeTracking => "eye-tracking",
        })
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spr" => Ok(Modality::Spr),
            "eye-tracking" | "et" => Ok(Modality::EyeTracking),
            other => Err(Error::Argument(format!("unknown modality `{other}`"))),
        }
    }
}

/// Which reading-time measure a computation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    /// Self-paced reading latency, or total fixation time for eye-tracking.
    Rt,
    /// Go-past (regression path) time; eye-tracking only.
    GoPast,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Rt => "rt",
            Measure::GoPast => "go-past",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rt" => Ok(Measure::Rt),
            "go-past" => Ok(Measure::GoPast),
            other => Err(Error::Argument(format!("unknown measure `{other}`"))),
        }
    }
}

/// One word token of a reading-time corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRecord {
    pub text: String,
    pub char_len: usize,
    pub sentence_id: String,
    pub position_in_sentence: usize,
    pub is_clause_final: bool,
    /// Milliseconds per subject: SPR latency or total fixation time.
    pub rt_by_subject: BTreeMap<String, f64>,
    /// Milliseconds per subject; empty for SPR.
    pub go_past_by_subject: BTreeMap<String, f64>,
    pub mean_rt: Option<f64>,
    pub mean_go_past: Option<f64>,
    /// Subjects whose RT for this word survived outlier filtering.
    pub n_subjects_retained: usize,
}

impl WordRecord {
    pub fn new(text: impl Into<String>, sentence_id: impl Into<String>, position_in_sentence: usize) -> Self {
        let text = text.into();
        Self {
            char_len: text.chars().count(),
            is_clause_final: is_clause_final(&text),
            text,
            sentence_id: sentence_id.into(),
            position_in_sentence,
            rt_by_subject: BTreeMap::new(),
            go_past_by_subject: BTreeMap::new(),
            mean_rt: None,
            mean_go_past: None,
            n_subjects_retained: 0,
        }
    }

    pub fn mean(&self, measure: Measure) -> Option<f64> {
        match measure {
            Measure::Rt => self.mean_rt,
            Measure::GoPast => self.mean_go_past,
        }
    }

    fn by_subject(&self, measure: Measure) -> &BTreeMap<String, f64> {
        match measure {
            Measure::Rt => &self.rt_by_subject,
            Measure::GoPast => &self.go_past_by_subject,
        }
    }
}

/// An ordered, sentence-segmented list of words with reading times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtCorpus {
    name: String,
    modality: Modality,
    words: Vec<WordRecord>,
    sentences: Vec<Range<usize>>,
}

impl RtCorpus {
    /// Builds a corpus, checking that sentence ids form contiguous runs with
    /// positions `0..len` and that the derived fields match each word's text.
    pub fn new(name: impl Into<String>, modality: Modality, words: Vec<WordRecord>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::Validation("corpus has no words".into()));
        }
        let mut sentences: Vec<Range<usize>> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, w) in words.iter().enumerate() {
            if w.char_len != w.text.chars().count() || w.is_clause_final != is_clause_final(&w.text) {
                return Err(Error::Validation(format!(
                    "word {i} (`{}`): char_len or clause-final flag does not match its text",
                    w.text
                )));
            }
            if w.text.is_empty() || w.text.contains(char::is_whitespace) {
                return Err(Error::Validation(format!("word {i} is empty or contains whitespace")));
            }
            let continues = i > 0 && words[i - 1].sentence_id == w.sentence_id;
            if continues {
                sentences.last_mut().expect("open sentence").end = i + 1;
            } else {
                if !seen.insert(w.sentence_id.as_str()) {
                    return Err(Error::Validation(format!(
                        "sentence `{}` is not contiguous (word {i})",
                        w.sentence_id
                    )));
                }
                sentences.push(i..i + 1);
            }
            let start = sentences.last().expect("open sentence").start;
            if w.position_in_sentence != i - start {
                return Err(Error::Validation(format!(
                    "sentence `{}`: expected position {}, found {}",
                    w.sentence_id,
                    i - start,
                    w.position_in_sentence
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            modality,
            words,
            sentences,
        })
    }

    /// Convenience constructor from pre-split sentences, with sentence ids
    /// `0, 1, 2, ...`.
    pub fn from_sentences<S: AsRef<str>>(
        name: impl Into<String>,
        modality: Modality,
        sentences: &[Vec<S>],
    ) -> Result<Self> {
        let words = sentences
            .iter()
            .enumerate()
            .flat_map(|(s, words)| {
                words
                    .iter()
                    .enumerate()
                    .map(move |(p, w)| WordRecord::new(w.as_ref(), s.to_string(), p))
            })
            .collect();
        Self::new(name, modality, words)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn words(&self) -> &[WordRecord] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Word index ranges of each sentence, in corpus order.
    pub fn sentences(&self) -> &[Range<usize>] {
        &self.sentences
    }

    /// Index range of the sentence containing word `index`.
    pub fn sentence_of(&self, index: usize) -> Range<usize> {
        let start = index - self.words[index].position_in_sentence;
        let s = self
            .sentences
            .binary_search_by_key(&start, |r| r.start)
            .expect("sentence ranges cover every word");
        self.sentences[s].clone()
    }

    pub fn into_words(self) -> Vec<WordRecord> {
        self.words
    }
}

/// Retained-value mask under a log-normal 3-sigma rule.
///
/// Values are log-transformed; a value is kept iff its log lies within three
/// (population) standard deviations of the mean log. A zero spread keeps
/// everything. Scale-invariant, since multiplying every value by `c > 0`
/// only shifts the logs.
pub fn filter_outliers(values: &[f64]) -> Result<Vec<bool>> {
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Validation(format!("reading time {bad} is not positive")));
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let sd = (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(logs.iter().map(|l| (l - mean).abs() <= 3.0 * sd).collect())
}

/// Counts from [`average_across_subjects`], per measure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub values_pooled: usize,
    pub values_dropped: usize,
    /// Words left without any retained value (excluded downstream).
    pub words_without_value: usize,
}

/// Outcome of [`average_across_subjects`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingReport {
    pub rt: OutlierReport,
    pub go_past: Option<OutlierReport>,
}

fn average_measure(words: &mut [WordRecord], measure: Measure) -> Result<OutlierReport> {
    let pooled: Vec<f64> = words
        .iter()
        .flat_map(|w| w.by_subject(measure).values().copied())
        .collect();
    let keep = filter_outliers(&pooled)?;
    let mut report = OutlierReport {
        values_pooled: pooled.len(),
        values_dropped: keep.iter().filter(|k| !**k).count(),
        words_without_value: 0,
    };
    let mut cursor = 0;
    for w in words.iter_mut() {
        let values = w.by_subject(measure);
        let n = values.len();
        let retained: Vec<f64> = values
            .values()
            .zip(&keep[cursor..cursor + n])
            .filter(|(_, k)| **k)
            .map(|(v, _)| *v)
            .collect();
        cursor += n;
        let mean = if retained.is_empty() {
            report.words_without_value += 1;
            None
        } else {
            Some(retained.iter().sum::<f64>() / retained.len() as f64)
        };
        match measure {
            Measure::Rt => {
                w.mean_rt = mean;
                w.n_subjects_retained = retained.len();
            }
            Measure::GoPast => w.mean_go_past = mean,
        }
    }
    Ok(report)
}

/// Fills `mean_rt` (and `mean_go_past` for eye-tracking) with the mean of
/// each word's per-subject values that survive [`filter_outliers`].
///
/// The outlier fit is global: all per-subject values of the corpus for one
/// measure are pooled into a single log-normal fit.
pub fn average_across_subjects(corpus: &RtCorpus) -> Result<(RtCorpus, AveragingReport)> {
    if corpus.is_empty() {
        return Err(Error::Validation("cannot average an empty corpus".into()));
    }
    let mut words = corpus.words.clone();
    let rt = average_measure(&mut words, Measure::Rt)?;
    let go_past = match corpus.modality {
        Modality::EyeTracking => Some(average_measure(&mut words, Measure::GoPast)?),
        Modality::Spr => None,
    };
    let averaged = RtCorpus {
        words,
        ..corpus.clone()
    };
    Ok((averaged, AveragingReport { rt, go_past }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_z_scores(values: &[f64]) -> Vec<f64> {
        let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let n = logs.len() as f64;
        let m = logs.iter().sum::<f64>() / n;
        let sd = (logs.iter().map(|l| (l - m) * (l - m)).sum::<f64>() / n).sqrt();
        logs.iter().map(|l| (l - m) / sd).collect()
    }

    #[test]
    fn five_values_cannot_reach_three_sigma() {
        // With n points the largest attainable |z| is sqrt(n - 1) = 2 here,
        // so the 10000 ms value stays.
        let values = [100.0, 110.0, 105.0, 90.0, 10000.0];
        let z = log_z_scores(&values);
        assert!((z[4] - 1.998_687_860).abs() < 1e-8, "{z:?}");
        assert_eq!(filter_outliers(&values).unwrap(), [true; 5]);
    }

    #[test]
    fn extreme_value_in_a_larger_sample_is_dropped() {
        let mut values: Vec<f64> = (0..29).map(|i| 90.0 + i as f64).collect();
        values.push(10000.0);
        let mask = filter_outliers(&values).unwrap();
        assert!(!mask[29]);
        assert!(mask[..29].iter().all(|k| *k));
    }

    #[test]
    fn zero_spread_and_singletons_are_retained() {
        assert_eq!(filter_outliers(&[200.0, 200.0, 200.0]).unwrap(), [true; 3]);
        assert_eq!(filter_outliers(&[150.0]).unwrap(), [true]);
    }

    #[test]
    fn non_positive_values_are_rejected() {
        assert!(matches!(filter_outliers(&[100.0, 0.0]), Err(Error::Validation(_))));
        assert!(filter_outliers(&[-3.0]).is_err());
    }

    #[test]
    fn outlier_mask_is_scale_invariant() {
        let mut values: Vec<f64> = (0..40).map(|i| 200.0 + 7.0 * i as f64).collect();
        values.push(9000.0);
        values.push(12.0);
        let scaled: Vec<f64> = values.iter().map(|v| v * 3.5).collect();
        assert_eq!(filter_outliers(&values).unwrap(), filter_outliers(&scaled).unwrap());
    }

    fn spr_corpus(rts: &[&[(&str, f64)]]) -> RtCorpus {
        let words = rts
            .iter()
            .enumerate()
            .map(|(i, subjects)| {
                let mut w = WordRecord::new(format!("w{i}"), "0", i);
                w.rt_by_subject = subjects.iter().map(|(s, v)| (s.to_string(), *v)).collect();
                w
            })
            .collect();
        RtCorpus::new("toy", Modality::Spr, words).unwrap()
    }

    #[test]
    fn mean_of_two_retained_values() {
        let corpus = spr_corpus(&[&[("s1", 300.0), ("s2", 500.0)]]);
        let (avg, report) = average_across_subjects(&corpus).unwrap();
        assert_eq!(avg.words()[0].mean_rt, Some(400.0));
        assert_eq!(avg.words()[0].n_subjects_retained, 2);
        assert_eq!(report.rt.values_dropped, 0);
    }

    #[test]
    fn filter_then_mean_matches_hand_oracle() {
        // 31 ordinary values over three words plus one 20 s outlier on w1.
        let mut w0: Vec<(String, f64)> = Vec::new();
        let mut w1 = Vec::new();
        let mut w2 = Vec::new();
        for s in 0..11 {
            w0.push((format!("s{s:02}"), 250.0 + 10.0 * s as f64));
            w1.push((format!("s{s:02}"), 300.0 + 5.0 * s as f64));
            if s < 9 {
                w2.push((format!("s{s:02}"), 280.0 + 3.0 * s as f64));
            }
        }
        w1.push(("s99".to_string(), 20000.0));
        let as_refs = |v: &Vec<(String, f64)>| v.iter().map(|(s, x)| (s.clone(), *x)).collect::<BTreeMap<_, _>>();
        let mut words = Vec::new();
        for (i, w) in [&w0, &w1, &w2].into_iter().enumerate() {
            let mut rec = WordRecord::new(format!("w{i}"), "0", i);
            rec.rt_by_subject = as_refs(w);
            words.push(rec);
        }
        let corpus = RtCorpus::new("toy", Modality::Spr, words).unwrap();

        // Oracle: z of the outlier against the pooled log sample, then plain means.
        let pooled: Vec<f64> = [&w0, &w1, &w2].iter().flat_map(|w| w.iter().map(|(_, v)| *v)).collect();
        let z = log_z_scores(&pooled);
        assert!(z
            .iter()
            .enumerate()
            .all(|(i, z)| (z.abs() > 3.0) == (pooled[i] == 20000.0)));
        let expect = [
            (250..=350).step_by(10).sum::<i32>() as f64 / 11.0,
            (300..=350).step_by(5).sum::<i32>() as f64 / 11.0,
            (280..=304).step_by(3).sum::<i32>() as f64 / 9.0,
        ];

        let (avg, report) = average_across_subjects(&corpus).unwrap();
        assert_eq!(report.rt.values_dropped, 1);
        for (w, e) in avg.words().iter().zip(expect) {
            assert!((w.mean_rt.unwrap() - e).abs() < 1e-9);
        }
        assert_eq!(avg.words()[1].n_subjects_retained, 11);

        // Idempotent once the outlier is gone.
        let mut refiltered = avg.clone().into_words();
        refiltered[1].rt_by_subject.remove("s99");
        let again = RtCorpus::new("toy", Modality::Spr, refiltered).unwrap();
        let (avg2, report2) = average_across_subjects(&again).unwrap();
        assert_eq!(report2.rt.values_dropped, 0);
        for (a, b) in avg.words().iter().zip(avg2.words()) {
            assert_eq!(a.mean_rt, b.mean_rt);
        }
    }

    #[test]
    fn word_with_everything_filtered_has_no_mean() {
        let mut rows: Vec<Vec<(String, f64)>> = (0..30).map(|i| vec![(format!("s{i}"), 200.0 + i as f64)]).collect();
        rows.push(vec![("s0".into(), 50000.0)]);
        let words = rows
            .iter()
            .enumerate()
            .map(|(i, subjects)| {
                let mut w = WordRecord::new(format!("w{i}"), "0", i);
                w.rt_by_subject = subjects.iter().cloned().collect();
                w
            })
            .collect();
        let corpus = RtCorpus::new("toy", Modality::Spr, words).unwrap();
        let (avg, report) = average_across_subjects(&corpus).unwrap();
        assert_eq!(avg.words()[30].mean_rt, None);
        assert_eq!(avg.words()[30].n_subjects_retained, 0);
        assert_eq!(report.rt.words_without_value, 1);
    }

    #[test]
    fn corpus_invariants_are_checked() {
        let ok = RtCorpus::from_sentences("c", Modality::Spr, &[vec!["The", "end."], vec!["Next", "one."]]).unwrap();
        assert_eq!(ok.sentences(), &[0..2, 2..4]);
        assert_eq!(ok.sentence_of(3), 2..4);

        let mut words = ok.clone().into_words();
        words[3].position_in_sentence = 5;
        assert!(RtCorpus::new("c", Modality::Spr, words).is_err());

        let mut words = ok.clone().into_words();
        words.swap(1, 2);
        assert!(RtCorpus::new("c", Modality::Spr, words).is_err());

        assert!(RtCorpus::new("c", Modality::Spr, Vec::new()).is_err());
    }

    #[test]
    fn every_word_is_final_or_medial() {
        let c = RtCorpus::from_sentences("c", Modality::Spr, &[vec!["Hi,", "there", "friend."]]).unwrap();
        let flags: Vec<bool> = c.words().iter().map(|w| w.is_clause_final).collect();
        assert_eq!(flags, mark_clause_final(&["Hi,", "there", "friend."]));
        assert_eq!(flags, [true, false, true]);
    }
}
