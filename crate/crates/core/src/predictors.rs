//! Per-word regression features.
//!
//! The baseline predictors for a target word `w_t` are its surprisal,
//! unigram log-frequency, character length and the length × log-frequency
//! interaction, the same four quantities for `w_{t-1}` (spill-over), and for
//! self-paced reading the surprisal of `w_{t-2}`. The augmented design adds
//! one context-information predictor,
//!
//! ```text
//! INF^(k)(context) = Σ_t s(w_t)^k,    k >= 0,  0^0 = 1
//! ```
//!
//! computed over the target's context (by default the words preceding it in
//! its sentence). `k = 0` counts the context words, `k = 1` sums their
//! surprisal and larger `k` weights surprisal peaks more heavily.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Measure, Modality, RtCorpus};
use crate::error::{Error, Result};
use crate::surprisal::SurprisalAnnotation;
use crate::tsv::write_preamble;

/// `Σ s^k` over `surprisals`.
///
/// ```
/// use wrapup::predictors::inf_k;
/// let s = [1.0, 2.0, 3.0];
/// assert_eq!(inf_k(&s, 0.0).unwrap(), 3.0);
/// assert_eq!(inf_k(&s, 1.0).unwrap(), 6.0);
/// assert_eq!(inf_k(&s, 2.0).unwrap(), 14.0);
/// ```
pub fn inf_k(surprisals: &[f64], k: f64) -> Result<f64> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::Argument(format!("exponent k must be finite and >= 0, got {k}")));
    }
    Ok(surprisals.iter().map(|s| s.powf(k)).sum())
}

/// Which words count as the context of a target for `INF^(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextScope {
    /// Words before the target in its sentence.
    #[default]
    SentenceSoFar,
    /// Every other word of the target's sentence, before and after it.
    WholeSentence,
    /// Words before the target plus the target itself.
    IncludeTarget,
}

impl FromStr for ContextScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sentence-so-far" => Ok(ContextScope::SentenceSoFar),
            "whole-sentence" => Ok(ContextScope::WholeSentence),
            "include-target" => Ok(ContextScope::IncludeTarget),
            other => Err(Error::Argument(format!("unknown context scope `{other}`"))),
        }
    }
}

/// Surprisals of the context words of word `target`.
pub fn context_surprisals(
    corpus: &RtCorpus,
    annotation: &SurprisalAnnotation,
    target: usize,
    scope: ContextScope,
) -> Vec<f64> {
    let sentence = corpus.sentence_of(target);
    let values = &annotation.values;
    match scope {
        ContextScope::SentenceSoFar => values[sentence.start..target].to_vec(),
        ContextScope::IncludeTarget => values[sentence.start..=target].to_vec(),
        ContextScope::WholeSentence => values[sentence.start..target]
            .iter()
            .chain(&values[target + 1..sentence.end])
            .copied()
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionClass {
    ClauseFinal,
    SentenceMedial,
}

impl fmt::Display for PositionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PositionClass::ClauseFinal => "clause-final",
            PositionClass::SentenceMedial => "medial",
        })
    }
}

/// Which position classes a design includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionSelect {
    ClauseFinal,
    Medial,
    Both,
}

impl PositionSelect {
    pub fn admits(self, class: PositionClass) -> bool {
        matches!(
            (self, class),
            (PositionSelect::Both, _)
                | (PositionSelect::ClauseFinal, PositionClass::ClauseFinal)
                | (PositionSelect::Medial, PositionClass::SentenceMedial)
        )
    }

    pub fn classes(self) -> &'static [PositionClass] {
        match self {
            PositionSelect::ClauseFinal => &[PositionClass::ClauseFinal],
            PositionSelect::Medial => &[PositionClass::SentenceMedial],
            PositionSelect::Both => &[PositionClass::ClauseFinal, PositionClass::SentenceMedial],
        }
    }
}

impl FromStr for PositionSelect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clause-final" => Ok(PositionSelect::ClauseFinal),
            "medial" => Ok(PositionSelect::Medial),
            "both" => Ok(PositionSelect::Both),
            other => Err(Error::Argument(format!("unknown position class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseTransform {
    /// Natural log of the mean RT.
    #[default]
    Log,
    /// Mean RT in milliseconds.
    Raw,
}

impl ResponseTransform {
    pub fn apply(self, ms: f64) -> f64 {
        match self {
            ResponseTransform::Log => ms.ln(),
            ResponseTransform::Raw => ms,
        }
    }
}

impl FromStr for ResponseTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(ResponseTransform::Log),
            "raw" => Ok(ResponseTransform::Raw),
            other => Err(Error::Argument(format!("unknown response transform `{other}`"))),
        }
    }
}

/// Non-negative exponents to sweep, sorted, always containing 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KGrid(Vec<f64>);

impl KGrid {
    pub fn new(mut ks: Vec<f64>) -> Result<Self> {
        if let Some(bad) = ks.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(Error::Argument(format!(
                "k grid value {bad} is not a finite non-negative number"
            )));
        }
        ks.sort_by(f64::total_cmp);
        ks.dedup();
        if !ks.contains(&0.0) || !ks.contains(&1.0) {
            return Err(Error::Argument(
                "k grid must contain the reference points 0 and 1".into(),
            ));
        }
        Ok(Self(ks))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for KGrid {
    fn default() -> Self {
        Self(vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
    }
}

impl TryFrom<Vec<f64>> for KGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<KGrid> for Vec<f64> {
    fn from(g: KGrid) -> Self {
        g.0
    }
}

impl FromStr for KGrid {
    type Err = Error;

    /// Comma-separated exponents, e.g. `0,0.5,1,2`.
    fn from_str(s: &str) -> Result<Self> {
        let ks = s
            .split(',')
            .map(|k| {
                k.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Argument(format!("bad k value `{k}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ks)
    }
}

/// Names of the baseline predictors, in column order.
pub fn baseline_feature_names(modality: Modality) -> Vec<&'static str> {
    let mut names = vec![
        "surprisal",
        "logfreq",
        "length",
        "length_x_logfreq",
        "prev_surprisal",
        "prev_logfreq",
        "prev_length",
        "prev_length_x_logfreq",
    ];
    if modality == Modality::Spr {
        names.push("prev2_surprisal");
    }
    names
}

/// One target word's response and predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    /// Index of the target word in the corpus.
    pub word_index: usize,
    pub sentence_id: String,
    pub position_class: PositionClass,
    pub response: f64,
    pub baseline: Vec<f64>,
    /// Surprisals of the target's context words, from which `INF^(k)` is
    /// computed for any `k`.
    pub context: Vec<f64>,
    /// `INF^(k)` of `context`; present only in augmented designs.
    pub inf_k: Option<f64>,
}

impl FeatureRow {
    /// This row with `inf_k` computed at exponent `k`.
    pub fn with_k(&self, k: f64) -> Result<Self> {
        Ok(Self {
            inf_k: Some(inf_k(&self.context, k)?),
            ..self.clone()
        })
    }
}

/// Annotations a design is built from; all must cover the corpus.
#[derive(Debug, Clone, Copy)]
pub struct DesignInputs<'a> {
    pub corpus: &'a RtCorpus,
    /// Per-word surprisal for the baseline predictors.
    pub surprisal: &'a SurprisalAnnotation,
    /// Per-word surprisal summed into `INF^(k)`.
    pub context_surprisal: &'a SurprisalAnnotation,
    pub logfreq: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignOptions {
    pub position: PositionSelect,
    pub measure: Measure,
    pub response: ResponseTransform,
    pub scope: ContextScope,
    /// Exponent of the augmented predictor, if any.
    pub k: Option<f64>,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            position: PositionSelect::ClauseFinal,
            measure: Measure::Rt,
            response: ResponseTransform::Log,
            scope: ContextScope::SentenceSoFar,
            k: None,
        }
    }
}

/// Builds feature rows for the words selected by `opts`.
///
/// A word gets a row only if it belongs to a requested position class, has
/// a full spill-over window (one preceding word for eye-tracking, two for
/// self-paced reading) and a mean for the requested measure. Predictors are
/// left unstandardized; the regression fits standardize them.
pub fn build_design(inputs: &DesignInputs<'_>, opts: &DesignOptions) -> Result<Vec<FeatureRow>> {
    let corpus = inputs.corpus;
    let n = corpus.len();
    for (what, len) in [
        ("surprisal", inputs.surprisal.len()),
        ("context surprisal", inputs.context_surprisal.len()),
        ("log-frequency", inputs.logfreq.len()),
    ] {
        if len != n {
            return Err(Error::Validation(format!(
                "{what} annotation has {len} values for {n} words"
            )));
        }
    }
    if opts.measure == Measure::GoPast && corpus.modality() != Modality::EyeTracking {
        return Err(Error::Argument(
            "go-past times exist only for eye-tracking corpora".into(),
        ));
    }
    if let Some(k) = opts.k {
        inf_k(&[], k)?;
    }
    let lag = match corpus.modality() {
        Modality::Spr => 2,
        Modality::EyeTracking => 1,
    };

    let words = corpus.words();
    let class_of = |i: usize| {
        if words[i].is_clause_final {
            PositionClass::ClauseFinal
        } else {
            PositionClass::SentenceMedial
        }
    };
    let candidates: Vec<usize> = (0..n).filter(|&i| opts.position.admits(class_of(i))).collect();
    if candidates.is_empty() {
        return Err(Error::EmptyDesign {
            stage: "position class",
        });
    }
    let candidates: Vec<usize> = candidates.into_iter().filter(|&i| i >= lag).collect();
    if candidates.is_empty() {
        return Err(Error::EmptyDesign {
            stage: "spill-over window",
        });
    }
    let candidates: Vec<(usize, f64)> = candidates
        .into_iter()
        .filter_map(|i| words[i].mean(opts.measure).map(|rt| (i, rt)))
        .collect();
    if candidates.is_empty() {
        return Err(Error::EmptyDesign { stage: "reading time" });
    }

    let s = &inputs.surprisal.values;
    let f = inputs.logfreq;
    let len = |i: usize| words[i].char_len as f64;
    candidates
        .into_iter()
        .map(|(i, rt)| {
            let mut baseline = vec![
                s[i],
                f[i],
                len(i),
                len(i) * f[i],
                s[i - 1],
                f[i - 1],
                len(i - 1),
                len(i - 1) * f[i - 1],
            ];
            if lag == 2 {
                baseline.push(s[i - 2]);
            }
            let context = context_surprisals(corpus, inputs.context_surprisal, i, opts.scope);
            let inf = opts.k.map(|k| inf_k(&context, k)).transpose()?;
            Ok(FeatureRow {
                word_index: i,
                sentence_id: words[i].sentence_id.clone(),
                position_class: class_of(i),
                response: opts.response.apply(rt),
                baseline,
                context,
                inf_k: inf,
            })
        })
        .collect()
}

/// Writes rows as a TSV with named columns.
pub fn write_design_tsv(
    rows: &[FeatureRow],
    modality: Modality,
    mut out: impl Write,
    preamble: &[String],
) -> Result<()> {
    write_preamble(&mut out, preamble)?;
    let names = baseline_feature_names(modality);
    let with_inf = rows.iter().any(|r| r.inf_k.is_some());
    write!(out, "word_index\tsentence_id\tposition_class\tresponse")?;
    for n in &names {
        write!(out, "\t{n}")?;
    }
    if with_inf {
        write!(out, "\tinf_k")?;
    }
    writeln!(out)?;
    for r in rows {
        write!(
            out,
            "{}\t{}\t{}\t{}",
            r.word_index, r.sentence_id, r.position_class, r.response
        )?;
        for v in &r.baseline {
            write!(out, "\t{v}")?;
        }
        if with_inf {
            write!(out, "\t{}", crate::tsv::fmt_optional(r.inf_k))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surprisal::{Punctuation, SurprisalSource};
    use proptest::prelude::*;

    #[test]
    fn inf_examples() {
        let s = [1.0, 2.0, 3.0];
        assert_eq!(inf_k(&s, 0.0).unwrap(), 3.0);
        assert_eq!(inf_k(&s, 1.0).unwrap(), 6.0);
        assert_eq!(inf_k(&s, 2.0).unwrap(), 14.0);
        assert_eq!(inf_k(&[0.0, 0.0], 0.0).unwrap(), 2.0);
        assert_eq!(inf_k(&[], 0.0).unwrap(), 0.0);
        assert_eq!(inf_k(&[], 2.0).unwrap(), 0.0);
        assert!(matches!(inf_k(&s, -1.0), Err(Error::Argument(_))));
        assert!(inf_k(&s, f64::NAN).is_err());
    }

    #[test]
    fn k_grid_validation() {
        assert!(KGrid::new(vec![2.0]).is_err());
        assert!(KGrid::new(vec![0.0, 1.0, -1.0]).is_err());
        let g: KGrid = "2, 1,0,1".parse().unwrap();
        assert_eq!(g.values(), &[0.0, 1.0, 2.0]);
        assert_eq!(KGrid::default().values().len(), 7);
    }

    fn toy(modality: Modality) -> (RtCorpus, SurprisalAnnotation, Vec<f64>) {
        let sentences = vec![
            vec!["One", "two", "three,", "four", "five."],
            vec![
                "Six", "seven", "eight", "nine", "ten", "eleven", "twelve", "thirteen", "fourteen", "end.",
            ],
        ];
        let corpus = RtCorpus::from_sentences("toy", modality, &sentences).unwrap();
        let mut words = corpus.into_words();
        for (i, w) in words.iter_mut().enumerate() {
            if i != 6 {
                w.mean_rt = Some(200.0 + 10.0 * i as f64);
            }
        }
        let corpus = RtCorpus::new("toy", modality, words).unwrap();
        let s: Vec<f64> = (0..15).map(|i| 0.5 + i as f64 * 0.25).collect();
        let ann = SurprisalAnnotation::new(SurprisalSource::Imported("m".into()), s, Punctuation::Include).unwrap();
        let f: Vec<f64> = (0..15).map(|i| -3.0 - i as f64 * 0.1).collect();
        (corpus, ann, f)
    }

    #[test]
    fn context_slices() {
        let (corpus, ann, _) = toy(Modality::Spr);
        assert!(context_surprisals(&corpus, &ann, 5, ContextScope::SentenceSoFar).is_empty());
        assert_eq!(
            context_surprisals(&corpus, &ann, 3, ContextScope::SentenceSoFar),
            &ann.values[0..3]
        );
        let final_ctx = context_surprisals(&corpus, &ann, 14, ContextScope::SentenceSoFar);
        assert_eq!(final_ctx.len(), 9);
        assert_eq!(final_ctx, &ann.values[5..14]);
        assert_eq!(
            context_surprisals(&corpus, &ann, 3, ContextScope::IncludeTarget).len(),
            4
        );
        let whole = context_surprisals(&corpus, &ann, 2, ContextScope::WholeSentence);
        assert_eq!(whole, [ann.values[0], ann.values[1], ann.values[3], ann.values[4]]);
    }

    #[test]
    fn design_rows_and_widths() {
        let (corpus, ann, f) = toy(Modality::Spr);
        let inputs = DesignInputs {
            corpus: &corpus,
            surprisal: &ann,
            context_surprisal: &ann,
            logfreq: &f,
        };
        let opts = DesignOptions {
            k: Some(2.0),
            ..DesignOptions::default()
        };
        let rows = build_design(&inputs, &opts).unwrap();
        let targets: Vec<usize> = rows.iter().map(|r| r.word_index).collect();
        assert_eq!(targets, [2, 4, 14]);
        assert!(rows.iter().all(|r| r.baseline.len() == 9));
        // Word 14 ("end.") in sentence 2: s = 0.5 + 0.25 i for i = 5..14.
        let expect: f64 = (5..14).map(|i| (0.5 + 0.25 * i as f64).powi(2)).sum();
        assert!((rows[2].inf_k.unwrap() - expect).abs() < 1e-12);
        assert!((rows[2].response - 340.0f64.ln()).abs() < 1e-15);
        let b = &rows[2].baseline;
        assert_eq!(b[0], ann.values[14]);
        assert_eq!(b[2], 4.0);
        assert_eq!(b[3], 4.0 * f[14]);
        assert_eq!(b[6], 8.0);
        assert_eq!(b[8], ann.values[12]);

        let (et, ann, f) = toy(Modality::EyeTracking);
        let inputs = DesignInputs {
            corpus: &et,
            surprisal: &ann,
            context_surprisal: &ann,
            logfreq: &f,
        };
        let medial = build_design(
            &inputs,
            &DesignOptions {
                position: PositionSelect::Medial,
                ..DesignOptions::default()
            },
        )
        .unwrap();
        assert!(medial.iter().all(|r| r.baseline.len() == 8 && r.inf_k.is_none()));
        // Word 0 lacks a window, word 6 lacks an RT.
        assert_eq!(medial.len(), 12 - 2);
        let finals = build_design(&inputs, &DesignOptions::default()).unwrap();
        assert!(finals.len() + medial.len() <= 14);
    }

    #[test]
    fn empty_designs_name_the_filter() {
        let (corpus, ann, f) = toy(Modality::Spr);
        let inputs = DesignInputs {
            corpus: &corpus,
            surprisal: &ann,
            context_surprisal: &ann,
            logfreq: &f,
        };
        let opts = DesignOptions {
            measure: Measure::GoPast,
            ..DesignOptions::default()
        };
        assert!(matches!(build_design(&inputs, &opts), Err(Error::Argument(_))));

        let tiny = RtCorpus::from_sentences("t", Modality::Spr, &[vec!["Hi."]]).unwrap();
        let ann1 =
            SurprisalAnnotation::new(SurprisalSource::Imported("m".into()), vec![1.0], Punctuation::Include).unwrap();
        let inputs = DesignInputs {
            corpus: &tiny,
            surprisal: &ann1,
            context_surprisal: &ann1,
            logfreq: &[0.0],
        };
        assert!(matches!(
            build_design(&inputs, &DesignOptions::default()),
            Err(Error::EmptyDesign {
                stage: "spill-over window"
            })
        ));
        let opts = DesignOptions {
            position: PositionSelect::Medial,
            ..DesignOptions::default()
        };
        assert!(matches!(
            build_design(&inputs, &opts),
            Err(Error::EmptyDesign {
                stage: "position class"
            })
        ));
    }

    #[test]
    fn design_dump_has_named_columns() {
        let (corpus, ann, f) = toy(Modality::Spr);
        let inputs = DesignInputs {
            corpus: &corpus,
            surprisal: &ann,
            context_surprisal: &ann,
            logfreq: &f,
        };
        let rows = build_design(
            &inputs,
            &DesignOptions {
                k: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_design_tsv(&rows, Modality::Spr, &mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.ends_with("prev2_surprisal\tinf_k"));
        assert_eq!(text.lines().count(), 4);
    }

    proptest! {
        #[test]
        fn zero_exponent_counts(s in prop::collection::vec(0.0f64..20.0, 0..30)) {
            prop_assert_eq!(inf_k(&s, 0.0).unwrap(), s.len() as f64);
        }

        #[test]
        fn additive_over_concatenation(
            a in prop::collection::vec(0.0f64..20.0, 0..15),
            b in prop::collection::vec(0.0f64..20.0, 0..15),
            k in 0.0f64..4.0,
        ) {
            let joined: Vec<f64> = a.iter().chain(&b).copied().collect();
            let lhs = inf_k(&joined, k).unwrap();
            let rhs = inf_k(&a, k).unwrap() + inf_k(&b, k).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
        }

        #[test]
        fn permutation_invariant(s in prop::collection::vec(0.0f64..20.0, 0..20), k in 0.0f64..4.0, rot in 0usize..20) {
            let mut p = s.clone();
            if !p.is_empty() {
                let len = p.len();
                p.rotate_left(rot % len);
                p.reverse();
            }
            let x = inf_k(&s, k).unwrap();
            let y = inf_k(&p, k).unwrap();
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }

        #[test]
        fn constant_surprisal_closed_form(c in 0.0f64..15.0, t in 0usize..40) {
            let s = vec![c; t];
            for k in [0.0, 0.5, 1.0, 2.0, 3.0] {
                let closed = t as f64 * c.powf(k);
                let got = inf_k(&s, k).unwrap();
                prop_assert!((got - closed).abs() <= 1e-12 * closed.max(1.0));
            }
        }
    }
}
