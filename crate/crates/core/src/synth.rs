//! Synthetic reading-time corpora with a known generating process.
//!
//! Every word gets a surprisal drawn from a gamma distribution, a
//! log-frequency and a length that both correlate with it, and a log
//! reading time that is linear in the baseline predictors plus Gaussian
//! noise. Sentence-final words (the only clause-final words) can also carry
//! a `γ · INF^(k)` term over the words before them and a constant wrap-up
//! delay in milliseconds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Modality, RtCorpus};
use crate::error::{Error, Result};
use crate::predictors::inf_k;
use crate::surprisal::{Punctuation, SurprisalAnnotation, SurprisalSource};

/// Log-RT coefficients on the baseline predictors, in the order of
/// [`crate::predictors::baseline_feature_names`].
pub const BASELINE_COEFFICIENTS: [f64; 9] = [0.03, -0.01, 0.01, 0.001, 0.015, -0.005, 0.005, 0.0005, 0.01];

/// Intercept of the log-RT model, about 245 ms.
pub const INTERCEPT: f64 = 5.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub modality: Modality,
    /// Coefficient of `INF^(k_true)` in the log RT of final words.
    pub gamma: f64,
    pub k_true: f64,
    /// Standard deviation of the log-RT noise.
    pub noise_sd: f64,
    /// Milliseconds added to the RT of final words.
    pub wrapup_ms: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_sentences: 1000,
            min_len: 6,
            max_len: 20,
            modality: Modality::Spr,
            gamma: 0.0,
            k_true: 2.0,
            noise_sd: 0.1,
            wrapup_ms: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    /// Subject-averaged corpus; `mean_rt` is set for every word.
    pub corpus: RtCorpus,
    pub surprisal: SurprisalAnnotation,
    pub logfreq: Vec<f64>,
}

const LETTERS: &[u8] = b"etaoinshrdlcumwfgypbvk";

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    if cfg.n_sentences == 0 || cfg.min_len < 3 || cfg.max_len < cfg.min_len {
        return Err(Error::Argument(format!(
            "bad synthetic corpus shape: {} sentences of {}..={} words",
            cfg.n_sentences, cfg.min_len, cfg.max_len
        )));
    }
    if cfg.noise_sd.is_nan() || cfg.noise_sd < 0.0 {
        return Err(Error::Argument(format!("noise sd must be >= 0, got {}", cfg.noise_sd)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gamma = Gamma::new(2.0, 1.5).expect("valid gamma parameters");
    let unit = Normal::new(0.0, 1.0).expect("valid normal parameters");

    let mut sentences = Vec::with_capacity(cfg.n_sentences);
    let mut s = Vec::new();
    let mut f = Vec::new();
    for _ in 0..cfg.n_sentences {
        let len = rng.random_range(cfg.min_len..=cfg.max_len);
        let mut words = Vec::with_capacity(len);
        for t in 0..len {
            let si: f64 = gamma.sample(&mut rng);
            let fi = -4.0 - 0.8 * si + unit.sample(&mut rng);
            let letters = (2.0 + 0.6 * si + 1.5 * unit.sample(&mut rng)).round().clamp(1.0, 18.0) as usize;
            let mut w: String = (0..letters)
                .map(|_| LETTERS[rng.random_range(0..LETTERS.len())] as char)
                .collect();
            if t + 1 == len {
                w.push('.');
            }
            words.push(w);
            s.push(si);
            f.push(fi);
        }
        sentences.push(words);
    }

    let corpus = RtCorpus::from_sentences("synthetic", cfg.modality, &sentences)?;
    let lag = match cfg.modality {
        Modality::Spr => 2,
        Modality::EyeTracking => 1,
    };
    let mut words = corpus.into_words();
    let len: Vec<f64> = words.iter().map(|w| w.char_len as f64).collect();
    let mut sentence_start = 0;
    for i in 0..words.len() {
        if words[i].position_in_sentence == 0 {
            sentence_start = i;
        }
        let lagged = |j: usize| i.checked_sub(j).unwrap_or(i);
        let (p1, p2) = (lagged(1), lagged(2));
        let features = [
            s[i],
            f[i],
            len[i],
            len[i] * f[i],
            s[p1],
            f[p1],
            len[p1],
            len[p1] * f[p1],
            s[p2],
        ];
        let mut log_rt = INTERCEPT
            + features[..if lag == 2 { 9 } else { 8 }]
                .iter()
                .zip(BASELINE_COEFFICIENTS)
                .map(|(x, b)| x * b)
                .sum::<f64>()
            + cfg.noise_sd * unit.sample(&mut rng);
        let is_final = words[i].is_clause_final;
        if is_final && cfg.gamma != 0.0 {
            log_rt += cfg.gamma * inf_k(&s[sentence_start..i], cfg.k_true)?;
        }
        let rt = log_rt.exp() + if is_final { cfg.wrapup_ms } else { 0.0 };
        let w = &mut words[i];
        w.rt_by_subject.insert("synthetic".into(), rt);
        w.mean_rt = Some(rt);
        w.n_subjects_retained = 1;
    }
    let corpus = RtCorpus::new("synthetic", cfg.modality, words)?;
    let surprisal = SurprisalAnnotation::new(SurprisalSource::Imported("synthetic".into()), s, Punctuation::Include)?;
    Ok(SynthData {
        corpus,
        surprisal,
        logfreq: f,
    })
}
