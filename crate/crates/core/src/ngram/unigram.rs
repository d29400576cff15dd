use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Maximum-likelihood unigram log-probabilities over a lowercased corpus.
///
/// Seen words get `ln(c(w) / N)`. Anything unseen is scored as a single
/// extra token: `ln(1 / (N + 1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnigramLogFreq {
    total: u64,
    counts: BTreeMap<String, u64>,
}

/// Counts lowercased tokens of `sentences`.
pub fn unigram_logfreq<S: AsRef<str>>(sentences: &[Vec<S>]) -> UnigramLogFreq {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for w in sentences.iter().flatten() {
        let w = w.as_ref();
        if [super::BOS, super::EOS, super::UNK].contains(&w) {
            continue;
        }
        *counts.entry(w.to_lowercase()).or_default() += 1;
    }
    UnigramLogFreq {
        total: counts.values().sum(),
        counts,
    }
}

impl UnigramLogFreq {
    pub fn logprob(&self, word: &str) -> f64 {
        match self.counts.get(&word.to_lowercase()) {
            Some(&c) => (c as f64 / self.total as f64).ln(),
            None => self.unk_logprob(),
        }
    }

    pub fn unk_logprob(&self) -> f64 {
        -((self.total + 1) as f64).ln()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Log-probabilities of every seen (lowercased) word.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.counts.keys().map(|w| (w.clone(), self.logprob(w))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mle_with_lowercasing_and_unk() {
        let u = unigram_logfreq(&[vec!["a", "a", "b"]]);
        assert_eq!(u.logprob("a"), (2.0f64 / 3.0).ln());
        assert_eq!(u.logprob("A"), u.logprob("a"));
        assert_eq!(u.logprob("zebra"), (0.25f64).ln());
        assert_eq!(u.logprob("zebra"), u.unk_logprob());
        assert_eq!(u.to_map().len(), 2);
    }
}
