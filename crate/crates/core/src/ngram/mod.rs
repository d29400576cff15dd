//! Interpolated modified Kneser–Ney n-gram language model.
//!
//! Training follows Chen & Goodman's interpolated variant with three
//! discounts per order:
//!
//! * the highest order uses raw counts, every lower order uses continuation
//!   counts `N1+(• h w)` (the number of distinct words seen to the left);
//! * discounts come from the count-of-counts `n_r` of each order:
//!   `Y = n1 / (n1 + 2 n2)`, `D_r = r - (r + 1) Y n_{r+1} / n_r`;
//! * `p(w | h) = max(c(hw) - D(c(hw)), 0) / c(h•) + γ(h) p(w | h')` with
//!   `γ(h) = (D1 N1(h•) + D2 N2(h•) + D3+ N3+(h•)) / c(h•)`, where `h'` drops
//!   the oldest word of `h`;
//! * a context never seen at some order passes straight through to the next
//!   lower order, and the recursion bottoms out in the uniform distribution
//!   over the vocabulary.
//!
//! Sentences are padded with `order - 1` copies of `<s>` and closed with
//! `</s>`. Words rarer than `min_count` are replaced by `<unk>`, which is
//! always part of the vocabulary. All log-probabilities are natural logs.

mod export;
mod unigram;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use unigram::{unigram_logfreq, UnigramLogFreq};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

const BOS_ID: u32 = 0;
const EOS_ID: u32 = 1;
const UNK_ID: u32 = 2;

/// Discount used at an order whose count-of-counts are degenerate.
pub const FALLBACK_DISCOUNT: f64 = 0.75;

/// Anything that assigns conditional probabilities to words.
pub trait LanguageModel {
    /// `ln p(word | history)`, where `history` is every preceding token of
    /// the sentence (no padding). `word` may be [`EOS`].
    fn log_prob(&self, word: &str, history: &[&str]) -> f64;
}

/// Surprisal in nats: `-ln p(word | history)`.
pub fn surprisal<M: LanguageModel + ?Sized>(model: &M, word: &str, history: &[&str]) -> f64 {
    (-model.log_prob(word, history)).max(0.0)
}

/// Surprisal of each word given the words before it. The end-of-sentence
/// symbol is not scored, so the sum is `-ln p(sentence prefix)`.
pub fn sequence_surprisals<M: LanguageModel + ?Sized, S: AsRef<str>>(model: &M, sentence: &[S]) -> Vec<f64> {
    let words: Vec<&str> = sentence.iter().map(AsRef::as_ref).collect();
    (0..words.len())
        .map(|t| surprisal(model, words[t], &words[..t]))
        .collect()
}

/// `exp` of the mean per-token surprisal, counting one `</s>` per sentence.
pub fn perplexity<M: LanguageModel + ?Sized, S: AsRef<str>>(model: &M, sentences: &[Vec<S>]) -> Result<f64> {
    let mut total = 0.0;
    let mut tokens = 0usize;
    for sentence in sentences {
        let words: Vec<&str> = sentence.iter().map(AsRef::as_ref).collect();
        total += sequence_surprisals(model, &words).iter().sum::<f64>();
        total += surprisal(model, EOS, &words);
        tokens += words.len() + 1;
    }
    if tokens == 0 {
        return Err(Error::Argument("perplexity of an empty corpus".into()));
    }
    Ok((total / tokens as f64).exp())
}

/// The three discounts of one order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discounts {
    pub d1: f64,
    pub d2: f64,
    pub d3_plus: f64,
    /// True when the count-of-counts were degenerate and
    /// [`FALLBACK_DISCOUNT`] was used instead.
    pub fallback: bool,
}

impl Discounts {
    /// Estimates discounts from the count-of-counts `n[r-1] = n_r`, r = 1..=4.
    ///
    /// Falls back to [`FALLBACK_DISCOUNT`] when `n1` or `n2` is zero. For
    /// r = 2, 3, `D_r` takes the value of `D_{r-1}` when `n_r` or `n_{r+1}` is
    /// zero (the closed form is undefined or hits its bound `r`) or when the
    /// estimate is not positive, which would leave contexts whose counts are
    /// all `>= r` with no mass for unseen words.
    pub fn estimate(n: [u64; 4]) -> Self {
        if n[0] == 0 || n[1] == 0 {
            return Self {
                d1: FALLBACK_DISCOUNT,
                d2: FALLBACK_DISCOUNT,
                d3_plus: FALLBACK_DISCOUNT,
                fallback: true,
            };
        }
        let nf = n.map(|x| x as f64);
        let y = nf[0] / (nf[0] + 2.0 * nf[1]);
        let d1 = 1.0 - 2.0 * y * nf[1] / nf[0];
        let mut d = [d1, 0.0, 0.0];
        for r in 2..=3usize {
            let rf = r as f64;
            let est = rf - (rf + 1.0) * y * nf[r] / nf[r - 1];
            d[r - 1] = if n[r - 1] == 0 || n[r] == 0 || est <= 0.0 {
                d[r - 2]
            } else {
                est
            };
        }
        Self {
            d1: d[0],
            d2: d[1],
            d3_plus: d[2],
            fallback: false,
        }
    }

    pub fn for_count(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3_plus,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct ContextStats {
    total: u64,
    n1: u64,
    n2: u64,
    n3_plus: u64,
}

/// Counts of one order: raw counts at the top order, continuation counts
/// below.
#[derive(Debug, Clone)]
struct OrderTable {
    counts: HashMap<Vec<u32>, u64>,
    contexts: HashMap<Vec<u32>, ContextStats>,
    discounts: Discounts,
}

impl OrderTable {
    fn from_counts(counts: HashMap<Vec<u32>, u64>, discounts: Discounts) -> Self {
        let mut contexts: HashMap<Vec<u32>, ContextStats> = HashMap::new();
        for (gram, &c) in &counts {
            let stats = contexts.entry(gram[..gram.len() - 1].to_vec()).or_default();
            stats.total += c;
            match c {
                1 => stats.n1 += 1,
                2 => stats.n2 += 1,
                _ => stats.n3_plus += 1,
            }
        }
        Self {
            counts,
            contexts,
            discounts,
        }
    }

    fn count_of_counts(counts: &HashMap<Vec<u32>, u64>) -> [u64; 4] {
        let mut n = [0u64; 4];
        for &c in counts.values() {
            if (1..=4).contains(&c) {
                n[c as usize - 1] += 1;
            }
        }
        n
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "export::ModelDump", into = "export::ModelDump")]
pub struct KnModel {
    order: usize,
    min_count: u64,
    words: Vec<String>,
    ids: HashMap<String, u32>,
    /// `tables[k - 1]` holds the k-grams.
    tables: Vec<OrderTable>,
    unigram: UnigramLogFreq,
}

/// Trains an interpolated modified Kneser–Ney model of the given order on
/// pre-tokenized sentences.
pub fn train_kn<S: AsRef<str>>(sentences: &[Vec<S>], order: usize, min_count: u64) -> Result<KnModel> {
    if order == 0 {
        return Err(Error::Argument("n-gram order must be at least 1".into()));
    }
    if sentences.iter().all(|s| s.is_empty()) {
        return Err(Error::Argument("training corpus has no tokens".into()));
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for s in sentences {
        for w in s {
            let w = w.as_ref();
            if [BOS, EOS, UNK].contains(&w) {
                continue;
            }
            *freq.entry(w).or_default() += 1;
        }
    }
    let mut kept: Vec<&str> = freq
        .iter()
        .filter(|(_, &c)| c >= min_count.max(1))
        .map(|(w, _)| *w)
        .collect();
    kept.sort_unstable();
    let mut words: Vec<String> = [BOS, EOS, UNK].iter().map(|s| s.to_string()).collect();
    words.extend(kept.iter().map(|s| s.to_string()));
    let ids: HashMap<String, u32> = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();

    // Top-order raw counts.
    let mut top: HashMap<Vec<u32>, u64> = HashMap::new();
    for s in sentences.iter().filter(|s| !s.is_empty()) {
        let mut padded = vec![BOS_ID; order - 1];
        padded.extend(s.iter().map(|w| lookup(&ids, w.as_ref())));
        padded.push(EOS_ID);
        for gram in padded.windows(order) {
            *top.entry(gram.to_vec()).or_default() += 1;
        }
    }

    // Continuation counts, top down: each distinct (k+1)-gram adds one to
    // the count of its k-suffix.
    let mut per_order: Vec<HashMap<Vec<u32>, u64>> = vec![HashMap::new(); order];
    per_order[order - 1] = top;
    for k in (1..order).rev() {
        let mut lower: HashMap<Vec<u32>, u64> = HashMap::new();
        for gram in per_order[k].keys() {
            *lower.entry(gram[1..].to_vec()).or_default() += 1;
        }
        per_order[k - 1] = lower;
    }

    let tables = per_order
        .into_iter()
        .enumerate()
        .map(|(k, counts)| {
            let discounts = Discounts::estimate(OrderTable::count_of_counts(&counts));
            if discounts.fallback {
                log::warn!(
                    "order {}: degenerate count-of-counts, using fixed discount {FALLBACK_DISCOUNT}",
                    k + 1
                );
            }
            OrderTable::from_counts(counts, discounts)
        })
        .collect();

    Ok(KnModel {
        order,
        min_count,
        words,
        ids,
        tables,
        unigram: unigram_logfreq(sentences),
    })
}

fn lookup(ids: &HashMap<String, u32>, word: &str) -> u32 {
    ids.get(word).copied().filter(|&id| id != BOS_ID).unwrap_or(UNK_ID)
}

impl KnModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Words the model can predict: the training vocabulary plus `</s>` and
    /// `<unk>`.
    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.words[1..].iter().map(String::as_str)
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len() - 1
    }

    /// Discounts of order `k` (1-based).
    pub fn discounts(&self, k: usize) -> Discounts {
        self.tables[k - 1].discounts
    }

    /// The lowercased unigram log-frequency table of the training corpus.
    pub fn unigram(&self) -> &UnigramLogFreq {
        &self.unigram
    }

    /// The token a word is scored as: itself if in the vocabulary, else
    /// `<unk>`.
    pub fn map_word<'a>(&'a self, word: &'a str) -> &'a str {
        &self.words[lookup(&self.ids, word) as usize]
    }

    /// Observed contexts of order `k` (1-based), as word lists.
    pub fn contexts(&self, k: usize) -> Vec<Vec<&str>> {
        let mut out: Vec<Vec<&str>> = self.tables[k - 1]
            .contexts
            .keys()
            .map(|c| c.iter().map(|&id| self.words[id as usize].as_str()).collect())
            .collect();
        out.sort();
        out
    }

    /// `p(word | context)` where `context` lists the most recent words last.
    /// Only the last `order - 1` entries are used; shorter contexts are
    /// padded with `<s>`.
    pub fn prob(&self, word: &str, context: &[&str]) -> f64 {
        let ids = self.context_ids(context);
        self.prob_ids(lookup(&self.ids, word), &ids)
    }

    fn context_ids(&self, context: &[&str]) -> Vec<u32> {
        let need = self.order - 1;
        let tail = &context[context.len().saturating_sub(need)..];
        let mut ids = vec![BOS_ID; need - tail.len()];
        ids.extend(
            tail.iter()
                .map(|w| if *w == BOS { BOS_ID } else { lookup(&self.ids, w) }),
        );
        ids
    }

    fn prob_ids(&self, word: u32, context: &[u32]) -> f64 {
        let mut p = 1.0 / self.vocab_size() as f64;
        let mut gram: Vec<u32> = Vec::with_capacity(self.order);
        // Lowest order first: context suffix of length k - 1.
        for k in 1..=self.order {
            let ctx = &context[context.len() + 1 - k..];
            let table = &self.tables[k - 1];
            let Some(stats) = table.contexts.get(ctx) else {
                continue;
            };
            gram.clear();
            gram.extend_from_slice(ctx);
            gram.push(word);
            let c = table.counts.get(&gram).copied().unwrap_or(0);
            let d = &table.discounts;
            let total = stats.total as f64;
            let gamma = (d.d1 * stats.n1 as f64 + d.d2 * stats.n2 as f64 + d.d3_plus * stats.n3_plus as f64) / total;
            p = (c as f64 - d.for_count(c)).max(0.0) / total + gamma * p;
        }
        p
    }
}

impl LanguageModel for KnModel {
    fn log_prob(&self, word: &str, history: &[&str]) -> f64 {
        self.prob(word, history).ln()
    }
}

#[cfg(test)]
mod tests;
