//! Versioned JSON dump of a trained model.
//!
//! ```text
//! {
//!   "format": "wrapup-kn", "version": 1,
//!   "order": 5, "min_count": 2,
//!   "vocab": ["<s>", "</s>", "<unk>", ...sorted words],
//!   "orders": [{"order": 1, "discounts": {...}, "ngrams": [[[ids...], count], ...]}, ...],
//!   "unigram": {"total": N, "counts": {"word": c, ...}}
//! }
//! ```
//!
//! n-grams are word ids into `vocab`, sorted, so identical training input
//! yields identical bytes.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Discounts, KnModel, OrderTable, UnigramLogFreq, BOS, EOS, UNK};
use crate::error::Result;

const FORMAT: &str = "wrapup-kn";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
pub(super) struct ModelDump {
    format: String,
    version: u32,
    order: usize,
    min_count: u64,
    vocab: Vec<String>,
    orders: Vec<OrderDump>,
    unigram: UnigramLogFreq,
}

#[derive(Serialize, Deserialize)]
struct OrderDump {
    order: usize,
    discounts: Discounts,
    ngrams: Vec<(Vec<u32>, u64)>,
}

impl From<KnModel> for ModelDump {
    fn from(m: KnModel) -> Self {
        let orders = m
            .tables
            .into_iter()
            .enumerate()
            .map(|(k, t)| {
                let mut ngrams: Vec<(Vec<u32>, u64)> = t.counts.into_iter().collect();
                ngrams.sort_unstable();
                OrderDump {
                    order: k + 1,
                    discounts: t.discounts,
                    ngrams,
                }
            })
            .collect();
        ModelDump {
            format: FORMAT.into(),
            version: VERSION,
            order: m.order,
            min_count: m.min_count,
            vocab: m.words,
            orders,
            unigram: m.unigram,
        }
    }
}

impl TryFrom<ModelDump> for KnModel {
    type Error = String;

    fn try_from(d: ModelDump) -> Result<Self, String> {
        if d.format != FORMAT || d.version != VERSION {
            return Err(format!(
                "unsupported model format {} v{} (expected {FORMAT} v{VERSION})",
                d.format, d.version
            ));
        }
        if d.vocab.len() < 3 || d.vocab[..3] != [BOS, EOS, UNK] {
            return Err("vocabulary must start with <s>, </s>, <unk>".into());
        }
        if d.order == 0 || d.orders.len() != d.order {
            return Err(format!("expected {} order tables, found {}", d.order, d.orders.len()));
        }
        let v = d.vocab.len() as u32;
        let mut tables = Vec::with_capacity(d.order);
        for (k, o) in d.orders.into_iter().enumerate() {
            if o.order != k + 1 {
                return Err(format!("order tables out of sequence at {}", o.order));
            }
            let mut counts = HashMap::with_capacity(o.ngrams.len());
            for (gram, c) in o.ngrams {
                if gram.len() != k + 1 || gram.iter().any(|&id| id >= v) || c == 0 {
                    return Err(format!("malformed {}-gram {gram:?}", k + 1));
                }
                counts.insert(gram, c);
            }
            tables.push(OrderTable::from_counts(counts, o.discounts));
        }
        let ids = d.vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Ok(KnModel {
            order: d.order,
            min_count: d.min_count,
            words: d.vocab,
            ids,
            tables,
            unigram: d.unigram,
        })
    }
}

impl KnModel {
    pub fn save(&self, writer: impl Write) -> Result<()> {
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    pub fn load(reader: impl Read) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }
}
