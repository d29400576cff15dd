use super::*;
use proptest::prelude::*;

fn toy() -> KnModel {
    train_kn(&[vec!["a", "b", "a", "b", "a", "c"]], 2, 1).unwrap()
}

// Hand derivation for "a b a b a c", order 2, min_count 1, |V| = 5:
//   unigram continuation counts a:2 b:1 c:1 </s>:1, D = 3/5 everywhere,
//   gamma = 12/25, so p1(a) = 47/125, p1(b|c|</s>) = 22/125, p1(<unk>) = 12/125;
//   bigram counts <s>a:1 ab:2 ba:2 ac:1 c</s>:1, D = 3/7 everywhere.
const P1_A: f64 = 47.0 / 125.0;
const P1_B: f64 = 22.0 / 125.0;
const P1_UNK: f64 = 12.0 / 125.0;

fn oracle(word: &str, context: &str) -> f64 {
    let p1 = |w: &str| match w {
        "a" => P1_A,
        "<unk>" => P1_UNK,
        _ => P1_B,
    };
    let d = 3.0 / 7.0;
    match (context, word) {
        ("<s>", "a") => (1.0 - d) + d * p1("a"),
        ("<s>", w) => d * p1(w),
        ("a", "b") => (2.0 - d) / 3.0 + (2.0 / 7.0) * p1("b"),
        ("a", "c") => (1.0 - d) / 3.0 + (2.0 / 7.0) * p1("c"),
        ("a", w) => (2.0 / 7.0) * p1(w),
        ("b", "a") => (2.0 - d) / 2.0 + (3.0 / 14.0) * p1("a"),
        ("b", w) => (3.0 / 14.0) * p1(w),
        ("c", "</s>") => (1.0 - d) + d * p1("</s>"),
        ("c", w) => d * p1(w),
        (_, w) => p1(w),
    }
}

#[test]
fn toy_discounts() {
    let m = toy();
    let d1 = m.discounts(1);
    assert!((d1.d1 - 0.6).abs() < 1e-15 && (d1.d2 - 0.6).abs() < 1e-15 && !d1.fallback);
    let d2 = m.discounts(2);
    assert!((d2.d1 - 3.0 / 7.0).abs() < 1e-15 && (d2.d3_plus - 3.0 / 7.0).abs() < 1e-15);
}

#[test]
fn toy_matches_hand_oracle() {
    let m = toy();
    assert_eq!(m.vocab_size(), 5);
    for ctx in ["<s>", "a", "b", "c", "</s>", "<unk>"] {
        for w in ["a", "b", "c", "</s>", "<unk>"] {
            let got = m.prob(w, &[ctx]);
            let want = oracle(w, ctx);
            assert!((got - want).abs() < 1e-12, "p({w}|{ctx}) = {got}, oracle {want}");
        }
    }
    assert!((m.prob("b", &["a"]) - 0.574_095_238_095_238).abs() < 1e-12);
}

#[test]
fn toy_surprisals() {
    let m = toy();
    let s = surprisal(&m, "c", &["a"]);
    assert!((s + oracle("c", "a").ln()).abs() < 1e-12);

    let sentence = ["a", "b", "a", "b", "a", "c"];
    let seq = sequence_surprisals(&m, &sentence);
    let ctx = ["<s>", "a", "b", "a", "b", "a"];
    for (t, s) in seq.iter().enumerate() {
        assert!((s + oracle(sentence[t], ctx[t]).ln()).abs() < 1e-12);
    }

    let one = sequence_surprisals(&m, &["a"]);
    assert_eq!(one.len(), 1);
    assert!((one[0] + oracle("a", "<s>").ln()).abs() < 1e-12);

    let ppl = perplexity(&m, &[sentence.to_vec()]).unwrap();
    let total: f64 = seq.iter().sum::<f64>() - oracle("</s>", "c").ln();
    assert!((ppl - (total / 7.0).exp()).abs() < 1e-12);
}

#[test]
fn sentence_sum_is_log_of_product() {
    let m = toy();
    let sentence = ["b", "a", "c", "a"];
    let s: f64 = sequence_surprisals(&m, &sentence).iter().sum();
    let mut prod = 1.0;
    for t in 0..sentence.len() {
        prod *= m.prob(sentence[t], &sentence[..t]);
    }
    assert!((s + prod.ln()).abs() < 1e-12);
}

#[test]
fn single_token_corpus_is_normalized() {
    let m = train_kn(&[vec!["a", "a", "a", "a"]], 1, 1).unwrap();
    let total: f64 = m.vocab().map(|w| m.prob(w, &[])).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(m.discounts(1).fallback);
}

#[test]
fn rare_words_become_unk() {
    let m = train_kn(&[vec!["a", "b", "a", "b", "a", "c"]], 2, 2).unwrap();
    assert_eq!(m.map_word("c"), UNK);
    assert_eq!(m.map_word("never-seen"), UNK);
    assert_eq!(m.prob("never-seen", &["a"]), m.prob(UNK, &["a"]));
    assert_eq!(m.prob("c", &["a"]), m.prob(UNK, &["a"]));
    assert!(m.prob(UNK, &["a"]) > 0.1);
}

#[test]
fn discount_estimation() {
    let d = Discounts::estimate([10, 0, 3, 1]);
    assert!(d.fallback && d.d2 == FALLBACK_DISCOUNT);
    // n = (100, 40, 20, 10): Y = 100/180.
    let d = Discounts::estimate([100, 40, 20, 10]);
    let y = 100.0 / 180.0;
    assert!((d.d1 - (1.0 - 2.0 * y * 0.4)).abs() < 1e-15);
    assert!((d.d2 - (2.0 - 3.0 * y * 0.5)).abs() < 1e-15);
    assert!((d.d3_plus - (3.0 - 4.0 * y * 0.5)).abs() < 1e-15);
    for r in [1u64, 2, 3] {
        assert!(d.for_count(r) > 0.0 && d.for_count(r) < r as f64);
    }
    // n4 / n3 large enough that the D3+ closed form goes negative.
    let d = Discounts::estimate([40, 20, 5, 30]);
    assert_eq!(d.d3_plus, d.d2);
}

fn zipf_corpus(n_sentences: usize, seed: u64) -> Vec<Vec<String>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n_sentences)
        .map(|_| {
            let len = rng.random_range(1..12);
            (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    format!("w{}", (u.powi(3) * 60.0) as usize)
                })
                .collect()
        })
        .collect()
}

#[test]
fn every_observed_context_is_normalized() {
    let corpus = zipf_corpus(300, 7);
    let m = train_kn(&corpus, 3, 2).unwrap();
    let vocab: Vec<&str> = m.vocab().collect();
    for k in 1..=3 {
        for ctx in m.contexts(k) {
            let total: f64 = vocab.iter().map(|w| m.prob(w, &ctx)).sum();
            assert!((total - 1.0).abs() < 1e-9, "order {k} context {ctx:?}: {total}");
        }
    }
    // A context made of words the model never saw.
    let total: f64 = vocab.iter().map(|w| m.prob(w, &["zz", "yy"])).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn perplexity_of_uniform_model_is_vocab_size() {
    struct Uniform(usize);
    impl LanguageModel for Uniform {
        fn log_prob(&self, _: &str, _: &[&str]) -> f64 {
            -(self.0 as f64).ln()
        }
    }
    let ppl = perplexity(&Uniform(37), &[vec!["x", "y"], vec!["z"]]).unwrap();
    assert!((ppl - 37.0).abs() < 1e-9);
    assert!(perplexity(&Uniform(3), &Vec::<Vec<&str>>::new()).is_err());
}

#[test]
fn export_is_stable_and_lossless() {
    let corpus = zipf_corpus(200, 3);
    let a = train_kn(&corpus, 3, 2).unwrap();
    let b = train_kn(&corpus, 3, 2).unwrap();
    let (mut ba, mut bb) = (Vec::new(), Vec::new());
    a.save(&mut ba).unwrap();
    b.save(&mut bb).unwrap();
    assert_eq!(ba, bb);

    let back = KnModel::load(ba.as_slice()).unwrap();
    for s in corpus.iter().take(20) {
        let x = sequence_surprisals(&a, s);
        let y = sequence_surprisals(&back, s);
        assert_eq!(x, y);
    }
    let mut again = Vec::new();
    back.save(&mut again).unwrap();
    assert_eq!(ba, again);
}

#[test]
fn import_rejects_foreign_dumps() {
    let bad = r#"{"format":"arpa","version":1,"order":1,"min_count":1,"vocab":[],"orders":[],"unigram":{"total":0,"counts":{}}}"#;
    assert!(KnModel::load(bad.as_bytes()).is_err());
}

#[test]
fn bad_training_arguments() {
    assert!(train_kn(&[vec!["a"]], 0, 1).is_err());
    assert!(train_kn(&Vec::<Vec<&str>>::new(), 3, 1).is_err());
}

proptest! {
    #[test]
    fn probabilities_are_positive_and_round_trip(seed in 0u64..50, w in 0usize..70, c1 in 0usize..70, c2 in 0usize..70) {
        let corpus = zipf_corpus(40, seed);
        let m = train_kn(&corpus, 3, 1).unwrap();
        let (w, c1, c2) = (format!("w{w}"), format!("w{c1}"), format!("w{c2}"));
        let p = m.prob(&w, &[&c1, &c2]);
        prop_assert!(p > 0.0 && p <= 1.0);
        let s = surprisal(&m, &w, &[&c1, &c2]);
        prop_assert!(s >= 0.0 && s.is_finite());
        prop_assert!(((-s).exp() - p).abs() <= 1e-12 * p);
    }

    #[test]
    fn perplexity_ignores_sentence_order(seed in 0u64..20, rot in 0usize..10) {
        let corpus = zipf_corpus(30, seed);
        let m = train_kn(&corpus, 2, 1).unwrap();
        let eval = zipf_corpus(10, seed + 100);
        let mut shuffled = eval.clone();
        shuffled.rotate_left(rot);
        shuffled.reverse();
        let a = perplexity(&m, &eval).unwrap();
        let b = perplexity(&m, &shuffled).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }
}
