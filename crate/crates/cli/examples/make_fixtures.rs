//! Regenerates `tests/fixtures/synth_inf2`, a single-reader SPR dataset whose
//! clause-final log RTs carry a `γ · INF^(2)` term.
//!
//! ```text
//! cargo run -p wrapup-cli --example make_fixtures
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use wrapup::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synth_inf2");
    fs::create_dir_all(&dir)?;
    let data = generate(&SynthConfig {
        n_sentences: 1200,
        gamma: 0.001,
        noise_sd: 0.1,
        seed: 2024,
        ..SynthConfig::default()
    })?;

    let mut rts = String::from("subject_id\tsentence_id\tword_pos\tword\trt_ms\n");
    let mut jsonl = String::from("{\"unit\":\"nats\",\"marker\":\"prefix-space\",\"model\":\"oracle\"}\n");
    for (w, s) in data.corpus.words().iter().zip(&data.surprisal.values) {
        let rt = w.mean_rt.expect("synthetic words all have an RT");
        writeln!(
            rts,
            "r1\t{}\t{}\t{}\t{rt:.4}",
            w.sentence_id, w.position_in_sentence, w.text
        )?;
        writeln!(jsonl, "{{\"t\":\"Ġ{}\",\"s\":{s:.6}}}", w.text)?;
    }
    fs::write(dir.join("rts.tsv"), rts)?;
    fs::write(dir.join("surprisal.jsonl"), jsonl)?;
    fs::write(
        dir.join("config.toml"),
        "dataset = \"synth-inf2\"\nspr = \"rts.tsv\"\nimported = [\"surprisal.jsonl\"]\nposition = \"clause-final\"\n",
    )?;
    println!("wrote {}", dir.display());
    Ok(())
}
