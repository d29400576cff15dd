//! Run configuration: a flat TOML document whose keys the command-line flags
//! override.
//!
//! ```toml
//! dataset = "toy"
//! modality = "spr"
//! spr = "data/rts.tsv"
//! lm_train = "data/train.txt"
//! imported = ["data/gpt2.jsonl"]
//! k_grid = [0, 0.5, 1, 1.5, 2, 2.5, 3]
//! position = "both"
//! output_dir = "out"
//! ```
//!
//! Relative paths resolve against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wrapup::corpus::{Measure, Modality};
use wrapup::predictors::{ContextScope, KGrid, PositionSelect, ResponseTransform};
use wrapup::surprisal::Punctuation;

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: String,
    pub modality: Option<Modality>,
    /// Self-paced reading table (`subject_id, sentence_id, word_pos, word, rt_ms`).
    pub spr: Option<PathBuf>,
    /// Eye-tracking text table.
    pub text: Option<PathBuf>,
    /// Eye-tracking fixation table.
    pub fixations: Option<PathBuf>,
    /// Plain-text training corpus, one sentence per line.
    pub lm_train: Option<PathBuf>,
    pub lm_order: usize,
    pub lm_min_count: u64,
    /// Subword surprisal files to align.
    pub imported: Vec<PathBuf>,
    /// Annotation column used by `analyze`; defaults to the first one.
    pub surprisal: Option<String>,
    pub punctuation: Punctuation,
    pub k_grid: KGrid,
    pub folds: usize,
    pub seed: u64,
    pub response: ResponseTransform,
    pub measure: Measure,
    pub position: PositionSelect,
    pub scope: ContextScope,
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: "corpus".into(),
            modality: None,
            spr: None,
            text: None,
            fixations: None,
            lm_train: None,
            lm_order: 5,
            lm_min_count: 2,
            imported: Vec::new(),
            surprisal: None,
            punctuation: Punctuation::Include,
            k_grid: KGrid::default(),
            folds: 10,
            seed: 0,
            response: ResponseTransform::Log,
            measure: Measure::Rt,
            position: PositionSelect::Both,
            scope: ContextScope::SentenceSoFar,
            output_dir: "out".into(),
            base_dir: PathBuf::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::validation(m));
        if self.dataset.is_empty() || self.dataset.contains(['\t', '\n', ',']) {
            return bad(format!(
                "dataset name `{}` must be non-empty without tabs, newlines or commas",
                self.dataset
            ));
        }
        if self.lm_order == 0 {
            return bad("lm_order must be at least 1".into());
        }
        if self.lm_min_count == 0 {
            return bad("lm_min_count must be at least 1".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.spr.is_some() && (self.text.is_some() || self.fixations.is_some()) {
            return bad("give either `spr` or `text` + `fixations`, not both".into());
        }
        if self.text.is_some() != self.fixations.is_some() {
            return bad("eye-tracking input needs both `text` and `fixations`".into());
        }
        match (self.modality, self.spr.is_some(), self.text.is_some()) {
            (Some(Modality::EyeTracking), true, _) => {
                return bad("`spr` input given for an eye-tracking dataset".into())
            }
            (Some(Modality::Spr), _, true) => return bad("eye-tracking input given for an SPR dataset".into()),
            _ => {}
        }
        if self.measure == Measure::GoPast && (self.modality == Some(Modality::Spr) || self.spr.is_some()) {
            return bad("go-past times exist only for eye-tracking data".into());
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Hex SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Preamble lines for tabular outputs.
    pub fn preamble(&self) -> Vec<String> {
        vec![
            format!("config_hash={}", self.hash()),
            format!("dataset={}", self.dataset),
        ]
    }
}
