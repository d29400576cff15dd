//! Word-level measures from eye-tracking fixation logs.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One fixation from an eye-tracking log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFixation {
    pub subject_id: String,
    /// 0-based position of the fixated word in the text.
    pub word_index: usize,
    /// Ordinal position in the subject's fixation sequence.
    pub onset_order: u64,
    /// Milliseconds.
    pub duration: f64,
}

impl RawFixation {
    pub fn new(subject_id: impl Into<String>, word_index: usize, onset_order: u64, duration: f64) -> Self {
        Self {
            subject_id: subject_id.into(),
            word_index,
            onset_order,
            duration,
        }
    }
}

fn check_duration(f: &RawFixation) -> Result<()> {
    if !(f.duration.is_finite() && f.duration > 0.0) {
        return Err(Error::Validation(format!(
            "fixation {} of subject {} has non-positive duration {}",
            f.onset_order, f.subject_id, f.duration
        )));
    }
    Ok(())
}

/// Total reading time per word: the sum of all fixation durations on it.
///
/// Words that were never fixated are absent from the map rather than zero.
pub fn aggregate_fixations(fixations: &[RawFixation], n_words: usize) -> Result<BTreeMap<usize, f64>> {
    let mut totals = BTreeMap::new();
    for f in fixations {
        check_duration(f)?;
        if f.word_index >= n_words {
            return Err(Error::Validation(format!(
                "fixation {} of subject {} points at word {} but the text has {} words",
                f.onset_order, f.subject_id, f.word_index, n_words
            )));
        }
        *totals.entry(f.word_index).or_insert(0.0) += f.duration;
    }
    Ok(totals)
}

/// Go-past (regression path) time of `target`.
///
/// Sums durations from the first fixation on `target` up to, but excluding,
/// the first later fixation on a word to its right. If the reader never
/// moves past the target, the sum runs to the end of the trial. `None` if the
/// target was never fixated. `fixations` must be in onset order.
pub fn compute_go_past(fixations: &[RawFixation], target: usize) -> Option<f64> {
    let first = fixations.iter().position(|f| f.word_index == target)?;
    let total = fixations[first..]
        .iter()
        .take_while(|f| f.word_index <= target)
        .map(|f| f.duration)
        .sum();
    Some(total)
}

/// Go-past times of every fixated word in one pass.
///
/// Equivalent to calling [`compute_go_past`] for each word, but linear in
/// the number of fixations. Words still open form a stack whose indices
/// decrease towards the top, so a fixation on word `j` closes exactly the
/// words popped while the top is below `j`.
pub fn go_past_times(fixations: &[RawFixation]) -> BTreeMap<usize, f64> {
    let mut result = BTreeMap::new();
    let mut opened = HashSet::new();
    let mut stack: Vec<(usize, f64)> = Vec::new();
    let mut elapsed = 0.0;
    for f in fixations {
        while let Some(&(word, start)) = stack.last() {
            if word >= f.word_index {
                break;
            }
            result.insert(word, elapsed - start);
            stack.pop();
        }
        if opened.insert(f.word_index) {
            stack.push((f.word_index, elapsed));
        }
        elapsed += f.duration;
    }
    for (word, start) in stack {
        result.insert(word, elapsed - start);
    }
    result
}

/// Per-word total reading time and go-past time for one subject's trial.
///
/// Fixations may arrive in any order; they are sorted by `onset_order`,
/// which must be unique.
pub fn subject_measures(
    fixations: &[RawFixation],
    n_words: usize,
) -> Result<(BTreeMap<usize, f64>, BTreeMap<usize, f64>)> {
    let totals = aggregate_fixations(fixations, n_words)?;
    let mut ordered: Vec<&RawFixation> = fixations.iter().collect();
    ordered.sort_by_key(|f| f.onset_order);
    if let Some(w) = ordered.windows(2).find(|w| w[0].onset_order == w[1].onset_order) {
        return Err(Error::Validation(format!(
            "subject {} has two fixations with order {}",
            w[0].subject_id, w[0].onset_order
        )));
    }
    let ordered: Vec<RawFixation> = ordered.into_iter().cloned().collect();
    Ok((totals, go_past_times(&ordered)))
}
