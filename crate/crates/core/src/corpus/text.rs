//! Punctuation normalization, clause-final marking and punctuation splitting.
//!
//! The normalizer is a small, fixed rule table applied in order:
//!
//! | step | input                                         | output                    |
//! |------|-----------------------------------------------|---------------------------|
//! | 1    | `“ ” „ ‟ « » ″`                               | `"`                       |
//! | 1    | `‘ ’ ‚ ‛ ′`                                   | `'`                       |
//! | 1    | `…`                                           | `...`                     |
//! | 1    | no-break and other Unicode spaces             | ` `                       |
//! | 2    | `— – ‒ ― −` (dashes and minus sign)           | ` - `                     |
//! | 3    | runs of whitespace                            | a single space, trimmed   |
//! | 4    | space before `. , ; : ! ? ) ]`                | removed                   |
//! | 4    | space after `( [`                             | removed                   |
//!
//! Word-level normalization ([`normalize_word`]) applies step 1 only, so a
//! word token never splits and a trailing dash stays visible to
//! [`is_clause_final`].

/// Characters whose presence at the end of a word marks it clause-final.
pub const CLAUSE_FINAL_PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', ')', ']', '—', '–'];

const SENTENCE_FINAL: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', ')', ']'];
const ATTACH_LEFT: &[char] = &['.', ',', ';', ':', '!', '?', ')', ']'];
const ATTACH_RIGHT: &[char] = &['(', '['];

/// ASCII punctuation plus the common Unicode quotes, dashes and ellipsis.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '‘' | '’'
                | '‚'
                | '‛'
                | '“'
                | '”'
                | '„'
                | '‟'
                | '…'
                | '–'
                | '—'
                | '‒'
                | '―'
                | '−'
                | '‐'
                | '‑'
                | '«'
                | '»'
                | '‹'
                | '›'
                | '¡'
                | '¿'
                | '·'
                | '•'
                | '′'
                | '″'
        )
}

fn map_char(c: char, out: &mut String, dash: &str) {
    match c {
        '“' | '”' | '„' | '‟' | '«' | '»' | '″' => out.push('"'),
        '‘' | '’' | '‚' | '‛' | '′' => out.push('\''),
        '…' => out.push_str("..."),
        '—' | '–' | '‒' | '―' | '−' => out.push_str(dash),
        c if c.is_whitespace() => out.push(' '),
        c => out.push(c),
    }
}

/// Normalizes running text so that it can be split on whitespace.
///
/// ```
/// use wrapup::corpus::normalize_text;
/// assert_eq!(normalize_text("“Stop”"), "\"Stop\"");
/// assert_eq!(normalize_text("a—b"), "a - b");
/// assert_eq!(normalize_text("Wait … what ?"), "Wait... what?");
/// ```
pub fn normalize_text(raw: &str) -> String {
    let mut mapped = String::with_capacity(raw.len());
    for c in raw.chars() {
        map_char(c, &mut mapped, " - ");
    }

    let mut out = String::with_capacity(mapped.len());
    for token in mapped.split_whitespace() {
        let glue = !out.is_empty() && (token.starts_with(ATTACH_LEFT) || out.ends_with(ATTACH_RIGHT));
        if !out.is_empty() && !glue {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// Character-level normalization of a single word token: quotes, ellipsis
/// and spaces are mapped, dashes are kept.
pub fn normalize_word(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.trim().chars() {
        match c {
            '—' | '–' => out.push(c),
            c => map_char(c, &mut out, "-"),
        }
    }
    out
}

/// Whether the last character of `word` is clause-final punctuation.
pub fn is_clause_final(word: &str) -> bool {
    word.chars()
        .next_back()
        .is_some_and(|c| CLAUSE_FINAL_PUNCTUATION.contains(&c))
}

/// One flag per word, true iff the word ends in clause-final punctuation.
pub fn mark_clause_final<S: AsRef<str>>(words: &[S]) -> Vec<bool> {
    words.iter().map(|w| is_clause_final(w.as_ref())).collect()
}

/// Whether `word` closes a sentence: it ends in `. ! ?`, possibly followed by
/// closing quotes or brackets.
pub fn ends_sentence(word: &str) -> bool {
    word.trim_end_matches(CLOSERS)
        .chars()
        .next_back()
        .is_some_and(|c| SENTENCE_FINAL.contains(&c))
}

fn punctuation_runs(s: &str, out: &mut Vec<String>) {
    let mut start = 0;
    let mut prev: Option<char> = None;
    for (i, c) in s.char_indices() {
        if prev.is_some_and(|p| p != c) {
            out.push(s[start..i].to_string());
            start = i;
        }
        prev = Some(c);
    }
    if start < s.len() {
        out.push(s[start..].to_string());
    }
}

/// Splits leading and trailing punctuation off a word token. Each run of a
/// repeated punctuation character becomes one piece; word-internal
/// punctuation (`don't`, `mid-word`) is left alone.
///
/// ```
/// use wrapup::corpus::split_punctuation;
/// assert_eq!(split_punctuation("(end)."), ["(", "end", ")", "."]);
/// assert_eq!(split_punctuation("don't"), ["don't"]);
/// assert_eq!(split_punctuation("wait..."), ["wait", "..."]);
/// ```
pub fn split_punctuation(word: &str) -> Vec<String> {
    let mut pieces = Vec::new();
    let core_start = word.char_indices().find(|&(_, c)| !is_punctuation(c));
    let Some((start, _)) = core_start else {
        punctuation_runs(word, &mut pieces);
        return pieces;
    };
    let end = word
        .char_indices()
        .rev()
        .find(|&(_, c)| !is_punctuation(c))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(word.len());
    punctuation_runs(&word[..start], &mut pieces);
    pieces.push(word[start..end].to_string());
    punctuation_runs(&word[end..], &mut pieces);
    pieces
}

/// True when every character of `s` is punctuation (and `s` is non-empty).
pub fn is_all_punctuation(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_punctuation)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quote_normalization() {
        assert_eq!(normalize_text("“Stop”"), "\"Stop\"");
        assert_eq!(normalize_text("it’s"), "it's");
    }

    #[test]
    fn dash_is_spaced_out() {
        assert_eq!(normalize_text("a—b"), "a - b");
        assert_eq!(normalize_text("a – b"), "a - b");
    }

    #[test]
    fn empty_text() {
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("   \t "), "");
    }

    #[test]
    fn punctuation_attaches_left() {
        assert_eq!(normalize_text("Hello , world ( again ) !"), "Hello, world (again)!");
        assert_eq!(normalize_text("no\u{a0}break"), "no break");
    }

    #[test]
    fn normalize_word_keeps_dashes() {
        assert_eq!(normalize_word("“so”—"), "\"so\"—");
        assert_eq!(normalize_word("wait…"), "wait...");
    }

    #[test]
    fn clause_final_flags() {
        assert_eq!(mark_clause_final(&["The", "end."]), [false, true]);
        assert_eq!(mark_clause_final(&["why?", "next"]), [true, false]);
        assert_eq!(mark_clause_final(&["mid-word"]), [false]);
        assert_eq!(mark_clause_final(&["don't", "dogs'", "so—"]), [false, true, true]);
    }

    #[test]
    fn sentence_ends() {
        assert!(ends_sentence("end."));
        assert!(ends_sentence("stop!\""));
        assert!(!ends_sentence("pause,"));
        assert!(!ends_sentence("Mr"));
    }

    #[test]
    fn splitting() {
        assert_eq!(split_punctuation("\"Stop!\""), ["\"", "Stop", "!", "\""]);
        assert_eq!(split_punctuation("..."), ["..."]);
        assert_eq!(split_punctuation("?!"), ["?", "!"]);
        assert_eq!(split_punctuation("word"), ["word"]);
        assert_eq!(split_punctuation("mid-word,"), ["mid-word", ","]);
    }
}
