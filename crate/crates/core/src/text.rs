//! Text normalization and tokenization for raw post text.

use std::sync::LazyLock;

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

static URL_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?:https?://|www\.)\S+").unwrap());
static MENTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());

/// Normalize raw text: Unicode NFKC, lowercase, URLs and @-mentions removed,
/// '#' stripped from hashtags (the word is kept), whitespace collapsed.
pub fn normalize_text(raw: &str) -> String {
    let nfkc: String = raw.nfkc().collect();
    let lower = nfkc.to_lowercase();
    let no_urls = URL_RE.replace_all(&lower, " ");
    let no_mentions = MENTION_RE.replace_all(&no_urls, " ");
    let dehashed = no_mentions.replace('#', "");
    dehashed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Split normalized text on non-alphanumeric boundaries, keeping apostrophes
/// between alphanumerics. Tokens shorter than 2 characters are dropped; no
/// stop-word removal (lexicon membership is the filter downstream).
pub fn tokenize(normalized: &str) -> Vec<String> {
    let chars: Vec<char> = normalized.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let keep = c.is_alphanumeric()
            || (c == '\''
                && i > 0
                && i + 1 < chars.len()
                && chars[i - 1].is_alphanumeric()
                && chars[i + 1].is_alphanumeric());
        if keep {
            current.push(c);
        } else if !current.is_empty() {
            if current.chars().count() >= 2 {
                tokens.push(std::mem::take(&mut current));
            } else {
                current.clear();
            }
        }
    }
    if current.chars().count() >= 2 {
        tokens.push(current);
    }
    tokens
}
