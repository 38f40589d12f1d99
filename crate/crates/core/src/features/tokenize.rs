use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

// Letter/digit runs that may contain apostrophes between alphanumerics
// ("don't", "kids'" -> "kids" + "'"), or any single other non-space char.
static TOKEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[\p{L}\p{N}]+(?:['\u{2019}][\p{L}\p{N}]+)*|[^\s\p{L}\p{N}]").unwrap()
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
}

/// Splits text into lexical tokens and single punctuation tokens.
pub fn tokenize(text: &str, cfg: TokenizerConfig) -> Vec<String> {
    if cfg.lowercase {
        let lowered = text.to_lowercase();
        TOKEN.find_iter(&lowered).map(|m| m.as_str().to_owned()).collect()
    } else {
        TOKEN.find_iter(text).map(|m| m.as_str().to_owned()).collect()
    }
}
