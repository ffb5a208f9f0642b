use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

/// Approximate number of LLM sub-word tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenCount(pub usize);

impl TokenCount {
    pub fn value(self) -> usize {
        self.0
    }
}

impl Add for TokenCount {
    type Output = TokenCount;

    fn add(self, rhs: Self) -> Self::Output {
        TokenCount(self.0 + rhs.0)
    }
}

impl fmt::Display for TokenCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Pluggable token counter, so a vendor tokenizer can replace the heuristic.
pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> TokenCount;
}

/// Vendor-free default: every maximal run of alphanumerics and underscores
/// costs `ceil(chars / 4)`, every other non-space character costs 1, and
/// whitespace is free.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicCounter;

impl TokenCounter for HeuristicCounter {
    fn count(&self, text: &str) -> TokenCount {
        let mut total = 0usize;
        let mut run = 0usize;
        for ch in text.chars() {
            if ch.is_alphanumeric() || ch == '_' {
                run += 1;
                continue;
            }
            total += run.div_ceil(4);
            run = 0;
            if !ch.is_whitespace() {
                total += 1;
            }
        }
        total += run.div_ceil(4);
        TokenCount(total)
    }
}

/// Counts with the default heuristic.
pub fn count_tokens(text: &str) -> TokenCount {
    HeuristicCounter.count(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_is_zero() {
        assert_eq!(count_tokens(""), TokenCount(0));
    }

    #[test]
    fn select_star() {
        // SELECT=2, *=1, FROM=1, t=1
        assert_eq!(count_tokens("SELECT * FROM t"), TokenCount(5));
    }

    #[test]
    fn eight_letter_word() {
        assert_eq!(count_tokens("aaaaaaaa"), TokenCount(2));
        assert_eq!(count_tokens("aaaaaaaaa"), TokenCount(3));
    }

    proptest! {
        #[test]
        fn monotone_under_concatenation(a in "[ -~\\n]{0,40}", b in "[ -~\\n]{0,40}") {
            let whole = count_tokens(&format!("{a}{b}"));
            prop_assert!(whole >= count_tokens(&a));
            prop_assert!(whole >= count_tokens(&b));
        }
    }
}
