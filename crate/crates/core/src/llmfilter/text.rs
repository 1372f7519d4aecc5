//! Whole-token matching on Unicode word boundaries.

use unicode_segmentation::UnicodeSegmentation;

/// Case-folded Unicode words of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_lowercase).collect()
}

/// Whether `phrase` occurs in `tokens` as a contiguous run. An empty phrase never matches.
pub fn contains_phrase(tokens: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && tokens.windows(phrase.len()).any(|w| w == phrase)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn whole_tokens_only() {
        assert!(contains_phrase(&t("The Road act"), &t("road")));
        assert!(!contains_phrase(&t("broadcast reform"), &t("road")));
        assert!(contains_phrase(&t("new bus lanes, now"), &t("Bus Lanes")));
        assert!(!contains_phrase(&t("bus stop lanes"), &t("bus lanes")));
        assert!(!contains_phrase(&t("anything"), &[]));
    }

    #[test]
    fn unicode_words_and_case_folding() {
        assert_eq!(t("Straße, ÉCOLE-road"), vec!["straße", "école", "road"]);
        assert_eq!(t("도로 건설"), vec!["도로", "건설"]);
    }
}
