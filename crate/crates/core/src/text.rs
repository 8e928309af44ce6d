//! Text normalization shared by query matching, keyword extraction and the
//! SDG glossary.
//!
//! The rule is: Unicode NFKC, lowercase, hyphens/dashes and slashes become
//! spaces, any other non-alphanumeric character is dropped, and the result is
//! split on whitespace. Normalized text is stored as a single `String` with
//! tokens separated by one ASCII space, so token slices can be borrowed from
//! it without further allocation.

use unicode_normalization::UnicodeNormalization;

fn is_separator(c: char) -> bool {
    matches!(
        c,
        '-' | '/' | '\u{2010}'..='\u{2015}' | '\u{2212}' | '\u{2044}' | '\u{2215}'
    )
}

/// Normalizes `text` into space-separated lowercase tokens.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let push_char = |c: char, out: &mut String| {
        if c.is_whitespace() || is_separator(c) {
            if !out.is_empty() && !out.ends_with(' ') {
                out.push(' ');
            }
        } else if c.is_alphanumeric() {
            if c.is_ascii() {
                out.push(c.to_ascii_lowercase());
            } else {
                out.extend(c.to_lowercase());
            }
        }
    };
    if text.is_ascii() {
        for c in text.chars() {
            push_char(c, &mut out);
        }
    } else {
        for c in text.nfkc() {
            push_char(c, &mut out);
        }
    }
    if out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Splits an already normalized string into its tokens.
pub fn tokens(normalized: &str) -> impl Iterator<Item = &str> {
    normalized.split(' ').filter(|t| !t.is_empty())
}

/// Normalizes `text` and returns the owned token list.
pub fn tokenize(text: &str) -> Vec<String> {
    tokens(&normalize(text)).map(str::to_owned).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercases_and_trims() {
        assert_eq!(normalize("  Malaria "), "malaria");
        assert_eq!(
            normalize("Millennium Development GOALS"),
            "millennium development goals"
        );
    }

    #[test]
    fn hyphen_and_slash_split() {
        assert_eq!(normalize("sub-Saharan Africa"), "sub saharan africa");
        assert_eq!(normalize("HIV/AIDS"), "hiv aids");
        assert_eq!(normalize("low\u{2013}income"), "low income");
    }

    #[test]
    fn punctuation_is_dropped() {
        assert_eq!(normalize("women's health, (2015)."), "womens health 2015");
        assert_eq!(normalize("..."), "");
    }

    #[test]
    fn nfkc_folds_compatibility_forms() {
        // fullwidth letters and the "fi" ligature
        assert_eq!(normalize("\u{FF27}\u{FF2F}\u{FF21}\u{FF2C}"), "goal");
        assert_eq!(normalize("\u{FB01}nance"), "finance");
    }

    #[test]
    fn tokenize_collapses_whitespace() {
        assert_eq!(tokenize("a \t b\n\nc"), vec!["a", "b", "c"]);
        assert!(tokenize("").is_empty());
    }
}
