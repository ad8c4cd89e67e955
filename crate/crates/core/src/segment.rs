//! Rule-based sentence splitting.
//!
//! A sentence ends at `.`, `!` or `?` followed by whitespace or the end of
//! the text, or at a full-width `。`, `！`, `？` wherever it occurs. Runs of
//! terminators and trailing closing quotes or brackets stay with the
//! sentence they close. A period after a known abbreviation or a single
//! capital initial does not end a sentence.

use crate::doc::{Language, Segment};
use crate::error::{Error, Result};

const ENGLISH_ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "cf", "approx",
    "dept", "est", "fig", "inc", "ltd", "co", "corp", "no", "vol", "jan", "feb", "mar", "apr",
    "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "u.s", "a.m", "p.m",
];

const GERMAN_ABBREVIATIONS: &[&str] = &[
    "z.b", "bzw", "usw", "ca", "nr", "dr", "prof", "hr", "fr", "vgl", "d.h", "u.a", "s", "str",
    "jh", "evtl", "ggf", "inkl", "sog",
];

fn is_ascii_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_fullwidth_terminator(c: char) -> bool {
    matches!(c, '。' | '！' | '？' | '．')
}

fn is_closer(c: char) -> bool {
    matches!(
        c,
        '"' | '\'' | ')' | ']' | '}' | '»' | '”' | '’' | '」' | '』' | '）' | '】' | '〉' | '》'
    )
}

fn abbreviations(language: Language) -> &'static [&'static str] {
    match language {
        Language::En | Language::Other => ENGLISH_ABBREVIATIONS,
        Language::De => GERMAN_ABBREVIATIONS,
        Language::Ja | Language::Zh => &[],
    }
}

/// True when the word ending right before the period at `dot` is an
/// abbreviation or a one-letter initial.
fn ends_with_abbreviation(text: &str, dot: usize, language: Language) -> bool {
    let head = &text[..dot];
    let word_start = head
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace() || matches!(c, '(' | '"' | '\'' | '“' | '‘'))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    let word = &head[word_start..];
    if word.is_empty() {
        return false;
    }
    let mut chars = word.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        // "I" and "A" are words, not initials.
        if c.is_uppercase() && !matches!(c, 'I' | 'A') && !language.is_unspaced() {
            return true;
        }
    }
    let lower = word.to_lowercase();
    abbreviations(language).contains(&lower.as_str())
}

/// Splits `text` into trimmed, non-empty sentence segments.
///
/// Text with no boundary comes back as a single segment. Empty or
/// whitespace-only input is rejected.
pub fn segment(text: &str, language: Language) -> Result<Vec<Segment>> {
    if text.trim().is_empty() {
        return Err(Error::DegenerateDocument(
            "empty or whitespace-only text".into(),
        ));
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut k = 0usize;
    while k < chars.len() {
        let (pos, c) = chars[k];
        if !(is_ascii_terminator(c) || is_fullwidth_terminator(c)) {
            k += 1;
            continue;
        }
        let fullwidth = is_fullwidth_terminator(c);
        let mut run_end = k + 1;
        let mut single_period = c == '.';
        while run_end < chars.len()
            && (is_ascii_terminator(chars[run_end].1) || is_fullwidth_terminator(chars[run_end].1))
        {
            single_period = false;
            run_end += 1;
        }
        while run_end < chars.len() && is_closer(chars[run_end].1) {
            run_end += 1;
        }
        let at_end = run_end == chars.len();
        let boundary = if fullwidth {
            true
        } else if at_end || chars[run_end].1.is_whitespace() {
            !(single_period && ends_with_abbreviation(text, pos, language))
        } else {
            false
        };
        if boundary {
            let cut = if at_end { text.len() } else { chars[run_end].0 };
            out.extend(Segment::new(&text[start..cut]));
            start = cut;
        }
        k = run_end;
    }
    out.extend(Segment::new(&text[start..]));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(text: &str, language: Language) -> Vec<String> {
        segment(text, language)
            .unwrap()
            .into_iter()
            .map(|s| s.text().to_owned())
            .collect()
    }

    #[test]
    fn two_english_sentences() {
        assert_eq!(
            texts("I love cats. I love dogs.", Language::En),
            ["I love cats.", "I love dogs."]
        );
    }

    #[test]
    fn no_boundary_is_one_segment() {
        assert_eq!(texts("Hello", Language::En), ["Hello"]);
    }

    #[test]
    fn japanese_period_without_space() {
        assert_eq!(texts("A。B。", Language::Ja), ["A。", "B。"]);
        assert_eq!(
            texts("猫が好きです。犬も好きです！本当？", Language::Ja),
            ["猫が好きです。", "犬も好きです！", "本当？"]
        );
    }

    #[test]
    fn japanese_closing_bracket_stays() {
        assert_eq!(
            texts("彼は「行く。」と言った。次へ。", Language::Ja),
            ["彼は「行く。」", "と言った。", "次へ。"]
        );
    }

    #[test]
    fn abbreviations_do_not_split() {
        assert_eq!(
            texts("Dr. Smith met J. Doe, e.g. at noon. Then left.", Language::En),
            ["Dr. Smith met J. Doe, e.g. at noon.", "Then left."]
        );
        assert_eq!(
            texts("Das ist z.B. gut. Ja.", Language::De),
            ["Das ist z.B. gut.", "Ja."]
        );
    }

    #[test]
    fn decimals_and_terminator_runs() {
        assert_eq!(
            texts("Pi is 3.14. Really?! \"Yes.\" Fine", Language::En),
            ["Pi is 3.14.", "Really?!", "\"Yes.\"", "Fine"]
        );
    }

    #[test]
    fn whitespace_collapses() {
        assert_eq!(texts("  A.   \n\n  B.  ", Language::En), ["A.", "B."]);
        assert_eq!(texts("  Yes.   \n\n  No.  ", Language::En), ["Yes.", "No."]);
        assert_eq!(texts("So do I. Then go.", Language::En), ["So do I.", "Then go."]);
    }

    #[test]
    fn empty_is_degenerate() {
        assert!(matches!(
            segment("   \n\t", Language::En),
            Err(Error::DegenerateDocument(_))
        ));
        assert!(segment("", Language::Ja).is_err());
    }

    fn strip_ws(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    proptest! {
        #[test]
        fn reconstructs_non_whitespace(text in "[a-zA-Z .!?。'\"\n]{1,60}") {
            prop_assume!(!text.trim().is_empty());
            let segs = segment(&text, Language::En).unwrap();
            let joined: String = segs.iter().map(|s| s.text()).collect();
            prop_assert_eq!(strip_ws(&joined), strip_ws(&text));
            for s in &segs {
                prop_assert!(!s.text().is_empty());
                prop_assert_eq!(s.text(), s.text().trim());
            }
        }

        #[test]
        fn idempotent(text in "[a-zA-Z .!?。」'\n]{1,60}", ja in any::<bool>()) {
            prop_assume!(!text.trim().is_empty());
            let lang = if ja { Language::Ja } else { Language::En };
            for s in segment(&text, lang).unwrap() {
                let again = segment(s.text(), lang).unwrap();
                prop_assert_eq!(again.len(), 1);
                prop_assert_eq!(again[0].text(), s.text());
            }
        }
    }
}
