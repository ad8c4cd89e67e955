//! Documents as weighted sequences of sentence segments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment;

/// Language tag driving sentence segmentation and lexical tokenization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[default]
    En,
    De,
    Ja,
    Zh,
    Other,
}

impl Language {
    /// Parses a BCP-47-ish tag by its primary subtag (`en-US` -> `En`).
    pub fn from_tag(tag: &str) -> Language {
        let primary = tag
            .split(['-', '_'])
            .next()
            .unwrap_or("")
            .to_ascii_lowercase();
        match primary.as_str() {
            "en" => Language::En,
            "de" => Language::De,
            "ja" => Language::Ja,
            "zh" => Language::Zh,
            _ => Language::Other,
        }
    }

    /// Scripts written without spaces between words.
    pub fn is_unspaced(self) -> bool {
        matches!(self, Language::Ja | Language::Zh)
    }
}

impl FromStr for Language {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(Language::from_tag(s))
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            Language::En => "en",
            Language::De => "de",
            Language::Ja => "ja",
            Language::Zh => "zh",
            Language::Other => "other",
        };
        f.write_str(tag)
    }
}

/// A trimmed, non-empty unit of text (normally one sentence).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    text: String,
    char_len: usize,
}

impl Segment {
    /// Trims `text`; returns `None` when nothing but whitespace remains.
    pub fn new(text: &str) -> Option<Segment> {
        let text = text.trim();
        if text.is_empty() {
            return None;
        }
        Some(Segment {
            char_len: text.chars().count(),
            text: text.to_owned(),
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn char_len(&self) -> usize {
        self.char_len
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// How probability mass is spread over a document's segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// Every segment gets `1 / m`.
    #[default]
    Uniform,
    /// Mass proportional to the segment's character count.
    #[serde(rename = "length")]
    LengthProportional,
}

impl FromStr for WeightScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(WeightScheme::Uniform),
            "length" | "length-proportional" => Ok(WeightScheme::LengthProportional),
            other => Err(format!("unknown weight scheme {other:?}")),
        }
    }
}

/// Segment weights under `scheme`. The result sums to one.
///
/// Panics if `segments` is empty; a [`Document`] never is.
pub fn make_weights(segments: &[Segment], scheme: WeightScheme) -> Vec<f64> {
    assert!(!segments.is_empty(), "make_weights needs at least one segment");
    match scheme {
        WeightScheme::Uniform => {
            let w = 1.0 / segments.len() as f64;
            vec![w; segments.len()]
        }
        WeightScheme::LengthProportional => {
            let total: usize = segments.iter().map(Segment::char_len).sum();
            segments
                .iter()
                .map(|s| s.char_len() as f64 / total as f64)
                .collect()
        }
    }
}

/// Checks that `w` is a probability vector of length `len`.
pub fn validate_weights(w: &[f64], len: usize) -> Result<()> {
    if w.len() != len {
        return Err(Error::InvalidWeights(format!(
            "expected {len} weights, got {}",
            w.len()
        )));
    }
    if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidWeights(format!("entry {bad} is not a mass")));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

/// One candidate output, split into segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: String,
    text: String,
    segments: Vec<Segment>,
}

impl Document {
    /// Segments raw text with the built-in sentencizer.
    pub fn from_text(id: impl Into<String>, text: &str, language: Language) -> Result<Document> {
        let segments = segment::segment(text, language)?;
        Ok(Document {
            id: id.into(),
            text: text.trim().to_owned(),
            segments,
        })
    }

    /// Builds a document from segments produced upstream. Whitespace-only
    /// entries are dropped.
    pub fn from_segments<S: AsRef<str>>(id: impl Into<String>, parts: &[S]) -> Result<Document> {
        let id = id.into();
        let segments: Vec<Segment> = parts.iter().filter_map(|p| Segment::new(p.as_ref())).collect();
        if segments.is_empty() {
            return Err(Error::DegenerateDocument(format!(
                "document {id:?} has no non-empty segment"
            )));
        }
        let text = segments
            .iter()
            .map(Segment::text)
            .collect::<Vec<_>>()
            .join(" ");
        Ok(Document { id, text, segments })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// The whole text, as given (or the segments joined by single spaces).
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn weights(&self, scheme: WeightScheme) -> Vec<f64> {
        make_weights(&self.segments, scheme)
    }

    /// Same segment sequence, byte for byte.
    pub fn same_content(&self, other: &Document) -> bool {
        std::ptr::eq(self, other) || self.segments == other.segments
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segs(parts: &[&str]) -> Vec<Segment> {
        parts.iter().map(|p| Segment::new(p).unwrap()).collect()
    }

    #[test]
    fn uniform_four() {
        let w = make_weights(&segs(&["a", "b", "c", "d"]), WeightScheme::Uniform);
        assert_eq!(w, vec![0.25; 4]);
    }

    #[test]
    fn length_proportional_ten_and_thirty() {
        let s = segs(&["a".repeat(10).as_str(), "b".repeat(30).as_str()]);
        let w = make_weights(&s, WeightScheme::LengthProportional);
        assert_eq!(w, vec![0.25, 0.75]);
    }

    #[test]
    fn single_segment_gets_all_mass() {
        let s = segs(&["only one"]);
        assert_eq!(make_weights(&s, WeightScheme::Uniform), vec![1.0]);
        assert_eq!(make_weights(&s, WeightScheme::LengthProportional), vec![1.0]);
    }

    #[test]
    fn char_len_counts_chars_not_bytes() {
        let s = Segment::new("  猫が好き。 ").unwrap();
        assert_eq!(s.text(), "猫が好き。");
        assert_eq!(s.char_len(), 5);
    }

    #[test]
    fn whitespace_segments_are_dropped() {
        let d = Document::from_segments("d", &["A.", "   ", "B."]).unwrap();
        assert_eq!(d.len(), 2);
        assert!(Document::from_segments("e", &[" ", ""]).is_err());
    }

    #[test]
    fn language_tags() {
        assert_eq!(Language::from_tag("ja-JP"), Language::Ja);
        assert_eq!(Language::from_tag("EN"), Language::En);
        assert_eq!(Language::from_tag("fr"), Language::Other);
    }

    #[test]
    fn weight_validation() {
        assert!(validate_weights(&[0.5, 0.5], 2).is_ok());
        assert!(validate_weights(&[0.5, 0.6], 2).is_err());
        assert!(validate_weights(&[1.5, -0.5], 2).is_err());
        assert!(validate_weights(&[1.0], 2).is_err());
    }
}
