//! Lexical sentence scorers: token F1, smoothed sentence BLEU and chrF.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

/// How a segment is cut into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tokenization {
    #[default]
    Whitespace,
    /// One token per non-whitespace character; used for unspaced scripts.
    Char,
}

impl Tokenization {
    pub fn tokens(self, text: &str) -> Vec<&str> {
        match self {
            Tokenization::Whitespace => text.split_whitespace().collect(),
            Tokenization::Char => text
                .char_indices()
                .filter(|(_, c)| !c.is_whitespace())
                .map(|(i, c)| &text[i..i + c.len_utf8()])
                .collect(),
        }
    }
}

fn counts<T: Eq + Hash, I: IntoIterator<Item = T>>(items: I) -> HashMap<T, usize> {
    let mut map = HashMap::new();
    for item in items {
        *map.entry(item).or_insert(0) += 1;
    }
    map
}

fn clipped_overlap<T: Eq + Hash>(hyp: &HashMap<T, usize>, reference: &HashMap<T, usize>) -> usize {
    hyp.iter()
        .map(|(k, &c)| c.min(reference.get(k).copied().unwrap_or(0)))
        .sum()
}

/// Harmonic mean of token precision and recall over the clipped multiset
/// intersection.
pub fn token_f1(hyp: &str, reference: &str, tok: Tokenization) -> f64 {
    let h = tok.tokens(hyp);
    let r = tok.tokens(reference);
    if h.is_empty() || r.is_empty() {
        return if h.is_empty() && r.is_empty() { 1.0 } else { 0.0 };
    }
    let overlap = clipped_overlap(&counts(h.iter().copied()), &counts(r.iter().copied()));
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / h.len() as f64;
    let r = overlap as f64 / r.len() as f64;
    2.0 * p * r / (p + r)
}

fn ngrams<'a, 'b>(tokens: &'b [&'a str], n: usize) -> HashMap<&'b [&'a str], usize> {
    if tokens.len() < n {
        return HashMap::new();
    }
    counts(tokens.windows(n))
}

/// Sentence BLEU with add-one smoothing on the 2..=`max_order` precisions and
/// the usual brevity penalty.
pub fn sentence_bleu(hyp: &str, reference: &str, max_order: usize, tok: Tokenization) -> f64 {
    let h = tok.tokens(hyp);
    let r = tok.tokens(reference);
    if h.is_empty() || r.is_empty() {
        return if h.is_empty() && r.is_empty() { 1.0 } else { 0.0 };
    }
    let mut log_sum = 0.0;
    for n in 1..=max_order {
        let hn = ngrams(&h, n);
        let rn = ngrams(&r, n);
        let matches = clipped_overlap(&hn, &rn) as f64;
        let total = h.len().saturating_sub(n - 1) as f64;
        let precision = if n == 1 {
            matches / total
        } else {
            (matches + 1.0) / (total + 1.0)
        };
        if precision <= 0.0 {
            return 0.0;
        }
        log_sum += precision.ln();
    }
    let c = h.len() as f64;
    let rl = r.len() as f64;
    let bp = if c >= rl { 1.0 } else { (1.0 - rl / c).exp() };
    (bp * (log_sum / max_order as f64).exp()).clamp(0.0, 1.0)
}

/// Character n-gram F-score (whitespace removed), averaging precision and
/// recall over the orders both sides are long enough to have.
pub fn chrf(hyp: &str, reference: &str, max_order: usize, beta: f64) -> f64 {
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if h.is_empty() || r.is_empty() {
        return if h.is_empty() && r.is_empty() { 1.0 } else { 0.0 };
    }
    let mut p_sum = 0.0;
    let mut r_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_order {
        if h.len() < n || r.len() < n {
            break;
        }
        let hn = counts(h.windows(n));
        let rn = counts(r.windows(n));
        let overlap = clipped_overlap(&hn, &rn) as f64;
        p_sum += overlap / (h.len() - n + 1) as f64;
        r_sum += overlap / (r.len() - n + 1) as f64;
        orders += 1;
    }
    let p = p_sum / orders as f64;
    let r = r_sum / orders as f64;
    if p + r == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    ((1.0 + b2) * p * r / (b2 * p + r)).clamp(0.0, 1.0)
}
