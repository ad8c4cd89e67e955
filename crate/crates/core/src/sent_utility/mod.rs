//! Sentence-level utilities `u_s(a, b)` in `[0, 1]`.

mod adapter;
mod embedding;
mod lexical;

use std::sync::Arc;

pub use adapter::{AdapterClient, AdapterConfig, ScorePair, ScoreRequest, ScoreResponse, Transport};
pub use embedding::EmbeddingTable;
pub use lexical::{chrf, sentence_bleu, token_f1, Tokenization};

use crate::doc::{Language, Segment};
use crate::error::{Error, Result};

/// A pluggable sentence scorer.
#[derive(Debug, Clone)]
pub enum SentenceUtility {
    /// 1 when the two strings are byte-identical, else 0.
    ExactMatch,
    TokenF1 {
        tokenization: Tokenization,
    },
    SentenceBleu {
        max_order: usize,
        tokenization: Tokenization,
    },
    ChrF {
        max_order: usize,
        beta: f64,
    },
    EmbeddingCosine(Arc<EmbeddingTable>),
    ExternalAdapter(Arc<AdapterClient>),
}

impl SentenceUtility {
    pub fn token_f1(language: Language) -> SentenceUtility {
        SentenceUtility::TokenF1 {
            tokenization: default_tokenization(language),
        }
    }

    pub fn sentence_bleu(language: Language) -> SentenceUtility {
        SentenceUtility::SentenceBleu {
            max_order: 4,
            tokenization: default_tokenization(language),
        }
    }

    pub fn chrf() -> SentenceUtility {
        SentenceUtility::ChrF {
            max_order: 6,
            beta: 2.0,
        }
    }

    /// Whether `u_s(a, b) == u_s(b, a)` is guaranteed.
    pub fn is_symmetric(&self) -> bool {
        match self {
            SentenceUtility::ExactMatch
            | SentenceUtility::TokenF1 { .. }
            | SentenceUtility::EmbeddingCosine(_) => true,
            SentenceUtility::SentenceBleu { .. } | SentenceUtility::ChrF { .. } => false,
            SentenceUtility::ExternalAdapter(client) => client.config().symmetric,
        }
    }

    /// Stable identifier of the scorer and its parameters.
    pub fn id(&self) -> String {
        match self {
            SentenceUtility::ExactMatch => "exact-match".into(),
            SentenceUtility::TokenF1 { tokenization } => format!("token-f1/{tokenization:?}"),
            SentenceUtility::SentenceBleu {
                max_order,
                tokenization,
            } => format!("bleu/{max_order}/{tokenization:?}"),
            SentenceUtility::ChrF { max_order, beta } => format!("chrf/{max_order}/{beta}"),
            SentenceUtility::EmbeddingCosine(table) => {
                format!("embedding-cosine/{}x{}", table.len(), table.dim())
            }
            SentenceUtility::ExternalAdapter(client) => {
                format!("adapter/{}", client.config().metric)
            }
        }
    }

    /// Scores two raw strings. Used for segments and for whole documents.
    pub fn score_text(&self, hyp: &str, reference: &str) -> Result<f64> {
        let v = match self {
            SentenceUtility::ExactMatch => {
                if hyp == reference {
                    1.0
                } else {
                    0.0
                }
            }
            SentenceUtility::TokenF1 { tokenization } => token_f1(hyp, reference, *tokenization),
            SentenceUtility::SentenceBleu {
                max_order,
                tokenization,
            } => sentence_bleu(hyp, reference, *max_order, *tokenization),
            SentenceUtility::ChrF { max_order, beta } => chrf(hyp, reference, *max_order, *beta),
            SentenceUtility::EmbeddingCosine(table) => table.cosine(hyp, reference)?,
            SentenceUtility::ExternalAdapter(client) => client.score_batch(&[(hyp, reference)])?[0],
        };
        Ok(v)
    }

    pub fn score_pair(&self, a: &Segment, b: &Segment) -> Result<f64> {
        self.score_text(a.text(), b.text())
    }

    /// Scores many pairs; the adapter sees them as one request. Errors carry
    /// the index of the failing pair.
    pub fn batch_score_text(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>> {
        match self {
            SentenceUtility::ExternalAdapter(client) => client.score_batch(pairs).map_err(|e| match e {
                Error::AdapterRangeViolation { index, .. } => e.at_batch_item(index),
                other => other,
            }),
            _ => pairs
                .iter()
                .enumerate()
                .map(|(k, (h, r))| self.score_text(h, r).map_err(|e| e.at_batch_item(k)))
                .collect(),
        }
    }

    pub fn batch_score(&self, pairs: &[(&Segment, &Segment)]) -> Result<Vec<f64>> {
        let texts: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.text(), b.text())).collect();
        self.batch_score_text(&texts)
    }
}

fn default_tokenization(language: Language) -> Tokenization {
    if language.is_unspaced() {
        Tokenization::Char
    } else {
        Tokenization::Whitespace
    }
}

/// Maps a lower-is-better score on `[lo, hi]` to a utility on `[0, 1]`.
/// `raw` is clamped into the range first.
pub fn rescale_lower_better(raw: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::InvalidRange { lo, hi });
    }
    let raw = raw.clamp(lo, hi);
    Ok((hi - raw) / (hi - lo))
}
