//! Per-interaction polarity labels.
//!
//! Plain retweets are always neutral: the ego did not write the text. Replies,
//! mentions and quote retweets are scored on the ego's own words.

mod lexicon;
mod rules;

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{InteractionKind, InteractionRecord};

pub use lexicon::{load_lexicon, Lexicon, BUNDLED_LEXICON};
pub use rules::{normalize, score_text, strip_mentions_and_urls};

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("cannot read lexicon {path}: {source}")]
    LexiconFile {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("lexicon row {row}: {message}")]
    LexiconRow { row: usize, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("invalid scorer config: {0}")]
    InvalidConfig(&'static str),
}

/// Thresholds and rule weights for the lexicon scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    pub pos_threshold: f64,
    pub neg_threshold: f64,
    pub normalization_alpha: f64,
    pub negation_scalar: f64,
    pub caps_increment: f64,
    pub exclamation_increment: f64,
    pub max_exclamations: usize,
    pub question_increment: f64,
    pub max_question_bonus: f64,
    pub but_before_weight: f64,
    pub but_after_weight: f64,
    pub strip_mentions_and_urls: bool,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            pos_threshold: 0.05,
            neg_threshold: 0.05,
            normalization_alpha: 15.0,
            negation_scalar: -0.74,
            caps_increment: 0.733,
            exclamation_increment: 0.292,
            max_exclamations: 4,
            question_increment: 0.18,
            max_question_bonus: 0.96,
            but_before_weight: 0.5,
            but_after_weight: 1.5,
            strip_mentions_and_urls: true,
        }
    }
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<(), SentimentError> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !unit(self.pos_threshold) || !unit(self.neg_threshold) {
            return Err(SentimentError::InvalidConfig("thresholds must be in (0, 1)"));
        }
        if !(self.normalization_alpha > 0.0 && self.normalization_alpha.is_finite()) {
            return Err(SentimentError::InvalidConfig("normalization_alpha must be positive"));
        }
        Ok(())
    }

    pub fn polarity(&self, compound: f64) -> Polarity {
        if compound >= self.pos_threshold {
            Polarity::Positive
        } else if compound <= -self.neg_threshold {
            Polarity::Negative
        } else {
            Polarity::Neutral
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Negative,
    Neutral,
    Positive,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
            Polarity::Positive => "positive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentLabel {
    pub compound: f64,
    pub polarity: Polarity,
    pub forced_neutral: bool,
}

impl SentimentLabel {
    pub fn forced_neutral() -> Self {
        SentimentLabel {
            compound: 0.0,
            polarity: Polarity::Neutral,
            forced_neutral: true,
        }
    }
}

/// Anything that maps text to a compound score in [-1, 1].
pub trait SentimentScorer: Send + Sync {
    fn compound(&self, text: &str) -> f64;
}

/// The bundled lexicon-and-rules scorer.
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    lexicon: Lexicon,
    config: ScorerConfig,
}

impl LexiconScorer {
    pub fn new(lexicon: Lexicon, config: ScorerConfig) -> Self {
        LexiconScorer { lexicon, config }
    }

    pub fn bundled() -> Self {
        Self::new(Lexicon::bundled(), ScorerConfig::default())
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn config(&self) -> &ScorerConfig {
        &self.config
    }
}

impl SentimentScorer for LexiconScorer {
    fn compound(&self, text: &str) -> f64 {
        score_text(&self.lexicon, &self.config, text)
    }
}

impl<S: SentimentScorer + ?Sized> SentimentScorer for &S {
    fn compound(&self, text: &str) -> f64 {
        (**self).compound(text)
    }
}

pub fn label_interaction<S: SentimentScorer + ?Sized>(
    record: &InteractionRecord,
    scorer: &S,
    config: &ScorerConfig,
) -> SentimentLabel {
    if record.kind == InteractionKind::Retweet {
        return SentimentLabel::forced_neutral();
    }
    let compound = scorer.compound(&record.text);
    SentimentLabel {
        compound,
        polarity: config.polarity(compound),
        forced_neutral: false,
    }
}
