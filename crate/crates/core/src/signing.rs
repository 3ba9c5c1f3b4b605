//! One sign per directed Ego -> Alter relationship.
//!
//! A relationship is negative when its share of negative interactions is
//! strictly above the threshold (0.17 by default, about one negative for every
//! five positives). Neutral interactions, including plain retweets, stay in
//! the denominator.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sentiment::{Polarity, SentimentLabel};

pub const DEFAULT_THRESHOLD: f64 = 0.17;

#[derive(Debug, Error)]
pub enum SigningError {
    #[error("no interactions for {ego} -> {alter}")]
    NoInteractions { ego: String, alter: String },
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
        }
    }

    pub fn is_negative(self) -> bool {
        self == Sign::Negative
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipStats {
    pub ego_id: String,
    pub alter_id: String,
    pub n_total: u64,
    pub n_negative: u64,
    pub n_positive: u64,
    pub n_neutral: u64,
}

impl RelationshipStats {
    pub fn negative_fraction(&self) -> f64 {
        self.n_negative as f64 / self.n_total as f64
    }
}

pub fn aggregate_relationship<'a>(
    ego_id: &str,
    alter_id: &str,
    labels: impl IntoIterator<Item = &'a SentimentLabel>,
) -> Result<RelationshipStats, SigningError> {
    let mut stats = RelationshipStats {
        ego_id: ego_id.to_string(),
        alter_id: alter_id.to_string(),
        n_total: 0,
        n_negative: 0,
        n_positive: 0,
        n_neutral: 0,
    };
    for label in labels {
        stats.n_total += 1;
        match label.polarity {
            Polarity::Negative => stats.n_negative += 1,
            Polarity::Positive => stats.n_positive += 1,
            Polarity::Neutral => stats.n_neutral += 1,
        }
    }
    if stats.n_total == 0 {
        return Err(SigningError::NoInteractions {
            ego: ego_id.to_string(),
            alter: alter_id.to_string(),
        });
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedRelationship {
    pub stats: RelationshipStats,
    pub sign: Sign,
    pub threshold_used: f64,
}

/// Negative iff the negative fraction is strictly greater than `threshold`.
pub fn sign_relationship(stats: RelationshipStats, threshold: f64) -> SignedRelationship {
    let sign = if stats.negative_fraction() > threshold {
        Sign::Negative
    } else {
        Sign::Positive
    };
    SignedRelationship {
        stats,
        sign,
        threshold_used: threshold,
    }
}

pub fn validate_threshold(threshold: f64) -> Result<(), SigningError> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(SigningError::InvalidThreshold(threshold))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EdgeRow {
    ego: String,
    alter: String,
    n_total: u64,
    n_neg: u64,
    n_pos: u64,
    n_neu: u64,
    fraction: f64,
    sign: Sign,
}

/// CSV `ego,alter,n_total,n_neg,n_pos,n_neu,fraction,sign`.
pub fn write_signed_edges<W: Write>(
    edges: &[SignedRelationship],
    out: W,
) -> Result<(), SigningError> {
    let mut w = csv::Writer::from_writer(out);
    for e in edges {
        w.serialize(EdgeRow {
            ego: e.stats.ego_id.clone(),
            alter: e.stats.alter_id.clone(),
            n_total: e.stats.n_total,
            n_neg: e.stats.n_negative,
            n_pos: e.stats.n_positive,
            n_neu: e.stats.n_neutral,
            fraction: e.stats.negative_fraction(),
            sign: e.sign,
        })?;
    }
    if edges.is_empty() {
        w.write_record(["ego", "alter", "n_total", "n_neg", "n_pos", "n_neu", "fraction", "sign"])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads edges written by [`write_signed_edges`]; the stored sign is kept as is.
pub fn read_signed_edges<R: Read>(
    input: R,
    threshold: f64,
) -> Result<Vec<SignedRelationship>, SigningError> {
    let mut r = csv::Reader::from_reader(input);
    let mut edges = Vec::new();
    for row in r.deserialize() {
        let row: EdgeRow = row?;
        edges.push(SignedRelationship {
            stats: RelationshipStats {
                ego_id: row.ego,
                alter_id: row.alter,
                n_total: row.n_total,
                n_negative: row.n_neg,
                n_positive: row.n_pos,
                n_neutral: row.n_neu,
            },
            sign: row.sign,
            threshold_used: threshold,
        });
    }
    Ok(edges)
}
