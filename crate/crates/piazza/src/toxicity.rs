//! Pluggable per-text toxicity scoring.
//!
//! Real classifier output is ingested from an offline sidecar file keyed
//! by content id, keeping runs free of model dependencies. The bundled
//! lexicon scorer is a deterministic, non-semantic stand-in used by tests
//! and the stub driver pipeline.

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::ContentId;
use crate::stats::{self, StatsError};

/// Scores one text on [0, 1]. Implementations must be deterministic per
/// (scorer, text).
pub trait ToxicityScorer {
    fn score(&self, content_id: &ContentId, text: &str) -> Result<f64, ToxicityError>;
}

/// Counts marker-lexicon hits normalised by token count, then scales by a
/// density factor and clips to [0, 1]. Zero hits score exactly 0.0, and
/// padding a text with neutral tokens can only lower the score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexiconScorer {
    pub lexicon: Vec<String>,
    pub density_scale: f64,
}

pub const DEFAULT_LEXICON: [&str; 8] = [
    "damn", "hell", "idiots", "garbage", "shameful", "disgrace", "pathetic", "clowns",
];

impl Default for LexiconScorer {
    fn default() -> Self {
        LexiconScorer {
            lexicon: DEFAULT_LEXICON.iter().map(|s| s.to_string()).collect(),
            density_scale: 4.0,
        }
    }
}

fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().filter_map(|raw| {
        let token: String = raw
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if token.is_empty() {
            None
        } else {
            Some(token)
        }
    })
}

impl ToxicityScorer for LexiconScorer {
    fn score(&self, _content_id: &ContentId, text: &str) -> Result<f64, ToxicityError> {
        if text.trim().is_empty() {
            return Err(ToxicityError::EmptyText);
        }
        let mut tokens = 0usize;
        let mut hits = 0usize;
        for token in tokenize(text) {
            tokens += 1;
            if self.lexicon.iter().any(|m| m == &token) {
                hits += 1;
            }
        }
        if tokens == 0 {
            return Ok(0.0);
        }
        Ok((self.density_scale * hits as f64 / tokens as f64).min(1.0))
    }
}

#[derive(Debug, Deserialize)]
struct SidecarLine {
    content_id: ContentId,
    toxicity: f64,
}

/// Reads precomputed scores from a JSON-lines sidecar, one
/// `{"content_id", "toxicity"}` object per line.
#[derive(Debug, Clone, Default)]
pub struct SidecarScorer {
    scores: HashMap<ContentId, f64>,
}

impl SidecarScorer {
    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, ToxicityError> {
        let mut scores = HashMap::new();
        for line in reader.lines() {
            let line = line.map_err(|e| ToxicityError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: SidecarLine =
                serde_json::from_str(&line).map_err(|e| ToxicityError::Io(e.to_string()))?;
            if !(0.0..=1.0).contains(&entry.toxicity) {
                return Err(ToxicityError::InvalidScore {
                    content_id: entry.content_id,
                    value: entry.toxicity,
                });
            }
            scores.insert(entry.content_id, entry.toxicity);
        }
        Ok(SidecarScorer { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl ToxicityScorer for SidecarScorer {
    fn score(&self, content_id: &ContentId, _text: &str) -> Result<f64, ToxicityError> {
        self.scores
            .get(content_id)
            .copied()
            .ok_or_else(|| ToxicityError::MissingScore(content_id.clone()))
    }
}

/// 95th percentile with linear interpolation between closest ranks; the
/// convention matches the activity threshold's.
pub fn percentile_95(scores: &[f64]) -> Result<f64, StatsError> {
    stats::percentile(scores, 0.95)
}

#[derive(Debug, Error)]
pub enum ToxicityError {
    #[error("cannot score empty text")]
    EmptyText,
    #[error("no sidecar score for content {0}")]
    MissingScore(ContentId),
    #[error("sidecar score {value} for {content_id} outside [0, 1]")]
    InvalidScore { content_id: ContentId, value: f64 },
    #[error("sidecar io: {0}")]
    Io(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
