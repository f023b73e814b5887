//! Validation quantities: coalition-by-coalition reply matrices, Pearson
//! correlations against reference data, reply-toxicity percentiles, and
//! opinion trajectories/shifts over daily snapshots.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AgentId, Coalition, ContentId, Event, EventKind, EventPayload, TopicId};
use crate::engine::DaySnapshot;
use crate::opinion::display_scale;
use crate::stats::{self, StatsError};
use crate::toxicity::{percentile_95, ToxicityError, ToxicityScorer};

/// Reply counts from the commenter's coalition (row) to the parent
/// author's coalition (column), in canonical coalition order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    pub counts: [[u64; 4]; 4],
}

impl InteractionMatrix {
    pub fn record(&mut self, from: Coalition, to: Coalition) {
        self.counts[from.index()][to.index()] += 1;
    }

    pub fn merge(&mut self, other: &InteractionMatrix) {
        for i in 0..4 {
            for j in 0..4 {
                self.counts[i][j] += other.counts[i][j];
            }
        }
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    pub fn total(&self) -> u64 {
        (0..4).map(|i| self.row_total(i)).sum()
    }

    /// Row-normalised proportions; rows with zero interactions are
    /// undefined.
    pub fn row_proportions(&self, row: usize) -> Option<[f64; 4]> {
        let total = self.row_total(row);
        if total == 0 {
            return None;
        }
        let mut out = [0.0; 4];
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = self.counts[row][j] as f64 / total as f64;
        }
        Some(out)
    }

    /// Diagonal proportions, one per coalition; undefined rows are None.
    pub fn in_group_vector(&self) -> [Option<f64>; 4] {
        let mut out = [None; 4];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.row_proportions(i).map(|row| row[i]);
        }
        out
    }

    /// Off-diagonal proportions in row-major order (three per coalition,
    /// twelve in total); rows without interactions contribute None.
    pub fn out_group_vector(&self) -> [Option<f64>; 12] {
        let mut out = [None; 12];
        let mut k = 0;
        for i in 0..4 {
            let row = self.row_proportions(i);
            for j in 0..4 {
                if i == j {
                    continue;
                }
                out[k] = row.map(|r| r[j]);
                k += 1;
            }
        }
        out
    }
}

/// Coalition of every agent in a snapshot.
pub fn coalition_map(snapshot: &DaySnapshot) -> BTreeMap<AgentId, Coalition> {
    snapshot
        .opinions
        .iter()
        .map(|(id, agent)| (id.clone(), agent.coalition))
        .collect()
}

fn content_authors(events: &[Event]) -> HashMap<ContentId, AgentId> {
    events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Post | EventKind::Comment))
        .filter_map(|e| e.content_id.clone().map(|id| (id, e.actor.clone())))
        .collect()
}

/// Builds the reply matrix of one event log: every comment is attributed
/// from the commenter's coalition to the parent author's coalition.
/// Multi-run aggregates merge per-log matrices, which equals the matrix of
/// the concatenated log.
pub fn interaction_matrix(
    events: &[Event],
    coalitions: &BTreeMap<AgentId, Coalition>,
) -> InteractionMatrix {
    let authors = content_authors(events);
    let mut matrix = InteractionMatrix::default();
    for event in events.iter().filter(|e| e.kind == EventKind::Comment) {
        let EventPayload::Comment { parent, .. } = &event.payload else { continue };
        let (Some(&from), Some(parent_author)) = (coalitions.get(&event.actor), authors.get(parent))
        else {
            continue;
        };
        let Some(&to) = coalitions.get(parent_author) else { continue };
        matrix.record(from, to);
    }
    matrix
}

/// Sample Pearson correlation. Single pass over the data using running
/// co-moments; constant inputs are undefined and reported as an error
/// rather than coerced to zero.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(AnalysisError::TooShort(a.len()));
    }
    let mut n = 0.0f64;
    let mut mean_a = 0.0;
    let mut mean_b = 0.0;
    let mut m2a = 0.0;
    let mut m2b = 0.0;
    let mut cab = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        n += 1.0;
        let dx = x - mean_a;
        mean_a += dx / n;
        let dy = y - mean_b;
        mean_b += dy / n;
        m2a += dx * (x - mean_a);
        m2b += dy * (y - mean_b);
        cab += dx * (y - mean_b);
    }
    if m2a == 0.0 || m2b == 0.0 {
        return Err(AnalysisError::ConstantInput);
    }
    Ok(cab / (m2a * m2b).sqrt())
}

/// Pearson over the positions where both vectors are defined; returns the
/// coefficient and the effective sample size.
pub fn pearson_pairwise(
    a: &[Option<f64>],
    b: &[f64],
) -> Result<(f64, usize), AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let mut xs = Vec::with_capacity(a.len());
    let mut ys = Vec::with_capacity(a.len());
    for (x, &y) in a.iter().zip(b) {
        if let Some(x) = x {
            xs.push(*x);
            ys.push(y);
        }
    }
    let n = xs.len();
    pearson(&xs, &ys).map(|r| (r, n))
}

/// Per coalition pair, the toxicity scores of every reply in the log.
pub type PairScores = Vec<Vec<Vec<f64>>>;

/// Four in-group values and twelve out-group values in row-major order.
pub type ToxicityVectors = ([Option<f64>; 4], [Option<f64>; 12]);

pub fn reply_toxicity_scores(
    events: &[Event],
    coalitions: &BTreeMap<AgentId, Coalition>,
    scorer: &dyn ToxicityScorer,
) -> Result<PairScores, AnalysisError> {
    let authors = content_authors(events);
    let mut scores: PairScores = vec![vec![Vec::new(); 4]; 4];
    for event in events.iter().filter(|e| e.kind == EventKind::Comment) {
        let EventPayload::Comment { parent, text, .. } = &event.payload else { continue };
        let (Some(&from), Some(parent_author)) = (coalitions.get(&event.actor), authors.get(parent))
        else {
            continue;
        };
        let Some(&to) = coalitions.get(parent_author) else { continue };
        let content_id = event
            .content_id
            .clone()
            .unwrap_or_else(|| ContentId::from(""));
        let score = scorer.score(&content_id, text)?;
        scores[from.index()][to.index()].push(score);
    }
    Ok(scores)
}

pub fn merge_pair_scores(into: &mut PairScores, from: PairScores) {
    for (i, row) in from.into_iter().enumerate() {
        for (j, cell) in row.into_iter().enumerate() {
            into[i][j].extend(cell);
        }
    }
}

/// 95th-percentile reply toxicity per coalition pair: four in-group values
/// and twelve out-group values in row-major order. Pairs without replies
/// are missing.
pub fn toxicity_vectors_from_scores(scores: &PairScores) -> Result<ToxicityVectors, AnalysisError> {
    let mut in_group = [None; 4];
    let mut out_group = [None; 12];
    let mut k = 0;
    for i in 0..4 {
        for j in 0..4 {
            let cell = &scores[i][j];
            let value = if cell.is_empty() { None } else { Some(percentile_95(cell)?) };
            if i == j {
                in_group[i] = value;
            } else {
                out_group[k] = value;
                k += 1;
            }
        }
    }
    Ok((in_group, out_group))
}

/// Single-log convenience wrapper.
pub fn toxicity_vectors(
    events: &[Event],
    scorer: &dyn ToxicityScorer,
    coalitions: &BTreeMap<AgentId, Coalition>,
) -> Result<ToxicityVectors, AnalysisError> {
    let scores = reply_toxicity_scores(events, coalitions, scorer)?;
    toxicity_vectors_from_scores(&scores)
}

/// Median stance of one coalition on one topic for one day, with a
/// percentile-bootstrap confidence interval over the pooled member scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub day: u32,
    pub topic: TopicId,
    pub coalition: Coalition,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

/// Median by selection rather than sorting; the bootstrap loop calls this
/// once per resample.
fn median_inplace(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (left, upper, _) = buf.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    if n % 2 == 1 {
        *upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower + *upper) / 2.0
    }
}

fn bootstrap_median_ci<R: Rng>(
    values: &[f64],
    resamples: usize,
    rng: &mut R,
) -> Result<(f64, f64), StatsError> {
    let mut medians = Vec::with_capacity(resamples);
    let mut resample = vec![0.0; values.len()];
    for _ in 0..resamples {
        for slot in resample.iter_mut() {
            *slot = values[rng.gen_range(0..values.len())];
        }
        medians.push(median_inplace(&mut resample));
    }
    Ok((
        stats::percentile(&medians, 0.025)?,
        stats::percentile(&medians, 0.975)?,
    ))
}

/// Pools member scores across runs per (day, topic, coalition) and reports
/// the median with a seeded 95% bootstrap interval. Coalitions without
/// members yield no series.
pub fn opinion_trajectories(
    runs: &[Vec<DaySnapshot>],
    resamples: usize,
    bootstrap_seed: u64,
) -> Result<Vec<TrajectoryPoint>, AnalysisError> {
    let mut pools: BTreeMap<(u32, TopicId, Coalition), Vec<f64>> = BTreeMap::new();
    for snapshots in runs {
        for snapshot in snapshots {
            for agent in snapshot.opinions.values() {
                for (topic, stance) in &agent.stances {
                    pools
                        .entry((snapshot.day, topic.clone(), agent.coalition))
                        .or_default()
                        .push(stance.score);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(bootstrap_seed);
    let mut points = Vec::with_capacity(pools.len());
    for ((day, topic, coalition), values) in pools {
        let median = stats::median(&values)?;
        let (ci_low, ci_high) = bootstrap_median_ci(&values, resamples, &mut rng)?;
        points.push(TrajectoryPoint {
            day,
            topic,
            coalition,
            median,
            ci_low,
            ci_high,
            n: values.len(),
        });
    }
    Ok(points)
}

/// Initial and final coalition medians per topic on the reporting scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftPoint {
    pub topic: TopicId,
    pub coalition: Coalition,
    pub initial_display: f64,
    pub final_display: f64,
}

pub fn opinion_shifts(runs: &[Vec<DaySnapshot>]) -> Result<Vec<ShiftPoint>, AnalysisError> {
    let mut first: BTreeMap<(TopicId, Coalition), Vec<f64>> = BTreeMap::new();
    let mut last: BTreeMap<(TopicId, Coalition), Vec<f64>> = BTreeMap::new();
    for snapshots in runs {
        if snapshots.len() < 2 {
            return Err(AnalysisError::TooFewSnapshots(snapshots.len()));
        }
        for (snapshot, pool) in [
            (snapshots.first().unwrap(), &mut first),
            (snapshots.last().unwrap(), &mut last),
        ] {
            for agent in snapshot.opinions.values() {
                for (topic, stance) in &agent.stances {
                    pool.entry((topic.clone(), agent.coalition))
                        .or_default()
                        .push(stance.score);
                }
            }
        }
    }
    let mut points = Vec::with_capacity(first.len());
    for ((topic, coalition), initial_values) in first {
        let final_values = &last[&(topic.clone(), coalition)];
        points.push(ShiftPoint {
            topic,
            coalition,
            initial_display: display_scale(stats::median(&initial_values)?),
            final_display: display_scale(stats::median(final_values)?),
        });
    }
    Ok(points)
}

/// Empirical vectors the simulated ones are correlated against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceData {
    pub in_group: Vec<f64>,
    pub out_group: Vec<f64>,
    pub toxicity_in_group: Vec<f64>,
    pub toxicity_out_group: Vec<f64>,
}

impl ReferenceData {
    pub fn load(path: &Path) -> Result<Self, AnalysisError> {
        let text = fs::read_to_string(path)
            .map_err(|e| AnalysisError::Reference(format!("{}: {e}", path.display())))?;
        let data: ReferenceData = serde_json::from_str(&text)
            .map_err(|e| AnalysisError::Reference(format!("{}: {e}", path.display())))?;
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        for (name, values, expected) in [
            ("in_group", &self.in_group, 4usize),
            ("out_group", &self.out_group, 12),
            ("toxicity_in_group", &self.toxicity_in_group, 4),
            ("toxicity_out_group", &self.toxicity_out_group, 12),
        ] {
            if values.len() != expected {
                return Err(AnalysisError::Reference(format!(
                    "{name} has {} values, expected {expected}",
                    values.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(AnalysisError::Reference(format!("{name} contains non-finite values")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 paired values, got {0}")]
    TooShort(usize),
    #[error("correlation undefined for constant input")]
    ConstantInput,
    #[error("need at least 2 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("reference data: {0}")]
    Reference(String),
    #[error(transparent)]
    Toxicity(#[from] ToxicityError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Builds a minimal event log with `replies[from][to]` comments from
    /// coalition `from` onto posts authored by coalition `to`. One agent
    /// per coalition; one post per coalition at hour 0.
    pub fn planted_log(
        replies: [[u64; 4]; 4],
        reply_text: &str,
    ) -> (Vec<Event>, BTreeMap<AgentId, Coalition>) {
        let coalitions: BTreeMap<AgentId, Coalition> = Coalition::ALL
            .iter()
            .map(|c| (AgentId::new(format!("a{}", c.index())), *c))
            .collect();
        let mut events = Vec::new();
        let mut seq = 0u64;
        for c in Coalition::ALL {
            events.push(Event {
                tick_day: 0,
                tick_hour: 0,
                seq,
                kind: EventKind::Post,
                actor: AgentId::new(format!("a{}", c.index())),
                target: None,
                content_id: Some(ContentId::new(format!("p{}", c.index()))),
                payload: EventPayload::Post { topic_id: TopicId::from("t"), text: "root".into() },
            });
            seq += 1;
        }
        let mut next = 0;
        for from in Coalition::ALL {
            for to in Coalition::ALL {
                for _ in 0..replies[from.index()][to.index()] {
                    events.push(Event {
                        tick_day: 0,
                        tick_hour: 1,
                        seq: next,
                        kind: EventKind::Comment,
                        actor: AgentId::new(format!("a{}", from.index())),
                        target: Some(AgentId::new(format!("a{}", to.index()))),
                        content_id: Some(ContentId::new(format!("c{next}"))),
                        payload: EventPayload::Comment {
                            topic_id: TopicId::from("t"),
                            text: reply_text.into(),
                            parent: ContentId::new(format!("p{}", to.index())),
                        },
                    });
                    next += 1;
                }
            }
        }
        (events, coalitions)
    }
}
