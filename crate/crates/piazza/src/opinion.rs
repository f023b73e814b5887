//! Stance labels, the canonical label/score mapping, and the
//! Friedkin–Johnsen reference model run over daily graph snapshots.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AgentId, DomainError, SocialGraph};

/// The five ordinal stance labels. Declaration order is ascending score
/// order, so derived `Ord` matches stance intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StanceLabel {
    StronglyOpposed,
    Opposed,
    Neutral,
    Supportive,
    StronglySupportive,
}

impl StanceLabel {
    pub const ALL: [StanceLabel; 5] = [
        StanceLabel::StronglyOpposed,
        StanceLabel::Opposed,
        StanceLabel::Neutral,
        StanceLabel::Supportive,
        StanceLabel::StronglySupportive,
    ];

    /// Canonical numeric stance: the five labels map onto the evenly
    /// spaced anchors {-1, -0.5, 0, +0.5, +1}.
    pub fn score(self) -> f64 {
        match self {
            StanceLabel::StronglyOpposed => -1.0,
            StanceLabel::Opposed => -0.5,
            StanceLabel::Neutral => 0.0,
            StanceLabel::Supportive => 0.5,
            StanceLabel::StronglySupportive => 1.0,
        }
    }

    /// Nearest label for a score in [-1, +1]. Exact midpoints between two
    /// anchors resolve toward the label closer to neutral.
    pub fn nearest(score: f64) -> Result<StanceLabel, OpinionError> {
        if !score.is_finite() || !(-1.0..=1.0).contains(&score) {
            return Err(OpinionError::ScoreOutOfRange(score));
        }
        let mut best = StanceLabel::Neutral;
        let mut best_dist = f64::INFINITY;
        for label in StanceLabel::ALL {
            let anchor = label.score();
            let dist = (score - anchor).abs();
            let better = dist < best_dist
                || (dist == best_dist && anchor.abs() < best.score().abs());
            if better {
                best = label;
                best_dist = dist;
            }
        }
        Ok(best)
    }

    /// The bracketed form used by the reply protocol, e.g. `STRONGLY OPPOSED`.
    pub fn protocol_name(self) -> &'static str {
        match self {
            StanceLabel::StronglyOpposed => "STRONGLY OPPOSED",
            StanceLabel::Opposed => "OPPOSED",
            StanceLabel::Neutral => "NEUTRAL",
            StanceLabel::Supportive => "SUPPORTIVE",
            StanceLabel::StronglySupportive => "STRONGLY SUPPORTIVE",
        }
    }

    /// Stable identifier form, e.g. `STRONGLY_OPPOSED`.
    pub fn id_name(self) -> &'static str {
        match self {
            StanceLabel::StronglyOpposed => "STRONGLY_OPPOSED",
            StanceLabel::Opposed => "OPPOSED",
            StanceLabel::Neutral => "NEUTRAL",
            StanceLabel::Supportive => "SUPPORTIVE",
            StanceLabel::StronglySupportive => "STRONGLY_SUPPORTIVE",
        }
    }

    /// Parses a label, tolerating case, surrounding whitespace, a space or
    /// underscore separator, and trailing punctuation. Models are noisy.
    pub fn parse(text: &str) -> Option<StanceLabel> {
        let cleaned: String = text
            .trim()
            .trim_matches(|c: char| ".,;:!?".contains(c))
            .chars()
            .map(|c| if c == '_' || c.is_whitespace() { ' ' } else { c.to_ascii_uppercase() })
            .collect();
        let cleaned = cleaned.split_whitespace().collect::<Vec<_>>().join(" ");
        StanceLabel::ALL
            .into_iter()
            .find(|label| label.protocol_name() == cleaned)
    }

    /// One ordinal step toward `target`; saturates at the extremes.
    pub fn step_toward(self, target: f64) -> StanceLabel {
        let idx = StanceLabel::ALL.iter().position(|l| *l == self).unwrap();
        if target > self.score() && idx + 1 < StanceLabel::ALL.len() {
            StanceLabel::ALL[idx + 1]
        } else if target < self.score() && idx > 0 {
            StanceLabel::ALL[idx - 1]
        } else {
            self
        }
    }
}

impl std::fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id_name())
    }
}

/// Maps an internal score in [-1, +1] onto the reporting scale [-2, +2]
/// (2.0 reads as strongly supportive, -2.0 as strongly opposed).
pub fn display_scale(score: f64) -> f64 {
    2.0 * score
}

/// Parameters of the Friedkin–Johnsen update. Each agent blends the mean
/// opinion of its followees with its own frozen initial belief:
/// susceptibility 1 is a pure neighbor average, 0 is full stubbornness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FjParams {
    /// Per-agent susceptibility, each in [0, 1].
    pub susceptibility: Vec<f64>,
    /// Convergence threshold on the max-norm step difference.
    pub tolerance: f64,
    /// Iteration cap per day.
    pub max_iters: usize,
    /// When set, run exactly this many update steps per day instead of
    /// iterating to convergence.
    pub steps_per_day: Option<usize>,
}

impl FjParams {
    pub fn uniform(n: usize, lambda: f64) -> Self {
        FjParams {
            susceptibility: vec![lambda; n],
            tolerance: 1e-8,
            max_iters: 10_000,
            steps_per_day: None,
        }
    }

    pub fn validate(&self) -> Result<(), OpinionError> {
        if !(self.tolerance > 0.0) {
            return Err(OpinionError::InvalidParams(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        for (i, l) in self.susceptibility.iter().enumerate() {
            if !(0.0..=1.0).contains(l) {
                return Err(OpinionError::InvalidParams(format!(
                    "susceptibility[{i}] = {l} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Out-neighbor lists resolved against a fixed agent ordering, so opinion
/// vectors index consistently across days.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    out: Vec<Vec<usize>>,
}

impl NeighborIndex {
    pub fn build(graph: &SocialGraph, order: &[AgentId]) -> Result<Self, DomainError> {
        let positions: HashMap<&AgentId, usize> =
            order.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut out = vec![Vec::new(); order.len()];
        for id in order {
            if !graph.contains(id) {
                return Err(DomainError::UnknownAgent(id.clone()));
            }
        }
        for (from, to) in graph.edges() {
            if let (Some(&i), Some(&j)) = (positions.get(from), positions.get(to)) {
                out[i].push(j);
            }
        }
        Ok(NeighborIndex { out })
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }
}

/// One synchronous Friedkin–Johnsen step:
/// x'[i] = s[i] * mean(x[j] for j followed by i) + (1 - s[i]) * x0[i],
/// with agents that follow nobody held at x0[i].
pub fn fj_step(
    x: &[f64],
    x0: &[f64],
    neighbors: &NeighborIndex,
    susceptibility: &[f64],
) -> Result<Vec<f64>, OpinionError> {
    let n = neighbors.len();
    if x.len() != n || x0.len() != n || susceptibility.len() != n {
        return Err(OpinionError::DimensionMismatch {
            expected: n,
            got: x.len().min(x0.len()).min(susceptibility.len()),
        });
    }
    let mut next = vec![0.0; n];
    for i in 0..n {
        let out = &neighbors.out[i];
        if out.is_empty() {
            next[i] = x0[i];
        } else {
            let sum: f64 = out.iter().map(|&j| x[j]).sum();
            let social = sum / out.len() as f64;
            next[i] = susceptibility[i] * social + (1.0 - susceptibility[i]) * x0[i];
        }
    }
    Ok(next)
}

/// Convenience wrapper that builds the neighbor index from a graph.
pub fn fj_step_on_graph(
    x: &[f64],
    x0: &[f64],
    graph: &SocialGraph,
    order: &[AgentId],
    susceptibility: &[f64],
) -> Result<Vec<f64>, OpinionError> {
    let neighbors = NeighborIndex::build(graph, order)?;
    fj_step(x, x0, &neighbors, susceptibility)
}

/// Iterates `fj_step` on one graph until the max-norm step difference
/// falls below `tolerance` or `max_iters` is reached. Returns the final
/// vector and the number of steps taken.
pub fn fj_converge(
    start: &[f64],
    x0: &[f64],
    neighbors: &NeighborIndex,
    params: &FjParams,
) -> Result<(Vec<f64>, usize), OpinionError> {
    let mut x = start.to_vec();
    for iter in 0..params.max_iters {
        let next = fj_step(&x, x0, neighbors, &params.susceptibility)?;
        let delta = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        x = next;
        if delta < params.tolerance {
            return Ok((x, iter + 1));
        }
    }
    Ok((x, params.max_iters))
}

/// Runs the model across consecutive daily graph snapshots, carrying each
/// day's result into the next. With `steps_per_day` unset, every day
/// iterates to convergence on that day's graph; otherwise each day takes
/// exactly the configured number of steps. Returns one opinion vector per
/// snapshot.
pub fn fj_run(
    daily_graphs: &[SocialGraph],
    x0: &[f64],
    order: &[AgentId],
    params: &FjParams,
) -> Result<Vec<Vec<f64>>, OpinionError> {
    params.validate()?;
    if x0.len() != order.len() || params.susceptibility.len() != order.len() {
        return Err(OpinionError::DimensionMismatch {
            expected: order.len(),
            got: x0.len().min(params.susceptibility.len()),
        });
    }
    let mut current = x0.to_vec();
    let mut per_day = Vec::with_capacity(daily_graphs.len());
    for graph in daily_graphs {
        let neighbors = NeighborIndex::build(graph, order)?;
        current = match params.steps_per_day {
            Some(steps) => {
                let mut x = current;
                for _ in 0..steps {
                    x = fj_step(&x, x0, &neighbors, &params.susceptibility)?;
                }
                x
            }
            None => fj_converge(&current, x0, &neighbors, params)?.0,
        };
        per_day.push(current.clone());
    }
    Ok(per_day)
}

#[derive(Debug, Error)]
pub enum OpinionError {
    #[error("score {0} outside [-1, +1]")]
    ScoreOutOfRange(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node_mutual() -> (SocialGraph, Vec<AgentId>) {
        let order = vec![AgentId::from("a"), AgentId::from("b")];
        let mut g = SocialGraph::new(order.clone());
        g.follow(&order[0], &order[1]).unwrap();
        g.follow(&order[1], &order[0]).unwrap();
        (g, order)
    }

    #[test]
    fn label_scores_match_anchors() {
        assert_eq!(StanceLabel::StronglyOpposed.score(), -1.0);
        assert_eq!(StanceLabel::Neutral.score(), 0.0);
        assert_eq!(StanceLabel::Supportive.score(), 0.5);
    }

    #[test]
    fn label_order_is_strictly_increasing_in_score() {
        for pair in StanceLabel::ALL.windows(2) {
            assert!(pair[0] < pair[1]);
            assert!(pair[0].score() < pair[1].score());
        }
    }

    #[test]
    fn nearest_picks_closest_anchor() {
        assert_eq!(StanceLabel::nearest(0.9).unwrap(), StanceLabel::StronglySupportive);
        assert_eq!(StanceLabel::nearest(-0.9).unwrap(), StanceLabel::StronglyOpposed);
        assert_eq!(StanceLabel::nearest(0.1).unwrap(), StanceLabel::Neutral);
    }

    #[test]
    fn nearest_midpoints_round_toward_neutral() {
        assert_eq!(StanceLabel::nearest(-0.25).unwrap(), StanceLabel::Neutral);
        assert_eq!(StanceLabel::nearest(0.25).unwrap(), StanceLabel::Neutral);
        assert_eq!(StanceLabel::nearest(0.75).unwrap(), StanceLabel::Supportive);
        assert_eq!(StanceLabel::nearest(-0.75).unwrap(), StanceLabel::Opposed);
    }

    #[test]
    fn nearest_rejects_out_of_range() {
        assert!(StanceLabel::nearest(1.2).is_err());
        assert!(StanceLabel::nearest(f64::NAN).is_err());
    }

    #[test]
    fn label_score_roundtrip_fixes_anchors() {
        for label in StanceLabel::ALL {
            assert_eq!(StanceLabel::nearest(label.score()).unwrap(), label);
        }
    }

    #[test]
    fn parse_tolerates_noise() {
        assert_eq!(StanceLabel::parse(" strongly supportive. "), Some(StanceLabel::StronglySupportive));
        assert_eq!(StanceLabel::parse("STRONGLY_OPPOSED"), Some(StanceLabel::StronglyOpposed));
        assert_eq!(StanceLabel::parse("Neutral!"), Some(StanceLabel::Neutral));
        assert_eq!(StanceLabel::parse("lukewarm"), None);
    }

    #[test]
    fn display_scale_matches_reporting_convention() {
        assert_eq!(display_scale(1.0), 2.0);
        assert_eq!(display_scale(0.0), 0.0);
        assert_eq!(display_scale(-0.5), -1.0);
    }

    #[test]
    fn fully_stubborn_agents_keep_initial_opinions() {
        let (g, order) = two_node_mutual();
        let x0 = vec![0.3, -0.7];
        let x = vec![0.9, 0.9];
        let next = fj_step_on_graph(&x, &x0, &g, &order, &[0.0, 0.0]).unwrap();
        assert_eq!(next, x0);
    }

    #[test]
    fn mutual_pair_meets_in_the_middle() {
        // From x = x0 = (1, -1) with susceptibility 0.5 each side lands at
        // 0.5 * opposite + 0.5 * own = 0.
        let (g, order) = two_node_mutual();
        let x0 = vec![1.0, -1.0];
        let next = fj_step_on_graph(&x0, &x0, &g, &order, &[0.5, 0.5]).unwrap();
        assert_eq!(next, vec![0.0, 0.0]);
    }

    #[test]
    fn consensus_is_a_fixed_point() {
        let (g, order) = two_node_mutual();
        let c = 0.4;
        let x = vec![c, c];
        let next = fj_step_on_graph(&x, &x, &g, &order, &[0.7, 0.2]).unwrap();
        assert!(next.iter().all(|v| (v - c).abs() < 1e-15));
    }

    #[test]
    fn isolated_agents_hold_initial_belief() {
        let order = vec![AgentId::from("a"), AgentId::from("b")];
        let g = SocialGraph::new(order.clone());
        let x0 = vec![0.8, -0.2];
        let days = vec![g.clone(), g.clone(), g];
        let params = FjParams::uniform(2, 0.9);
        let run = fj_run(&days, &x0, &order, &params).unwrap();
        for day in run {
            assert_eq!(day, x0);
        }
    }

    #[test]
    fn fully_connected_pair_converges_to_known_fixed_point() {
        // x = 0.5 W x + 0.5 x0 with W swapping the two coordinates has the
        // unique solution (1/3, -1/3) for x0 = (1, -1).
        let (g, order) = two_node_mutual();
        let x0 = vec![1.0, -1.0];
        let params = FjParams::uniform(2, 0.5);
        let run = fj_run(&[g], &x0, &order, &params).unwrap();
        let last = &run[0];
        assert!((last[0] - 1.0 / 3.0).abs() < 1e-7, "got {}", last[0]);
        assert!((last[1] + 1.0 / 3.0).abs() < 1e-7, "got {}", last[1]);
    }

    #[test]
    fn full_susceptibility_approaches_neighbor_average_consensus() {
        let order: Vec<AgentId> = (0..4).map(|i| AgentId::new(format!("a{i}"))).collect();
        let mut g = SocialGraph::new(order.clone());
        g.make_fully_connected();
        let x0 = vec![1.0, 0.5, -0.5, -1.0];
        let mut params = FjParams::uniform(4, 1.0);
        params.max_iters = 100_000;
        let run = fj_run(&[g], &x0, &order, &params).unwrap();
        let last = &run[0];
        let spread = last.iter().cloned().fold(f64::MIN, f64::max)
            - last.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-6, "spread {spread}");
    }

    #[test]
    fn fj_step_stays_in_convex_hull() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let order: Vec<AgentId> = (0..6).map(|i| AgentId::new(format!("a{i}"))).collect();
        for _ in 0..50 {
            let mut g = SocialGraph::new(order.clone());
            for i in 0..order.len() {
                for j in 0..order.len() {
                    if i != j && rng.gen_bool(0.4) {
                        g.follow(&order[i], &order[j]).unwrap();
                    }
                }
            }
            let x0: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lambda: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
            let neighbors = NeighborIndex::build(&g, &order).unwrap();
            let mut x = x0.clone();
            for _ in 0..30 {
                let next = fj_step(&x, &x0, &neighbors, &lambda).unwrap();
                let lo = x.iter().chain(&x0).cloned().fold(f64::MAX, f64::min);
                let hi = x.iter().chain(&x0).cloned().fold(f64::MIN, f64::max);
                for v in &next {
                    assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
                    assert!(*v >= -1.0 - 1e-12 && *v <= 1.0 + 1e-12);
                }
                x = next;
            }
        }
    }

    #[test]
    fn fj_rejects_dimension_mismatch() {
        let (g, order) = two_node_mutual();
        let err = fj_step_on_graph(&[0.0], &[0.0, 0.0], &g, &order, &[0.5, 0.5]);
        assert!(matches!(err, Err(OpinionError::DimensionMismatch { .. })));
    }
}
