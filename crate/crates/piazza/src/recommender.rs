//! Feed construction. Two strategies: reverse-chronological content from
//! followed authors with popularity tie-breaking plus a slice of external
//! exposure, and a uniform-random baseline over all platform content.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AgentId, ContentItem, ContentStore, DomainError, SocialGraph, Tick};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecommenderStrategy {
    ReverseChronoFollowersPopularity,
    ContentRecSys,
}

/// Tuning knobs for feed construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecommenderParams {
    /// Fraction of feed slots reserved for content from non-followed
    /// authors under the reverse-chrono strategy.
    pub external_fraction: f64,
    /// Only content from the last this-many virtual hours is eligible for
    /// the reverse-chrono strategy.
    pub recency_window_hours: u64,
    /// When true, rank by like count first and recency second instead of
    /// the default recency-first order.
    pub popularity_primary: bool,
}

impl Default for RecommenderParams {
    fn default() -> Self {
        RecommenderParams {
            external_fraction: 0.2,
            recency_window_hours: 48,
            popularity_primary: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedRequest {
    pub agent_id: AgentId,
    pub limit: usize,
    pub now: Tick,
}

fn rank_key(item: &ContentItem, popularity_primary: bool) -> (u64, u64) {
    if popularity_primary {
        (item.like_count, item.tick.index())
    } else {
        (item.tick.index(), item.like_count)
    }
}

fn sort_ranked(items: &mut [ContentItem], popularity_primary: bool) {
    // Descending by rank key; content id breaks remaining ties so feed
    // order is deterministic.
    items.sort_by(|a, b| {
        rank_key(b, popularity_primary)
            .cmp(&rank_key(a, popularity_primary))
            .then_with(|| a.content_id.cmp(&b.content_id))
    });
}

/// Recent content from followed authors ranked by recency with popularity
/// as tie-break (or the reverse when `popularity_primary` is set), with an
/// `external_fraction` share of slots sampled from non-followed authors.
/// Never returns the requester's own content.
pub fn reverse_chrono_followers_popularity<R: Rng>(
    graph: &SocialGraph,
    content: &ContentStore,
    request: &FeedRequest,
    params: &RecommenderParams,
    rng: &mut R,
) -> Result<Vec<ContentItem>, DomainError> {
    let followees: BTreeSet<AgentId> = graph.followees(&request.agent_id)?;
    let window_start = request
        .now
        .index()
        .saturating_sub(params.recency_window_hours);

    let mut followed: Vec<ContentItem> = Vec::new();
    let mut external: Vec<ContentItem> = Vec::new();
    for item in content.items_since(window_start) {
        if item.author == request.agent_id {
            continue;
        }
        if followees.contains(&item.author) {
            followed.push(item.clone());
        } else {
            external.push(item.clone());
        }
    }

    let external_slots = ((request.limit as f64) * params.external_fraction).floor() as usize;
    let followed_slots = request.limit - external_slots.min(request.limit);

    sort_ranked(&mut followed, params.popularity_primary);
    followed.truncate(followed_slots);

    let take = external_slots.min(external.len());
    let mut feed = followed;
    if take > 0 {
        for i in index::sample(rng, external.len(), take) {
            feed.push(external[i].clone());
        }
    }
    sort_ranked(&mut feed, params.popularity_primary);
    feed.truncate(request.limit);
    Ok(feed)
}

/// Uniform sample without replacement over all platform content except the
/// requester's own; order is random.
pub fn random_content<R: Rng>(
    graph: &SocialGraph,
    content: &ContentStore,
    request: &FeedRequest,
    rng: &mut R,
) -> Result<Vec<ContentItem>, DomainError> {
    if !graph.contains(&request.agent_id) {
        return Err(DomainError::UnknownAgent(request.agent_id.clone()));
    }
    let candidates: Vec<&ContentItem> = content
        .items()
        .iter()
        .filter(|item| item.author != request.agent_id)
        .collect();
    let take = request.limit.min(candidates.len());
    if take == 0 {
        return Ok(Vec::new());
    }
    Ok(index::sample(rng, candidates.len(), take)
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect())
}

/// Dispatches to the configured strategy.
pub fn build_feed<R: Rng>(
    strategy: RecommenderStrategy,
    graph: &SocialGraph,
    content: &ContentStore,
    request: &FeedRequest,
    params: &RecommenderParams,
    rng: &mut R,
) -> Result<Vec<ContentItem>, DomainError> {
    match strategy {
        RecommenderStrategy::ReverseChronoFollowersPopularity => {
            reverse_chrono_followers_popularity(graph, content, request, params, rng)
        }
        RecommenderStrategy::ContentRecSys => random_content(graph, content, request, rng),
    }
}
