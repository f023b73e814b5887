//! The simulation loop: per-hour active-user sampling, action dispatch
//! through the agent driver, graph and content mutation, and end-of-day
//! opinion updates.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    AgentId, AgentProfile, Coalition, ContentId, ContentItem, ContentKind, ContentStore,
    DomainError, Event, EventKind, EventPayload, OpinionRecord, SocialGraph, Tick, Topic, TopicId,
};
use crate::driver::{AgentDriver, MemoryItem, ThreadMessage};
use crate::driver::{parse_opinion_update, DriverConfig, DriverError};
use crate::opinion::StanceLabel;
use crate::recommender::{build_feed, FeedRequest, RecommenderParams, RecommenderStrategy};

/// Feed items carried into the end-of-day recap, newest first.
pub const RECAP_FEED_ITEMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkInit {
    Empty,
    FullyConnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Post,
    Comment,
    Like,
    Follow,
    Unfollow,
    #[serde(rename = "none")]
    Idle,
}

pub fn default_action_weights() -> BTreeMap<ActionKind, f64> {
    BTreeMap::from([
        (ActionKind::Post, 0.30),
        (ActionKind::Comment, 0.30),
        (ActionKind::Like, 0.25),
        (ActionKind::Follow, 0.10),
        (ActionKind::Unfollow, 0.01),
        (ActionKind::Idle, 0.04),
    ])
}

pub fn default_hourly_weights() -> Vec<f64> {
    vec![0.5; 24]
}

/// Everything one simulation run needs beyond the population itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub population_size: usize,
    pub days: u32,
    pub hours_per_day: u32,
    pub network_init: NetworkInit,
    pub recommender: RecommenderStrategy,
    pub feed_limit: usize,
    #[serde(default)]
    pub recommender_params: RecommenderParams,
    /// Per-hour activation weight; an agent is active in hour h with
    /// probability hourly_weights[h] * activity.
    pub hourly_weights: Vec<f64>,
    pub action_weights: BTreeMap<ActionKind, f64>,
    pub rng_seed: u64,
    pub driver: DriverConfig,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            population_size: 100,
            days: 21,
            hours_per_day: 24,
            network_init: NetworkInit::Empty,
            recommender: RecommenderStrategy::ReverseChronoFollowersPopularity,
            feed_limit: 10,
            recommender_params: RecommenderParams::default(),
            hourly_weights: default_hourly_weights(),
            action_weights: default_action_weights(),
            rng_seed: 42,
            driver: DriverConfig::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.population_size < 2 {
            return Err(EngineError::Config("population_size must be at least 2".into()));
        }
        if self.hours_per_day != 24 {
            return Err(EngineError::Config("hours_per_day must be 24".into()));
        }
        if self.hourly_weights.len() != self.hours_per_day as usize {
            return Err(EngineError::Config(format!(
                "hourly_weights has {} entries, expected {}",
                self.hourly_weights.len(),
                self.hours_per_day
            )));
        }
        if self.hourly_weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(EngineError::Config("hourly weights must lie in [0, 1]".into()));
        }
        if self.feed_limit == 0 {
            return Err(EngineError::Config("feed_limit must be at least 1".into()));
        }
        if self.action_weights.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(EngineError::Config("action weights must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.recommender_params.external_fraction) {
            return Err(EngineError::Config("external_fraction must lie in [0, 1]".into()));
        }
        self.driver.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
struct DayMemory {
    own: Vec<ContentId>,
    seen: BTreeSet<ContentId>,
}

/// Mutable state of one run. Mutated only by the single engine loop;
/// read-only snapshots are safe to share.
pub struct SimulationState {
    pub population: Vec<AgentProfile>,
    pub graph: SocialGraph,
    pub content: ContentStore,
    pub events: Vec<Event>,
    names: HashMap<AgentId, String>,
    tick: Tick,
    seq_in_tick: u64,
    memory: BTreeMap<AgentId, DayMemory>,
    active_today: BTreeSet<AgentId>,
    next_content: u64,
}

impl SimulationState {
    pub fn new(mut population: Vec<AgentProfile>, network_init: NetworkInit) -> Self {
        population.sort_by(|a, b| a.agent_id.cmp(&b.agent_id));
        let graph = init_network(&population, network_init);
        let names = population
            .iter()
            .map(|p| (p.agent_id.clone(), p.name.clone()))
            .collect();
        SimulationState {
            population,
            graph,
            content: ContentStore::new(),
            events: Vec::new(),
            names,
            tick: Tick::new(0, 0),
            seq_in_tick: 0,
            memory: BTreeMap::new(),
            active_today: BTreeSet::new(),
            next_content: 0,
        }
    }

    pub fn tick(&self) -> Tick {
        self.tick
    }

    fn set_tick(&mut self, tick: Tick) {
        if tick != self.tick {
            self.tick = tick;
            self.seq_in_tick = 0;
        }
    }

    fn profile(&self, id: &AgentId) -> &AgentProfile {
        let idx = self
            .population
            .binary_search_by(|p| p.agent_id.cmp(id))
            .expect("active agent in population");
        &self.population[idx]
    }

    fn profile_mut(&mut self, id: &AgentId) -> &mut AgentProfile {
        let idx = self
            .population
            .binary_search_by(|p| p.agent_id.cmp(id))
            .expect("active agent in population");
        &mut self.population[idx]
    }

    fn display_name(&self, id: &AgentId) -> String {
        self.names.get(id).cloned().unwrap_or_else(|| id.to_string())
    }

    fn fresh_content_id(&mut self) -> ContentId {
        let id = ContentId::new(format!("c{:06}", self.next_content));
        self.next_content += 1;
        id
    }

    fn push_event(
        &mut self,
        kind: EventKind,
        actor: AgentId,
        target: Option<AgentId>,
        content_id: Option<ContentId>,
        payload: EventPayload,
    ) {
        let event = Event {
            tick_day: self.tick.day,
            tick_hour: self.tick.hour,
            seq: self.seq_in_tick,
            kind,
            actor,
            target,
            content_id,
            payload,
        };
        self.seq_in_tick += 1;
        self.events.push(event);
    }
}

/// Builds the initial follow graph for the configured strategy.
pub fn init_network(population: &[AgentProfile], strategy: NetworkInit) -> SocialGraph {
    let mut graph = SocialGraph::new(population.iter().map(|p| p.agent_id.clone()));
    if strategy == NetworkInit::FullyConnected {
        graph.make_fully_connected();
    }
    graph
}

/// Independently samples each agent with probability
/// hourly_weights[hour] * activity, in ascending agent id order.
pub fn sample_active_users<R: Rng>(
    population: &[AgentProfile],
    hour: u32,
    hourly_weights: &[f64],
    rng: &mut R,
) -> BTreeSet<AgentId> {
    let weight = hourly_weights[hour as usize];
    population
        .iter()
        .filter(|p| rng.gen::<f64>() < weight * p.activity)
        .map(|p| p.agent_id.clone())
        .collect()
}

/// What an activated agent decided to do.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionChoice {
    pub kind: ActionKind,
    pub target_content: Option<ContentId>,
    pub target_agent: Option<AgentId>,
}

impl ActionChoice {
    fn idle() -> Self {
        ActionChoice { kind: ActionKind::Idle, target_content: None, target_agent: None }
    }
}

/// Samples an action from the configured weights, renormalised over the
/// actions feasible in this activation: commenting and liking need a
/// non-empty feed, following needs a feed author not yet followed, and
/// unfollowing needs at least one followee. Targets follow fixed rules:
/// comment/like picks uniformly from the feed, follow picks the feed
/// author with the most feed items (ties by ascending id), unfollow picks
/// the followee least represented in today's memory.
pub fn choose_action<R: Rng>(
    profile: &AgentProfile,
    feed: &[ContentItem],
    followees: &BTreeSet<AgentId>,
    memory_author_counts: &BTreeMap<AgentId, u64>,
    action_weights: &BTreeMap<ActionKind, f64>,
    rng: &mut R,
) -> ActionChoice {
    let follow_candidate = follow_target(profile, feed, followees);
    let feasible = |kind: ActionKind| -> bool {
        match kind {
            ActionKind::Post | ActionKind::Idle => true,
            ActionKind::Comment | ActionKind::Like => !feed.is_empty(),
            ActionKind::Follow => follow_candidate.is_some(),
            ActionKind::Unfollow => !followees.is_empty(),
        }
    };

    let choices: Vec<(ActionKind, f64)> = action_weights
        .iter()
        .filter(|(kind, weight)| **weight > 0.0 && feasible(**kind))
        .map(|(k, w)| (*k, *w))
        .collect();
    let total: f64 = choices.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return ActionChoice::idle();
    }

    let mut draw = rng.gen::<f64>() * total;
    let mut kind = choices.last().map(|(k, _)| *k).unwrap_or(ActionKind::Idle);
    for (candidate, weight) in &choices {
        draw -= weight;
        if draw < 0.0 {
            kind = *candidate;
            break;
        }
    }

    match kind {
        ActionKind::Post | ActionKind::Idle => {
            ActionChoice { kind, target_content: None, target_agent: None }
        }
        ActionKind::Comment | ActionKind::Like => {
            let item = &feed[rng.gen_range(0..feed.len())];
            ActionChoice {
                kind,
                target_content: Some(item.content_id.clone()),
                target_agent: Some(item.author.clone()),
            }
        }
        ActionKind::Follow => ActionChoice {
            kind,
            target_content: None,
            target_agent: follow_candidate,
        },
        ActionKind::Unfollow => ActionChoice {
            kind,
            target_content: None,
            target_agent: unfollow_target(followees, memory_author_counts),
        },
    }
}

/// Most-seen feed author not yet followed; ties resolve to the smallest id.
fn follow_target(
    profile: &AgentProfile,
    feed: &[ContentItem],
    followees: &BTreeSet<AgentId>,
) -> Option<AgentId> {
    let mut counts: BTreeMap<&AgentId, u64> = BTreeMap::new();
    for item in feed {
        if item.author != profile.agent_id && !followees.contains(&item.author) {
            *counts.entry(&item.author).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .max_by(|(id_a, n_a), (id_b, n_b)| n_a.cmp(n_b).then_with(|| id_b.cmp(id_a)))
        .map(|(id, _)| id.clone())
}

/// Followee with the fewest appearances in today's memory; ties resolve to
/// the smallest id.
fn unfollow_target(
    followees: &BTreeSet<AgentId>,
    memory_author_counts: &BTreeMap<AgentId, u64>,
) -> Option<AgentId> {
    followees
        .iter()
        .min_by_key(|id| (memory_author_counts.get(*id).copied().unwrap_or(0), (*id).clone()))
        .cloned()
}

/// Runs one virtual hour: samples active agents and processes them in
/// ascending id order. A driver failure for one agent is logged as a
/// driver_error event and skips only that agent's action.
pub fn run_hour<R: Rng>(
    state: &mut SimulationState,
    tick: Tick,
    config: &SimulationConfig,
    topics: &[Topic],
    driver: &dyn AgentDriver,
    rng: &mut R,
) -> Result<(), EngineError> {
    state.set_tick(tick);
    let active = sample_active_users(&state.population, tick.hour, &config.hourly_weights, rng);
    state.active_today.extend(active.iter().cloned());

    for agent_id in active {
        let request = FeedRequest {
            agent_id: agent_id.clone(),
            limit: config.feed_limit,
            now: tick,
        };
        let feed = build_feed(
            config.recommender,
            &state.graph,
            &state.content,
            &request,
            &config.recommender_params,
            rng,
        )?;

        let memory = state.memory.entry(agent_id.clone()).or_default();
        for item in &feed {
            memory.seen.insert(item.content_id.clone());
        }
        let memory_author_counts = seen_author_counts(&state.content, &state.memory[&agent_id]);

        let followees = state.graph.followees(&agent_id)?;
        let profile = state.profile(&agent_id);
        let choice = choose_action(
            profile,
            &feed,
            &followees,
            &memory_author_counts,
            &config.action_weights,
            rng,
        );

        match choice.kind {
            ActionKind::Idle => {}
            ActionKind::Post => {
                let topic = &topics[rng.gen_range(0..topics.len())];
                let profile = state.profile(&agent_id);
                match driver.post_text(profile, topic, tick) {
                    Ok(text) => {
                        let content_id = state.fresh_content_id();
                        state.content.insert(ContentItem {
                            content_id: content_id.clone(),
                            author: agent_id.clone(),
                            kind: ContentKind::Post,
                            parent: None,
                            topic_id: topic.id.clone(),
                            text: text.clone(),
                            tick,
                            like_count: 0,
                        })?;
                        state.memory.entry(agent_id.clone()).or_default().own.push(content_id.clone());
                        state.push_event(
                            EventKind::Post,
                            agent_id.clone(),
                            None,
                            Some(content_id),
                            EventPayload::Post { topic_id: topic.id.clone(), text },
                        );
                    }
                    Err(e) => log_driver_error(state, &agent_id, &e),
                }
            }
            ActionKind::Comment => {
                let parent_id = choice.target_content.expect("comment target");
                let parent_author = choice.target_agent.expect("comment author");
                let thread: Vec<ThreadMessage> = state
                    .content
                    .thread_of(&parent_id)?
                    .into_iter()
                    .map(|item| ThreadMessage {
                        author_name: state.display_name(&item.author),
                        text: item.text.clone(),
                    })
                    .collect();
                let topic_id = state
                    .content
                    .get(&parent_id)
                    .map(|item| item.topic_id.clone())
                    .ok_or_else(|| DomainError::UnknownContent(parent_id.clone()))?;
                let topic = topics
                    .iter()
                    .find(|t| t.id == topic_id)
                    .ok_or_else(|| EngineError::Config(format!("content references unconfigured topic {topic_id}")))?;
                let profile = state.profile(&agent_id);
                match driver.comment_text(profile, topic, &thread, tick) {
                    Ok(text) => {
                        let content_id = state.fresh_content_id();
                        state.content.insert(ContentItem {
                            content_id: content_id.clone(),
                            author: agent_id.clone(),
                            kind: ContentKind::Comment,
                            parent: Some(parent_id.clone()),
                            topic_id: topic_id.clone(),
                            text: text.clone(),
                            tick,
                            like_count: 0,
                        })?;
                        state.memory.entry(agent_id.clone()).or_default().own.push(content_id.clone());
                        state.push_event(
                            EventKind::Comment,
                            agent_id.clone(),
                            Some(parent_author),
                            Some(content_id),
                            EventPayload::Comment {
                                topic_id,
                                text,
                                parent: parent_id,
                            },
                        );
                    }
                    Err(e) => log_driver_error(state, &agent_id, &e),
                }
            }
            ActionKind::Like => {
                let content_id = choice.target_content.expect("like target");
                state.content.add_like(&content_id)?;
                state.push_event(
                    EventKind::Like,
                    agent_id.clone(),
                    choice.target_agent,
                    Some(content_id),
                    EventPayload::Empty {},
                );
            }
            ActionKind::Follow => {
                let target = choice.target_agent.expect("follow target");
                if state.graph.follow(&agent_id, &target)? {
                    state.push_event(
                        EventKind::Follow,
                        agent_id.clone(),
                        Some(target),
                        None,
                        EventPayload::Empty {},
                    );
                }
            }
            ActionKind::Unfollow => {
                let target = choice.target_agent.expect("unfollow target");
                if state.graph.unfollow(&agent_id, &target)? {
                    state.push_event(
                        EventKind::Unfollow,
                        agent_id.clone(),
                        Some(target),
                        None,
                        EventPayload::Empty {},
                    );
                }
            }
        }
    }
    Ok(())
}

fn seen_author_counts(content: &ContentStore, memory: &DayMemory) -> BTreeMap<AgentId, u64> {
    let mut counts = BTreeMap::new();
    for id in &memory.seen {
        if let Some(item) = content.get(id) {
            *counts.entry(item.author.clone()).or_insert(0) += 1;
        }
    }
    counts
}

fn log_driver_error(state: &mut SimulationState, agent_id: &AgentId, error: &DriverError) {
    state.push_event(
        EventKind::DriverError,
        agent_id.clone(),
        None,
        None,
        EventPayload::Failure { message: error.to_string() },
    );
}

/// The day's recap for one agent: all own posts/comments plus the most
/// recent feed items, rendered chronologically.
fn build_recap(state: &SimulationState, agent_id: &AgentId) -> Vec<MemoryItem> {
    let Some(memory) = state.memory.get(agent_id) else {
        return Vec::new();
    };
    let mut seen: Vec<&ContentItem> =
        memory.seen.iter().filter_map(|id| state.content.get(id)).collect();
    seen.sort_by(|a, b| (a.tick, &a.content_id).cmp(&(b.tick, &b.content_id)));
    if seen.len() > RECAP_FEED_ITEMS {
        seen.drain(..seen.len() - RECAP_FEED_ITEMS);
    }
    let mut items: Vec<&ContentItem> = memory
        .own
        .iter()
        .filter_map(|id| state.content.get(id))
        .chain(seen)
        .collect();
    items.sort_by(|a, b| (a.tick, &a.content_id).cmp(&(b.tick, &b.content_id)));
    items
        .into_iter()
        .map(|item| MemoryItem {
            author_name: state.display_name(&item.author),
            topic_id: item.topic_id.clone(),
            text: item.text.clone(),
            tick: item.tick,
            own: item.author == *agent_id,
        })
        .collect()
}

/// End-of-day opinion update for every agent that was active today.
/// Unparseable driver output is retried once; after a second failure the
/// agent keeps its previous opinions and a parse_failure event is logged.
/// All daily memory buffers are cleared afterwards.
pub fn end_of_day_update(
    state: &mut SimulationState,
    topics: &[Topic],
    driver: &dyn AgentDriver,
) -> Result<(), EngineError> {
    let active: Vec<AgentId> = state.active_today.iter().cloned().collect();
    for agent_id in active {
        let recap = build_recap(state, &agent_id);
        if recap.is_empty() {
            continue;
        }
        let touched: Vec<TopicId> = topics
            .iter()
            .map(|t| t.id.clone())
            .filter(|id| recap.iter().any(|m| &m.topic_id == id))
            .collect();
        if touched.is_empty() {
            continue;
        }
        let expected: Vec<Topic> = topics.iter().filter(|t| touched.contains(&t.id)).cloned().collect();

        let mut parsed = None;
        let mut failed_parses = 0;
        for _attempt in 0..2 {
            let profile = state.profile(&agent_id);
            match driver.opinion_update_text(profile, &touched, &recap) {
                Ok(raw) => match parse_opinion_update(&raw, &expected) {
                    Ok(update) => {
                        parsed = Some(update);
                        break;
                    }
                    Err(_) => failed_parses += 1,
                },
                Err(e) => {
                    log_driver_error(state, &agent_id, &e);
                    break;
                }
            }
        }

        if let Some(update) = parsed {
            for line in update.entries {
                let record = OpinionRecord::from_label(
                    line.topic_id.clone(),
                    line.label,
                    line.thought.clone(),
                );
                let score = record.stance_score;
                state.profile_mut(&agent_id).set_opinion(record);
                state.push_event(
                    EventKind::OpinionUpdate,
                    agent_id.clone(),
                    None,
                    None,
                    EventPayload::OpinionUpdate {
                        topic_id: line.topic_id,
                        label: line.label,
                        score,
                        justification: line.thought,
                    },
                );
            }
        } else if failed_parses >= 2 {
            state.push_event(
                EventKind::ParseFailure,
                agent_id.clone(),
                None,
                None,
                EventPayload::Failure {
                    message: "opinion update unparseable after retry; keeping previous opinions".into(),
                },
            );
        }
    }
    state.memory.clear();
    state.active_today.clear();
    Ok(())
}

/// Per-agent stance at a snapshot boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceSnapshot {
    pub label: StanceLabel,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub coalition: Coalition,
    pub stances: BTreeMap<TopicId, StanceSnapshot>,
}

/// State boundary after `day` completed days (day 0 is the initial state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaySnapshot {
    pub day: u32,
    pub edges: Vec<(AgentId, AgentId)>,
    pub opinions: BTreeMap<AgentId, AgentSnapshot>,
}

impl DaySnapshot {
    fn capture(day: u32, state: &SimulationState) -> Self {
        DaySnapshot {
            day,
            edges: state.graph.edges().iter().cloned().collect(),
            opinions: state
                .population
                .iter()
                .map(|p| {
                    (
                        p.agent_id.clone(),
                        AgentSnapshot {
                            coalition: p.coalition,
                            stances: p
                                .opinions
                                .iter()
                                .map(|r| {
                                    (
                                        r.topic_id.clone(),
                                        StanceSnapshot { label: r.label, score: r.stance_score },
                                    )
                                })
                                .collect(),
                        },
                    )
                })
                .collect(),
        }
    }

    /// Rebuilds the follow graph this snapshot describes.
    pub fn graph(&self) -> Result<SocialGraph, DomainError> {
        let mut graph = SocialGraph::new(self.opinions.keys().cloned());
        for (from, to) in &self.edges {
            graph.follow(from, to)?;
        }
        Ok(graph)
    }
}

/// Artifacts of one complete run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub events: Vec<Event>,
    /// Snapshots at day boundaries: index 0 is the initial state, index d
    /// the state after day d.
    pub snapshots: Vec<DaySnapshot>,
    pub population: Vec<AgentProfile>,
}

/// Executes days x 24 hourly rounds with an end-of-day opinion update
/// after each day, emitting one graph/opinion snapshot per day boundary.
/// With the stub driver and a fixed seed the event log is bit-identical
/// across executions.
pub fn run_simulation(
    config: &SimulationConfig,
    population: Vec<AgentProfile>,
    topics: &[Topic],
    driver: &dyn AgentDriver,
) -> Result<RunOutput, EngineError> {
    config.validate()?;
    if topics.is_empty() {
        return Err(EngineError::Config("at least one topic must be configured".into()));
    }
    if population.len() != config.population_size {
        return Err(EngineError::Config(format!(
            "population has {} profiles but config expects {}",
            population.len(),
            config.population_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut state = SimulationState::new(population, config.network_init);
    let mut snapshots = vec![DaySnapshot::capture(0, &state)];

    for day in 0..config.days {
        for hour in 0..config.hours_per_day {
            run_hour(&mut state, Tick::new(day, hour), config, topics, driver, &mut rng)?;
        }
        end_of_day_update(&mut state, topics, driver)?;
        snapshots.push(DaySnapshot::capture(day + 1, &state));
    }

    Ok(RunOutput {
        events: state.events,
        snapshots,
        population: state.population,
    })
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}
