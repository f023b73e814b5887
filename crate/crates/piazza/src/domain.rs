//! Core data types shared by every other module: the agent population,
//! content items, the directed follow graph, and the append-only event log.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::opinion::StanceLabel;

/// The four political coalitions agents can belong to.
///
/// Declaration order is the canonical display order used for matrices,
/// vectors and CSV output; keep it stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coalition {
    Right,
    CentreLeft,
    ThirdPole,
    M5s,
}

impl Coalition {
    pub const ALL: [Coalition; 4] = [
        Coalition::Right,
        Coalition::CentreLeft,
        Coalition::ThirdPole,
        Coalition::M5s,
    ];

    /// Index into the canonical display order.
    pub fn index(self) -> usize {
        match self {
            Coalition::Right => 0,
            Coalition::CentreLeft => 1,
            Coalition::ThirdPole => 2,
            Coalition::M5s => 3,
        }
    }

    /// Human-readable name, used in prompts and reports.
    pub fn display_name(self) -> &'static str {
        match self {
            Coalition::Right => "Right",
            Coalition::CentreLeft => "Centre-Left",
            Coalition::ThirdPole => "Third Pole",
            Coalition::M5s => "M5S",
        }
    }

    /// Stable key used in configuration files and seed records.
    pub fn key(self) -> &'static str {
        match self {
            Coalition::Right => "right",
            Coalition::CentreLeft => "centre_left",
            Coalition::ThirdPole => "third_pole",
            Coalition::M5s => "m5s",
        }
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// Stable string identifier of an agent. Ascending lexicographic order is
/// the processing order everywhere determinism matters, so generated ids
/// are zero-padded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Self {
        AgentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.to_string())
    }
}

/// Stable string identifier of a post or comment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContentId(pub String);

impl ContentId {
    pub fn new(id: impl Into<String>) -> Self {
        ContentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ContentId {
    fn from(s: &str) -> Self {
        ContentId(s.to_string())
    }
}

/// Identifier of a discussion topic, unique within a configuration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicId(pub String);

impl TopicId {
    pub fn new(id: impl Into<String>) -> Self {
        TopicId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Title-cased form used in prompts and reports, e.g.
    /// `nuclear_energy` -> `Nuclear Energy`.
    pub fn display_name(&self) -> String {
        self.0
            .split('_')
            .map(|w| {
                let mut chars = w.chars();
                match chars.next() {
                    Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
                    None => String::new(),
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for TopicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TopicId {
    fn from(s: &str) -> Self {
        TopicId(s.to_string())
    }
}

/// A discussion topic with explicit definitions of what counts as a
/// supportive or an opposed stance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub id: TopicId,
    pub description: String,
    pub supportive_meaning: String,
    pub opposed_meaning: String,
}

impl Topic {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.id.as_str().is_empty()
            || self.description.is_empty()
            || self.supportive_meaning.is_empty()
            || self.opposed_meaning.is_empty()
        {
            return Err(DomainError::InvalidTopic(self.id.clone()));
        }
        Ok(())
    }
}

/// One agent's opinion on one topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionRecord {
    pub topic_id: TopicId,
    pub label: StanceLabel,
    pub stance_score: f64,
    pub justification: String,
}

impl OpinionRecord {
    pub fn from_label(topic_id: TopicId, label: StanceLabel, justification: String) -> Self {
        OpinionRecord {
            topic_id,
            label,
            stance_score: label.score(),
            justification,
        }
    }
}

/// Qualitative Big Five descriptors, interpolated verbatim into prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigFive {
    pub openness: String,
    pub conscientiousness: String,
    pub extraversion: String,
    pub agreeableness: String,
    pub neuroticism: String,
}

/// A fully initialised simulated user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub agent_id: AgentId,
    pub name: String,
    pub age: u32,
    pub gender: String,
    pub nationality: String,
    pub language: String,
    pub big_five: BigFive,
    pub coalition: Coalition,
    pub activity: f64,
    pub target_toxicity: f64,
    pub opinions: Vec<OpinionRecord>,
    /// Frozen copy of `opinions` at construction time. Never mutated.
    initial_opinions: Vec<OpinionRecord>,
}

impl AgentProfile {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        agent_id: AgentId,
        name: String,
        age: u32,
        gender: String,
        nationality: String,
        language: String,
        big_five: BigFive,
        coalition: Coalition,
        activity: f64,
        target_toxicity: f64,
        opinions: Vec<OpinionRecord>,
    ) -> Result<Self, DomainError> {
        let profile = AgentProfile {
            agent_id,
            name,
            age,
            gender,
            nationality,
            language,
            big_five,
            coalition,
            activity,
            target_toxicity,
            initial_opinions: opinions.clone(),
            opinions,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !(18..=60).contains(&self.age) {
            return Err(DomainError::InvalidProfile {
                agent: self.agent_id.clone(),
                reason: format!("age {} outside [18, 60]", self.age),
            });
        }
        for (value, what) in [(self.activity, "activity"), (self.target_toxicity, "target_toxicity")] {
            if !(0.0..=1.0).contains(&value) {
                return Err(DomainError::InvalidProfile {
                    agent: self.agent_id.clone(),
                    reason: format!("{what} {value} outside [0, 1]"),
                });
            }
        }
        for rec in &self.opinions {
            if !(-1.0..=1.0).contains(&rec.stance_score) {
                return Err(DomainError::InvalidProfile {
                    agent: self.agent_id.clone(),
                    reason: format!("stance_score {} outside [-1, 1]", rec.stance_score),
                });
            }
        }
        Ok(())
    }

    /// Opinions as of day 0, before any end-of-day update.
    pub fn initial_opinions(&self) -> &[OpinionRecord] {
        &self.initial_opinions
    }

    pub fn opinion(&self, topic: &TopicId) -> Option<&OpinionRecord> {
        self.opinions.iter().find(|r| &r.topic_id == topic)
    }

    /// Replaces the record for `record.topic_id`; the frozen initial
    /// opinions are untouched.
    pub fn set_opinion(&mut self, record: OpinionRecord) {
        match self.opinions.iter_mut().find(|r| r.topic_id == record.topic_id) {
            Some(slot) => *slot = record,
            None => self.opinions.push(record),
        }
    }
}

/// Virtual timestamp: day index and hour of day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tick {
    pub day: u32,
    pub hour: u32,
}

impl Tick {
    pub fn new(day: u32, hour: u32) -> Self {
        Tick { day, hour }
    }

    /// Absolute hour index since the start of the simulation.
    pub fn index(self) -> u64 {
        u64::from(self.day) * 24 + u64::from(self.hour)
    }
}

impl fmt::Display for Tick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "day {} hour {}", self.day, self.hour)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentKind {
    Post,
    Comment,
}

/// A post or comment on the platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentItem {
    pub content_id: ContentId,
    pub author: AgentId,
    pub kind: ContentKind,
    pub parent: Option<ContentId>,
    pub topic_id: TopicId,
    pub text: String,
    pub tick: Tick,
    pub like_count: u64,
}

/// Append-only store of all content, kept in tick order so recency windows
/// are contiguous slices. `like_count` is denormalised here for feed
/// ranking; the event log remains the source of truth.
#[derive(Debug, Clone, Default)]
pub struct ContentStore {
    items: Vec<ContentItem>,
    index: HashMap<ContentId, usize>,
}

impl ContentStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &ContentId) -> Option<&ContentItem> {
        self.index.get(id).map(|&i| &self.items[i])
    }

    pub fn items(&self) -> &[ContentItem] {
        &self.items
    }

    pub fn insert(&mut self, item: ContentItem) -> Result<(), DomainError> {
        if self.index.contains_key(&item.content_id) {
            return Err(DomainError::DuplicateContent(item.content_id.clone()));
        }
        if let Some(last) = self.items.last() {
            if item.tick < last.tick {
                return Err(DomainError::ContentOutOfOrder(item.content_id.clone()));
            }
        }
        match item.kind {
            ContentKind::Post => {
                if item.parent.is_some() {
                    return Err(DomainError::PostWithParent(item.content_id.clone()));
                }
            }
            ContentKind::Comment => {
                let parent = item
                    .parent
                    .as_ref()
                    .ok_or_else(|| DomainError::CommentWithoutParent(item.content_id.clone()))?;
                if !self.index.contains_key(parent) {
                    return Err(DomainError::UnknownContent(parent.clone()));
                }
            }
        }
        self.index.insert(item.content_id.clone(), self.items.len());
        self.items.push(item);
        Ok(())
    }

    pub fn add_like(&mut self, id: &ContentId) -> Result<(), DomainError> {
        let idx = *self
            .index
            .get(id)
            .ok_or_else(|| DomainError::UnknownContent(id.clone()))?;
        self.items[idx].like_count += 1;
        Ok(())
    }

    /// Items with `tick.index() >= from`, in insertion (chronological) order.
    pub fn items_since(&self, from: u64) -> &[ContentItem] {
        let start = self.items.partition_point(|item| item.tick.index() < from);
        &self.items[start..]
    }

    /// The chain from the thread's root post down to `id`, root first.
    /// Parents always precede children in the store, so the walk terminates.
    pub fn thread_of(&self, id: &ContentId) -> Result<Vec<&ContentItem>, DomainError> {
        let mut chain = Vec::new();
        let mut cursor = Some(id.clone());
        while let Some(current) = cursor {
            let item = self
                .get(&current)
                .ok_or_else(|| DomainError::UnknownContent(current.clone()))?;
            chain.push(item);
            cursor = item.parent.clone();
        }
        chain.reverse();
        Ok(chain)
    }
}

/// Directed follow relation over the agent population.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialGraph {
    nodes: BTreeSet<AgentId>,
    edges: BTreeSet<(AgentId, AgentId)>,
}

impl SocialGraph {
    pub fn new(nodes: impl IntoIterator<Item = AgentId>) -> Self {
        SocialGraph {
            nodes: nodes.into_iter().collect(),
            edges: BTreeSet::new(),
        }
    }

    pub fn nodes(&self) -> &BTreeSet<AgentId> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(AgentId, AgentId)> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, agent: &AgentId) -> bool {
        self.nodes.contains(agent)
    }

    pub fn has_edge(&self, follower: &AgentId, followee: &AgentId) -> bool {
        self.edges.contains(&(follower.clone(), followee.clone()))
    }

    fn check_member(&self, agent: &AgentId) -> Result<(), DomainError> {
        if self.contains(agent) {
            Ok(())
        } else {
            Err(DomainError::UnknownAgent(agent.clone()))
        }
    }

    /// Adds a follow edge. Re-following is a no-op; self-follows are
    /// rejected. Returns whether the edge was newly inserted.
    pub fn follow(&mut self, follower: &AgentId, followee: &AgentId) -> Result<bool, DomainError> {
        self.check_member(follower)?;
        self.check_member(followee)?;
        if follower == followee {
            return Err(DomainError::SelfFollow(follower.clone()));
        }
        Ok(self.edges.insert((follower.clone(), followee.clone())))
    }

    /// Removes a follow edge; removing an absent edge is a no-op.
    /// Returns whether an edge was actually removed.
    pub fn unfollow(&mut self, follower: &AgentId, followee: &AgentId) -> Result<bool, DomainError> {
        self.check_member(follower)?;
        self.check_member(followee)?;
        if follower == followee {
            return Err(DomainError::SelfFollow(follower.clone()));
        }
        Ok(self.edges.remove(&(follower.clone(), followee.clone())))
    }

    /// Out-neighbors of `agent`: everyone it follows.
    pub fn followees(&self, agent: &AgentId) -> Result<BTreeSet<AgentId>, DomainError> {
        self.check_member(agent)?;
        let lo = (agent.clone(), AgentId::new(""));
        Ok(self
            .edges
            .range(lo..)
            .take_while(|(from, _)| from == agent)
            .map(|(_, to)| to.clone())
            .collect())
    }

    /// Connects every node to every other node (n(n-1) directed edges).
    pub fn make_fully_connected(&mut self) {
        let nodes: Vec<AgentId> = self.nodes.iter().cloned().collect();
        for a in &nodes {
            for b in &nodes {
                if a != b {
                    self.edges.insert((a.clone(), b.clone()));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Post,
    Comment,
    Like,
    Follow,
    Unfollow,
    OpinionUpdate,
    DriverError,
    ParseFailure,
}

/// Kind-specific event payloads. Untagged on the wire: the `kind` field of
/// the surrounding event names the variant. `Comment` must stay ahead of
/// `Post` so comment payloads (which carry a parent) never match as posts;
/// `Empty` must stay last because it matches any object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventPayload {
    OpinionUpdate {
        topic_id: TopicId,
        label: StanceLabel,
        score: f64,
        justification: String,
    },
    Comment {
        topic_id: TopicId,
        text: String,
        parent: ContentId,
    },
    Post {
        topic_id: TopicId,
        text: String,
    },
    Failure {
        message: String,
    },
    Empty {},
}

/// One line of the append-only event log. Field names and order are the
/// wire format: the log serialises as JSON-lines with exactly these keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick_day: u32,
    pub tick_hour: u32,
    pub seq: u64,
    pub kind: EventKind,
    pub actor: AgentId,
    pub target: Option<AgentId>,
    pub content_id: Option<ContentId>,
    pub payload: EventPayload,
}

impl Event {
    pub fn tick(&self) -> Tick {
        Tick::new(self.tick_day, self.tick_hour)
    }
}

/// Serialises events as JSON-lines, one event per line.
pub fn write_events_jsonl<W: Write>(writer: &mut W, events: &[Event]) -> Result<(), DomainError> {
    for event in events {
        serde_json::to_writer(&mut *writer, event).map_err(DomainError::Serde)?;
        writer.write_all(b"\n").map_err(DomainError::Io)?;
    }
    Ok(())
}

pub fn read_events_jsonl<R: BufRead>(reader: R) -> Result<Vec<Event>, DomainError> {
    let mut events = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(DomainError::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(serde_json::from_str(&line).map_err(DomainError::Serde)?);
    }
    Ok(events)
}

/// Everything an event log determines when applied to an initial graph.
#[derive(Debug, Clone)]
pub struct ReplayState {
    pub graph: SocialGraph,
    pub content: ContentStore,
    /// Latest recorded stance per (agent, topic).
    pub opinions: BTreeMap<(AgentId, TopicId), (StanceLabel, f64)>,
}

/// Applies an event log to an initial graph, reconstructing the final
/// graph and content store. The log must be totally ordered by
/// (tick, seq).
pub fn replay(events: &[Event], initial_graph: SocialGraph) -> Result<ReplayState, DomainError> {
    let mut state = ReplayState {
        graph: initial_graph,
        content: ContentStore::new(),
        opinions: BTreeMap::new(),
    };
    let mut last: Option<(Tick, u64)> = None;
    for event in events {
        let key = (event.tick(), event.seq);
        if let Some(prev) = last {
            if key <= prev {
                return Err(DomainError::LogOutOfOrder {
                    day: event.tick_day,
                    hour: event.tick_hour,
                    seq: event.seq,
                });
            }
        }
        last = Some(key);
        apply_event(&mut state, event)?;
    }
    Ok(state)
}

fn apply_event(state: &mut ReplayState, event: &Event) -> Result<(), DomainError> {
    match (event.kind, &event.payload) {
        (EventKind::Post, EventPayload::Post { topic_id, text }) => {
            let id = event
                .content_id
                .clone()
                .ok_or(DomainError::MalformedEvent(event.seq))?;
            state.content.insert(ContentItem {
                content_id: id,
                author: event.actor.clone(),
                kind: ContentKind::Post,
                parent: None,
                topic_id: topic_id.clone(),
                text: text.clone(),
                tick: event.tick(),
                like_count: 0,
            })?;
        }
        (EventKind::Comment, EventPayload::Comment { topic_id, text, parent }) => {
            let id = event
                .content_id
                .clone()
                .ok_or(DomainError::MalformedEvent(event.seq))?;
            state.content.insert(ContentItem {
                content_id: id,
                author: event.actor.clone(),
                kind: ContentKind::Comment,
                parent: Some(parent.clone()),
                topic_id: topic_id.clone(),
                text: text.clone(),
                tick: event.tick(),
                like_count: 0,
            })?;
        }
        (EventKind::Like, _) => {
            let id = event
                .content_id
                .as_ref()
                .ok_or(DomainError::MalformedEvent(event.seq))?;
            state.content.add_like(id)?;
        }
        (EventKind::Follow, _) => {
            let target = event
                .target
                .as_ref()
                .ok_or(DomainError::MalformedEvent(event.seq))?;
            state.graph.follow(&event.actor, target)?;
        }
        (EventKind::Unfollow, _) => {
            let target = event
                .target
                .as_ref()
                .ok_or(DomainError::MalformedEvent(event.seq))?;
            state.graph.unfollow(&event.actor, target)?;
        }
        (EventKind::OpinionUpdate, EventPayload::OpinionUpdate { topic_id, label, score, .. }) => {
            state
                .opinions
                .insert((event.actor.clone(), topic_id.clone()), (*label, *score));
        }
        (EventKind::DriverError | EventKind::ParseFailure, _) => {}
        _ => return Err(DomainError::MalformedEvent(event.seq)),
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("unknown agent: {0}")]
    UnknownAgent(AgentId),
    #[error("agents cannot follow themselves: {0}")]
    SelfFollow(AgentId),
    #[error("unknown content: {0}")]
    UnknownContent(ContentId),
    #[error("duplicate content id: {0}")]
    DuplicateContent(ContentId),
    #[error("content {0} inserted out of tick order")]
    ContentOutOfOrder(ContentId),
    #[error("post {0} cannot have a parent")]
    PostWithParent(ContentId),
    #[error("comment {0} is missing a parent")]
    CommentWithoutParent(ContentId),
    #[error("invalid topic definition: {0}")]
    InvalidTopic(TopicId),
    #[error("invalid profile for {agent}: {reason}")]
    InvalidProfile { agent: AgentId, reason: String },
    #[error("event log out of order at day {day} hour {hour} seq {seq}")]
    LogOutOfOrder { day: u32, hour: u32, seq: u64 },
    #[error("malformed event at seq {0}")]
    MalformedEvent(u64),
    #[error(transparent)]
    Serde(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
