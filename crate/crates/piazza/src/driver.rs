//! Text generation for agents: prompt rendering, a deterministic stub
//! driver, and a remote chat-completion driver speaking the Ollama-style
//! `/api/chat` JSON protocol.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AgentProfile, Tick, Topic, TopicId};
use crate::opinion::StanceLabel;
use crate::seeding::{toxicity_tone, CoalitionPriors};
use crate::stats::fnv1a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverMode {
    Stub,
    Remote,
}

/// Driver configuration. `SIM_LLM_ENDPOINT` and `SIM_LLM_MODEL` fill in
/// the endpoint and model when the config leaves them empty; explicit
/// config always wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriverConfig {
    pub mode: DriverMode,
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_secs: u64,
    pub max_concurrency: usize,
    /// Extra steering line for the opinion-update prompt; empty by default.
    pub bias_instructions: String,
    /// Probability that the stub driver moves one label step toward the
    /// mean stance observed in the day's memory.
    pub stub_drift_probability: f64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            mode: DriverMode::Stub,
            endpoint_url: String::new(),
            model_name: String::new(),
            temperature: 0.9,
            max_retries: 2,
            timeout_secs: 120,
            max_concurrency: 4,
            bias_instructions: String::new(),
            stub_drift_probability: 0.2,
        }
    }
}

impl DriverConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        if !(self.temperature > 0.0 && self.temperature <= 2.0) {
            return Err(DriverError::InvalidConfig(format!(
                "temperature {} outside (0, 2]",
                self.temperature
            )));
        }
        if self.timeout_secs == 0 {
            return Err(DriverError::InvalidConfig("timeout must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.stub_drift_probability) {
            return Err(DriverError::InvalidConfig(format!(
                "stub_drift_probability {} outside [0, 1]",
                self.stub_drift_probability
            )));
        }
        if self.mode == DriverMode::Remote && self.endpoint_url.is_empty() {
            return Err(DriverError::InvalidConfig(
                "remote mode requires an endpoint url".into(),
            ));
        }
        Ok(())
    }

    /// Fills empty endpoint/model fields from the environment.
    pub fn resolve_env(mut self) -> Self {
        if self.endpoint_url.is_empty() {
            if let Ok(v) = std::env::var("SIM_LLM_ENDPOINT") {
                self.endpoint_url = v;
            }
        }
        if self.model_name.is_empty() {
            if let Ok(v) = std::env::var("SIM_LLM_MODEL") {
                self.model_name = v;
            }
        }
        self
    }
}

/// One message of a comment thread, root first.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreadMessage {
    pub author_name: String,
    pub text: String,
}

/// One entry of an agent's daily memory: something it wrote or saw.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryItem {
    pub author_name: String,
    pub topic_id: TopicId,
    pub text: String,
    pub tick: Tick,
    /// True for the agent's own posts/comments of the day.
    pub own: bool,
}

/// A parsed opinion-update reply.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedOpinionUpdate {
    pub entries: Vec<OpinionLine>,
    /// Expected topics that had no parseable line.
    pub missing: Vec<TopicId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpinionLine {
    pub topic_id: TopicId,
    pub label: StanceLabel,
    pub thought: String,
}

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

const ROLEPLAY_TEMPLATE: &str = "\
You are role-playing as {name}, a {age}-year-old {nationality} {gender}, and you only speak {language}. You are {oe}, {co}, {ex}, {ag}, and {ne}.

Current {nationality} political topics include: {topic_descriptions}.

You politically identify as {leaning}. This party has historically promoted the following principles:
{coalition_opinion}.

These principles have shaped your initial worldview and personal beliefs.

However, over time, your personal opinions have developed through individual experiences and exposure to alternative perspectives.
Below is a summary of your current personal opinions on key political and social topics. These may reflect, diverge from, or expand upon your party's stance:
{opinion}";

const POST_TEMPLATE: &str = "\
Write a tweet that discusses the following topic: {topic}.
 - Your tweet MUST be under 280 characters including spaces. If it exceeds this limit, the output is INVALID. Keep it short and sharp.
 - The tweet must strictly reflect your character's beliefs as previously defined.
 - Use an informal tone, appropriate for social media posts.
 - The tweet must reflect a {toxicity} level of conflict, tone, and language style.
 - Hashtags should be placed at the end.
 - Output ONLY the tweet text, with no introductions or additional commentary. Don't mention anything with '@'.";

const COMMENT_TEMPLATE: &str = "\
You are participating to a discussion about the following topic: {topic}. Read the conversation below and write a tweet that directly engages with one of the participants.
 - Your tweet MUST be under 280 characters including spaces. If it exceeds this limit, the output is INVALID. Keep it short and sharp.
 - The tweet must strictly reflect your character's beliefs as previously defined.
 - Use an informal tone, appropriate for social media posts.
 - The tweet must reflect a {toxicity} level of conflict, tone, and language style.
 - Begin with @username to address the user you are interacting with. Don't mention anything else with '@'.
 - Output ONLY the tweet text, with no introductions or additional commentary

##CONVERSATION START##

{conv}

##CONVERSATION END##";

const OPINION_UPDATE_TEMPLATE: &str = "\
You are updating your character's opinions based strictly on the interactions below. Be consistent with your character's beliefs and personality as previously defined.
- {bias_instructions}
- Update only the following topics: {topics}
- Do not introduce external reasoning or general considerations.
- Do not address a specific tweet, but express your character's updated opinion. The opinion must reflect the character's position on the topic as defined in the topic descriptions, not their reaction to individual statements or posts.
- Don't mention anyone with '@'.
- Output EXACTLY one line per topic, following this structure:
<topic>: [<LABEL>] <thought>

Where:
- <thought> must be a clear and concise sentence that reflects your current personal opinion.
- <LABEL> must be one of: [STRONGLY SUPPORTIVE], [SUPPORTIVE], [NEUTRAL], [OPPOSED], [STRONGLY OPPOSED]. Choose the label based on the direction and intensity of your character's past behavior and beliefs.
    - [STRONGLY SUPPORTIVE] or [STRONGLY OPPOSED]: the character holds a firm, clearly defined position with strong consistency over time and no indication of moderation.
    - [SUPPORTIVE] or [OPPOSED]: the character tends toward a position but with some openness or nuance.
    - [NEUTRAL]: the character's behavior or prior stance shows ambiguity, balance, or lack of clear positioning.
- DO NOT include additional formatting between topics.

##OUTPUT FORMAT STRUCTURE##

<topic1>: [<LABEL>] <thought>
<topic2>: [<LABEL>] <thought>
...

##END OF OUTPUT FORMAT STRUCTURE##

##INTERACTIONS START##

{memory}

##INTERACTIONS END##";

/// Substitutes `{key}` placeholders. Every placeholder in the template
/// must be bound; required values must be non-empty.
fn render_template(
    template: &str,
    required: &[(&str, &str)],
    optional: &[(&str, &str)],
) -> Result<String, DriverError> {
    for (key, value) in required {
        if value.trim().is_empty() {
            return Err(DriverError::MissingPlaceholder((*key).to_string()));
        }
    }
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let (head, tail) = rest.split_at(start);
        out.push_str(head);
        let end = tail
            .find('}')
            .ok_or_else(|| DriverError::UnresolvedPlaceholder(tail.chars().take(24).collect()))?;
        let key = &tail[1..end];
        let value = required
            .iter()
            .chain(optional.iter())
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| DriverError::UnresolvedPlaceholder(key.to_string()))?;
        out.push_str(value);
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn render_topic_descriptions(topics: &[Topic]) -> String {
    topics
        .iter()
        .map(|t| {
            format!(
                "- {}: {} Supportive means: {} Opposed means: {}",
                t.id.display_name(),
                t.description,
                t.supportive_meaning,
                t.opposed_meaning
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn render_opinion_lines(records: &[crate::domain::OpinionRecord]) -> String {
    records
        .iter()
        .map(|r| {
            format!(
                "- {}: [{}] {}",
                r.topic_id.display_name(),
                r.label.protocol_name(),
                r.justification
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Renders the four prompt kinds against a fixed topic/prior configuration.
#[derive(Debug, Clone)]
pub struct PromptRenderer {
    topics: Vec<Topic>,
    priors: CoalitionPriors,
    bias_instructions: String,
}

impl PromptRenderer {
    pub fn new(topics: Vec<Topic>, priors: CoalitionPriors) -> Self {
        PromptRenderer { topics, priors, bias_instructions: String::new() }
    }

    pub fn with_bias_instructions(mut self, bias: impl Into<String>) -> Self {
        self.bias_instructions = bias.into();
        self
    }

    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    fn topic(&self, id: &TopicId) -> Result<&Topic, DriverError> {
        self.topics
            .iter()
            .find(|t| &t.id == id)
            .ok_or_else(|| DriverError::UnknownTopic(id.clone()))
    }

    /// The system prompt that sets up the persona.
    pub fn roleplay(&self, profile: &AgentProfile) -> Result<String, DriverError> {
        let coalition_opinion = self
            .topics
            .iter()
            .filter_map(|t| self.priors.get(profile.coalition, &t.id).map(|p| (t, p)))
            .map(|(t, p)| {
                format!(
                    "- {}: [{}] {}",
                    t.id.display_name(),
                    p.label.protocol_name(),
                    p.justification
                )
            })
            .collect::<Vec<_>>()
            .join("\n");
        let age = profile.age.to_string();
        render_template(
            ROLEPLAY_TEMPLATE,
            &[
                ("name", profile.name.as_str()),
                ("age", age.as_str()),
                ("nationality", profile.nationality.as_str()),
                ("gender", profile.gender.as_str()),
                ("language", profile.language.as_str()),
                ("oe", profile.big_five.openness.as_str()),
                ("co", profile.big_five.conscientiousness.as_str()),
                ("ex", profile.big_five.extraversion.as_str()),
                ("ag", profile.big_five.agreeableness.as_str()),
                ("ne", profile.big_five.neuroticism.as_str()),
                ("topic_descriptions", &render_topic_descriptions(&self.topics)),
                ("leaning", profile.coalition.display_name()),
                ("coalition_opinion", &coalition_opinion),
                ("opinion", &render_opinion_lines(&profile.opinions)),
            ],
            &[],
        )
    }

    pub fn post(&self, profile: &AgentProfile, topic_id: &TopicId) -> Result<String, DriverError> {
        let topic = self.topic(topic_id)?;
        let topic_text = format!("{}: {}", topic.id.display_name(), topic.description);
        render_template(
            POST_TEMPLATE,
            &[
                ("topic", topic_text.as_str()),
                ("toxicity", toxicity_tone(profile.target_toxicity)),
            ],
            &[],
        )
    }

    pub fn comment(
        &self,
        profile: &AgentProfile,
        topic_id: &TopicId,
        thread: &[ThreadMessage],
    ) -> Result<String, DriverError> {
        if thread.is_empty() {
            return Err(DriverError::EmptyThread);
        }
        let topic = self.topic(topic_id)?;
        let topic_text = format!("{}: {}", topic.id.display_name(), topic.description);
        let conv = thread
            .iter()
            .map(|m| format!("@{}: {}", m.author_name, m.text))
            .collect::<Vec<_>>()
            .join("\n");
        render_template(
            COMMENT_TEMPLATE,
            &[
                ("topic", topic_text.as_str()),
                ("toxicity", toxicity_tone(profile.target_toxicity)),
                ("conv", conv.as_str()),
            ],
            &[],
        )
    }

    pub fn opinion_update(
        &self,
        _profile: &AgentProfile,
        topics_touched: &[TopicId],
        memory: &[MemoryItem],
    ) -> Result<String, DriverError> {
        if topics_touched.is_empty() {
            return Err(DriverError::NoTopics);
        }
        for id in topics_touched {
            self.topic(id)?;
        }
        let topics = topics_touched
            .iter()
            .map(|id| id.display_name())
            .collect::<Vec<_>>()
            .join(", ");
        let memory_text = memory
            .iter()
            .map(|m| {
                let who = if m.own { "you" } else { m.author_name.as_str() };
                format!(
                    "[day {} hour {}] @{} on {}: {}",
                    m.tick.day,
                    m.tick.hour,
                    who,
                    m.topic_id.display_name(),
                    m.text
                )
            })
            .collect::<Vec<_>>()
            .join("\n");
        render_template(
            OPINION_UPDATE_TEMPLATE,
            &[("topics", topics.as_str())],
            &[
                ("bias_instructions", self.bias_instructions.as_str()),
                ("memory", memory_text.as_str()),
            ],
        )
    }
}

// ---------------------------------------------------------------------------
// Reply parsing
// ---------------------------------------------------------------------------

/// Lowercases and squeezes every non-alphanumeric run into one underscore,
/// so `Nuclear Energy`, `nuclear_energy` and `nuclear-energy` all match.
fn normalize_topic_key(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_sep = false;
    for c in s.trim().chars() {
        if c.is_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            pending_sep = false;
            out.extend(c.to_lowercase());
        } else {
            pending_sep = true;
        }
    }
    out
}

/// Extracts `(topic, label, thought)` lines shaped as
/// `<topic>: [<LABEL>] <thought>`. Topic matching is case-insensitive on
/// the topic id or its display name; lines for unexpected topics are
/// ignored and expected topics without a line are reported as missing.
pub fn parse_opinion_update(
    raw: &str,
    expected_topics: &[Topic],
) -> Result<ParsedOpinionUpdate, DriverError> {
    let mut entries: Vec<OpinionLine> = Vec::new();
    for line in raw.lines() {
        let line = line.trim().trim_start_matches(['-', '*', '•']).trim();
        let Some(colon) = line.find(':') else { continue };
        let (topic_part, rest) = line.split_at(colon);
        let rest = &rest[1..];
        let Some(open) = rest.find('[') else { continue };
        let Some(close_rel) = rest[open..].find(']') else { continue };
        let close = open + close_rel;
        let Some(label) = StanceLabel::parse(&rest[open + 1..close]) else { continue };

        let key = normalize_topic_key(topic_part);
        let Some(topic) = expected_topics.iter().find(|t| {
            normalize_topic_key(t.id.as_str()) == key
                || normalize_topic_key(&t.id.display_name()) == key
        }) else {
            continue;
        };
        if entries.iter().any(|e| e.topic_id == topic.id) {
            continue;
        }
        entries.push(OpinionLine {
            topic_id: topic.id.clone(),
            label,
            thought: rest[close + 1..].trim().to_string(),
        });
    }
    if entries.is_empty() {
        return Err(DriverError::ParseFailure);
    }
    let missing = expected_topics
        .iter()
        .map(|t| t.id.clone())
        .filter(|id| !entries.iter().any(|e| &e.topic_id == id))
        .collect();
    Ok(ParsedOpinionUpdate { entries, missing })
}

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 2],
    stream: bool,
    options: ChatOptions,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatOptions {
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

/// Returns a completion for the prompt pair. Stub mode produces a short
/// deterministic text keyed by a hash of both prompts; remote mode POSTs
/// an `/api/chat` request and retries transport and server errors up to
/// `max_retries` times.
pub fn generate(
    config: &DriverConfig,
    system_prompt: &str,
    user_prompt: &str,
) -> Result<String, DriverError> {
    config.validate()?;
    match config.mode {
        DriverMode::Stub => {
            let mut bytes = Vec::with_capacity(system_prompt.len() + user_prompt.len() + 8);
            bytes.extend_from_slice(system_prompt.as_bytes());
            bytes.push(0x1f);
            bytes.extend_from_slice(user_prompt.as_bytes());
            Ok(format!("stub-completion-{:016x}", fnv1a(&bytes)))
        }
        DriverMode::Remote => {
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(config.timeout_secs))
                .build()
                .map_err(|e| DriverError::InvalidConfig(e.to_string()))?;
            generate_remote(&client, config, system_prompt, user_prompt)
        }
    }
}

pub(crate) fn generate_remote(
    client: &reqwest::blocking::Client,
    config: &DriverConfig,
    system_prompt: &str,
    user_prompt: &str,
) -> Result<String, DriverError> {
    let url = format!("{}/api/chat", config.endpoint_url.trim_end_matches('/'));
    let request = ChatRequest {
        model: &config.model_name,
        messages: [
            ChatMessage { role: "system", content: system_prompt },
            ChatMessage { role: "user", content: user_prompt },
        ],
        stream: false,
        options: ChatOptions { temperature: config.temperature },
    };
    let attempts = config.max_retries + 1;
    let mut last_error = String::new();
    for _ in 0..attempts {
        match client.post(&url).json(&request).send() {
            Ok(response) => {
                let status = response.status();
                if status.is_success() {
                    let parsed: ChatResponse = response
                        .json()
                        .map_err(|e| DriverError::Transport { attempts, cause: e.to_string() })?;
                    return Ok(parsed.message.content);
                }
                last_error = format!("endpoint returned {status}");
                if status.is_client_error() {
                    // Malformed request or unknown model; retrying won't help.
                    break;
                }
            }
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(DriverError::Transport { attempts, cause: last_error })
}

/// Counting semaphore bounding concurrent in-flight remote requests.
#[derive(Debug)]
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore { permits: Mutex::new(permits.max(1)), available: Condvar::new() }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().unwrap();
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

/// Produces the text for each agent action. Implementations must never
/// corrupt simulation state: they return either text or an error.
pub trait AgentDriver: Send + Sync {
    fn post_text(
        &self,
        profile: &AgentProfile,
        topic: &Topic,
        tick: Tick,
    ) -> Result<String, DriverError>;

    fn comment_text(
        &self,
        profile: &AgentProfile,
        topic: &Topic,
        thread: &[ThreadMessage],
        tick: Tick,
    ) -> Result<String, DriverError>;

    fn opinion_update_text(
        &self,
        profile: &AgentProfile,
        topics_touched: &[TopicId],
        memory: &[MemoryItem],
    ) -> Result<String, DriverError>;
}

/// Deterministic test double. Text is keyed by an FNV hash of the inputs
/// and the run seed; stance labels and a tone-proportional marker vocabulary
/// are embedded so the analysis pipeline can run end-to-end without a model.
#[derive(Debug, Clone)]
pub struct StubDriver {
    seed: u64,
    drift_probability: f64,
}

const STUB_PHRASES: [&str; 4] = [
    "Here is where I stand today.",
    "My view has not moved an inch.",
    "The debate keeps proving my point.",
    "Everyone should think hard about this.",
];

impl StubDriver {
    pub fn new(seed: u64) -> Self {
        StubDriver { seed, drift_probability: 0.2 }
    }

    pub fn with_drift_probability(mut self, p: f64) -> Self {
        self.drift_probability = p;
        self
    }

    pub fn from_config(seed: u64, config: &DriverConfig) -> Self {
        StubDriver { seed, drift_probability: config.stub_drift_probability }
    }

    fn hash(&self, parts: &[&str]) -> u64 {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&self.seed.to_le_bytes());
        for part in parts {
            bytes.extend_from_slice(part.as_bytes());
            bytes.push(0x1f);
        }
        fnv1a(&bytes)
    }

    /// The marker prefix whose lexicon density lands in the tone band the
    /// default toxicity scorer expects.
    fn tone_prefix(tone: &str) -> &'static str {
        match tone {
            "high" => "Damn hell, idiots and clowns peddling garbage again, shameful and pathetic. ",
            "moderate" => "This damn debate is hell, what a garbage take lately. ",
            _ => "",
        }
    }

    /// Deterministic ≤280-character text embedding coalition, stance label,
    /// topic and tone markers.
    pub fn decide_text(
        &self,
        profile: &AgentProfile,
        kind: crate::domain::ContentKind,
        topic: &Topic,
        context: &str,
    ) -> String {
        let label = profile
            .opinion(&topic.id)
            .map(|r| r.label)
            .unwrap_or(StanceLabel::Neutral);
        let hash = self.hash(&[
            profile.agent_id.as_str(),
            topic.id.as_str(),
            context,
            match kind {
                crate::domain::ContentKind::Post => "post",
                crate::domain::ContentKind::Comment => "comment",
            },
        ]);
        let phrase = STUB_PHRASES[(hash % STUB_PHRASES.len() as u64) as usize];
        let tone = toxicity_tone(profile.target_toxicity);
        let body = format!(
            "{}{} and the {} position: [{}] {} #{}",
            Self::tone_prefix(tone),
            topic.id.display_name(),
            profile.coalition.display_name(),
            label.id_name(),
            phrase,
            topic.id.as_str()
        );
        truncate_chars(&body, 280)
    }

    /// Mean stance encoded in the day's memory for one topic, recovered
    /// from the bracketed label markers stub texts embed.
    fn observed_mean(memory: &[MemoryItem], topic: &TopicId) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0u32;
        for item in memory.iter().filter(|m| !m.own && &m.topic_id == topic) {
            let Some(open) = item.text.find('[') else { continue };
            let Some(close_rel) = item.text[open..].find(']') else { continue };
            if let Some(label) = StanceLabel::parse(&item.text[open + 1..open + close_rel]) {
                sum += label.score();
                n += 1;
            }
        }
        if n == 0 {
            None
        } else {
            Some(sum / f64::from(n))
        }
    }
}

fn truncate_chars(s: &str, max_chars: usize) -> String {
    match s.char_indices().nth(max_chars) {
        Some((idx, _)) => s[..idx].to_string(),
        None => s.to_string(),
    }
}

impl AgentDriver for StubDriver {
    fn post_text(
        &self,
        profile: &AgentProfile,
        topic: &Topic,
        tick: Tick,
    ) -> Result<String, DriverError> {
        let context = format!("{}:{}", tick.day, tick.hour);
        Ok(self.decide_text(profile, crate::domain::ContentKind::Post, topic, &context))
    }

    fn comment_text(
        &self,
        profile: &AgentProfile,
        topic: &Topic,
        thread: &[ThreadMessage],
        tick: Tick,
    ) -> Result<String, DriverError> {
        let target = thread.last().ok_or(DriverError::EmptyThread)?;
        let context = format!("{}:{}:{}", tick.day, tick.hour, thread.len());
        let body = self.decide_text(profile, crate::domain::ContentKind::Comment, topic, &context);
        Ok(truncate_chars(&format!("@{} {}", target.author_name, body), 280))
    }

    fn opinion_update_text(
        &self,
        profile: &AgentProfile,
        topics_touched: &[TopicId],
        memory: &[MemoryItem],
    ) -> Result<String, DriverError> {
        if topics_touched.is_empty() {
            return Err(DriverError::NoTopics);
        }
        let mut lines = Vec::with_capacity(topics_touched.len());
        for topic_id in topics_touched {
            let current = profile
                .opinion(topic_id)
                .map(|r| r.label)
                .unwrap_or(StanceLabel::Neutral);
            let mut label = current;
            if let Some(mean) = Self::observed_mean(memory, topic_id) {
                let hash = self.hash(&[
                    "drift",
                    profile.agent_id.as_str(),
                    topic_id.as_str(),
                    &memory.len().to_string(),
                ]);
                let u = hash as f64 / u64::MAX as f64;
                if u < self.drift_probability {
                    label = current.step_toward(mean);
                }
            }
            let thought = if label == current {
                format!(
                    "My {} position on {} is unchanged.",
                    profile.coalition.display_name(),
                    topic_id.display_name()
                )
            } else {
                format!(
                    "Today's exchanges nudged my {} view on {}.",
                    profile.coalition.display_name(),
                    topic_id.display_name()
                )
            };
            lines.push(format!(
                "{}: [{}] {}",
                topic_id.display_name(),
                label.protocol_name(),
                thought
            ));
        }
        Ok(lines.join("\n"))
    }
}

/// Calls a chat-completion endpoint, rendering the roleplay prompt as the
/// system message and the action prompt as the user message.
pub struct RemoteDriver {
    config: DriverConfig,
    renderer: PromptRenderer,
    client: reqwest::blocking::Client,
    limiter: Semaphore,
}

impl RemoteDriver {
    pub fn new(config: DriverConfig, renderer: PromptRenderer) -> Result<Self, DriverError> {
        let config = config.resolve_env();
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| DriverError::InvalidConfig(e.to_string()))?;
        let limiter = Semaphore::new(config.max_concurrency);
        Ok(RemoteDriver { config, renderer, client, limiter })
    }

    pub fn config(&self) -> &DriverConfig {
        &self.config
    }

    fn call(&self, system: &str, user: &str) -> Result<String, DriverError> {
        let _permit = self.limiter.acquire();
        generate_remote(&self.client, &self.config, system, user)
    }
}

impl AgentDriver for RemoteDriver {
    fn post_text(
        &self,
        profile: &AgentProfile,
        topic: &Topic,
        _tick: Tick,
    ) -> Result<String, DriverError> {
        let system = self.renderer.roleplay(profile)?;
        let user = self.renderer.post(profile, &topic.id)?;
        self.call(&system, &user)
    }

    fn comment_text(
        &self,
        profile: &AgentProfile,
        topic: &Topic,
        thread: &[ThreadMessage],
        _tick: Tick,
    ) -> Result<String, DriverError> {
        let system = self.renderer.roleplay(profile)?;
        let user = self.renderer.comment(profile, &topic.id, thread)?;
        self.call(&system, &user)
    }

    fn opinion_update_text(
        &self,
        profile: &AgentProfile,
        topics_touched: &[TopicId],
        memory: &[MemoryItem],
    ) -> Result<String, DriverError> {
        let system = self.renderer.roleplay(profile)?;
        let user = self.renderer.opinion_update(profile, topics_touched, memory)?;
        self.call(&system, &user)
    }
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("missing value for placeholder '{0}'")]
    MissingPlaceholder(String),
    #[error("unresolved placeholder '{0}'")]
    UnresolvedPlaceholder(String),
    #[error("unknown topic: {0}")]
    UnknownTopic(TopicId),
    #[error("empty conversation thread")]
    EmptyThread,
    #[error("no topics to update")]
    NoTopics,
    #[error("transport failed after {attempts} attempts: {cause}")]
    Transport { attempts: u32, cause: String },
    #[error("unparseable opinion update")]
    ParseFailure,
    #[error("invalid driver config: {0}")]
    InvalidConfig(String),
}
