//! Population construction from empirical seed records: activity
//! normalisation against the 99.5th-percentile post count, coalition and
//! toxicity inherited from sampled seeds, and coalition opinion priors.

use std::collections::BTreeMap;
use std::io::BufRead;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    AgentId, AgentProfile, BigFive, Coalition, DomainError, OpinionRecord, Topic, TopicId,
};
use crate::opinion::StanceLabel;
use crate::stats::{self, StatsError};

/// One anonymised user record from the seed corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub user_id: String,
    pub n_posts: u64,
    pub coalition: Coalition,
    pub avg_toxicity: f64,
}

impl SeedRecord {
    pub fn validate(&self) -> Result<(), SeedingError> {
        if !(0.0..=1.0).contains(&self.avg_toxicity) {
            return Err(SeedingError::InvalidSeed {
                user_id: self.user_id.clone(),
                reason: format!("avg_toxicity {} outside [0, 1]", self.avg_toxicity),
            });
        }
        Ok(())
    }
}

/// Reads seed records from JSON-lines.
pub fn read_seeds_jsonl<R: BufRead>(reader: R) -> Result<Vec<SeedRecord>, SeedingError> {
    let mut seeds = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| SeedingError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let seed: SeedRecord =
            serde_json::from_str(&line).map_err(|e| SeedingError::Io(e.to_string()))?;
        seed.validate()?;
        seeds.push(seed);
    }
    Ok(seeds)
}

/// A coalition's prior position on one topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionPrior {
    pub label: StanceLabel,
    pub justification: String,
}

/// Prior positions per coalition per topic; agents start from their
/// coalition's priors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoalitionPriors(pub BTreeMap<Coalition, BTreeMap<TopicId, OpinionPrior>>);

impl CoalitionPriors {
    pub fn get(&self, coalition: Coalition, topic: &TopicId) -> Option<&OpinionPrior> {
        self.0.get(&coalition).and_then(|m| m.get(topic))
    }

    /// Checks that every (coalition, topic) pair has a prior.
    pub fn validate_covers(&self, topics: &[Topic]) -> Result<(), SeedingError> {
        for coalition in Coalition::ALL {
            for topic in topics {
                if self.get(coalition, &topic.id).is_none() {
                    return Err(SeedingError::MissingPrior {
                        coalition,
                        topic: topic.id.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// The 99.5th percentile of a post-count corpus, interpolating linearly
/// between closest ranks.
pub fn activity_threshold(post_counts: &[u64]) -> Result<f64, SeedingError> {
    let values: Vec<f64> = post_counts.iter().map(|&c| c as f64).collect();
    stats::percentile(&values, 0.995).map_err(SeedingError::Stats)
}

/// Log-normalised activity: min(ln(1 + n_posts) / ln(1 + n995), 1.0).
/// Zero posts map to exactly 0.0 and anything at or above the threshold
/// clips to exactly 1.0.
pub fn normalize_activity(n_posts: u64, n995: f64) -> Result<f64, SeedingError> {
    if !(n995 > 0.0) {
        return Err(SeedingError::InvalidThreshold(n995));
    }
    let ratio = (n_posts as f64).ln_1p() / n995.ln_1p();
    Ok(ratio.min(1.0))
}

/// Draws a coalition from an explicit distribution. Probabilities must be
/// non-negative and sum to 1 within 1e-9.
pub fn sample_coalition<R: Rng>(
    distribution: &BTreeMap<Coalition, f64>,
    rng: &mut R,
) -> Result<Coalition, SeedingError> {
    validate_distribution(distribution)?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for coalition in Coalition::ALL {
        acc += distribution.get(&coalition).copied().unwrap_or(0.0);
        if u < acc {
            return Ok(coalition);
        }
    }
    // Floating-point slack at the top of the cumulative scan.
    Ok(*distribution
        .iter()
        .rev()
        .find(|(_, p)| **p > 0.0)
        .map(|(c, _)| c)
        .unwrap_or(&Coalition::M5s))
}

pub fn validate_distribution(distribution: &BTreeMap<Coalition, f64>) -> Result<(), SeedingError> {
    let mut total = 0.0;
    for (coalition, p) in distribution {
        if !p.is_finite() || *p < 0.0 {
            return Err(SeedingError::InvalidDistribution(format!(
                "probability for {coalition} is {p}"
            )));
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(SeedingError::InvalidDistribution(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// One opinion record per topic, seeded from the coalition's priors.
pub fn initial_opinions(
    coalition: Coalition,
    topics: &[Topic],
    priors: &CoalitionPriors,
) -> Result<Vec<OpinionRecord>, SeedingError> {
    topics
        .iter()
        .map(|topic| {
            let prior = priors
                .get(coalition, &topic.id)
                .ok_or_else(|| SeedingError::MissingPrior {
                    coalition,
                    topic: topic.id.clone(),
                })?;
            Ok(OpinionRecord::from_label(
                topic.id.clone(),
                prior.label,
                prior.justification.clone(),
            ))
        })
        .collect()
}

/// Qualitative tone token interpolated into generation prompts, derived
/// from target toxicity in thirds.
pub fn toxicity_tone(target_toxicity: f64) -> &'static str {
    if target_toxicity < 1.0 / 3.0 {
        "low"
    } else if target_toxicity < 2.0 / 3.0 {
        "moderate"
    } else {
        "high"
    }
}

/// Weighted age bracket (inclusive bounds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeBucket {
    pub min: u32,
    pub max: u32,
    pub weight: f64,
}

/// Demographic sampling weights. Defaults are uniform: the underlying
/// platform statistics are not distributed with the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Demographics {
    pub age_buckets: Vec<AgeBucket>,
    /// (gender, weight) pairs.
    pub genders: Vec<(String, f64)>,
}

impl Default for Demographics {
    fn default() -> Self {
        Demographics {
            age_buckets: vec![AgeBucket { min: 18, max: 60, weight: 1.0 }],
            genders: vec![("woman".to_string(), 0.5), ("man".to_string(), 0.5)],
        }
    }
}

impl Demographics {
    pub fn validate(&self) -> Result<(), SeedingError> {
        if self.age_buckets.is_empty() || self.genders.is_empty() {
            return Err(SeedingError::InvalidDistribution(
                "empty demographic weights".to_string(),
            ));
        }
        for bucket in &self.age_buckets {
            if bucket.min < 18 || bucket.max > 60 || bucket.min > bucket.max || bucket.weight < 0.0 {
                return Err(SeedingError::InvalidDistribution(format!(
                    "bad age bucket [{}, {}] weight {}",
                    bucket.min, bucket.max, bucket.weight
                )));
            }
        }
        if self.age_buckets.iter().map(|b| b.weight).sum::<f64>() <= 0.0
            || self.genders.iter().map(|(_, w)| *w).sum::<f64>() <= 0.0
        {
            return Err(SeedingError::InvalidDistribution(
                "demographic weights sum to zero".to_string(),
            ));
        }
        Ok(())
    }
}

/// Everything `build_population` needs besides the seed corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedingConfig {
    pub population_size: usize,
    /// When false, each seed record is used at most once and the corpus
    /// must be at least population-sized.
    pub sample_with_replacement: bool,
    /// When set, coalitions are drawn from this distribution and a seed of
    /// the drawn coalition is sampled; when unset, seeds are sampled
    /// directly, reproducing the corpus's empirical coalition mix.
    pub coalition_distribution: Option<BTreeMap<Coalition, f64>>,
    pub demographics: Demographics,
    pub language: String,
    pub topics: Vec<Topic>,
    pub priors: CoalitionPriors,
}

const FIRST_NAMES: [&str; 24] = [
    "Alessandro", "Beatrice", "Carlo", "Daniela", "Edoardo", "Francesca", "Giorgio", "Helena",
    "Ilaria", "Jacopo", "Katia", "Lorenzo", "Martina", "Nicola", "Ornella", "Paolo", "Quintino",
    "Roberta", "Stefano", "Teresa", "Umberto", "Valentina", "Walter", "Zita",
];

const LAST_NAMES: [&str; 24] = [
    "Abate", "Bianchi", "Colombo", "De Luca", "Esposito", "Ferrari", "Gallo", "Iannelli",
    "Lombardi", "Marino", "Neri", "Orlandi", "Pellegrini", "Quaranta", "Ricci", "Santoro",
    "Trevisan", "Ubaldi", "Vitale", "Zanetti", "Barone", "Caruso", "Donati", "Fabbri",
];

const TRAIT_LEVELS: [[&str; 3]; 5] = [
    ["wary of new experiences", "moderately open to new experiences", "very open to new experiences"],
    ["careless about plans and duties", "reasonably conscientious", "highly conscientious and organised"],
    ["reserved and quiet", "moderately extraverted", "strongly extraverted and outspoken"],
    ["blunt and competitive", "generally agreeable", "warm and highly agreeable"],
    ["emotionally steady", "occasionally anxious", "emotionally volatile and easily stressed"],
];

fn sample_weighted<R: Rng, T>(items: &[T], weight: impl Fn(&T) -> f64, rng: &mut R) -> usize {
    let total: f64 = items.iter().map(&weight).sum();
    let mut u: f64 = rng.gen::<f64>() * total;
    for (i, item) in items.iter().enumerate() {
        u -= weight(item);
        if u < 0.0 {
            return i;
        }
    }
    items.len() - 1
}

/// Builds the agent population. Activity comes from the log-normalised
/// post count of each agent's sampled seed against the corpus-wide
/// 99.5th-percentile threshold; coalition and target toxicity are copied
/// from the seed; demographics, traits and names are drawn from the
/// injected rng, so a fixed seed reproduces the population byte for byte.
pub fn build_population<R: Rng>(
    seeds: &[SeedRecord],
    config: &SeedingConfig,
    rng: &mut R,
) -> Result<Vec<AgentProfile>, SeedingError> {
    if seeds.is_empty() {
        return Err(SeedingError::EmptySeedCorpus);
    }
    if !config.sample_with_replacement && seeds.len() < config.population_size {
        return Err(SeedingError::CorpusTooSmall {
            seeds: seeds.len(),
            population: config.population_size,
        });
    }
    config.demographics.validate()?;
    config.priors.validate_covers(&config.topics)?;
    if let Some(dist) = &config.coalition_distribution {
        validate_distribution(dist)?;
    }
    for seed in seeds {
        seed.validate()?;
    }

    let counts: Vec<u64> = seeds.iter().map(|s| s.n_posts).collect();
    let n995 = activity_threshold(&counts)?;

    // Seed indices grouped per coalition, for distribution-driven sampling.
    let mut by_coalition: BTreeMap<Coalition, Vec<usize>> = BTreeMap::new();
    for (i, seed) in seeds.iter().enumerate() {
        by_coalition.entry(seed.coalition).or_default().push(i);
    }
    let mut used: Vec<bool> = vec![false; seeds.len()];
    let mut used_names: BTreeMap<String, u32> = BTreeMap::new();

    let mut population = Vec::with_capacity(config.population_size);
    for i in 0..config.population_size {
        let seed_idx = pick_seed(seeds, &by_coalition, &mut used, config, rng)?;
        let seed = &seeds[seed_idx];

        let activity = if n995 > 0.0 {
            normalize_activity(seed.n_posts, n995)?
        } else if seed.n_posts == 0 {
            // Degenerate corpus: the threshold itself is zero.
            0.0
        } else {
            1.0
        };

        let bucket =
            &config.demographics.age_buckets[sample_weighted(&config.demographics.age_buckets, |b| b.weight, rng)];
        let age = rng.gen_range(bucket.min..=bucket.max);
        let gender = config.demographics.genders
            [sample_weighted(&config.demographics.genders, |(_, w)| *w, rng)]
        .0
        .clone();

        let mut traits = [""; 5];
        for (slot, levels) in traits.iter_mut().zip(TRAIT_LEVELS.iter()) {
            *slot = levels[rng.gen_range(0..3)];
        }
        let big_five = BigFive {
            openness: traits[0].to_string(),
            conscientiousness: traits[1].to_string(),
            extraversion: traits[2].to_string(),
            agreeableness: traits[3].to_string(),
            neuroticism: traits[4].to_string(),
        };

        let base_name = format!(
            "{} {}",
            FIRST_NAMES[rng.gen_range(0..FIRST_NAMES.len())],
            LAST_NAMES[rng.gen_range(0..LAST_NAMES.len())]
        );
        let name = match used_names.get_mut(&base_name) {
            Some(count) => {
                *count += 1;
                format!("{base_name} {count}")
            }
            None => {
                used_names.insert(base_name.clone(), 1);
                base_name
            }
        };

        let opinions = initial_opinions(seed.coalition, &config.topics, &config.priors)?;
        let profile = AgentProfile::new(
            AgentId::new(format!("a{i:04}")),
            name,
            age,
            gender,
            "Italian".to_string(),
            config.language.clone(),
            big_five,
            seed.coalition,
            activity,
            seed.avg_toxicity,
            opinions,
        )?;
        population.push(profile);
    }
    Ok(population)
}

fn pick_seed<R: Rng>(
    seeds: &[SeedRecord],
    by_coalition: &BTreeMap<Coalition, Vec<usize>>,
    used: &mut [bool],
    config: &SeedingConfig,
    rng: &mut R,
) -> Result<usize, SeedingError> {
    let candidates: Vec<usize> = match &config.coalition_distribution {
        Some(dist) => {
            let coalition = sample_coalition(dist, rng)?;
            let pool = by_coalition
                .get(&coalition)
                .filter(|p| !p.is_empty())
                .ok_or(SeedingError::NoSeedsForCoalition(coalition))?;
            pool.iter()
                .copied()
                .filter(|&i| config.sample_with_replacement || !used[i])
                .collect()
        }
        None => (0..seeds.len())
            .filter(|&i| config.sample_with_replacement || !used[i])
            .collect(),
    };
    if candidates.is_empty() {
        return Err(SeedingError::CorpusTooSmall {
            seeds: seeds.len(),
            population: used.iter().filter(|u| **u).count() + 1,
        });
    }
    let idx = candidates[rng.gen_range(0..candidates.len())];
    used[idx] = true;
    Ok(idx)
}

#[derive(Debug, Error)]
pub enum SeedingError {
    #[error("empty seed corpus")]
    EmptySeedCorpus,
    #[error("seed corpus has {seeds} records but population needs {population} without replacement")]
    CorpusTooSmall { seeds: usize, population: usize },
    #[error("activity threshold {0} must be positive")]
    InvalidThreshold(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("no seed records for coalition {0}")]
    NoSeedsForCoalition(Coalition),
    #[error("no prior for coalition {coalition} on topic {topic}")]
    MissingPrior { coalition: Coalition, topic: TopicId },
    #[error("invalid seed record {user_id}: {reason}")]
    InvalidSeed { user_id: String, reason: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("seed io: {0}")]
    Io(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{default_priors, default_topics};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_config(size: usize) -> SeedingConfig {
        SeedingConfig {
            population_size: size,
            sample_with_replacement: true,
            coalition_distribution: None,
            demographics: Demographics::default(),
            language: "Italian".to_string(),
            topics: default_topics(),
            priors: default_priors(),
        }
    }

    fn synthetic_seeds(n: usize) -> Vec<SeedRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        (0..n)
            .map(|i| SeedRecord {
                user_id: format!("u{i:04}"),
                n_posts: rng.gen_range(0..2000),
                coalition: Coalition::ALL[i % 4],
                avg_toxicity: rng.gen_range(0.0..1.0),
            })
            .collect()
    }

    #[test]
    fn threshold_of_constant_counts() {
        assert_eq!(activity_threshold(&[5, 5, 5, 5]).unwrap(), 5.0);
    }

    #[test]
    fn threshold_of_singleton() {
        assert_eq!(activity_threshold(&[7]).unwrap(), 7.0);
    }

    #[test]
    fn threshold_interpolates_closest_ranks() {
        // 1..1000 at p = 0.995: rank h = 999 * 0.995 = 994.005, giving
        // 995 + 0.005 * 1 = 995.005 under the closest-ranks convention.
        let counts: Vec<u64> = (1..=1000).collect();
        let t = activity_threshold(&counts).unwrap();
        assert!((t - 995.005).abs() < 1e-9, "got {t}");
    }

    #[test]
    fn zero_posts_give_zero_activity() {
        assert_eq!(normalize_activity(0, 123.0).unwrap(), 0.0);
    }

    #[test]
    fn threshold_posts_give_unit_activity() {
        assert_eq!(normalize_activity(100, 100.0).unwrap(), 1.0);
        assert_eq!(normalize_activity(5000, 100.0).unwrap(), 1.0);
    }

    #[test]
    fn activity_matches_log_ratio() {
        // ln(11) / ln(101), checked against an independent log2 route.
        let a = normalize_activity(10, 100.0).unwrap();
        assert!((a - 0.519_573_706_5).abs() < 1e-9, "got {a}");
        assert!((a - 11f64.log2() / 101f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn activity_is_monotone_in_posts() {
        let mut prev = 0.0;
        for n in [0u64, 1, 5, 20, 80, 100, 500] {
            let a = normalize_activity(n, 100.0).unwrap();
            assert!(a >= prev);
            prev = a;
        }
    }

    #[test]
    fn activity_rejects_bad_threshold() {
        assert!(normalize_activity(10, 0.0).is_err());
        assert!(normalize_activity(10, -1.0).is_err());
    }

    #[test]
    fn point_mass_distribution_always_wins() {
        let mut dist = BTreeMap::new();
        dist.insert(Coalition::Right, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_coalition(&dist, &mut rng).unwrap(), Coalition::Right);
        }
    }

    #[test]
    fn uniform_distribution_frequencies_within_3_sigma() {
        let dist: BTreeMap<Coalition, f64> =
            Coalition::ALL.iter().map(|c| (*c, 0.25)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let mut counts = [0u32; 4];
        for _ in 0..n {
            counts[sample_coalition(&dist, &mut rng).unwrap().index()] += 1;
        }
        // sigma of a binomial(n, 0.25) frequency
        let sigma = (0.25 * 0.75 / n as f64).sqrt();
        for c in counts {
            let freq = f64::from(c) / n as f64;
            assert!((freq - 0.25).abs() < 3.0 * sigma, "freq {freq}");
        }
    }

    #[test]
    fn negative_probability_rejected() {
        let mut dist: BTreeMap<Coalition, f64> =
            Coalition::ALL.iter().map(|c| (*c, 0.5)).collect();
        dist.insert(Coalition::Right, -0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(sample_coalition(&dist, &mut rng).is_err());
    }

    #[test]
    fn prior_seeded_opinions_match_expectations() {
        let topics = default_topics();
        let priors = default_priors();

        let m5s = initial_opinions(Coalition::M5s, &topics, &priors).unwrap();
        let reddito = m5s
            .iter()
            .find(|r| r.topic_id.as_str() == "reddito_di_cittadinanza")
            .unwrap();
        assert_eq!(reddito.label, StanceLabel::StronglySupportive);
        assert_eq!(reddito.stance_score, 1.0);

        let third_pole = initial_opinions(Coalition::ThirdPole, &topics, &priors).unwrap();
        let reddito = third_pole
            .iter()
            .find(|r| r.topic_id.as_str() == "reddito_di_cittadinanza")
            .unwrap();
        assert_eq!(reddito.label, StanceLabel::Opposed);
        assert_eq!(reddito.stance_score, -0.5);

        let right = initial_opinions(Coalition::Right, &topics, &priors).unwrap();
        let civil = right
            .iter()
            .find(|r| r.topic_id.as_str() == "civil_rights")
            .unwrap();
        assert_eq!(civil.label, StanceLabel::StronglyOpposed);
        assert_eq!(civil.stance_score, -1.0);
    }

    #[test]
    fn missing_prior_names_coalition_and_topic() {
        let topics = vec![Topic {
            id: "invented_topic".into(),
            description: "d".into(),
            supportive_meaning: "s".into(),
            opposed_meaning: "o".into(),
        }];
        let err = initial_opinions(Coalition::Right, &topics, &default_priors()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Right") && msg.contains("invented_topic"), "{msg}");
    }

    #[test]
    fn initial_opinions_is_pure() {
        let topics = default_topics();
        let priors = default_priors();
        let a = initial_opinions(Coalition::CentreLeft, &topics, &priors).unwrap();
        let b = initial_opinions(Coalition::CentreLeft, &topics, &priors).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn toxicity_tone_thirds() {
        assert_eq!(toxicity_tone(0.0), "low");
        assert_eq!(toxicity_tone(0.32), "low");
        assert_eq!(toxicity_tone(0.34), "moderate");
        assert_eq!(toxicity_tone(0.9), "high");
        assert_eq!(toxicity_tone(1.0), "high");
    }

    #[test]
    fn population_has_requested_size_and_valid_profiles() {
        let seeds = synthetic_seeds(400);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let population = build_population(&seeds, &test_config(100), &mut rng).unwrap();
        assert_eq!(population.len(), 100);
        for profile in &population {
            profile.validate().unwrap();
            assert_eq!(profile.opinions.len(), 4);
            assert_eq!(profile.initial_opinions(), profile.opinions.as_slice());
        }
    }

    #[test]
    fn zero_post_corpus_gives_zero_activity() {
        let seeds: Vec<SeedRecord> = (0..50)
            .map(|i| SeedRecord {
                user_id: format!("u{i}"),
                n_posts: 0,
                coalition: Coalition::ALL[i % 4],
                avg_toxicity: 0.1,
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let population = build_population(&seeds, &test_config(20), &mut rng).unwrap();
        assert!(population.iter().all(|p| p.activity == 0.0));
    }

    #[test]
    fn same_seed_gives_identical_population() {
        let seeds = synthetic_seeds(200);
        let cfg = test_config(50);
        let a = build_population(&seeds, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = build_population(&seeds, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_corpus_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(matches!(
            build_population(&[], &test_config(10), &mut rng),
            Err(SeedingError::EmptySeedCorpus)
        ));
    }

    #[test]
    fn clipped_agents_stay_below_half_percent() {
        // At most 0.5% of seeds sit at or above the 99.5th percentile
        // (plus ties); sampling seeds uniformly keeps the expected share
        // of activity == 1.0 agents near 0.5%.
        let seeds = synthetic_seeds(2000);
        let counts: Vec<u64> = seeds.iter().map(|s| s.n_posts).collect();
        let n995 = activity_threshold(&counts).unwrap();
        let at_or_above = counts.iter().filter(|&&c| c as f64 >= n995).count();
        assert!(at_or_above <= (seeds.len() as f64 * 0.005).ceil() as usize + 1);
    }

    #[test]
    fn configured_distribution_shapes_population() {
        let seeds = synthetic_seeds(400);
        let mut cfg = test_config(10_000);
        let dist: BTreeMap<Coalition, f64> =
            Coalition::ALL.iter().map(|c| (*c, 0.25)).collect();
        cfg.coalition_distribution = Some(dist);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let population = build_population(&seeds, &cfg, &mut rng).unwrap();
        let mut counts = [0u64; 4];
        for p in &population {
            counts[p.coalition.index()] += 1;
        }
        // Chi-square goodness of fit against uniform, alpha = 0.01,
        // df = 3, critical value 11.345.
        let expected = population.len() as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 11.345, "chi2 {chi2} counts {counts:?}");
    }

    #[test]
    fn seeds_jsonl_roundtrip() {
        let line = r#"{"user_id":"u1","n_posts":42,"coalition":"third_pole","avg_toxicity":0.25}"#;
        let seeds = read_seeds_jsonl(line.as_bytes()).unwrap();
        assert_eq!(seeds[0].coalition, Coalition::ThirdPole);
        assert_eq!(seeds[0].n_posts, 42);
    }
}
