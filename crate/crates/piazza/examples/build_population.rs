//! Build an agent population from a seed corpus and summarise it.
//!
//! ```bash
//! cargo run -p piazza --example build_population
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use piazza::config::ExperimentConfig;
use piazza::domain::Coalition;
use piazza::seeding::{activity_threshold, build_population, read_seeds_jsonl};

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let seeds = read_seeds_jsonl(std::io::BufReader::new(
        std::fs::File::open(fixtures.join("seeds_uniform.jsonl")).unwrap(),
    ))
    .unwrap();

    let counts: Vec<u64> = seeds.iter().map(|s| s.n_posts).collect();
    println!("seed corpus: {} records", seeds.len());
    println!("activity threshold (99.5th percentile of post counts): {:.1}", activity_threshold(&counts).unwrap());

    let config = ExperimentConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let population = build_population(&seeds, &config.seeding(), &mut rng).unwrap();

    let mut by_coalition: BTreeMap<Coalition, usize> = BTreeMap::new();
    let mut activity_sum = 0.0;
    let mut clipped = 0;
    for profile in &population {
        *by_coalition.entry(profile.coalition).or_insert(0) += 1;
        activity_sum += profile.activity;
        if profile.activity == 1.0 {
            clipped += 1;
        }
    }
    println!("\npopulation of {} agents:", population.len());
    for (coalition, count) in &by_coalition {
        println!("  {coalition:<12} {count}");
    }
    println!("mean activity {:.3}, {clipped} agent(s) clipped at 1.0", activity_sum / population.len() as f64);

    let sample = &population[0];
    println!("\nsample profile {}:", sample.agent_id);
    println!("  {} ({}, {}, {})", sample.name, sample.age, sample.gender, sample.coalition);
    println!("  activity {:.3}, target toxicity {:.3}", sample.activity, sample.target_toxicity);
    for record in &sample.opinions {
        println!("  {:<24} [{}] {}", record.topic_id.to_string(), record.label, record.justification);
    }
}
