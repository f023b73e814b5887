//! Reply-toxicity analysis: score every reply of a run, split by
//! in-group/out-group coalition pairs, and report 95th percentiles.
//!
//! ```bash
//! cargo run -p piazza --example toxicity_analysis
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use piazza::analysis::{coalition_map, toxicity_vectors};
use piazza::config::ExperimentConfig;
use piazza::domain::Coalition;
use piazza::driver::StubDriver;
use piazza::engine::run_simulation;
use piazza::seeding::{build_population, read_seeds_jsonl};
use piazza::toxicity::{percentile_95, LexiconScorer, ToxicityScorer};

fn main() {
    let scorer = LexiconScorer::default();
    let sample = "damn idiots peddling garbage again";
    println!(
        "lexicon scorer on {sample:?}: {:.2}",
        scorer.score(&"demo".into(), sample).unwrap()
    );
    println!(
        "95th percentile of [0.1, 0.2, 0.9, 0.3]: {:.3}\n",
        percentile_95(&[0.1, 0.2, 0.9, 0.3]).unwrap()
    );

    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let seeds = read_seeds_jsonl(std::io::BufReader::new(
        std::fs::File::open(fixtures.join("seeds_uniform.jsonl")).unwrap(),
    ))
    .unwrap();
    let mut config = ExperimentConfig::default();
    config.simulation.days = 7;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let population = build_population(&seeds, &config.seeding(), &mut rng).unwrap();
    let driver = StubDriver::new(9);
    let output = run_simulation(&config.simulation, population, &config.topics, &driver).unwrap();
    let coalitions = coalition_map(&output.snapshots[0]);

    let (in_group, out_group) = toxicity_vectors(&output.events, &scorer, &coalitions).unwrap();
    println!("95th-percentile reply toxicity, in-group:");
    for (i, value) in in_group.iter().enumerate() {
        match value {
            Some(v) => println!("  {:<12} {v:.3}", Coalition::ALL[i].to_string()),
            None => println!("  {:<12} (no replies)", Coalition::ALL[i].to_string()),
        }
    }
    println!("out-group pairs (row-major):");
    let mut k = 0;
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                continue;
            }
            let label = format!("{} -> {}", Coalition::ALL[i], Coalition::ALL[j]);
            match out_group[k] {
                Some(v) => println!("  {label:<28} {v:.3}"),
                None => println!("  {label:<28} (no replies)"),
            }
            k += 1;
        }
    }
}
