//! The Friedkin–Johnsen baseline: a worked two-agent example, then the
//! model over the evolving daily graphs of a real simulation run.
//!
//! ```bash
//! cargo run -p piazza --example opinion_baseline
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use piazza::config::ExperimentConfig;
use piazza::domain::{AgentId, SocialGraph};
use piazza::driver::StubDriver;
use piazza::engine::run_simulation;
use piazza::opinion::{display_scale, fj_run, FjParams};
use piazza::seeding::{build_population, read_seeds_jsonl};

fn main() {
    // Two mutually following agents with opposite initial beliefs and
    // susceptibility 0.5 settle at (1/3, -1/3): each stance is the average
    // of the other's view and the own anchor.
    let pair = vec![AgentId::from("a"), AgentId::from("b")];
    let mut graph = SocialGraph::new(pair.clone());
    graph.follow(&pair[0], &pair[1]).unwrap();
    graph.follow(&pair[1], &pair[0]).unwrap();
    let params = FjParams::uniform(2, 0.5);
    let trajectory = fj_run(&[graph], &[1.0, -1.0], &pair, &params).unwrap();
    println!("two-agent fixed point: {:?}\n", trajectory[0]);

    // Now the full pipeline: run a week of simulation, then run the
    // baseline over that run's daily graph snapshots from day-0 stances.
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let seeds = read_seeds_jsonl(std::io::BufReader::new(
        std::fs::File::open(fixtures.join("seeds_uniform.jsonl")).unwrap(),
    ))
    .unwrap();
    let mut config = ExperimentConfig::default();
    config.simulation.days = 7;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let population = build_population(&seeds, &config.seeding(), &mut rng).unwrap();
    let driver = StubDriver::new(5);
    let output = run_simulation(&config.simulation, population, &config.topics, &driver).unwrap();

    let day0 = &output.snapshots[0];
    let order: Vec<AgentId> = day0.opinions.keys().cloned().collect();
    let graphs: Vec<SocialGraph> = output.snapshots[1..]
        .iter()
        .map(|s| s.graph().unwrap())
        .collect();

    let topic = &config.topics[0].id; // civil_rights
    let x0: Vec<f64> = order.iter().map(|id| day0.opinions[id].stances[topic].score).collect();
    let params = config.fj.params(order.len());
    let per_day = fj_run(&graphs, &x0, &order, &params).unwrap();

    println!("{topic}: population mean stance per day (display scale)");
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("  day 0: {:+.3}", display_scale(mean(&x0)));
    for (day, scores) in per_day.iter().enumerate() {
        println!("  day {}: {:+.3}", day + 1, display_scale(mean(scores)));
    }
}
