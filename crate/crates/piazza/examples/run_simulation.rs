//! Run one seeded simulation with the stub driver and inspect the event
//! log, then replay it to demonstrate log-determined state.
//!
//! ```bash
//! cargo run -p piazza --example run_simulation
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use piazza::config::ExperimentConfig;
use piazza::domain::{replay, EventKind};
use piazza::driver::StubDriver;
use piazza::engine::{init_network, run_simulation};
use piazza::seeding::{build_population, read_seeds_jsonl};

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let seeds = read_seeds_jsonl(std::io::BufReader::new(
        std::fs::File::open(fixtures.join("seeds_uniform.jsonl")).unwrap(),
    ))
    .unwrap();

    let mut config = ExperimentConfig::default();
    config.simulation.days = 7;
    config.simulation.rng_seed = 7;

    let mut rng = ChaCha8Rng::seed_from_u64(config.simulation.rng_seed);
    let population = build_population(&seeds, &config.seeding(), &mut rng).unwrap();
    let driver = StubDriver::new(config.simulation.rng_seed);

    let started = std::time::Instant::now();
    let output = run_simulation(&config.simulation, population.clone(), &config.topics, &driver).unwrap();
    println!(
        "{} agents x {} days -> {} events in {:.2?}",
        config.simulation.population_size,
        config.simulation.days,
        output.events.len(),
        started.elapsed()
    );

    let mut by_kind: BTreeMap<&str, usize> = BTreeMap::new();
    for event in &output.events {
        let key = match event.kind {
            EventKind::Post => "post",
            EventKind::Comment => "comment",
            EventKind::Like => "like",
            EventKind::Follow => "follow",
            EventKind::Unfollow => "unfollow",
            EventKind::OpinionUpdate => "opinion_update",
            EventKind::DriverError => "driver_error",
            EventKind::ParseFailure => "parse_failure",
        };
        *by_kind.entry(key).or_insert(0) += 1;
    }
    for (kind, count) in &by_kind {
        println!("  {kind:<16} {count}");
    }

    let final_snapshot = output.snapshots.last().unwrap();
    println!(
        "follow graph: {} edges after day {}",
        final_snapshot.edges.len(),
        final_snapshot.day
    );

    // The log plus the initial graph reconstructs the final state exactly.
    let initial = init_network(&population, config.simulation.network_init);
    let replayed = replay(&output.events, initial).unwrap();
    assert_eq!(
        replayed.graph.edges().iter().cloned().collect::<Vec<_>>(),
        final_snapshot.edges
    );
    println!("replay check: graph reconstructed from the event log matches the final snapshot");
}
