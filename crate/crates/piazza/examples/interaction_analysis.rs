//! Coalition interaction analysis of simulated runs: reply matrices and
//! correlations against reference vectors.
//!
//! ```bash
//! cargo run -p piazza --example interaction_analysis
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use piazza::analysis::{coalition_map, interaction_matrix, pearson_pairwise, ReferenceData};
use piazza::config::ExperimentConfig;
use piazza::domain::Coalition;
use piazza::driver::StubDriver;
use piazza::engine::run_simulation;
use piazza::seeding::{build_population, read_seeds_jsonl};

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let seeds = read_seeds_jsonl(std::io::BufReader::new(
        std::fs::File::open(fixtures.join("seeds_uniform.jsonl")).unwrap(),
    ))
    .unwrap();
    let reference = ReferenceData::load(&fixtures.join("reference.json")).unwrap();

    let mut config = ExperimentConfig::default();
    config.simulation.days = 7;

    // Aggregate replies over a few runs, each with its own population.
    let mut aggregate = piazza::analysis::InteractionMatrix::default();
    for run in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + run);
        let population = build_population(&seeds, &config.seeding(), &mut rng).unwrap();
        let mut sim = config.simulation.clone();
        sim.rng_seed = 100 + run;
        let driver = StubDriver::new(sim.rng_seed);
        let output = run_simulation(&sim, population, &config.topics, &driver).unwrap();
        let coalitions = coalition_map(&output.snapshots[0]);
        aggregate.merge(&interaction_matrix(&output.events, &coalitions));
    }

    println!("aggregated reply matrix ({} replies), row-normalised:", aggregate.total());
    print!("{:<14}", "");
    for to in Coalition::ALL {
        print!("{:>13}", to.to_string());
    }
    println!();
    for from in Coalition::ALL {
        print!("{:<14}", from.to_string());
        match aggregate.row_proportions(from.index()) {
            Some(row) => {
                for value in row {
                    print!("{value:>13.3}");
                }
            }
            None => print!("{:>13}", "(no replies)"),
        }
        println!();
    }

    let (r, n) = pearson_pairwise(&aggregate.in_group_vector(), &reference.in_group).unwrap();
    println!("\nin-group correlation vs reference:  r = {r:+.3} (n = {n})");
    let (r, n) = pearson_pairwise(&aggregate.out_group_vector(), &reference.out_group).unwrap();
    println!("out-group correlation vs reference: r = {r:+.3} (n = {n})");
}
