//! The full batch workflow on a scaled-down experiment matrix:
//! run -> fj -> analyze -> compare for every combination of network
//! initialisation and recommender, mirroring the CLI subcommands.
//!
//! ```bash
//! cargo run -p piazza --example experiment_matrix
//! ```

use std::path::{Path, PathBuf};

use piazza::cli;
use piazza::config::ExperimentConfig;
use piazza::engine::NetworkInit;
use piazza::recommender::RecommenderStrategy;

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let root = std::env::temp_dir().join("piazza-experiment-matrix");
    let _ = std::fs::remove_dir_all(&root);

    let matrix = [
        ("empty_chrono", NetworkInit::Empty, RecommenderStrategy::ReverseChronoFollowersPopularity),
        ("empty_random", NetworkInit::Empty, RecommenderStrategy::ContentRecSys),
        ("full_chrono", NetworkInit::FullyConnected, RecommenderStrategy::ReverseChronoFollowersPopularity),
        ("full_random", NetworkInit::FullyConnected, RecommenderStrategy::ContentRecSys),
    ];

    for (name, network_init, recommender) in matrix {
        let mut config = ExperimentConfig::default();
        config.seeds_path = Some(fixtures.join("seeds_uniform.jsonl"));
        config.reference_path = Some(fixtures.join("reference.json"));
        // Scaled down so the example finishes in seconds; the acceptance
        // suite exercises the full 21-day x 10-run matrix.
        config.runs = 3;
        config.simulation.days = 5;
        config.simulation.network_init = network_init;
        config.simulation.recommender = recommender;
        config.simulation.rng_seed = 2022;

        let out = root.join(name);
        cli::cmd_run(&config, &out, 3).unwrap();
        cli::cmd_fj(&config, &out, &out.join("fj"), None).unwrap();
        let events: Vec<PathBuf> = (0..config.runs)
            .map(|i| cli::run_dir(&out, i).join("events.jsonl"))
            .collect();
        cli::cmd_analyze(
            &config,
            &events,
            &fixtures.join("reference.json"),
            None,
            &out.join("analysis"),
        )
        .unwrap();
        cli::cmd_compare(
            &out.join("analysis").join("trajectories.csv"),
            &out.join("fj").join("fj_medians.csv"),
            &out.join("compare.csv"),
            false,
        )
        .unwrap();
        println!("{name:<13} done");
    }

    println!("\nartifacts under {}:", root.display());
    for (name, _, _) in matrix {
        let analysis = root.join(name).join("analysis");
        let correlations = std::fs::read_to_string(analysis.join("correlations.csv")).unwrap();
        let aggregate_in = correlations
            .lines()
            .find(|l| l.starts_with("aggregate,in_group_interactions"))
            .unwrap();
        println!("  {name:<13} {aggregate_in}");
    }
}
