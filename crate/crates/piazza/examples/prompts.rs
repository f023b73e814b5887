//! Render the four prompt kinds for one agent and parse a reply in the
//! opinion-update protocol.
//!
//! ```bash
//! cargo run -p piazza --example prompts
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use piazza::config::ExperimentConfig;
use piazza::domain::Tick;
use piazza::driver::{parse_opinion_update, MemoryItem, PromptRenderer, ThreadMessage};
use piazza::seeding::{build_population, read_seeds_jsonl};

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let seeds = read_seeds_jsonl(std::io::BufReader::new(
        std::fs::File::open(fixtures.join("seeds_uniform.jsonl")).unwrap(),
    ))
    .unwrap();
    let config = ExperimentConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let population = build_population(&seeds, &config.seeding(), &mut rng).unwrap();
    let agent = &population[3];

    let renderer = PromptRenderer::new(config.topics.clone(), config.priors.clone());

    println!("=== system prompt (persona) ===\n");
    println!("{}\n", renderer.roleplay(agent).unwrap());

    let topic = &config.topics[2].id; // nuclear_energy
    println!("=== post prompt ===\n");
    println!("{}\n", renderer.post(agent, topic).unwrap());

    let thread = vec![
        ThreadMessage { author_name: "Elena Vitale".into(), text: "We need a serious plan for the grid.".into() },
        ThreadMessage { author_name: "Marco Neri".into(), text: "Renewables alone will not cover baseload.".into() },
    ];
    println!("=== comment prompt ===\n");
    println!("{}\n", renderer.comment(agent, topic, &thread).unwrap());

    let memory = vec![MemoryItem {
        author_name: "Elena Vitale".into(),
        topic_id: topic.clone(),
        text: "We need a serious plan for the grid.".into(),
        tick: Tick::new(0, 9),
        own: false,
    }];
    println!("=== opinion update prompt ===\n");
    println!("{}\n", renderer.opinion_update(agent, std::slice::from_ref(topic), &memory).unwrap());

    let reply = "Nuclear Energy: [SUPPORTIVE] Worth including if costs stay under control.";
    let parsed = parse_opinion_update(reply, &config.topics).unwrap();
    println!("=== parsed reply ===\n");
    for line in &parsed.entries {
        println!("{} -> {} ({})", line.topic_id, line.label, line.thought);
    }
}
