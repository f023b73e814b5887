//! Compare the two feed strategies on a small hand-built platform state.
//!
//! ```bash
//! cargo run -p piazza --example feed_strategies
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use piazza::domain::{AgentId, ContentItem, ContentKind, ContentStore, SocialGraph, Tick, TopicId};
use piazza::recommender::{
    random_content, reverse_chrono_followers_popularity, FeedRequest, RecommenderParams,
};

fn main() {
    let ids: Vec<AgentId> = (0..5).map(|i| AgentId::new(format!("a{i}"))).collect();
    let mut graph = SocialGraph::new(ids.clone());
    // a0 follows a1 and a2; a3 and a4 are strangers.
    graph.follow(&ids[0], &ids[1]).unwrap();
    graph.follow(&ids[0], &ids[2]).unwrap();

    let mut content = ContentStore::new();
    let posts = [
        ("c0", 1, 0, 2, 0),  // author a1, day 0 hour 2
        ("c1", 2, 0, 5, 4),  // popular and newer
        ("c2", 2, 0, 5, 1),  // same hour, fewer likes
        ("c3", 3, 0, 6, 9),  // stranger content
        ("c4", 4, 0, 7, 0),
        ("c5", 1, 0, 8, 2),
    ];
    for (id, author, day, hour, likes) in posts {
        content
            .insert(ContentItem {
                content_id: id.into(),
                author: ids[author].clone(),
                kind: ContentKind::Post,
                parent: None,
                topic_id: TopicId::from("nuclear_energy"),
                text: format!("{id} by a{author}"),
                tick: Tick::new(day, hour),
                like_count: likes,
            })
            .unwrap();
    }

    let request = FeedRequest { agent_id: ids[0].clone(), limit: 5, now: Tick::new(0, 9) };
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let params = RecommenderParams::default();
    let feed = reverse_chrono_followers_popularity(&graph, &content, &request, &params, &mut rng).unwrap();
    println!("reverse-chrono feed for a0 (external fraction {}):", params.external_fraction);
    for item in &feed {
        println!(
            "  {} by {} at hour {} ({} likes)",
            item.content_id, item.author, item.tick.hour, item.like_count
        );
    }

    let feed = random_content(&graph, &content, &request, &mut rng).unwrap();
    println!("\nrandom feed for a0:");
    for item in &feed {
        println!("  {} by {}", item.content_id, item.author);
    }
}
