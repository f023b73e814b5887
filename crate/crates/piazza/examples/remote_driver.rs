//! Configure the remote chat-completion driver and show the wire request
//! it sends. Only contacts an endpoint when SIM_LLM_ENDPOINT is set.
//!
//! ```bash
//! cargo run -p piazza --example remote_driver
//! SIM_LLM_ENDPOINT=http://localhost:11434 SIM_LLM_MODEL=llama3.2 \
//!     cargo run -p piazza --example remote_driver
//! ```

use piazza::driver::{generate, DriverConfig, DriverMode};

fn main() {
    let config = DriverConfig {
        mode: DriverMode::Remote,
        temperature: 0.9,
        max_retries: 2,
        timeout_secs: 120,
        ..Default::default()
    }
    .resolve_env();

    println!("endpoint: {}", if config.endpoint_url.is_empty() { "(unset)" } else { &config.endpoint_url });
    println!("model:    {}\n", if config.model_name.is_empty() { "(unset)" } else { &config.model_name });

    println!("wire contract: POST {{endpoint}}/api/chat");
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({
        "model": "<model_name>",
        "messages": [
            {"role": "system", "content": "<persona prompt>"},
            {"role": "user", "content": "<action prompt>"}
        ],
        "stream": false,
        "options": {"temperature": 0.9}
    })).unwrap());
    println!("\nexpected reply shape:");
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({
        "message": {"role": "assistant", "content": "<completion text>"}
    })).unwrap());

    if config.endpoint_url.is_empty() {
        println!("\nSIM_LLM_ENDPOINT not set; skipping the live call.");
        return;
    }

    match generate(&config, "You are a concise assistant.", "Reply with one word: ready?") {
        Ok(text) => println!("\nendpoint replied: {text}"),
        Err(e) => println!("\nendpoint call failed: {e}"),
    }
}
