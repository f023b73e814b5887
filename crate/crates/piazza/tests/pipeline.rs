//! End-to-end checks of the batch commands on a small experiment:
//! artifact layout, config-echo reproducibility, comparison semantics,
//! sidecar-based toxicity scoring, and the documented error paths.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use piazza::cli::{self, CliError};
use piazza::config::ExperimentConfig;
use piazza::domain::{read_events_jsonl, EventKind};
use piazza::engine::NetworkInit;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn small_experiment(seed: u64) -> ExperimentConfig {
    let mut config = ExperimentConfig::default();
    config.seeds_path = Some(fixture("seeds_uniform.jsonl"));
    config.reference_path = Some(fixture("reference.json"));
    config.runs = 2;
    config.simulation.population_size = 20;
    config.simulation.days = 2;
    config.simulation.rng_seed = seed;
    config.simulation.network_init = NetworkInit::FullyConnected;
    config.analysis.bootstrap_resamples = 50;
    config
}

#[test]
fn rerunning_from_config_echo_reproduces_artifacts() {
    let root = tempfile::tempdir().unwrap();
    let config = small_experiment(99);

    let first = root.path().join("first");
    cli::cmd_run(&config, &first, 2).unwrap();

    let echoed = ExperimentConfig::load(&first.join("config.json")).unwrap();
    assert_eq!(echoed, config);

    let second = root.path().join("second");
    cli::cmd_run(&echoed, &second, 1).unwrap();

    for run in 0..config.runs {
        let a = fs::read(cli::run_dir(&first, run).join("events.jsonl")).unwrap();
        let b = fs::read(cli::run_dir(&second, run).join("events.jsonl")).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "run {run} differs after rerun from echo");
    }
}

#[test]
fn full_pipeline_emits_expected_artifacts() {
    let root = tempfile::tempdir().unwrap();
    let config = small_experiment(123);
    let out = root.path().join("out");
    cli::cmd_run(&config, &out, 1).unwrap();

    for run in 0..config.runs {
        let dir = cli::run_dir(&out, run);
        assert!(dir.join("events.jsonl").is_file());
        for day in 0..=config.simulation.days {
            assert!(dir.join("snapshots").join(format!("day_{day}.json")).is_file());
        }
    }

    let fj_out = out.join("fj");
    cli::cmd_fj(&config, &out, &fj_out, Some(0.7)).unwrap();
    let echo = fs::read_to_string(fj_out.join("fj_config.json")).unwrap();
    assert!(echo.contains("0.7"), "lambda override missing from echo: {echo}");

    let trajectories = fs::read_to_string(fj_out.join("fj_trajectories.csv")).unwrap();
    // days x topics x agents data rows per run.
    let expected_rows = config.runs * config.simulation.days as usize * 4 * 20;
    assert_eq!(trajectories.lines().count(), 1 + expected_rows);

    let events: Vec<PathBuf> =
        (0..config.runs).map(|i| cli::run_dir(&out, i).join("events.jsonl")).collect();
    let analysis_out = out.join("analysis");
    cli::cmd_analyze(&config, &events, &fixture("reference.json"), None, &analysis_out).unwrap();

    let correlations = fs::read_to_string(analysis_out.join("correlations.csv")).unwrap();
    // header + (runs + aggregate) x 4 metrics
    assert_eq!(correlations.lines().count(), 1 + (config.runs + 1) * 4);
    assert!(correlations.contains("aggregate,in_group_interactions"));

    let compare_out = out.join("compare.csv");
    cli::cmd_compare(
        &analysis_out.join("trajectories.csv"),
        &fj_out.join("fj_medians.csv"),
        &compare_out,
        false,
    )
    .unwrap();
    let display_out = out.join("compare_display.csv");
    cli::cmd_compare(
        &analysis_out.join("trajectories.csv"),
        &fj_out.join("fj_medians.csv"),
        &display_out,
        true,
    )
    .unwrap();

    let plain: Vec<String> = fs::read_to_string(&compare_out)
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect();
    let display: Vec<String> = fs::read_to_string(&display_out)
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect();
    assert_eq!(plain.len(), display.len());
    for (p, d) in plain.iter().zip(&display) {
        let pv: Vec<&str> = p.split(',').collect();
        let dv: Vec<&str> = d.split(',').collect();
        let plain_llm: f64 = pv[3].parse().unwrap();
        let display_llm: f64 = dv[3].parse().unwrap();
        assert!((display_llm - 2.0 * plain_llm).abs() < 1e-12);
    }
}

#[test]
fn compare_of_identical_series_has_zero_difference() {
    let root = tempfile::tempdir().unwrap();
    let llm = root.path().join("llm.csv");
    let fj = root.path().join("fj.csv");
    fs::write(
        &llm,
        "day,topic,coalition,median\n0,nuclear_energy,right,0.5\n1,nuclear_energy,right,0.25\n",
    )
    .unwrap();
    fs::write(
        &fj,
        "day,topic,coalition,score\n0,nuclear_energy,right,0.5\n1,nuclear_energy,right,0.25\n",
    )
    .unwrap();
    let out = root.path().join("compare.csv");
    cli::cmd_compare(&llm, &fj, &out, false).unwrap();
    for line in fs::read_to_string(&out).unwrap().lines().skip(1) {
        let difference: f64 = line.split(',').next_back().unwrap().parse().unwrap();
        assert_eq!(difference, 0.0);
    }
}

#[test]
fn compare_rejects_mismatched_keys() {
    let root = tempfile::tempdir().unwrap();
    let llm = root.path().join("llm.csv");
    let fj = root.path().join("fj.csv");
    fs::write(&llm, "day,topic,coalition,median\n0,nuclear_energy,right,0.5\n").unwrap();
    fs::write(&fj, "day,topic,coalition,score\n3,immigration,m5s,0.1\n").unwrap();
    let out = root.path().join("compare.csv");
    match cli::cmd_compare(&llm, &fj, &out, false) {
        Err(CliError::KeyMismatch(msg)) => {
            assert!(msg.contains("nuclear_energy") && msg.contains("immigration"), "{msg}");
        }
        other => panic!("expected key mismatch, got {other:?}"),
    }
}

#[test]
fn analyze_uses_sidecar_scores_when_given() {
    let root = tempfile::tempdir().unwrap();
    let config = small_experiment(7);
    let out = root.path().join("out");
    cli::cmd_run(&config, &out, 1).unwrap();

    // Sidecar covering every comment with a constant score.
    let mut sidecar_lines = String::new();
    let events_paths: Vec<PathBuf> =
        (0..config.runs).map(|i| cli::run_dir(&out, i).join("events.jsonl")).collect();
    let mut comment_total = 0;
    for path in &events_paths {
        let events =
            read_events_jsonl(BufReader::new(fs::File::open(path).unwrap())).unwrap();
        for event in events.iter().filter(|e| e.kind == EventKind::Comment) {
            comment_total += 1;
            sidecar_lines.push_str(&format!(
                "{{\"content_id\":\"{}\",\"toxicity\":0.5}}\n",
                event.content_id.as_ref().unwrap()
            ));
        }
    }
    assert!(comment_total > 0, "fixture run produced no comments");
    let sidecar = root.path().join("toxicity.jsonl");
    fs::write(&sidecar, sidecar_lines).unwrap();

    let analysis_out = out.join("analysis");
    cli::cmd_analyze(
        &config,
        &events_paths,
        &fixture("reference.json"),
        Some(&sidecar),
        &analysis_out,
    )
    .unwrap();

    let toxicity = fs::read_to_string(analysis_out.join("toxicity_ingroup.csv")).unwrap();
    let defined: Vec<&str> = toxicity
        .lines()
        .skip(1)
        .filter(|l| !l.ends_with(','))
        .collect();
    assert!(!defined.is_empty());
    for line in defined {
        assert!(line.ends_with("0.5"), "unexpected sidecar percentile row: {line}");
    }
}

#[test]
fn fj_is_constant_when_the_network_stays_empty() {
    let root = tempfile::tempdir().unwrap();
    let mut config = small_experiment(31);
    config.simulation.network_init = NetworkInit::Empty;
    // No follow/unfollow weight: the graph stays empty for the whole run,
    // so every agent keeps its initial stance under the baseline.
    config
        .simulation
        .action_weights
        .retain(|k, _| !matches!(k, piazza::engine::ActionKind::Follow | piazza::engine::ActionKind::Unfollow));
    let out = root.path().join("out");
    cli::cmd_run(&config, &out, 1).unwrap();
    let fj_out = out.join("fj");
    cli::cmd_fj(&config, &out, &fj_out, None).unwrap();

    let medians = fs::read_to_string(fj_out.join("fj_medians.csv")).unwrap();
    let mut day0: std::collections::BTreeMap<(String, String), String> = Default::default();
    for line in medians.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let key = (fields[1].to_string(), fields[2].to_string());
        let value = fields[3].to_string();
        match fields[0] {
            "0" => {
                day0.insert(key, value);
            }
            _ => assert_eq!(day0[&key], value, "baseline moved on an empty graph: {line}"),
        }
    }
}

#[test]
fn zero_runs_is_a_config_error() {
    let mut config = small_experiment(1);
    config.runs = 0;
    let root = tempfile::tempdir().unwrap();
    assert!(matches!(
        cli::cmd_run(&config, root.path(), 1),
        Err(CliError::Config(_))
    ));
}

#[test]
fn unwritable_output_dir_fails_before_any_run() {
    let root = tempfile::tempdir().unwrap();
    let blocker = root.path().join("blocker");
    fs::write(&blocker, "not a directory").unwrap();
    let config = small_experiment(1);
    let out = blocker.join("nested");
    assert!(cli::cmd_run(&config, &out, 1).is_err());
    assert!(!out.exists());
}
