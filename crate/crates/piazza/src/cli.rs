//! Batch orchestration behind the command-line interface: multi-run
//! execution, the Friedkin–Johnsen baseline over recorded snapshots,
//! analysis CSV emission, and LLM-vs-baseline comparison tables.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{
    self, coalition_map, interaction_matrix, merge_pair_scores, pearson_pairwise,
    reply_toxicity_scores, toxicity_vectors_from_scores, AnalysisError, InteractionMatrix,
    PairScores, ReferenceData, ToxicityVectors,
};
use crate::config::{ConfigError, ExperimentConfig};
use crate::domain::{
    read_events_jsonl, write_events_jsonl, AgentId, Coalition, DomainError, Event, TopicId,
};
use crate::driver::{AgentDriver, DriverError, PromptRenderer, RemoteDriver, StubDriver};
use crate::driver::DriverMode;
use crate::engine::{run_simulation, DaySnapshot, EngineError, RunOutput};
use crate::opinion::{display_scale, fj_run, OpinionError};
use crate::seeding::{build_population, read_seeds_jsonl, SeedingError};
use crate::stats::{median, splitmix64};
use crate::toxicity::{LexiconScorer, SidecarScorer, ToxicityScorer};

/// Runs `config.runs` simulations with per-run seeds `base + index`,
/// writing `run_<i>/events.jsonl`, `run_<i>/snapshots/day_<d>.json`, and a
/// fully resolved `config.json` echo. The output directory is validated
/// before any run starts.
pub fn cmd_run(config: &ExperimentConfig, out: &Path, jobs: usize) -> Result<(), CliError> {
    config.validate()?;
    let seeds_path = config
        .seeds_path
        .as_ref()
        .ok_or_else(|| CliError::Usage("config.seeds_path is required for run".into()))?;
    let seeds = read_seeds_jsonl(BufReader::new(
        File::open(seeds_path).map_err(|e| CliError::io(seeds_path, e))?,
    ))?;

    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let echo_path = out.join("config.json");
    fs::write(&echo_path, config.echo()).map_err(|e| CliError::io(&echo_path, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
    pool.install(|| {
        (0..config.runs).into_par_iter().try_for_each(|index| {
            let output = execute_run(config, &seeds, index)?;
            write_run(out, index, &output)
        })
    })
}

/// Builds the population and executes one run with seed `base + index`.
pub fn execute_run(
    config: &ExperimentConfig,
    seeds: &[crate::seeding::SeedRecord],
    index: usize,
) -> Result<RunOutput, CliError> {
    let run_seed = config.simulation.rng_seed.wrapping_add(index as u64);
    // Population and engine draw from independent streams.
    let mut population_rng = ChaCha8Rng::seed_from_u64(splitmix64(run_seed));
    let population = build_population(seeds, &config.seeding(), &mut population_rng)?;

    let mut sim_config = config.simulation.clone();
    sim_config.rng_seed = run_seed;

    let driver: Box<dyn AgentDriver> = match sim_config.driver.mode {
        DriverMode::Stub => Box::new(StubDriver::from_config(run_seed, &sim_config.driver)),
        DriverMode::Remote => {
            let renderer = PromptRenderer::new(config.topics.clone(), config.priors.clone())
                .with_bias_instructions(sim_config.driver.bias_instructions.clone());
            Box::new(RemoteDriver::new(sim_config.driver.clone(), renderer)?)
        }
    };
    Ok(run_simulation(&sim_config, population, &config.topics, driver.as_ref())?)
}

pub fn run_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("run_{index:02}"))
}

fn write_run(out: &Path, index: usize, output: &RunOutput) -> Result<(), CliError> {
    let dir = run_dir(out, index);
    let snapshots_dir = dir.join("snapshots");
    fs::create_dir_all(&snapshots_dir).map_err(|e| CliError::io(&snapshots_dir, e))?;

    let events_path = dir.join("events.jsonl");
    let mut writer =
        BufWriter::new(File::create(&events_path).map_err(|e| CliError::io(&events_path, e))?);
    write_events_jsonl(&mut writer, &output.events)?;
    writer.flush().map_err(|e| CliError::io(&events_path, e))?;

    for snapshot in &output.snapshots {
        let path = snapshots_dir.join(format!("day_{}.json", snapshot.day));
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::to_writer(BufWriter::new(file), snapshot)
            .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn read_snapshots(dir: &Path) -> Result<Vec<DaySnapshot>, CliError> {
    let mut found: Vec<(u32, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if let Some(day) = name.strip_prefix("day_").and_then(|n| n.strip_suffix(".json")) {
            if let Ok(day) = day.parse::<u32>() {
                found.push((day, path));
            }
        }
    }
    found.sort();
    let mut snapshots = Vec::with_capacity(found.len());
    for (_, path) in found {
        let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
        let snapshot: DaySnapshot = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        snapshots.push(snapshot);
    }
    if snapshots.is_empty() {
        return Err(CliError::Usage(format!("no snapshots found in {}", dir.display())));
    }
    Ok(snapshots)
}

/// Run directories (`run_*`) under a `cmd_run` output root, in index order.
pub fn discover_run_dirs(root: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| CliError::io(root, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("run_"))
        })
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Usage(format!("no run_* directories under {}", root.display())));
    }
    Ok(dirs)
}

/// Computes the Friedkin–Johnsen baseline over each run's recorded daily
/// graph snapshots, starting from day-0 stances. Emits per-agent
/// trajectories (`fj_trajectories.csv`), cross-run coalition medians
/// (`fj_medians.csv`, including day 0), and the resolved parameter echo.
pub fn cmd_fj(
    config: &ExperimentConfig,
    runs_root: &Path,
    out: &Path,
    lambda_override: Option<f64>,
) -> Result<(), CliError> {
    let mut fj_config = config.fj.clone();
    if let Some(lambda) = lambda_override {
        fj_config.susceptibility = lambda;
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let echo_path = out.join("fj_config.json");
    fs::write(
        &echo_path,
        serde_json::to_string_pretty(&fj_config)
            .map_err(|e| CliError::Format(e.to_string()))?,
    )
    .map_err(|e| CliError::io(&echo_path, e))?;

    let trajectory_path = out.join("fj_trajectories.csv");
    let mut trajectories = csv::Writer::from_path(&trajectory_path)
        .map_err(|e| CliError::Format(format!("{}: {e}", trajectory_path.display())))?;
    trajectories
        .write_record(["run", "day", "topic", "agent_id", "score", "display_score"])
        .map_err(|e| CliError::Format(e.to_string()))?;

    let mut median_pool: BTreeMap<(u32, TopicId, Coalition), Vec<f64>> = BTreeMap::new();

    for (run_index, dir) in discover_run_dirs(runs_root)?.into_iter().enumerate() {
        let snapshots = read_snapshots(&dir.join("snapshots"))?;
        let day0 = &snapshots[0];
        let order: Vec<AgentId> = day0.opinions.keys().cloned().collect();
        let coalition_of: BTreeMap<AgentId, Coalition> = coalition_map(day0);
        let params = fj_config.params(order.len());
        let graphs: Vec<_> = snapshots[1..]
            .iter()
            .map(|s| s.graph())
            .collect::<Result<_, _>>()?;

        let topic_ids: Vec<TopicId> = day0
            .opinions
            .values()
            .next()
            .map(|agent| agent.stances.keys().cloned().collect())
            .unwrap_or_default();

        for topic in &topic_ids {
            let x0: Vec<f64> = order
                .iter()
                .map(|id| day0.opinions[id].stances[topic].score)
                .collect();
            for (id, score) in order.iter().zip(&x0) {
                median_pool
                    .entry((0, topic.clone(), coalition_of[id]))
                    .or_default()
                    .push(*score);
            }
            let per_day = fj_run(&graphs, &x0, &order, &params)?;
            for (day_index, scores) in per_day.iter().enumerate() {
                let day = day_index as u32 + 1;
                for (id, score) in order.iter().zip(scores) {
                    trajectories
                        .write_record([
                            format!("run_{run_index:02}"),
                            day.to_string(),
                            topic.to_string(),
                            id.to_string(),
                            format!("{score}"),
                            format!("{}", display_scale(*score)),
                        ])
                        .map_err(|e| CliError::Format(e.to_string()))?;
                    median_pool
                        .entry((day, topic.clone(), coalition_of[id]))
                        .or_default()
                        .push(*score);
                }
            }
        }
    }
    trajectories.flush().map_err(|e| CliError::Format(e.to_string()))?;

    let medians_path = out.join("fj_medians.csv");
    let mut medians = csv::Writer::from_path(&medians_path)
        .map_err(|e| CliError::Format(format!("{}: {e}", medians_path.display())))?;
    medians
        .write_record(["day", "topic", "coalition", "score", "display_score"])
        .map_err(|e| CliError::Format(e.to_string()))?;
    for ((day, topic, coalition), values) in median_pool {
        let m = median(&values)?;
        medians
            .write_record([
                day.to_string(),
                topic.to_string(),
                coalition.key().to_string(),
                format!("{m}"),
                format!("{}", display_scale(m)),
            ])
            .map_err(|e| CliError::Format(e.to_string()))?;
    }
    medians.flush().map_err(|e| CliError::Format(e.to_string()))?;
    Ok(())
}

struct RunArtifacts {
    label: String,
    events: Vec<Event>,
    snapshots: Vec<DaySnapshot>,
    coalitions: BTreeMap<AgentId, Coalition>,
}

fn load_run_artifacts(events_path: &Path, label: String) -> Result<RunArtifacts, CliError> {
    let file = File::open(events_path).map_err(|e| CliError::io(events_path, e))?;
    let events = read_events_jsonl(BufReader::new(file))?;
    let snapshots_dir = events_path
        .parent()
        .map(|d| d.join("snapshots"))
        .ok_or_else(|| CliError::Usage(format!("{} has no parent directory", events_path.display())))?;
    let snapshots = read_snapshots(&snapshots_dir)?;
    let coalitions = coalition_map(&snapshots[0]);
    Ok(RunArtifacts { label, events, snapshots, coalitions })
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

/// Computes interaction matrices, toxicity percentiles, correlations
/// against reference data, opinion trajectories, and opinion shifts from
/// recorded run artifacts. Each events path must sit next to its run's
/// `snapshots/` directory. Emits the seven CSV families under `out`.
pub fn cmd_analyze(
    config: &ExperimentConfig,
    events_paths: &[PathBuf],
    reference_path: &Path,
    sidecar_path: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    if events_paths.is_empty() {
        return Err(CliError::Usage("at least one --events path is required".into()));
    }
    let reference = ReferenceData::load(reference_path)?;
    let scorer: Box<dyn ToxicityScorer> = match sidecar_path {
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::io(path, e))?;
            Box::new(SidecarScorer::from_jsonl(BufReader::new(file))?)
        }
        None => Box::new(LexiconScorer {
            lexicon: config.toxicity.lexicon.clone(),
            density_scale: config.toxicity.density_scale,
        }),
    };

    let mut runs = Vec::with_capacity(events_paths.len());
    for (i, path) in events_paths.iter().enumerate() {
        runs.push(load_run_artifacts(path, format!("run_{i:02}"))?);
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;

    // Per-run and aggregate interaction matrices.
    let mut per_run_matrices: Vec<(String, InteractionMatrix)> = Vec::new();
    let mut aggregate_matrix = InteractionMatrix::default();
    for run in &runs {
        let matrix = interaction_matrix(&run.events, &run.coalitions);
        aggregate_matrix.merge(&matrix);
        per_run_matrices.push((run.label.clone(), matrix));
    }

    // Per-run and pooled reply toxicity.
    let mut per_run_tox: Vec<(String, ToxicityVectors)> = Vec::new();
    let mut pooled_scores: PairScores = vec![vec![Vec::new(); 4]; 4];
    for run in &runs {
        let scores = reply_toxicity_scores(&run.events, &run.coalitions, scorer.as_ref())?;
        per_run_tox.push((run.label.clone(), toxicity_vectors_from_scores(&scores)?));
        merge_pair_scores(&mut pooled_scores, scores);
    }
    let aggregate_tox = toxicity_vectors_from_scores(&pooled_scores)?;

    write_ingroup_csv(out, "interactions_ingroup.csv", &per_run_matrices, &aggregate_matrix)?;
    write_outgroup_csv(out, "interactions_outgroup.csv", &per_run_matrices, &aggregate_matrix)?;
    write_toxicity_csvs(out, &per_run_tox, &aggregate_tox)?;
    write_correlations_csv(out, &per_run_matrices, &aggregate_matrix, &per_run_tox, &aggregate_tox, &reference)?;

    let snapshot_runs: Vec<Vec<DaySnapshot>> = runs.iter().map(|r| r.snapshots.clone()).collect();
    let trajectories = analysis::opinion_trajectories(
        &snapshot_runs,
        config.analysis.bootstrap_resamples,
        config.analysis.bootstrap_seed,
    )?;
    let path = out.join("trajectories.csv");
    let mut writer =
        csv::Writer::from_path(&path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["day", "topic", "coalition", "median", "ci_low", "ci_high", "n"])
        .map_err(|e| CliError::Format(e.to_string()))?;
    for p in &trajectories {
        writer
            .write_record([
                p.day.to_string(),
                p.topic.to_string(),
                p.coalition.key().to_string(),
                format!("{}", p.median),
                format!("{}", p.ci_low),
                format!("{}", p.ci_high),
                p.n.to_string(),
            ])
            .map_err(|e| CliError::Format(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Format(e.to_string()))?;

    let shifts = analysis::opinion_shifts(&snapshot_runs)?;
    let path = out.join("shifts.csv");
    let mut writer =
        csv::Writer::from_path(&path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["topic", "coalition", "initial_display", "final_display"])
        .map_err(|e| CliError::Format(e.to_string()))?;
    for s in &shifts {
        writer
            .write_record([
                s.topic.to_string(),
                s.coalition.key().to_string(),
                format!("{}", s.initial_display),
                format!("{}", s.final_display),
            ])
            .map_err(|e| CliError::Format(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Format(e.to_string()))?;
    Ok(())
}

fn write_ingroup_csv(
    out: &Path,
    name: &str,
    per_run: &[(String, InteractionMatrix)],
    aggregate: &InteractionMatrix,
) -> Result<(), CliError> {
    let path = out.join(name);
    let mut writer =
        csv::Writer::from_path(&path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["run", "coalition", "proportion"])
        .map_err(|e| CliError::Format(e.to_string()))?;
    let rows = per_run
        .iter()
        .map(|(label, m)| (label.as_str(), m))
        .chain(std::iter::once(("aggregate", aggregate)));
    for (label, matrix) in rows {
        for (i, value) in matrix.in_group_vector().iter().enumerate() {
            writer
                .write_record([label, Coalition::ALL[i].key(), &fmt_opt(*value)])
                .map_err(|e| CliError::Format(e.to_string()))?;
        }
    }
    writer.flush().map_err(|e| CliError::Format(e.to_string()))?;
    Ok(())
}

fn write_outgroup_csv(
    out: &Path,
    name: &str,
    per_run: &[(String, InteractionMatrix)],
    aggregate: &InteractionMatrix,
) -> Result<(), CliError> {
    let path = out.join(name);
    let mut writer =
        csv::Writer::from_path(&path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["run", "from_coalition", "to_coalition", "proportion"])
        .map_err(|e| CliError::Format(e.to_string()))?;
    let rows = per_run
        .iter()
        .map(|(label, m)| (label.as_str(), m))
        .chain(std::iter::once(("aggregate", aggregate)));
    for (label, matrix) in rows {
        let vector = matrix.out_group_vector();
        let mut k = 0;
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                writer
                    .write_record([
                        label,
                        Coalition::ALL[i].key(),
                        Coalition::ALL[j].key(),
                        &fmt_opt(vector[k]),
                    ])
                    .map_err(|e| CliError::Format(e.to_string()))?;
                k += 1;
            }
        }
    }
    writer.flush().map_err(|e| CliError::Format(e.to_string()))?;
    Ok(())
}

fn write_toxicity_csvs(
    out: &Path,
    per_run: &[(String, ToxicityVectors)],
    aggregate: &ToxicityVectors,
) -> Result<(), CliError> {
    let path = out.join("toxicity_ingroup.csv");
    let mut writer =
        csv::Writer::from_path(&path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["run", "coalition", "p95_toxicity"])
        .map_err(|e| CliError::Format(e.to_string()))?;
    let rows = per_run
        .iter()
        .map(|(label, v)| (label.as_str(), v))
        .chain(std::iter::once(("aggregate", aggregate)));
    for (label, (in_group, _)) in rows {
        for (i, value) in in_group.iter().enumerate() {
            writer
                .write_record([label, Coalition::ALL[i].key(), &fmt_opt(*value)])
                .map_err(|e| CliError::Format(e.to_string()))?;
        }
    }
    writer.flush().map_err(|e| CliError::Format(e.to_string()))?;

    let path = out.join("toxicity_outgroup.csv");
    let mut writer =
        csv::Writer::from_path(&path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["run", "from_coalition", "to_coalition", "p95_toxicity"])
        .map_err(|e| CliError::Format(e.to_string()))?;
    let rows = per_run
        .iter()
        .map(|(label, v)| (label.as_str(), v))
        .chain(std::iter::once(("aggregate", aggregate)));
    for (label, (_, out_group)) in rows {
        let mut k = 0;
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                writer
                    .write_record([
                        label,
                        Coalition::ALL[i].key(),
                        Coalition::ALL[j].key(),
                        &fmt_opt(out_group[k]),
                    ])
                    .map_err(|e| CliError::Format(e.to_string()))?;
                k += 1;
            }
        }
    }
    writer.flush().map_err(|e| CliError::Format(e.to_string()))?;
    Ok(())
}

fn write_correlations_csv(
    out: &Path,
    per_run_matrices: &[(String, InteractionMatrix)],
    aggregate_matrix: &InteractionMatrix,
    per_run_tox: &[(String, ToxicityVectors)],
    aggregate_tox: &ToxicityVectors,
    reference: &ReferenceData,
) -> Result<(), CliError> {
    let path = out.join("correlations.csv");
    let mut writer =
        csv::Writer::from_path(&path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["run", "metric", "pearson_r", "n"])
        .map_err(|e| CliError::Format(e.to_string()))?;

    let mut write_row = |label: &str, metric: &str, simulated: &[Option<f64>], reference: &[f64]| {
        let (r, n) = match pearson_pairwise(simulated, reference) {
            Ok((r, n)) => (Some(r), n),
            Err(AnalysisError::ConstantInput | AnalysisError::TooShort(_)) => {
                (None, simulated.iter().flatten().count())
            }
            Err(e) => return Err(CliError::from(e)),
        };
        writer
            .write_record([label, metric, &fmt_opt(r), &n.to_string()])
            .map_err(|e| CliError::Format(e.to_string()))
    };

    let matrix_rows = per_run_matrices
        .iter()
        .map(|(label, m)| (label.as_str(), m))
        .chain(std::iter::once(("aggregate", aggregate_matrix)));
    for (label, matrix) in matrix_rows {
        write_row(label, "in_group_interactions", &matrix.in_group_vector(), &reference.in_group)?;
        write_row(label, "out_group_interactions", &matrix.out_group_vector(), &reference.out_group)?;
    }
    let tox_rows = per_run_tox
        .iter()
        .map(|(label, v)| (label.as_str(), v))
        .chain(std::iter::once(("aggregate", aggregate_tox)));
    for (label, (in_group, out_group)) in tox_rows {
        write_row(label, "in_group_toxicity", in_group, &reference.toxicity_in_group)?;
        write_row(label, "out_group_toxicity", out_group, &reference.toxicity_out_group)?;
    }
    writer.flush().map_err(|e| CliError::Format(e.to_string()))?;
    Ok(())
}

type SeriesKey = (u32, TopicId, Coalition);

fn read_series_csv(
    path: &Path,
    value_column: &str,
) -> Result<BTreeMap<SeriesKey, f64>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Format(e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Format(format!("{} lacks column {name}", path.display())))
    };
    let day_col = column("day")?;
    let topic_col = column("topic")?;
    let coalition_col = column("coalition")?;
    let value_col = column(value_column)?;

    let mut series = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Format(e.to_string()))?;
        let day: u32 = record[day_col]
            .parse()
            .map_err(|_| CliError::Format(format!("bad day '{}'", &record[day_col])))?;
        let coalition = Coalition::ALL
            .into_iter()
            .find(|c| c.key() == &record[coalition_col])
            .ok_or_else(|| CliError::Format(format!("unknown coalition '{}'", &record[coalition_col])))?;
        let value: f64 = record[value_col]
            .parse()
            .map_err(|_| CliError::Format(format!("bad value '{}'", &record[value_col])))?;
        series.insert((day, TopicId::from(&record[topic_col]), coalition), value);
    }
    Ok(series)
}

/// Joins the simulated coalition-median trajectories with the baseline's
/// on (day, topic, coalition), erroring on any key present on one side
/// only. With `to_display_scale` both series are reported on [-2, +2].
pub fn cmd_compare(
    llm_csv: &Path,
    fj_csv: &Path,
    out: &Path,
    to_display_scale: bool,
) -> Result<(), CliError> {
    let llm = read_series_csv(llm_csv, "median")?;
    let fj = read_series_csv(fj_csv, "score")?;

    let missing_in_fj: Vec<&SeriesKey> = llm.keys().filter(|k| !fj.contains_key(k)).collect();
    let missing_in_llm: Vec<&SeriesKey> = fj.keys().filter(|k| !llm.contains_key(k)).collect();
    if !missing_in_fj.is_empty() || !missing_in_llm.is_empty() {
        let describe = |keys: &[&SeriesKey]| {
            keys.iter()
                .take(8)
                .map(|(day, topic, coalition)| format!("(day {day}, {topic}, {})", coalition.key()))
                .collect::<Vec<_>>()
                .join(", ")
        };
        return Err(CliError::KeyMismatch(format!(
            "missing in fj series: [{}]; missing in llm series: [{}]",
            describe(&missing_in_fj),
            describe(&missing_in_llm)
        )));
    }

    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    let mut writer =
        csv::Writer::from_path(out).map_err(|e| CliError::Format(format!("{}: {e}", out.display())))?;
    writer
        .write_record(["day", "topic", "coalition", "llm_score", "fj_score", "difference"])
        .map_err(|e| CliError::Format(e.to_string()))?;
    let scale = if to_display_scale { 2.0 } else { 1.0 };
    for (key, llm_value) in &llm {
        let fj_value = fj[key];
        let (day, topic, coalition) = key;
        writer
            .write_record([
                day.to_string(),
                topic.to_string(),
                coalition.key().to_string(),
                format!("{}", llm_value * scale),
                format!("{}", fj_value * scale),
                format!("{}", (llm_value - fj_value) * scale),
            ])
            .map_err(|e| CliError::Format(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Format(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("io error at {0}: {1}")]
    Io(PathBuf, String),
    #[error("{0}")]
    Format(String),
    #[error("trajectory keys do not match: {0}")]
    KeyMismatch(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Seeding(#[from] SeedingError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Opinion(#[from] OpinionError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error(transparent)]
    Toxicity(#[from] crate::toxicity::ToxicityError),
}

impl CliError {
    fn io(path: &Path, error: std::io::Error) -> Self {
        CliError::Io(path.to_path_buf(), error.to_string())
    }
}
