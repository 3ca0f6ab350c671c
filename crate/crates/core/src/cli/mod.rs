//! The `aclgen` command line: `train`, `eval`, `interpolate` and
//! `prior-experiment`.
//!
//! Exit status is 0 on success, 1 for configuration errors, 2 for I/O errors
//! and 3 for numeric failures.

mod config;
mod experiment;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgMatches, Command};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::export::{image_grid, points_csv, write_atomic};
use crate::metrics::Evaluator;
use crate::models::{eval_rng, train, AclBundle, ModelKind};

pub use config::{
    check_key, parse_config, parse_config_text, train_config, DatasetId, RunConfig, DATA_DIR_ENV,
    KEYS, MNIST_DEFAULT_STEPS, MNIST_IMAGES, MNIST_LABELS, REQUIRED,
};
pub use experiment::{
    median, prior_experiment, snapshot_steps, PriorSetting, SeedOutcome, SettingSummary,
    DEFAULT_SEEDS, SCATTER_POINTS, SUMMARY_HEADER,
};

/// Grid used by `eval`: 8×8 samples.
pub const EVAL_GRID: usize = 8;

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn key_args(skip: &[&str]) -> Vec<Arg> {
    KEYS.iter()
        .filter(|(k, _, _)| !skip.contains(k))
        .map(|(key, default, help)| {
            Arg::new(*key)
                .long(flag_name(key))
                .value_name("VALUE")
                .help(format!("{help} [default: {default}]"))
        })
        .collect()
}

fn config_arg() -> Arg {
    Arg::new("config")
        .long("config")
        .value_name("FILE")
        .help("`key = value` file; flags override its values")
}

pub fn command() -> Command {
    Command::new("aclgen")
        .about("Adversarial code learning for image generation")
        .subcommand_required(true)
        .subcommand(
            Command::new("train")
                .about("Train a model and write a run directory")
                .arg(config_arg())
                .args(key_args(&[])),
        )
        .subcommand(
            Command::new("eval")
                .about("Score a checkpoint and write a sample grid")
                .arg(
                    Arg::new("checkpoint")
                        .long("checkpoint")
                        .required(true)
                        .value_name("PATH"),
                )
                .arg(
                    Arg::new("dataset")
                        .long("dataset")
                        .value_name("ID")
                        .help("reference data [default: the run's dataset]"),
                )
                .arg(
                    Arg::new("n_gen")
                        .long("n-gen")
                        .value_name("N")
                        .default_value("2048")
                        .help("samples to generate"),
                )
                .arg(
                    Arg::new("seed")
                        .long("seed")
                        .value_name("SEED")
                        .default_value("0"),
                )
                .arg(
                    Arg::new("grid")
                        .long("grid")
                        .value_name("PATH")
                        .help("sample output [default: <run>/samples/eval_step_<N>.pgm]"),
                ),
        )
        .subcommand(
            Command::new("interpolate")
                .about("Decode a straight line between the codes of two dataset samples")
                .arg(
                    Arg::new("checkpoint")
                        .long("checkpoint")
                        .required(true)
                        .value_name("PATH"),
                )
                .arg(Arg::new("a").long("a").required(true).value_name("INDEX"))
                .arg(Arg::new("b").long("b").required(true).value_name("INDEX"))
                .arg(
                    Arg::new("steps")
                        .long("steps")
                        .value_name("S")
                        .default_value("8")
                        .help("decoded frames between the two real images (≥ 2)"),
                )
                .arg(Arg::new("dataset").long("dataset").value_name("ID"))
                .arg(
                    Arg::new("out")
                        .long("out")
                        .value_name("PATH")
                        .help("strip output [default: <run>/interpolate_<a>_<b>.pgm]"),
                ),
        )
        .subcommand(
            Command::new("prior-experiment")
                .about("ACL-AE on synthetic4 with a one-mode versus a four-mode prior")
                .arg(config_arg())
                .arg(
                    Arg::new("seeds")
                        .long("seeds")
                        .value_name("LIST")
                        .default_value("0,1,2,3,4")
                        .help("comma-separated seeds"),
                )
                .args(key_args(&["model"])),
        )
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match matches.subcommand() {
        Some(("train", m)) => cmd_train(m),
        Some(("eval", m)) => cmd_eval(m),
        Some(("interpolate", m)) => cmd_interpolate(m),
        Some(("prior-experiment", m)) => cmd_prior_experiment(m),
        _ => unreachable!("subcommand required"),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("aclgen: error: {e}");
            e.exit_code()
        }
    }
}

fn read_config_file(m: &ArgMatches) -> Result<Vec<(String, String)>> {
    match m.get_one::<String>("config") {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_config_text(&text)
        }
        None => Ok(Vec::new()),
    }
}

fn flag_pairs(m: &ArgMatches, skip: &[&str]) -> Vec<(String, String)> {
    KEYS.iter()
        .filter(|(k, _, _)| !skip.contains(k))
        .filter_map(|(k, _, _)| m.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect()
}

fn parse_flag<T: std::str::FromStr>(m: &ArgMatches, id: &str) -> Result<T> {
    let raw = m.get_one::<String>(id).expect("defaulted or required");
    raw.parse()
        .map_err(|_| Error::config(id, format!("expected a non-negative integer, got `{raw}`")))
}

fn cmd_train(m: &ArgMatches) -> Result<()> {
    let run = parse_config(&read_config_file(m)?, &flag_pairs(m, &[]))?;
    let dataset = run.dataset.load()?;
    run.train.build(&dataset)?;
    fs::create_dir_all(&run.out).map_err(|e| Error::io(&run.out, e))?;
    write_atomic(
        &run.out.join("config.txt"),
        run.to_text(&dataset)?.as_bytes(),
    )?;
    let summary = train(&run.train, &dataset, Some(&run.out))?;
    let last = summary.final_record();
    println!(
        "{}: {} steps on {}, final frechet {}",
        run.train.kind,
        run.train.total_steps,
        run.dataset.name(),
        last.frechet
            .map(crate::metrics::format_sig9)
            .unwrap_or_default()
    );
    Ok(())
}

/// A trained run reloaded from one of its checkpoints.
pub struct LoadedRun {
    pub run_dir: PathBuf,
    pub config: RunConfig,
    pub dataset: Dataset,
    pub bundle: AclBundle,
    pub step: u64,
}

/// Rebuilds the bundle stored at `<run>/ckpt/step_<N>.aclp` using
/// `<run>/config.txt`, optionally against a different dataset.
pub fn load_run(checkpoint: &Path, dataset: Option<&str>) -> Result<LoadedRun> {
    fs::metadata(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    let run_dir = checkpoint
        .parent()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let config_path = run_dir.join("config.txt");
    let text = fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?;
    let mut overrides = Vec::new();
    if let Some(d) = dataset {
        overrides.push(("dataset".to_string(), d.to_string()));
    }
    let config = parse_config(&parse_config_text(&text)?, &overrides)?;
    let dataset = config.dataset.load()?;
    let mut bundle = config.train.build(&dataset)?;
    bundle.load(checkpoint)?;
    let step = checkpoint
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_prefix("step_"))
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    Ok(LoadedRun {
        run_dir,
        config,
        dataset,
        bundle,
        step,
    })
}

fn cmd_eval(m: &ArgMatches) -> Result<()> {
    let n_gen: usize = parse_flag(m, "n_gen")?;
    if n_gen == 0 {
        return Err(Error::config("n_gen", "n_gen must be positive"));
    }
    let seed: u64 = parse_flag(m, "seed")?;
    let checkpoint = PathBuf::from(m.get_one::<String>("checkpoint").expect("required"));
    let run = load_run(
        &checkpoint,
        m.get_one::<String>("dataset").map(String::as_str),
    )?;
    let mut config = run.config.train.clone();
    config.n_gen = n_gen;
    config.seed = seed;
    let evaluator = Evaluator::new(&run.dataset)?;
    let record = crate::models::evaluate(&run.bundle, &evaluator, &config, run.step, None)?;

    let mut rng = eval_rng(seed.wrapping_add(1), run.step);
    let default_name = match run.dataset.image_shape {
        Some(_) => format!("eval_step_{}.pgm", run.step),
        None => format!("eval_step_{}.csv", run.step),
    };
    let grid_path = m
        .get_one::<String>("grid")
        .map(PathBuf::from)
        .unwrap_or_else(|| run.run_dir.join("samples").join(default_name));
    match run.dataset.image_shape {
        Some(shape) => {
            let samples = run.bundle.generate(EVAL_GRID * EVAL_GRID, &mut rng)?;
            image_grid(&samples, shape, EVAL_GRID, EVAL_GRID)?.write_pgm(&grid_path)?;
        }
        None => {
            let samples = run.bundle.generate(n_gen, &mut rng)?;
            write_atomic(&grid_path, points_csv("x,y", &samples).as_bytes())?;
        }
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", record.to_csv_row()).map_err(|e| Error::io("<stdout>", e))
}

fn cmd_interpolate(m: &ArgMatches) -> Result<()> {
    let a: usize = parse_flag(m, "a")?;
    let b: usize = parse_flag(m, "b")?;
    let steps: usize = parse_flag(m, "steps")?;
    if steps < 2 {
        return Err(Error::config(
            "steps",
            "interpolation needs at least 2 steps",
        ));
    }
    if a == b {
        return Err(Error::config("b", "the two indices must differ"));
    }
    let checkpoint = PathBuf::from(m.get_one::<String>("checkpoint").expect("required"));
    let run = load_run(
        &checkpoint,
        m.get_one::<String>("dataset").map(String::as_str),
    )?;
    if !run.bundle.kind.has_encoder() {
        return Err(Error::config(
            "model",
            format!("{} has no encoder to interpolate with", run.bundle.kind),
        ));
    }
    let n = run.dataset.len();
    for (key, i) in [("a", a), ("b", b)] {
        if i >= n {
            return Err(Error::config(
                key,
                format!("index {i} out of range for {n} samples"),
            ));
        }
    }
    let strip = run.bundle.interpolate(
        run.dataset.samples.row(a),
        run.dataset.samples.row(b),
        steps,
    )?;
    let ext = if run.dataset.image_shape.is_some() {
        "pgm"
    } else {
        "csv"
    };
    let path = m
        .get_one::<String>("out")
        .map(PathBuf::from)
        .unwrap_or_else(|| run.run_dir.join(format!("interpolate_{a}_{b}.{ext}")));
    match run.dataset.image_shape {
        Some(shape) => image_grid(&strip, shape, 1, steps + 2)?.write_pgm(&path)?,
        None => write_atomic(&path, points_csv("x,y", &strip).as_bytes())?,
    }
    println!("{}", path.display());
    Ok(())
}

fn cmd_prior_experiment(m: &ArgMatches) -> Result<()> {
    let mut pairs = read_config_file(m)?;
    pairs.extend(flag_pairs(m, &["model"]));
    let map = config::merge(&pairs, &[])?;
    if let Some(model) = map
        .get("model")
        .filter(|v| v.as_str() != ModelKind::AclAe.name())
    {
        return Err(Error::config(
            "model",
            format!("the prior experiment trains acl-ae, not `{model}`"),
        ));
    }
    if let Some(d) = map.get("dataset").filter(|v| v.as_str() != "synthetic4") {
        return Err(Error::config(
            "dataset",
            format!("the prior experiment uses synthetic4, not `{d}`"),
        ));
    }
    let out = map
        .get("out")
        .map(PathBuf::from)
        .ok_or_else(|| Error::InvalidArgument("missing required keys: out".into()))?;
    let seeds_raw = m.get_one::<String>("seeds").expect("defaulted");
    let seeds: Vec<u64> = seeds_raw
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| {
            Error::config(
                "seeds",
                format!("expected comma-separated integers, got `{seeds_raw}`"),
            )
        })?;
    let base = train_config(&map, ModelKind::AclAe)?;
    let summaries = prior_experiment(&base, &out, &seeds)?;
    for s in &summaries {
        println!(
            "{}: median frechet {}, median modes covered {}",
            s.setting.name(),
            crate::metrics::format_sig9(s.median_frechet()),
            s.median_modes()
        );
    }
    Ok(())
}
