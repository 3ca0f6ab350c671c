//! Run configuration: `key = value` files with `#` comments, overridden by
//! command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::{load_flat, load_idx, Dataset};
use crate::error::{Error, Result};
use crate::metrics::format_sig9;
use crate::models::{ModelKind, PriorChoice, TrainConfig};

/// Environment variable naming the directory that holds the MNIST IDX files.
pub const DATA_DIR_ENV: &str = "ACLGEN_DATA_DIR";
pub const MNIST_IMAGES: &str = "train-images-idx3-ubyte";
pub const MNIST_LABELS: &str = "train-labels-idx1-ubyte";
/// Default training length on MNIST; other datasets use 5000.
pub const MNIST_DEFAULT_STEPS: u64 = 20_000;

/// Every recognised key with its documented default.
pub const KEYS: &[(&str, &str, &str)] = &[
    (
        "model",
        "required",
        "acl-ae | acl-gan | acl-gan-gp | acl-sgan | gan | gan-gp | ae",
    ),
    ("dataset", "required", "synthetic4 | mnist | flat:PATH"),
    ("out", "required", "run directory"),
    ("seed", "0", "random seed"),
    ("steps", "5000; 20000 for mnist", "training steps"),
    ("batch_size", "128", "minibatch size (≥ 2)"),
    ("lr", "0.0002", "Adam learning rate"),
    (
        "gp_weight",
        "10 for -gp kinds, else 0",
        "gradient penalty weight",
    ),
    ("eval_every", "500", "steps between metric rows"),
    (
        "checkpoint_every",
        "1000",
        "steps between checkpoints (0: first and last only)",
    ),
    ("n_gen", "2048", "samples generated per evaluation"),
    ("lambda1", "1", "ACL-AE code loss weight"),
    ("lambda2", "1", "ACL-GAN reconstruction loss weight"),
    ("lambda3", "1", "ACL-GAN image adversarial loss weight"),
    ("lambda4", "1", "ACL-GAN code loss weight"),
    (
        "code_dim",
        "2 for 2-D data, 10 otherwise",
        "latent code dimension",
    ),
    (
        "hidden",
        "64,64 for 2-D data, 256,256 otherwise",
        "comma-separated hidden widths of E_x, G_x, D_x",
    ),
    ("code_width", "64", "hidden width of G_z and D_c"),
    ("prior", "standard", "standard | mixture4"),
    (
        "joint_update",
        "false",
        "literal joint descent on the discriminator losses",
    ),
    (
        "rec_updates_generator",
        "true",
        "reconstruction loss also trains G_x",
    ),
    (
        "sgan_reconstruction",
        "false",
        "add the reconstruction term to acl-sgan",
    ),
    (
        "acl_d_steps",
        "1",
        "code discriminator updates per code generator update",
    ),
];

pub const REQUIRED: [&str; 3] = ["model", "dataset", "out"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DatasetId {
    Synthetic4,
    Mnist,
    Flat(PathBuf),
}

impl DatasetId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "synthetic4" => Ok(DatasetId::Synthetic4),
            "mnist" => Ok(DatasetId::Mnist),
            _ => match s.strip_prefix("flat:") {
                Some(p) if !p.is_empty() => Ok(DatasetId::Flat(PathBuf::from(p))),
                _ => Err(Error::config(
                    "dataset",
                    format!("unknown dataset `{s}`; expected synthetic4, mnist or flat:PATH"),
                )),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            DatasetId::Synthetic4 => "synthetic4".into(),
            DatasetId::Mnist => "mnist".into(),
            DatasetId::Flat(p) => format!("flat:{}", p.display()),
        }
    }

    /// Directory searched for the MNIST files.
    pub fn mnist_dir() -> PathBuf {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => PathBuf::from(dir),
            None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-subset"),
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetId::Synthetic4 => Ok(Dataset::synthetic4()),
            DatasetId::Mnist => {
                let dir = Self::mnist_dir();
                let mut d = load_idx(&dir.join(MNIST_IMAGES), Some(&dir.join(MNIST_LABELS)))?;
                d.name = "mnist".into();
                Ok(d)
            }
            DatasetId::Flat(path) => load_flat(path),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub dataset: DatasetId,
    pub out: PathBuf,
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// later duplicates win.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(
                format!("line {}", i + 1),
                format!("expected `key = value`, got `{line}`"),
            )
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Rejects keys outside [`KEYS`], suggesting the closest known one.
pub fn check_key(key: &str) -> Result<()> {
    if KEYS.iter().any(|(k, _, _)| *k == key) {
        return Ok(());
    }
    let best = KEYS
        .iter()
        .map(|(k, _, _)| (strsim::levenshtein(key, k), *k))
        .min()
        .filter(|(d, _)| *d <= 3);
    let message = match best {
        Some((_, k)) => format!("unknown key; did you mean `{k}`?"),
        None => "unknown key".to_string(),
    };
    Err(Error::config(key, message))
}

/// Merges file pairs with flag overrides (flags win) into a key map.
pub fn merge(
    file: &[(String, String)],
    flags: &[(String, String)],
) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, v) in file.iter().chain(flags) {
        check_key(k)?;
        map.insert(k.clone(), v.clone());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
    what: &str,
) -> Result<Option<T>> {
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::config(key, format!("expected {what}, got `{v}`")))
        })
        .transpose()
}

fn parse_bool(map: &BTreeMap<String, String>, key: &str) -> Result<Option<bool>> {
    map.get(key)
        .map(|v| match v.as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(Error::config(
                key,
                format!("expected true or false, got `{v}`"),
            )),
        })
        .transpose()
}

/// Builds a [`TrainConfig`] from whatever training keys are present.
pub fn train_config(map: &BTreeMap<String, String>, kind: ModelKind) -> Result<TrainConfig> {
    let mut c = TrainConfig::new(kind);
    let uint = "a non-negative integer";
    let num = "a number";
    if let Some(v) = parse_value(map, "seed", uint)? {
        c.seed = v;
    }
    if let Some(v) = parse_value(map, "steps", uint)? {
        c.total_steps = v;
    }
    if let Some(v) = parse_value(map, "batch_size", uint)? {
        c.batch_size = v;
    }
    if let Some(v) = parse_value(map, "lr", num)? {
        c.learning_rate = v;
    }
    c.gp_weight = parse_value(map, "gp_weight", num)?;
    if let Some(v) = parse_value(map, "eval_every", uint)? {
        c.eval_every = v;
    }
    if let Some(v) = parse_value(map, "checkpoint_every", uint)? {
        c.checkpoint_every = v;
    }
    if let Some(v) = parse_value(map, "n_gen", uint)? {
        c.n_gen = v;
    }
    for (key, slot) in [
        ("lambda1", &mut c.weights.lambda1),
        ("lambda2", &mut c.weights.lambda2),
        ("lambda3", &mut c.weights.lambda3),
        ("lambda4", &mut c.weights.lambda4),
    ] {
        if let Some(v) = parse_value(map, key, num)? {
            *slot = v;
        }
    }
    c.code_dim = parse_value(map, "code_dim", uint)?;
    if let Some(h) = map.get("hidden") {
        let widths: std::result::Result<Vec<usize>, _> =
            h.split(',').map(|w| w.trim().parse()).collect();
        c.hidden = Some(widths.map_err(|_| {
            Error::config(
                "hidden",
                format!("expected comma-separated widths, got `{h}`"),
            )
        })?);
    }
    if let Some(v) = parse_value(map, "code_width", uint)? {
        c.code_width = v;
    }
    if let Some(p) = map.get("prior") {
        c.prior = PriorChoice::parse(p).ok_or_else(|| {
            Error::config("prior", format!("expected standard or mixture4, got `{p}`"))
        })?;
    }
    if let Some(v) = parse_bool(map, "joint_update")? {
        c.joint_update = v;
    }
    if let Some(v) = parse_bool(map, "rec_updates_generator")? {
        c.rec_updates_generator = v;
    }
    if let Some(v) = parse_bool(map, "sgan_reconstruction")? {
        c.sgan_reconstruction = v;
    }
    if let Some(v) = parse_value(map, "acl_d_steps", uint)? {
        c.acl_d_steps = v;
    }
    c.validate()?;
    Ok(c)
}

/// Full run configuration: file pairs first, then flag overrides.
pub fn parse_config(file: &[(String, String)], flags: &[(String, String)]) -> Result<RunConfig> {
    let map = merge(file, flags)?;
    let missing: Vec<&str> = REQUIRED
        .iter()
        .copied()
        .filter(|k| !map.contains_key(*k))
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "missing required keys: {}",
            missing.join(", ")
        )));
    }
    let kind: ModelKind = map["model"].parse()?;
    let dataset = DatasetId::parse(&map["dataset"])?;
    if map["out"].is_empty() {
        return Err(Error::config("out", "must not be empty"));
    }
    let mut train = train_config(&map, kind)?;
    if dataset == DatasetId::Mnist && !map.contains_key("steps") {
        train.total_steps = MNIST_DEFAULT_STEPS;
    }
    Ok(RunConfig {
        train,
        dataset,
        out: PathBuf::from(&map["out"]),
    })
}

impl RunConfig {
    /// Canonical `config.txt` text with every architecture choice resolved
    /// against `dataset`, so the run can be rebuilt exactly.
    pub fn to_text(&self, dataset: &Dataset) -> Result<String> {
        let c = &self.train;
        let arch = c.architecture(dataset)?;
        let hidden: Vec<String> = arch.hidden.iter().map(usize::to_string).collect();
        let f = format_sig9;
        let b = |v: bool| if v { "true" } else { "false" };
        let mut s = String::new();
        let mut line = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("write to String");
        line("model", c.kind.name().into());
        line("dataset", self.dataset.name());
        line("out", self.out.display().to_string());
        line("seed", c.seed.to_string());
        line("steps", c.total_steps.to_string());
        line("batch_size", c.batch_size.to_string());
        line("lr", f(c.learning_rate));
        line("gp_weight", f(c.gp_weight()));
        line("eval_every", c.eval_every.to_string());
        line("checkpoint_every", c.checkpoint_every.to_string());
        line("n_gen", c.n_gen.to_string());
        line("lambda1", f(c.weights.lambda1));
        line("lambda2", f(c.weights.lambda2));
        line("lambda3", f(c.weights.lambda3));
        line("lambda4", f(c.weights.lambda4));
        line("code_dim", arch.code_dim.to_string());
        line("hidden", hidden.join(","));
        line("code_width", c.code_width.to_string());
        line("prior", c.prior.name().into());
        line("joint_update", b(c.joint_update).into());
        line("rec_updates_generator", b(c.rec_updates_generator).into());
        line("sgan_reconstruction", b(c.sgan_reconstruction).into());
        line("acl_d_steps", c.acl_d_steps.to_string());
        Ok(s)
    }
}
