use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AclBundle, Architecture, LossWeights, ModelKind, ModelOptions, StepLosses};
use crate::acl::{PriorSpec, DEFAULT_CODE_WIDTH};
use crate::data::{BatchStream, Dataset, GaussianMixtureSpec};
use crate::error::{Error, Result};
use crate::export::{image_grid, points_csv, write_atomic};
use crate::metrics::{metrics_csv, Evaluator, MetricsRecord, DEFAULT_N_GEN};
use crate::numerics::AdamConfig;

/// Samples written per snapshot: an 8×8 image grid, or this many points.
const SNAPSHOT_GRID: usize = 8;
const SNAPSHOT_POINTS: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorChoice {
    /// `N(0, I)` in the code dimension.
    StandardNormal,
    /// The 2-D four-mode mixture.
    FourMode,
}

impl PriorChoice {
    pub fn name(self) -> &'static str {
        match self {
            PriorChoice::StandardNormal => "standard",
            PriorChoice::FourMode => "mixture4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "standard" => Some(PriorChoice::StandardNormal),
            "mixture4" => Some(PriorChoice::FourMode),
            _ => None,
        }
    }

    pub fn spec(self, code_dim: usize) -> PriorSpec {
        match self {
            PriorChoice::StandardNormal => PriorSpec::standard_normal(code_dim),
            PriorChoice::FourMode => PriorSpec::mixture(GaussianMixtureSpec::four_mode_prior()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub batch_size: usize,
    pub total_steps: u64,
    pub seed: u64,
    /// `None` takes the kind's default (10 for the `-gp` kinds, else 0).
    pub gp_weight: Option<f64>,
    pub eval_every: u64,
    /// 0 writes only the initial and final checkpoints.
    pub checkpoint_every: u64,
    pub n_gen: usize,
    pub learning_rate: f64,
    pub weights: LossWeights,
    /// `None`: 2 for 2-D data, 10 otherwise.
    pub code_dim: Option<usize>,
    /// `None`: `[64, 64]` for 2-D data, `[256, 256]` otherwise.
    pub hidden: Option<Vec<usize>>,
    pub code_width: usize,
    pub prior: PriorChoice,
    pub joint_update: bool,
    pub rec_updates_generator: bool,
    pub sgan_reconstruction: bool,
    pub acl_d_steps: usize,
}

impl TrainConfig {
    pub fn new(kind: ModelKind) -> Self {
        let options = ModelOptions::default();
        Self {
            kind,
            batch_size: 128,
            total_steps: 5000,
            seed: 0,
            gp_weight: None,
            eval_every: 500,
            checkpoint_every: 1000,
            n_gen: DEFAULT_N_GEN,
            learning_rate: AdamConfig::default().learning_rate,
            weights: LossWeights::default(),
            code_dim: None,
            hidden: None,
            code_width: DEFAULT_CODE_WIDTH,
            prior: PriorChoice::StandardNormal,
            joint_update: options.joint_update,
            rec_updates_generator: options.rec_updates_generator,
            sgan_reconstruction: options.sgan_reconstruction,
            acl_d_steps: options.acl_d_steps,
        }
    }

    pub fn gp_weight(&self) -> f64 {
        self.gp_weight
            .unwrap_or_else(|| self.kind.default_gp_weight())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::config(key, msg));
        if self.batch_size < 2 {
            return bad("batch_size", "must be at least 2");
        }
        let gp = self.gp_weight();
        if !(gp >= 0.0 && gp.is_finite()) {
            return bad("gp_weight", "must be a finite value ≥ 0");
        }
        if self.eval_every == 0 {
            return bad("eval_every", "must be positive");
        }
        if self.n_gen == 0 {
            return bad("n_gen", "n_gen must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("lr", "must be a positive number");
        }
        if self.code_dim == Some(0) {
            return bad("code_dim", "must be positive");
        }
        if self.hidden.as_ref().is_some_and(|h| h.contains(&0)) {
            return bad("hidden", "widths must be positive");
        }
        if self.code_width == 0 {
            return bad("code_width", "must be positive");
        }
        if self.acl_d_steps == 0 {
            return bad("acl_d_steps", "must be positive");
        }
        for (key, v) in [
            ("lambda1", self.weights.lambda1),
            ("lambda2", self.weights.lambda2),
            ("lambda3", self.weights.lambda3),
            ("lambda4", self.weights.lambda4),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(key, "must be a finite value ≥ 0");
            }
        }
        Ok(())
    }

    pub fn architecture(&self, dataset: &Dataset) -> Result<Architecture> {
        let data_dim = dataset.data_dim();
        let low_dim = data_dim <= 2;
        let code_dim = self.code_dim.unwrap_or(if low_dim { 2 } else { 10 });
        let hidden = self.hidden.clone().unwrap_or_else(|| {
            if low_dim {
                vec![64, 64]
            } else {
                vec![256, 256]
            }
        });
        if self.kind.needs_labels() && dataset.labels.is_none() {
            return Err(Error::config(
                "model",
                "acl-sgan requires a labeled dataset",
            ));
        }
        Ok(Architecture {
            data_dim,
            code_dim,
            hidden,
            code_width: self.code_width,
            bounded: dataset.is_image(),
            num_classes: dataset.num_classes,
            prior: self.prior.spec(code_dim),
        })
    }

    pub fn build(&self, dataset: &Dataset) -> Result<AclBundle> {
        self.validate()?;
        let options = ModelOptions {
            gp_weight: self.gp_weight(),
            joint_update: self.joint_update,
            rec_updates_generator: self.rec_updates_generator,
            sgan_reconstruction: self.sgan_reconstruction,
            acl_d_steps: self.acl_d_steps,
        };
        let adam = AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        };
        AclBundle::new(
            self.kind,
            self.architecture(dataset)?,
            self.weights,
            options,
            self.seed,
            adam,
        )
    }
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    /// Evaluation of the untrained bundle (not written to metrics.csv).
    pub initial: MetricsRecord,
    pub records: Vec<MetricsRecord>,
    pub last_losses: Option<StepLosses>,
    pub bundle: AclBundle,
}

impl TrainSummary {
    pub fn final_record(&self) -> &MetricsRecord {
        self.records.last().unwrap_or(&self.initial)
    }
}

/// Generator for evaluation samples at `step`, independent of the training
/// stream so evaluation never perturbs the trajectory.
pub fn eval_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe7a1_0000_0000_0000);
    rng.set_stream(step);
    rng
}

pub fn train(config: &TrainConfig, dataset: &Dataset, out: Option<&Path>) -> Result<TrainSummary> {
    train_with(config, dataset, out, &mut |_, _| Ok(()))
}

/// Runs the training loop. `observer` sees the bundle at step 0 and after
/// every step. With `out`, writes `metrics.csv`, `ckpt/step_<N>.aclp` and
/// `samples/step_<N>.{pgm,csv}` under it.
pub fn train_with(
    config: &TrainConfig,
    dataset: &Dataset,
    out: Option<&Path>,
    observer: &mut dyn FnMut(u64, &AclBundle) -> Result<()>,
) -> Result<TrainSummary> {
    let mut bundle = config.build(dataset)?;
    let evaluator = Evaluator::new(dataset)?;
    let mut stream = BatchStream::new(dataset, config.batch_size, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let initial = evaluate(&bundle, &evaluator, config, 0, None)?;
    let mut records = Vec::new();
    if let Some(dir) = out {
        write_atomic(&dir.join("metrics.csv"), metrics_csv(&records).as_bytes())?;
        snapshot(&bundle, dataset, config, dir, 0)?;
    }
    observer(0, &bundle)?;

    let mut last = None;
    for step in 1..=config.total_steps {
        let batch = stream.next_batch();
        let losses = bundle.step(&batch, &mut rng)?;
        last = Some(losses);
        if step % config.eval_every == 0 {
            records.push(evaluate(&bundle, &evaluator, config, step, Some(&losses))?);
            if let Some(dir) = out {
                write_atomic(&dir.join("metrics.csv"), metrics_csv(&records).as_bytes())?;
            }
        }
        let due = config.checkpoint_every > 0 && step % config.checkpoint_every == 0;
        if let Some(dir) = out.filter(|_| due || step == config.total_steps) {
            snapshot(&bundle, dataset, config, dir, step)?;
        }
        observer(step, &bundle)?;
    }
    Ok(TrainSummary {
        initial,
        records,
        last_losses: last,
        bundle,
    })
}

pub fn evaluate(
    bundle: &AclBundle,
    evaluator: &Evaluator,
    config: &TrainConfig,
    step: u64,
    losses: Option<&StepLosses>,
) -> Result<MetricsRecord> {
    let samples = bundle.generate(config.n_gen, &mut eval_rng(config.seed, step))?;
    let eval = evaluator.evaluate(&samples)?;
    Ok(MetricsRecord {
        step,
        loss_rec: losses.and_then(|l| l.rec),
        loss_d: losses.and_then(|l| l.d),
        loss_g: losses.and_then(|l| l.g),
        loss_z: losses.and_then(|l| l.z),
        frechet: Some(eval.frechet),
        modes_covered: eval.coverage.map(|c| c.modes_covered),
        hq_fraction: eval.coverage.map(|c| c.high_quality_fraction),
    })
}

fn snapshot(
    bundle: &AclBundle,
    dataset: &Dataset,
    config: &TrainConfig,
    dir: &Path,
    step: u64,
) -> Result<()> {
    bundle.save(&dir.join("ckpt").join(format!("step_{step}.aclp")))?;
    let mut rng = eval_rng(config.seed.wrapping_add(1), step);
    match dataset.image_shape {
        Some(shape) => {
            let samples = bundle.generate(SNAPSHOT_GRID * SNAPSHOT_GRID, &mut rng)?;
            let grid = image_grid(&samples, shape, SNAPSHOT_GRID, SNAPSHOT_GRID)?;
            grid.write_pgm(&dir.join("samples").join(format!("step_{step}.pgm")))
        }
        None => {
            let samples = bundle.generate(SNAPSHOT_POINTS, &mut rng)?;
            let header: Vec<String> = (0..samples.cols()).map(|j| format!("x{j}")).collect();
            let csv = points_csv(&header.join(","), &samples);
            write_atomic(
                &dir.join("samples").join(format!("step_{step}.csv")),
                csv.as_bytes(),
            )
        }
    }
}
