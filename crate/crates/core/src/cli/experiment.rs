//! One-mode versus four-mode prior comparison of ACL-AE on the synthetic
//! target, with scatter snapshots through training.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::config::{DatasetId, RunConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::export::write_atomic;
use crate::metrics::format_sig9;
use crate::models::{eval_rng, train_with, AclBundle, ModelKind, PriorChoice, TrainConfig};
use crate::numerics::Tensor;

pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
/// Points per population in each scatter file.
pub const SCATTER_POINTS: usize = 512;
pub const SUMMARY_HEADER: &str =
    "setting,prior,median_frechet,median_modes_covered,runs_with_all_modes";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorSetting {
    OneMode,
    FourMode,
}

impl PriorSetting {
    pub const BOTH: [PriorSetting; 2] = [PriorSetting::OneMode, PriorSetting::FourMode];

    pub fn name(self) -> &'static str {
        match self {
            PriorSetting::OneMode => "one_mode",
            PriorSetting::FourMode => "four_mode",
        }
    }

    pub fn prior(self) -> PriorChoice {
        match self {
            PriorSetting::OneMode => PriorChoice::StandardNormal,
            PriorSetting::FourMode => PriorChoice::FourMode,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub frechet: f64,
    pub modes_covered: usize,
    pub hq_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SettingSummary {
    pub setting: PriorSetting,
    pub runs: Vec<SeedOutcome>,
}

impl SettingSummary {
    pub fn median_frechet(&self) -> f64 {
        median(self.runs.iter().map(|r| r.frechet).collect())
    }

    pub fn median_modes(&self) -> f64 {
        median(self.runs.iter().map(|r| r.modes_covered as f64).collect())
    }

    pub fn runs_with_all_modes(&self, modes: usize) -> usize {
        self.runs
            .iter()
            .filter(|r| r.modes_covered == modes)
            .count()
    }
}

/// Median with the midpoint convention for even counts.
pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Steps at which scatter snapshots are taken: 0, 25%, 50% and 100%.
pub fn snapshot_steps(total: u64) -> BTreeSet<u64> {
    [0, total / 4, total / 2, total].into_iter().collect()
}

fn scatter_csv(bundle: &AclBundle, real: &Tensor, seed: u64, step: u64) -> Result<String> {
    let codes = bundle.encode(real)?;
    let acl = bundle.acl.as_ref().expect("acl-ae bundle");
    let mut rng = eval_rng(seed.wrapping_add(2), step);
    let gen_codes = acl.generate_codes(SCATTER_POINTS, &mut rng)?;
    let gen_data = bundle.decode(&gen_codes)?;
    let mut out = String::from("population,x,y\n");
    for (name, t) in [
        ("real_code", &codes),
        ("generated_code", &gen_codes),
        ("generated_data", &gen_data),
    ] {
        for row in t.iter_rows() {
            writeln!(
                out,
                "{name},{},{}",
                format_sig9(row[0]),
                format_sig9(row[1])
            )
            .expect("write to String");
        }
    }
    Ok(out)
}

/// Trains ACL-AE on the synthetic target under both prior settings for
/// every seed. Each run lives in `<out>/<setting>/seed_<s>/` with its
/// metrics, checkpoints and `scatter_step_<N>.csv` files; `<out>/summary.csv`
/// holds one row per setting.
pub fn prior_experiment(
    base: &TrainConfig,
    out: &Path,
    seeds: &[u64],
) -> Result<Vec<SettingSummary>> {
    if seeds.is_empty() {
        return Err(Error::config("seeds", "at least one seed is required"));
    }
    let dataset = Dataset::synthetic4();
    let real = dataset
        .samples
        .select_rows(&(0..SCATTER_POINTS.min(dataset.len())).collect::<Vec<_>>());
    let marks = snapshot_steps(base.total_steps);
    let mut summaries = Vec::new();
    for setting in PriorSetting::BOTH {
        let mut runs = Vec::new();
        for &seed in seeds {
            let mut config = base.clone();
            config.kind = ModelKind::AclAe;
            config.prior = setting.prior();
            config.seed = seed;
            if config.architecture(&dataset)?.code_dim != 2 {
                return Err(Error::config(
                    "code_dim",
                    "the prior experiment uses 2-D codes",
                ));
            }
            let dir = out.join(setting.name()).join(format!("seed_{seed}"));
            let run = RunConfig {
                train: config.clone(),
                dataset: DatasetId::Synthetic4,
                out: dir.clone(),
            };
            write_atomic(&dir.join("config.txt"), run.to_text(&dataset)?.as_bytes())?;
            let mut observer = |step: u64, bundle: &AclBundle| -> Result<()> {
                if marks.contains(&step) {
                    let csv = scatter_csv(bundle, &real, seed, step)?;
                    write_atomic(
                        &dir.join(format!("scatter_step_{step}.csv")),
                        csv.as_bytes(),
                    )?;
                }
                Ok(())
            };
            let summary = train_with(&config, &dataset, Some(&dir), &mut observer)?;
            let last = summary.final_record();
            runs.push(SeedOutcome {
                seed,
                frechet: last.frechet.expect("always evaluated"),
                modes_covered: last.modes_covered.unwrap_or(0),
                hq_fraction: last.hq_fraction.unwrap_or(0.0),
            });
        }
        summaries.push(SettingSummary { setting, runs });
    }
    let modes = dataset.mixture.as_ref().map_or(0, |m| m.modes.len());
    let mut csv = format!("{SUMMARY_HEADER}\n");
    for s in &summaries {
        writeln!(
            csv,
            "{},{},{},{},{}",
            s.setting.name(),
            s.setting.prior().name(),
            format_sig9(s.median_frechet()),
            format_sig9(s.median_modes()),
            s.runs_with_all_modes(modes)
        )
        .expect("write to String");
    }
    write_atomic(&out.join("summary.csv"), csv.as_bytes())?;
    Ok(summaries)
}
