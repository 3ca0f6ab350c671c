use super::*;
use crate::data::{Dataset, GaussianMixtureSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const LN2: f64 = std::f64::consts::LN_2;

fn gaussian(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Tensor::matrix(rows, cols, data).unwrap()
}

fn arch(data_dim: usize, code_dim: usize, hidden: &[usize], bounded: bool) -> Architecture {
    Architecture {
        data_dim,
        code_dim,
        hidden: hidden.to_vec(),
        code_width: 8,
        bounded,
        num_classes: 0,
        prior: PriorSpec::standard_normal(code_dim),
    }
}

fn bundle(kind: ModelKind, a: Architecture, seed: u64) -> AclBundle {
    let options = ModelOptions {
        gp_weight: kind.default_gp_weight(),
        ..Default::default()
    };
    AclBundle::new(
        kind,
        a,
        LossWeights::default(),
        options,
        seed,
        AdamConfig::default(),
    )
    .unwrap()
}

fn neutralize_discriminator(b: &mut AclBundle) {
    let last = b
        .discriminator
        .as_mut()
        .unwrap()
        .params
        .layers
        .last_mut()
        .unwrap();
    last.weight.data_mut().fill(0.0);
    last.bias.data_mut().fill(0.0);
}

fn identity_autoencoder(kind: ModelKind) -> AclBundle {
    let mut b = bundle(kind, arch(3, 3, &[], false), 0);
    for net in [b.encoder.as_mut().unwrap(), &mut b.generator] {
        net.params.layers[0].weight = Tensor::identity(3);
        net.params.layers[0].bias.data_mut().fill(0.0);
    }
    b
}

fn max_abs(ts: &[Tensor]) -> f64 {
    ts.iter()
        .flat_map(|t| t.data())
        .fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn kind_names_round_trip() {
    for k in ModelKind::ALL {
        assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
    }
    let err = "acl-vae".parse::<ModelKind>().unwrap_err().to_string();
    assert!(err.contains("acl-gan-gp") && err.contains("ae"), "{err}");
}

#[test]
fn network_partition_per_kind() {
    let a = arch(4, 2, &[6], false);
    let ids = |k| -> Vec<NetId> {
        bundle(k, a.clone(), 0)
            .networks()
            .iter()
            .map(|(i, _)| *i)
            .collect()
    };
    use NetId::*;
    assert_eq!(
        ids(ModelKind::AclAe),
        vec![Encoder, Generator, CodeGenerator, CodeDiscriminator]
    );
    assert_eq!(
        ids(ModelKind::AclGan),
        vec![
            Encoder,
            Generator,
            Discriminator,
            CodeGenerator,
            CodeDiscriminator
        ]
    );
    assert_eq!(ids(ModelKind::Gan), vec![Generator, Discriminator]);
    assert_eq!(ids(ModelKind::Ae), vec![Encoder, Generator]);
    let mut sgan = a.clone();
    sgan.num_classes = 3;
    let b = bundle(ModelKind::AclSgan, sgan, 0);
    assert_eq!(b.networks().len(), 6);
    assert!(AclBundle::new(
        ModelKind::AclSgan,
        a,
        LossWeights::default(),
        ModelOptions::default(),
        0,
        AdamConfig::default()
    )
    .is_err());
}

#[test]
fn identity_autoencoder_has_zero_loss() {
    let x = gaussian(5, 3, 1);
    for kind in [ModelKind::AclAe, ModelKind::Ae] {
        let b = identity_autoencoder(kind);
        let phase = b.autoencoder_phase(&x).unwrap();
        assert_eq!(phase.loss(LossKind::Reconstruction), Some(0.0));
        let mut b = b;
        let l = b
            .step(
                &Batch {
                    samples: x.clone(),
                    labels: None,
                },
                &mut ChaCha8Rng::seed_from_u64(0),
            )
            .unwrap();
        assert_eq!(l.rec, Some(0.0));
    }
}

#[test]
fn first_step_reconstruction_is_finite_and_positive() {
    let mut b = bundle(ModelKind::AclAe, arch(2, 2, &[16, 16], false), 0);
    let x = gaussian(32, 2, 2).map(|v| v.clamp(-1.0, 1.0));
    let l = b
        .acl_ae_step(&x, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    let l_e = l.rec.unwrap();
    assert!(l_e.is_finite() && l_e > 0.0);
    assert!(l.z.unwrap().is_finite());
}

#[test]
fn lambda1_scales_only_the_code_term() {
    let a = arch(2, 2, &[8], false);
    let x = gaussian(16, 2, 3);
    let mut b1 = bundle(ModelKind::AclAe, a.clone(), 4);
    let mut b2 = b1.clone();
    b2.weights.lambda1 = 2.0;
    let l1 = b1
        .acl_ae_step(&x, &mut ChaCha8Rng::seed_from_u64(9))
        .unwrap();
    let l2 = b2
        .acl_ae_step(&x, &mut ChaCha8Rng::seed_from_u64(9))
        .unwrap();
    assert_eq!(l1.rec, l2.rec);
    assert_eq!(l1.z, l2.z);
    let z = l1.z.unwrap();
    assert!(((l2.total - l2.rec.unwrap()) - 2.0 * (l1.total - l1.rec.unwrap())).abs() < 1e-15);
    assert!((l1.total - l1.rec.unwrap() - z).abs() < 1e-15);
}

#[test]
fn equilibrium_image_losses() {
    for kind in [ModelKind::AclGan, ModelKind::Gan] {
        let mut b = bundle(kind, arch(3, 2, &[5], false), 1);
        neutralize_discriminator(&mut b);
        let x = gaussian(8, 3, 5);
        let codes = b
            .sample_codes(8, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        let d = b.discriminator_phase(&x, &codes, None).unwrap();
        let g = b.generator_phase(&x, &codes, true, false).unwrap();
        assert!((d.loss(LossKind::Discriminator).unwrap() - 2.0 * LN2).abs() < 1e-12);
        assert!((g.loss(LossKind::Generator).unwrap() - LN2).abs() < 1e-12);
    }
}

#[test]
fn acl_gan_phase_partitions() {
    let b = bundle(ModelKind::AclGan, arch(4, 2, &[6, 5], false), 2);
    let x = gaussian(8, 4, 6);
    let z = gaussian(8, 2, 7);
    let codes = b.acl.as_ref().unwrap().generator.predict(&z).unwrap();
    let zero_outside = |phase: &Phase, allowed: &[NetId]| {
        for (id, g) in &phase.grads {
            if !allowed.contains(id) {
                assert_eq!(max_abs(g), 0.0, "{id:?} got gradient");
            }
        }
        for id in allowed {
            assert!(
                max_abs(phase.grads_for(*id).unwrap()) > 0.0,
                "{id:?} got none"
            );
        }
    };
    use NetId::*;
    zero_outside(
        &b.generator_phase(&x, &codes, false, true).unwrap(),
        &[Encoder, Generator],
    );
    zero_outside(
        &b.generator_phase(&x, &codes, true, false).unwrap(),
        &[Generator],
    );
    zero_outside(
        &b.discriminator_phase(&x, &codes, None).unwrap(),
        &[Discriminator],
    );
    zero_outside(
        &b.code_phase(&x, &z).unwrap(),
        &[CodeGenerator, CodeDiscriminator],
    );

    let mut enc_only = b.clone();
    enc_only.options.rec_updates_generator = false;
    zero_outside(
        &enc_only.generator_phase(&x, &codes, false, true).unwrap(),
        &[Encoder],
    );
}

#[test]
fn joint_update_trains_generator_on_discriminator_loss() {
    let mut b = bundle(ModelKind::AclGan, arch(3, 2, &[4], false), 3);
    b.options.joint_update = true;
    let x = gaussian(6, 3, 1);
    let codes = gaussian(6, 2, 2);
    let phase = b.discriminator_phase(&x, &codes, None).unwrap();
    assert!(phase.trainable.contains(&NetId::Generator));
    assert!(max_abs(phase.grads_for(NetId::Generator).unwrap()) > 0.0);
    let l = b
        .acl_gan_step(&x, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    assert!(l.g.is_none() && l.rec.is_some());
}

#[test]
fn zero_penalty_weight_reproduces_acl_gan() {
    let a = arch(3, 2, &[6], false);
    let mut plain = bundle(ModelKind::AclGan, a.clone(), 5);
    let mut gp = plain.clone();
    gp.kind = ModelKind::AclGanGp;
    gp.options.gp_weight = 0.0;
    let (mut r1, mut r2) = (ChaCha8Rng::seed_from_u64(1), ChaCha8Rng::seed_from_u64(1));
    for s in 0..5 {
        let x = gaussian(8, 3, s);
        let l1 = plain.acl_gan_step(&x, &mut r1).unwrap();
        let l2 = gp.acl_gan_step(&x, &mut r2).unwrap();
        assert_eq!(l1, l2);
    }
    for ((_, n1), (_, n2)) in plain.networks().iter().zip(gp.networks()) {
        assert_eq!(n1.params, n2.params);
    }
}

#[test]
fn penalty_is_logged_when_enabled() {
    let mut b = bundle(ModelKind::AclGanGp, arch(3, 2, &[6], false), 5);
    let l = b
        .acl_gan_step(&gaussian(8, 3, 0), &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    assert!(l.gp.unwrap() >= 0.0);
}

fn sgan_bundle() -> AclBundle {
    let mut a = arch(4, 3, &[6], false);
    a.num_classes = 10;
    bundle(ModelKind::AclSgan, a, 6)
}

#[test]
fn uniform_classifier_loss_is_ln10() {
    let mut b = sgan_bundle();
    let head = b.classifier_head.as_mut().unwrap();
    head.params.layers[0].weight.data_mut().fill(0.0);
    head.params.layers[0].bias.data_mut().fill(0.0);
    let labels: Vec<usize> = (0..8).map(|i| i % 10).collect();
    let phase = b.classifier_phase(&gaussian(8, 4, 0), &labels).unwrap();
    assert!((phase.loss(LossKind::Classifier).unwrap() - 10f64.ln()).abs() < 1e-12);
}

#[test]
fn confident_correct_classifier_loss_vanishes() {
    let mut b = sgan_bundle();
    let head = b.classifier_head.as_mut().unwrap();
    head.params.layers[0].weight.data_mut().fill(0.0);
    let bias = head.params.layers[0].bias.data_mut();
    bias.fill(0.0);
    bias[3] = 60.0;
    let phase = b
        .classifier_phase(&gaussian(4, 4, 0), &[3, 3, 3, 3])
        .unwrap();
    assert!(phase.loss(LossKind::Classifier).unwrap() < 1e-20);
    assert!(b.classifier_phase(&gaussian(1, 4, 0), &[10]).is_err());
}

#[test]
fn sgan_step_uses_trunk_features_as_codes() {
    let mut b = sgan_bundle();
    let x = gaussian(8, 4, 1);
    let feats = b.encoder.as_ref().unwrap().predict(&x).unwrap();
    assert_eq!(feats.shape(), &[8, 3]);
    let labels: Vec<usize> = (0..8).collect();
    let mut replay = b.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let l = b.acl_sgan_step(&x, &labels, &mut rng).unwrap();
    assert!(l.cls.is_some() && l.rec.is_none() && l.all_finite());

    // the code learner saw exactly the pre-update trunk features
    let mut rng2 = ChaCha8Rng::seed_from_u64(2);
    let acl = replay.acl.as_ref().unwrap();
    let _ = sample_prior(&acl.prior, 8, &mut rng2);
    let mut acl = replay.acl.take().unwrap();
    let expected = acl_step(&mut acl, &feats, &mut rng2).unwrap();
    assert_eq!(l.z, Some(expected.d_loss));
    assert_eq!(
        b.acl.as_ref().unwrap().discriminator.params,
        acl.discriminator.params
    );
    assert!(b
        .step(
            &Batch {
                samples: x,
                labels: None
            },
            &mut rng
        )
        .is_err());
}

#[test]
fn generate_contract() {
    let b = bundle(ModelKind::AclGan, arch(6, 2, &[8], true), 7);
    let s1 = b.generate(10, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let s2 = b.generate(10, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(s1.shape(), &[10, 6]);
    assert_eq!(s1, s2);
    assert!(s1.data().iter().all(|v| (-1.0..=1.0).contains(v)));
    assert_eq!(
        b.generate(0, &mut ChaCha8Rng::seed_from_u64(3))
            .unwrap()
            .shape(),
        &[0, 6]
    );
}

#[test]
fn vanilla_gan_and_acl_gan_fakes_differ() {
    let a = arch(4, 2, &[8], false);
    let gan = bundle(ModelKind::Gan, a.clone(), 0);
    let acl = bundle(ModelKind::AclGan, a, 0);
    let f1 = gan.generate(16, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let f2 = acl.generate(16, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_ne!(f1, f2);
}

#[test]
fn vanilla_gan_equilibrium_step() {
    let mut b = bundle(ModelKind::Gan, arch(3, 2, &[5], false), 1);
    neutralize_discriminator(&mut b);
    let l = b
        .vanilla_gan_step(&gaussian(8, 3, 0), &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    assert!((l.d.unwrap() - 2.0 * LN2).abs() < 1e-12);
}

#[test]
fn interpolation_strip() {
    let b = bundle(ModelKind::AclAe, arch(4, 2, &[6], true), 8);
    let x = gaussian(2, 4, 9).map(|v| v.clamp(-1.0, 1.0));
    let strip = b.interpolate(x.row(0), x.row(1), 2).unwrap();
    assert_eq!(strip.rows(), 4);
    assert_eq!(strip.row(0), x.row(0));
    assert_eq!(strip.row(3), x.row(1));
    let recon = b
        .reconstruct(&Tensor::matrix(1, 4, x.row(0).to_vec()).unwrap())
        .unwrap();
    assert_eq!(strip.row(1), recon.data());
    assert!(b.interpolate(x.row(0), x.row(1), 1).is_err());
    assert_eq!(
        interpolate_codes(&[0.0, 0.0], &[2.0, 4.0], 0.5),
        vec![1.0, 2.0]
    );

    let gan = bundle(ModelKind::Gan, arch(4, 2, &[6], true), 8);
    assert!(gan.interpolate(x.row(0), x.row(1), 3).is_err());
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.aclp");
    let a = arch(3, 2, &[4], false);
    let b = bundle(ModelKind::AclGan, a.clone(), 1);
    b.save(&path).unwrap();
    let mut other = bundle(ModelKind::AclGan, a.clone(), 2);
    assert_ne!(other.generator.params, b.generator.params);
    other.load(&path).unwrap();
    for ((_, n1), (_, n2)) in b.networks().iter().zip(other.networks()) {
        assert_eq!(n1.params, n2.params);
    }
    let mut ae = bundle(ModelKind::AclAe, a, 0);
    assert!(ae.load(&path).is_err());
}

#[test]
fn mixture_prior_bundle() {
    let mut a = arch(2, 2, &[8], false);
    a.prior = PriorSpec::mixture(GaussianMixtureSpec::four_mode_prior());
    let b = bundle(ModelKind::AclAe, a, 0);
    assert_eq!(b.acl.as_ref().unwrap().generator.spec.input_dim(), 2);
}

#[test]
fn train_with_zero_steps_writes_initial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = TrainConfig::new(ModelKind::AclAe);
    config.total_steps = 0;
    config.n_gen = 256;
    config.hidden = Some(vec![8]);
    let data = Dataset::synthetic4();
    let summary = train(&config, &data, Some(dir.path())).unwrap();
    assert!(summary.records.is_empty());
    assert!(summary.initial.frechet.unwrap().is_finite());
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(csv, format!("{}\n", crate::metrics::METRICS_HEADER));
    assert!(dir.path().join("ckpt/step_0.aclp").exists());
    assert!(dir.path().join("samples/step_0.csv").exists());
}

#[test]
fn short_training_run_logs_every_eval() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = TrainConfig::new(ModelKind::AclGan);
    config.total_steps = 20;
    config.eval_every = 5;
    config.checkpoint_every = 10;
    config.batch_size = 16;
    config.n_gen = 128;
    config.hidden = Some(vec![8]);
    config.code_width = 8;
    let data = Dataset::synthetic4();
    let summary = train(&config, &data, Some(dir.path())).unwrap();
    let steps: Vec<u64> = summary.records.iter().map(|r| r.step).collect();
    assert_eq!(steps, vec![5, 10, 15, 20]);
    assert!(summary
        .records
        .iter()
        .all(|r| r.all_finite() && r.modes_covered.is_some()));
    for s in [0, 10, 20] {
        assert!(dir.path().join(format!("ckpt/step_{s}.aclp")).exists());
    }
    assert!(!dir.path().join("ckpt/step_5.aclp").exists());
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn config_validation_names_keys() {
    let mut c = TrainConfig::new(ModelKind::AclGan);
    c.batch_size = 1;
    assert!(c.validate().unwrap_err().to_string().contains("batch_size"));
    let mut c = TrainConfig::new(ModelKind::AclGanGp);
    c.gp_weight = Some(-1.0);
    assert!(c.validate().unwrap_err().to_string().contains("gp_weight"));
    let mut c = TrainConfig::new(ModelKind::AclGan);
    c.n_gen = 0;
    assert!(c
        .validate()
        .unwrap_err()
        .to_string()
        .contains("n_gen must be positive"));
    let c = TrainConfig::new(ModelKind::AclSgan);
    assert!(c.build(&Dataset::synthetic4()).is_err());
}
