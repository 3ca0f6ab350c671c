//! Trainable assemblies: ACL-AE, ACL-GAN, ACL-GAN-GP, ACL-SGAN and the plain
//! AE/GAN baselines.
//!
//! Every training step is a sequence of phases. A phase places all of the
//! bundle's networks on one tape, marks only its own partition trainable,
//! builds its losses and returns gradients for every network (zero for the
//! frozen ones). The step then applies the gradients of the trainable ones.

mod losses;
mod train;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::acl::{acl_step, sample_prior, AclModule, PriorSpec};
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::networks::{
    forward, read_checkpoint, write_checkpoint, NetVars, Network, NetworkSpec, ParamSet,
};
use crate::numerics::{AdamConfig, Gradients, Tape, Tensor};

pub use losses::{
    discriminator_loss, feature_matching_loss, generator_loss, gradient_penalty,
    gradient_penalty_value, interpolates, interpolation_weights, reconstruction_loss,
};
pub use train::{eval_rng, evaluate, train, train_with, PriorChoice, TrainConfig, TrainSummary};

/// Penalty weight used by the `-gp` kinds unless configured otherwise.
pub const DEFAULT_GP_WEIGHT: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    AclAe,
    AclGan,
    AclGanGp,
    AclSgan,
    Gan,
    GanGp,
    Ae,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::AclAe,
        ModelKind::AclGan,
        ModelKind::AclGanGp,
        ModelKind::AclSgan,
        ModelKind::Gan,
        ModelKind::GanGp,
        ModelKind::Ae,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::AclAe => "acl-ae",
            ModelKind::AclGan => "acl-gan",
            ModelKind::AclGanGp => "acl-gan-gp",
            ModelKind::AclSgan => "acl-sgan",
            ModelKind::Gan => "gan",
            ModelKind::GanGp => "gan-gp",
            ModelKind::Ae => "ae",
        }
    }

    pub fn uses_acl(self) -> bool {
        matches!(
            self,
            ModelKind::AclAe | ModelKind::AclGan | ModelKind::AclGanGp | ModelKind::AclSgan
        )
    }

    /// Kinds whose inference network is an encoder that can be decoded from.
    pub fn has_encoder(self) -> bool {
        matches!(
            self,
            ModelKind::AclAe | ModelKind::AclGan | ModelKind::AclGanGp | ModelKind::Ae
        )
    }

    pub fn has_discriminator(self) -> bool {
        !matches!(self, ModelKind::AclAe | ModelKind::Ae)
    }

    pub fn needs_labels(self) -> bool {
        self == ModelKind::AclSgan
    }

    pub fn default_gp_weight(self) -> f64 {
        match self {
            ModelKind::AclGanGp | ModelKind::GanGp => DEFAULT_GP_WEIGHT,
            _ => 0.0,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config {
                    key: "model".into(),
                    message: format!("unknown model `{s}`; valid kinds: {}", valid.join(", ")),
                }
            })
    }
}

/// λ1 weighs L_Z in ACL-AE; λ2, λ3, λ4 weigh L_R, the image GAN losses and
/// L_Z in ACL-GAN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 1.0,
            lambda4: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelOptions {
    pub gp_weight: f64,
    /// Literal reading of the joint updates: generator and discriminator
    /// both descend the discriminator loss.
    pub joint_update: bool,
    /// Whether L_R also trains the generator (otherwise the encoder only).
    pub rec_updates_generator: bool,
    /// Adds the feature-matching reconstruction term to ACL-SGAN.
    pub sgan_reconstruction: bool,
    /// Code-discriminator updates per code-generator update.
    pub acl_d_steps: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            gp_weight: 0.0,
            joint_update: false,
            rec_updates_generator: true,
            sgan_reconstruction: false,
            acl_d_steps: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub data_dim: usize,
    pub code_dim: usize,
    /// Hidden widths of the encoder, generator and discriminator.
    pub hidden: Vec<usize>,
    /// Hidden width of the code generator and code discriminator.
    pub code_width: usize,
    /// Tanh generator output and clipping to [−1, 1].
    pub bounded: bool,
    pub num_classes: usize,
    pub prior: PriorSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NetId {
    /// E_x, or the classifier trunk in ACL-SGAN.
    Encoder,
    /// G_x
    Generator,
    /// D_x
    Discriminator,
    /// G_z
    CodeGenerator,
    /// D_c
    CodeDiscriminator,
    ClassifierHead,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// L_E for autoencoders, L_R for the GAN kinds.
    Reconstruction,
    Discriminator,
    Penalty,
    Generator,
    Code,
    Classifier,
}

/// Loss values of one step. Absent losses are `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepLosses {
    pub rec: Option<f64>,
    pub d: Option<f64>,
    pub g: Option<f64>,
    /// Code-discriminator loss.
    pub z: Option<f64>,
    /// Code-generator loss.
    pub z_gen: Option<f64>,
    pub gp: Option<f64>,
    pub cls: Option<f64>,
    /// Weighted objective, e.g. `L_E + λ1·L_Z` for ACL-AE.
    pub total: f64,
}

impl StepLosses {
    pub fn all_finite(&self) -> bool {
        [
            self.rec, self.d, self.g, self.z, self.z_gen, self.gp, self.cls,
        ]
        .iter()
        .flatten()
        .chain(std::iter::once(&self.total))
        .all(|v| v.is_finite())
    }
}

/// Output of one phase: loss values plus a gradient list for every network
/// of the bundle.
#[derive(Clone, Debug)]
pub struct Phase {
    pub losses: Vec<(LossKind, f64)>,
    pub grads: Vec<(NetId, Vec<Tensor>)>,
    pub trainable: Vec<NetId>,
}

impl Phase {
    pub fn loss(&self, kind: LossKind) -> Option<f64> {
        self.losses
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|&(_, v)| v)
    }

    pub fn grads_for(&self, id: NetId) -> Option<&[Tensor]> {
        self.grads
            .iter()
            .find(|(n, _)| *n == id)
            .map(|(_, g)| g.as_slice())
    }
}

/// Every network of a bundle on one tape.
struct Placed {
    tape: Tape,
    vars: Vec<(NetId, NetVars)>,
    trainable: Vec<NetId>,
}

impl Placed {
    fn vars(&self, id: NetId) -> &NetVars {
        &self
            .vars
            .iter()
            .find(|(n, _)| *n == id)
            .expect("network present")
            .1
    }

    fn finish(self, root: crate::numerics::Var, losses: Vec<(LossKind, f64)>) -> Result<Phase> {
        let grads: Gradients = self.tape.backward(root)?;
        Ok(Phase {
            losses,
            grads: self
                .vars
                .iter()
                .map(|(id, v)| (*id, v.gradients(&grads)))
                .collect(),
            trainable: self.trainable,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AclBundle {
    pub kind: ModelKind,
    pub arch: Architecture,
    /// E_x, or the classifier trunk for ACL-SGAN. Absent in the GAN baselines.
    pub encoder: Option<Network>,
    pub generator: Network,
    pub discriminator: Option<Network>,
    pub acl: Option<AclModule>,
    pub classifier_head: Option<Network>,
    pub weights: LossWeights,
    pub options: ModelOptions,
}

fn net_seed(seed: u64, id: u64) -> u64 {
    seed.wrapping_mul(8).wrapping_add(id)
}

impl AclBundle {
    pub fn new(
        kind: ModelKind,
        arch: Architecture,
        weights: LossWeights,
        options: ModelOptions,
        seed: u64,
        adam: AdamConfig,
    ) -> Result<Self> {
        arch.prior.validate()?;
        if options.gp_weight < 0.0 || !options.gp_weight.is_finite() {
            return Err(Error::InvalidArgument(
                "gp_weight must be a finite value ≥ 0".into(),
            ));
        }
        let h = &arch.hidden;
        let encoder = match kind {
            ModelKind::Gan | ModelKind::GanGp => None,
            ModelKind::AclSgan => Some(NetworkSpec::classifier_trunk(
                arch.data_dim,
                h,
                arch.code_dim,
            )?),
            _ => Some(NetworkSpec::encoder(arch.data_dim, h, arch.code_dim)?),
        };
        let gen_input = if kind.uses_acl() || kind == ModelKind::Ae {
            arch.code_dim
        } else {
            arch.prior.dim
        };
        let generator = NetworkSpec::generator(gen_input, &rev(h), arch.data_dim, arch.bounded)?;
        let discriminator = if kind.has_discriminator() {
            Some(NetworkSpec::discriminator(arch.data_dim, h)?)
        } else {
            None
        };
        let head = if kind == ModelKind::AclSgan {
            if arch.num_classes < 2 {
                return Err(Error::InvalidArgument(
                    "acl-sgan requires a labeled dataset".into(),
                ));
            }
            Some(NetworkSpec::classifier_head(
                arch.code_dim,
                arch.num_classes,
            )?)
        } else {
            None
        };
        let acl = if kind.uses_acl() {
            let mut m = AclModule::new(
                arch.prior.clone(),
                arch.code_dim,
                arch.code_width,
                net_seed(seed, 3),
                adam,
            )?;
            m.options.d_steps = options.acl_d_steps.max(1);
            m.options.joint_update = options.joint_update;
            Some(m)
        } else {
            None
        };
        Ok(Self {
            kind,
            encoder: encoder.map(|s| Network::new(s, net_seed(seed, 0), adam)),
            generator: Network::new(generator, net_seed(seed, 1), adam),
            discriminator: discriminator.map(|s| Network::new(s, net_seed(seed, 2), adam)),
            acl,
            classifier_head: head.map(|s| Network::new(s, net_seed(seed, 5), adam)),
            arch,
            weights,
            options,
        })
    }

    /// Present networks in checkpoint order.
    pub fn networks(&self) -> Vec<(NetId, &Network)> {
        let mut out = Vec::new();
        if let Some(e) = &self.encoder {
            out.push((NetId::Encoder, e));
        }
        out.push((NetId::Generator, &self.generator));
        if let Some(d) = &self.discriminator {
            out.push((NetId::Discriminator, d));
        }
        if let Some(a) = &self.acl {
            out.push((NetId::CodeGenerator, &a.generator));
            out.push((NetId::CodeDiscriminator, &a.discriminator));
        }
        if let Some(h) = &self.classifier_head {
            out.push((NetId::ClassifierHead, h));
        }
        out
    }

    pub fn network(&self, id: NetId) -> Option<&Network> {
        self.networks()
            .into_iter()
            .find(|(n, _)| *n == id)
            .map(|(_, net)| net)
    }

    pub fn network_mut(&mut self, id: NetId) -> Option<&mut Network> {
        match id {
            NetId::Encoder => self.encoder.as_mut(),
            NetId::Generator => Some(&mut self.generator),
            NetId::Discriminator => self.discriminator.as_mut(),
            NetId::CodeGenerator => self.acl.as_mut().map(|a| &mut a.generator),
            NetId::CodeDiscriminator => self.acl.as_mut().map(|a| &mut a.discriminator),
            NetId::ClassifierHead => self.classifier_head.as_mut(),
        }
    }

    fn require(&self, id: NetId) -> Result<&Network> {
        self.network(id)
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no {id:?} network", self.kind)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let params: Vec<&ParamSet> = self.networks().iter().map(|(_, n)| &n.params).collect();
        write_checkpoint(path, &params)
    }

    /// Loads parameters written by [`AclBundle::save`] for the same
    /// architecture. Optimizer state starts fresh.
    pub fn load(&mut self, path: &Path) -> Result<()> {
        let sets = read_checkpoint(path)?;
        let ids: Vec<NetId> = self.networks().iter().map(|(id, _)| *id).collect();
        if sets.len() != ids.len() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!(
                    "{} networks in checkpoint, {} expected for {}",
                    sets.len(),
                    ids.len(),
                    self.kind
                ),
            });
        }
        for (id, params) in ids.into_iter().zip(sets) {
            self.network_mut(id).expect("listed").load_params(params)?;
        }
        Ok(())
    }

    fn place(&self, trainable: &[NetId]) -> Placed {
        let mut tape = Tape::new();
        let vars = self
            .networks()
            .into_iter()
            .map(|(id, net)| (id, net.register(&mut tape, trainable.contains(&id))))
            .collect();
        Placed {
            tape,
            vars,
            trainable: trainable.to_vec(),
        }
    }

    fn apply(&mut self, phase: &Phase) -> Result<()> {
        for id in &phase.trainable {
            let grads = phase.grads_for(*id).expect("placed network");
            self.network_mut(*id)
                .expect("placed network")
                .apply_gradients(grads)?;
        }
        Ok(())
    }

    fn adversarial_weight(&self) -> f64 {
        match self.kind {
            ModelKind::AclGan | ModelKind::AclGanGp => self.weights.lambda3,
            _ => 1.0,
        }
    }

    fn code_weight(&self) -> f64 {
        match self.kind {
            ModelKind::AclAe => self.weights.lambda1,
            _ => self.weights.lambda4,
        }
    }

    /// Networks trained by L_R.
    fn reconstruction_partition(&self) -> Vec<NetId> {
        match self.kind {
            ModelKind::AclSgan => vec![NetId::Generator],
            _ if self.options.rec_updates_generator => vec![NetId::Encoder, NetId::Generator],
            _ => vec![NetId::Encoder],
        }
    }

    /// Autoencoder phase: E_x and G_x descend `L_E`.
    pub fn autoencoder_phase(&self, x: &Tensor) -> Result<Phase> {
        self.require(NetId::Encoder)?;
        let mut p = self.place(&[NetId::Encoder, NetId::Generator]);
        let xv = p.tape.constant(x.clone());
        let e = p.vars(NetId::Encoder).clone();
        let g = p.vars(NetId::Generator).clone();
        let enc = &self.encoder.as_ref().expect("required").spec;
        let c = forward(&mut p.tape, enc, &e, xv)?;
        let recon = forward(&mut p.tape, &self.generator.spec, &g, c)?;
        let loss = reconstruction_loss(&mut p.tape, xv, recon)?;
        let value = p.tape.value(loss).item();
        p.finish(loss, vec![(LossKind::Reconstruction, value)])
    }

    /// Image discriminator phase on real `x_r` against generator inputs
    /// `fake_codes`. `u` enables the gradient penalty.
    pub fn discriminator_phase(
        &self,
        x_r: &Tensor,
        fake_codes: &Tensor,
        u: Option<&[f64]>,
    ) -> Result<Phase> {
        let d_spec = &self.require(NetId::Discriminator)?.spec;
        let joint = self.options.joint_update;
        let trainable: &[NetId] = if joint {
            &[NetId::Discriminator, NetId::Generator]
        } else {
            &[NetId::Discriminator]
        };
        let mut p = self.place(trainable);
        let d = p.vars(NetId::Discriminator).clone();
        let g = p.vars(NetId::Generator).clone();
        let codes = p.tape.constant(fake_codes.clone());
        let fake = forward(&mut p.tape, &self.generator.spec, &g, codes)?;
        let fake = if joint { fake } else { p.tape.detach(fake) };
        let real = p.tape.constant(x_r.clone());
        let ld = discriminator_loss(&mut p.tape, d_spec, &d, real, fake)?;
        let mut losses = vec![(LossKind::Discriminator, p.tape.value(ld).item())];
        let mut total = ld;
        if let Some(u) = u {
            let fake_value = p.tape.value(fake).clone();
            let gp = gradient_penalty(&mut p.tape, d_spec, &d, x_r, &fake_value, u)?;
            losses.push((LossKind::Penalty, p.tape.value(gp).item()));
            let weighted = p.tape.scale(gp, self.options.gp_weight)?;
            total = p.tape.add(total, weighted)?;
        }
        let root = p.tape.scale(total, self.adversarial_weight())?;
        p.finish(root, losses)
    }

    /// Generator phase: the non-saturating image loss on `G_x(fake_codes)`
    /// (when `adversarial`) plus, when `reconstruction`, the feature-matching
    /// loss `L_R` between `x_r` and `G_x(E_x(x_r))`. D_x is frozen.
    pub fn generator_phase(
        &self,
        x_r: &Tensor,
        fake_codes: &Tensor,
        adversarial: bool,
        reconstruction: bool,
    ) -> Result<Phase> {
        let d_net = self.require(NetId::Discriminator)?;
        let mut trainable = vec![NetId::Generator];
        if reconstruction {
            self.require(NetId::Encoder)?;
            for id in self.reconstruction_partition() {
                if !trainable.contains(&id) {
                    trainable.push(id);
                }
            }
        }
        let mut p = self.place(&trainable);
        let d = p.vars(NetId::Discriminator).clone();
        let g = p.vars(NetId::Generator).clone();
        let mut losses = Vec::new();
        let mut terms = Vec::new();
        if adversarial {
            let codes = p.tape.constant(fake_codes.clone());
            let fake = forward(&mut p.tape, &self.generator.spec, &g, codes)?;
            let lg = generator_loss(&mut p.tape, &d_net.spec, &d, fake)?;
            losses.push((LossKind::Generator, p.tape.value(lg).item()));
            terms.push(p.tape.scale(lg, self.adversarial_weight())?);
        }
        if reconstruction {
            let e = p.vars(NetId::Encoder).clone();
            let enc = &self.encoder.as_ref().expect("required").spec;
            let g_rec = if self.reconstruction_partition().contains(&NetId::Generator) {
                g.clone()
            } else {
                self.generator.register(&mut p.tape, false)
            };
            let real = p.tape.constant(x_r.clone());
            let c = forward(&mut p.tape, enc, &e, real)?;
            let x_f = forward(&mut p.tape, &self.generator.spec, &g_rec, c)?;
            let lr = feature_matching_loss(&mut p.tape, &d_net.spec, &d, real, x_f)?;
            losses.push((LossKind::Reconstruction, p.tape.value(lr).item()));
            terms.push(p.tape.scale(lr, self.weights.lambda2)?);
        }
        let mut root = *terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("generator phase without losses".into()))?;
        for &t in &terms[1..] {
            root = p.tape.add(root, t)?;
        }
        p.finish(root, losses)
    }

    /// Classifier phase: trunk and head descend softmax cross-entropy.
    pub fn classifier_phase(&self, x: &Tensor, labels: &[usize]) -> Result<Phase> {
        let trunk = &self.require(NetId::Encoder)?.spec;
        let head = &self.require(NetId::ClassifierHead)?.spec;
        let mut p = self.place(&[NetId::Encoder, NetId::ClassifierHead]);
        let t = p.vars(NetId::Encoder).clone();
        let h = p.vars(NetId::ClassifierHead).clone();
        let xv = p.tape.constant(x.clone());
        let feats = forward(&mut p.tape, trunk, &t, xv)?;
        let logits = forward(&mut p.tape, head, &h, feats)?;
        let loss = p.tape.softmax_cross_entropy(logits, labels)?;
        let value = p.tape.value(loss).item();
        p.finish(loss, vec![(LossKind::Classifier, value)])
    }

    /// Both sides of `L_Z` on one tape, with every network trainable and the
    /// target codes produced on-tape by the inference network. Only the
    /// stop-gradient on the targets keeps the other networks out; used to
    /// check that isolation.
    pub fn code_phase(&self, x: &Tensor, z: &Tensor) -> Result<Phase> {
        let acl = self
            .acl
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no code learner", self.kind)))?;
        let enc = &self.require(NetId::Encoder)?.spec;
        let all: Vec<NetId> = self.networks().iter().map(|(id, _)| *id).collect();
        let mut p = self.place(&all);
        let e = p.vars(NetId::Encoder).clone();
        let gz = p.vars(NetId::CodeGenerator).clone();
        let dc = p.vars(NetId::CodeDiscriminator).clone();
        let xv = p.tape.constant(x.clone());
        let codes = forward(&mut p.tape, enc, &e, xv)?;
        let zv = p.tape.constant(z.clone());
        let fake = forward(&mut p.tape, &acl.generator.spec, &gz, zv)?;
        let ld = crate::acl::code_loss_discriminator(
            &mut p.tape,
            &acl.discriminator.spec,
            &dc,
            codes,
            fake,
        )?;
        let lg = crate::acl::code_loss_generator(&mut p.tape, &acl.discriminator.spec, &dc, fake)?;
        let value = p.tape.value(ld).item();
        let root = p.tape.add(ld, lg)?;
        p.finish(root, vec![(LossKind::Code, value)])
    }

    fn code_step<R: Rng + ?Sized>(&mut self, codes: &Tensor, rng: &mut R) -> Result<(f64, f64)> {
        let weight = self.code_weight();
        let acl = self.acl.as_mut().expect("acl kind");
        acl.options.weight = weight;
        let l = acl_step(acl, codes, rng)?;
        Ok((l.d_loss, l.g_loss))
    }

    fn penalty_weights<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> Option<Vec<f64>> {
        (self.options.gp_weight > 0.0).then(|| interpolation_weights(rows, rng))
    }

    /// One step of whatever this bundle's kind trains.
    pub fn step<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<StepLosses> {
        let x = &batch.samples;
        let losses = match self.kind {
            ModelKind::AclAe => self.acl_ae_step(x, rng)?,
            ModelKind::AclGan | ModelKind::AclGanGp => self.acl_gan_step(x, rng)?,
            ModelKind::AclSgan => {
                let labels = batch
                    .labels
                    .as_deref()
                    .ok_or_else(|| Error::InvalidArgument("acl-sgan requires labels".into()))?;
                self.acl_sgan_step(x, labels, rng)?
            }
            ModelKind::Gan | ModelKind::GanGp => self.vanilla_gan_step(x, rng)?,
            ModelKind::Ae => self.vanilla_ae_step(x)?,
        };
        if !losses.all_finite() {
            return Err(Error::NonFinite {
                op: "training step",
            });
        }
        Ok(losses)
    }

    /// `L_E` update of E_x and G_x, then a code-learning step on the
    /// pre-update codes.
    pub fn acl_ae_step<R: Rng + ?Sized>(&mut self, x: &Tensor, rng: &mut R) -> Result<StepLosses> {
        let codes = self.require(NetId::Encoder)?.predict(x)?;
        let phase = self.autoencoder_phase(x)?;
        self.apply(&phase)?;
        let l_e = phase.loss(LossKind::Reconstruction).expect("present");
        let (l_z, l_zg) = self.code_step(&codes, rng)?;
        Ok(StepLosses {
            rec: Some(l_e),
            z: Some(l_z),
            z_gen: Some(l_zg),
            total: l_e + self.weights.lambda1 * l_z,
            ..Default::default()
        })
    }

    /// Codes `c = E_x(x_r)` and `c_f = G_z(z)` are computed with the
    /// pre-update parameters. D_x updates first on `x_r` against
    /// `x_ff = G_x(c_f)`, then E_x and G_x update against the new D_x, then
    /// the code learner updates on `c`.
    pub fn acl_gan_step<R: Rng + ?Sized>(
        &mut self,
        x_r: &Tensor,
        rng: &mut R,
    ) -> Result<StepLosses> {
        let codes = self.require(NetId::Encoder)?.predict(x_r)?;
        let acl = self.acl.as_ref().expect("acl kind");
        let z = sample_prior(&acl.prior, x_r.rows(), rng);
        let fake_codes = acl.generator.predict(&z)?;
        let u = self.penalty_weights(x_r.rows(), rng);

        let d_phase = self.discriminator_phase(x_r, &fake_codes, u.as_deref())?;
        self.apply(&d_phase)?;
        let g_phase = self.generator_phase(x_r, &fake_codes, !self.options.joint_update, true)?;
        self.apply(&g_phase)?;
        let (l_z, l_zg) = self.code_step(&codes, rng)?;

        let w = self.weights;
        let l_d = d_phase.loss(LossKind::Discriminator).expect("present");
        let gp = d_phase.loss(LossKind::Penalty);
        let l_g = g_phase.loss(LossKind::Generator);
        let l_r = g_phase.loss(LossKind::Reconstruction).expect("present");
        let total = w.lambda2 * l_r
            + w.lambda3 * (l_d + self.options.gp_weight * gp.unwrap_or(0.0) + l_g.unwrap_or(0.0))
            + w.lambda4 * l_z;
        Ok(StepLosses {
            rec: Some(l_r),
            d: Some(l_d),
            g: l_g,
            z: Some(l_z),
            z_gen: Some(l_zg),
            gp,
            cls: None,
            total,
        })
    }

    /// Classifier update, then the image GAN on codes from G_z, then a
    /// code-learning step whose targets are the pre-update trunk features.
    pub fn acl_sgan_step<R: Rng + ?Sized>(
        &mut self,
        x_r: &Tensor,
        labels: &[usize],
        rng: &mut R,
    ) -> Result<StepLosses> {
        let codes = self.require(NetId::Encoder)?.predict(x_r)?;
        let acl = self.acl.as_ref().expect("acl kind");
        let z = sample_prior(&acl.prior, x_r.rows(), rng);
        let fake_codes = acl.generator.predict(&z)?;
        let u = self.penalty_weights(x_r.rows(), rng);

        let c_phase = self.classifier_phase(x_r, labels)?;
        self.apply(&c_phase)?;
        let d_phase = self.discriminator_phase(x_r, &fake_codes, u.as_deref())?;
        self.apply(&d_phase)?;
        let rec = self.options.sgan_reconstruction;
        let adv = !self.options.joint_update;
        let g_phase = if adv || rec {
            let phase = self.generator_phase(x_r, &fake_codes, adv, rec)?;
            self.apply(&phase)?;
            Some(phase)
        } else {
            None
        };
        let (l_z, l_zg) = self.code_step(&codes, rng)?;

        let l_cls = c_phase.loss(LossKind::Classifier).expect("present");
        let l_d = d_phase.loss(LossKind::Discriminator).expect("present");
        let gp = d_phase.loss(LossKind::Penalty);
        let l_g = g_phase.as_ref().and_then(|p| p.loss(LossKind::Generator));
        let l_r = g_phase
            .as_ref()
            .and_then(|p| p.loss(LossKind::Reconstruction));
        let total = l_cls
            + l_d
            + self.options.gp_weight * gp.unwrap_or(0.0)
            + l_g.unwrap_or(0.0)
            + self.weights.lambda2 * l_r.unwrap_or(0.0)
            + self.weights.lambda4 * l_z;
        Ok(StepLosses {
            rec: l_r,
            d: Some(l_d),
            g: l_g,
            z: Some(l_z),
            z_gen: Some(l_zg),
            gp,
            cls: Some(l_cls),
            total,
        })
    }

    /// Standard GAN step with G_x fed prior noise directly.
    pub fn vanilla_gan_step<R: Rng + ?Sized>(
        &mut self,
        x_r: &Tensor,
        rng: &mut R,
    ) -> Result<StepLosses> {
        let z = sample_prior(&self.arch.prior, x_r.rows(), rng);
        let u = self.penalty_weights(x_r.rows(), rng);
        let d_phase = self.discriminator_phase(x_r, &z, u.as_deref())?;
        self.apply(&d_phase)?;
        let l_d = d_phase.loss(LossKind::Discriminator).expect("present");
        let gp = d_phase.loss(LossKind::Penalty);
        let l_g = if self.options.joint_update {
            None
        } else {
            let g_phase = self.generator_phase(x_r, &z, true, false)?;
            self.apply(&g_phase)?;
            g_phase.loss(LossKind::Generator)
        };
        Ok(StepLosses {
            d: Some(l_d),
            g: l_g,
            gp,
            total: l_d + self.options.gp_weight * gp.unwrap_or(0.0) + l_g.unwrap_or(0.0),
            ..Default::default()
        })
    }

    /// Plain autoencoder step on `L_E`.
    pub fn vanilla_ae_step(&mut self, x: &Tensor) -> Result<StepLosses> {
        let phase = self.autoencoder_phase(x)?;
        self.apply(&phase)?;
        let l_e = phase.loss(LossKind::Reconstruction).expect("present");
        Ok(StepLosses {
            rec: Some(l_e),
            total: l_e,
            ..Default::default()
        })
    }

    /// Generator inputs for `n` samples: `G_z(z)` for the ACL kinds, raw
    /// prior noise otherwise.
    pub fn sample_codes<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Tensor> {
        match &self.acl {
            Some(acl) => acl.generate_codes(n, rng),
            None => Ok(sample_prior(&self.arch.prior, n, rng)),
        }
    }

    /// `n` samples `G_x(G_z(z))` (or `G_x(z)` without a code learner),
    /// clipped to [−1, 1] for bounded data.
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Tensor> {
        if n == 0 {
            return Ok(Tensor::zeros(&[0, self.arch.data_dim]));
        }
        let codes = self.sample_codes(n, rng)?;
        let x = self.generator.predict(&codes)?;
        Ok(self.clip(x))
    }

    fn clip(&self, x: Tensor) -> Tensor {
        if self.arch.bounded {
            x.map(|v| v.clamp(-1.0, 1.0))
        } else {
            x
        }
    }

    /// `E_x(x)`; requires an encoder kind.
    pub fn encode(&self, x: &Tensor) -> Result<Tensor> {
        if !self.kind.has_encoder() {
            return Err(Error::InvalidArgument(format!(
                "{} has no encoder",
                self.kind
            )));
        }
        self.require(NetId::Encoder)?.predict(x)
    }

    /// `G_x(c)`, clipped for bounded data.
    pub fn decode(&self, codes: &Tensor) -> Result<Tensor> {
        Ok(self.clip(self.generator.predict(codes)?))
    }

    pub fn reconstruct(&self, x: &Tensor) -> Result<Tensor> {
        self.decode(&self.encode(x)?)
    }

    /// Strip of `steps + 2` rows: `x_a`, the decodings of
    /// `(1 − α)·E_x(x_a) + α·E_x(x_b)` for `α = 0, 1/(steps − 1), …, 1`, and `x_b`.
    pub fn interpolate(&self, x_a: &[f64], x_b: &[f64], steps: usize) -> Result<Tensor> {
        if steps < 2 {
            return Err(Error::InvalidArgument(
                "interpolation needs at least 2 steps".into(),
            ));
        }
        let d = self.arch.data_dim;
        if x_a.len() != d || x_b.len() != d {
            return Err(Error::Shape {
                op: "interpolate",
                left: vec![x_a.len(), x_b.len()],
                right: vec![d],
            });
        }
        let c_a = self.encode(&Tensor::matrix(1, d, x_a.to_vec())?)?;
        let c_b = self.encode(&Tensor::matrix(1, d, x_b.to_vec())?)?;
        let mut rows = vec![x_a.to_vec()];
        for i in 0..steps {
            let alpha = i as f64 / (steps - 1) as f64;
            let code = interpolate_codes(c_a.data(), c_b.data(), alpha);
            let frame = self.decode(&Tensor::matrix(1, code.len(), code)?)?;
            rows.push(frame.into_data());
        }
        rows.push(x_b.to_vec());
        Tensor::from_rows(&rows)
    }
}

/// `(1 − α)·a + α·b`, exact at both ends.
pub fn interpolate_codes(a: &[f64], b: &[f64], alpha: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (1.0 - alpha) * x + alpha * y)
        .collect()
}

fn rev(h: &[usize]) -> Vec<usize> {
    h.iter().rev().copied().collect()
}

#[cfg(test)]
mod tests;
