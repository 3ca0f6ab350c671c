//! The adversarial code learner: a code generator mapping prior noise into a
//! target code space and a code discriminator telling generated codes apart
//! from target codes.
//!
//! The target codes (encoder outputs, classifier features) are always taken
//! as constants here; no gradient reaches whatever produced them.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{sample_mixture, GaussianMixtureSpec};
use crate::error::{Error, Result};
use crate::networks::{forward, NetVars, Network, NetworkSpec};
use crate::numerics::{AdamConfig, Tape, Tensor, Var};

/// Hidden width of the code generator and code discriminator.
pub const DEFAULT_CODE_WIDTH: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum PriorKind {
    StandardNormal,
    GaussianMixture(GaussianMixtureSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriorSpec {
    pub kind: PriorKind,
    pub dim: usize,
}

impl PriorSpec {
    pub fn standard_normal(dim: usize) -> Self {
        Self {
            kind: PriorKind::StandardNormal,
            dim,
        }
    }

    /// 2-D mixture prior.
    pub fn mixture(spec: GaussianMixtureSpec) -> Self {
        Self {
            kind: PriorKind::GaussianMixture(spec),
            dim: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument(
                "prior dimension must be at least 1".into(),
            ));
        }
        if let PriorKind::GaussianMixture(spec) = &self.kind {
            spec.validate()?;
            if self.dim != 2 {
                return Err(Error::InvalidArgument("mixture priors are 2-D".into()));
            }
        }
        Ok(())
    }
}

/// `batch` i.i.d. prior draws as a `[batch × dim]` matrix.
pub fn sample_prior<R: Rng + ?Sized>(prior: &PriorSpec, batch: usize, rng: &mut R) -> Tensor {
    match &prior.kind {
        PriorKind::StandardNormal => {
            let data = (0..batch * prior.dim)
                .map(|_| StandardNormal.sample(rng))
                .collect();
            Tensor::matrix(batch, prior.dim, data).expect("sized")
        }
        PriorKind::GaussianMixture(spec) => sample_mixture(spec, batch, rng),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AclOptions {
    /// Discriminator updates per generator update.
    pub d_steps: usize,
    /// Multiplier on both code losses (λ1 in ACL-AE, λ4 in ACL-GAN).
    pub weight: f64,
    /// Literal joint descent of both networks on the discriminator loss.
    pub joint_update: bool,
}

impl Default for AclOptions {
    fn default() -> Self {
        Self {
            d_steps: 1,
            weight: 1.0,
            joint_update: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AclModule {
    pub prior: PriorSpec,
    /// G_z
    pub generator: Network,
    /// D_c
    pub discriminator: Network,
    pub options: AclOptions,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AclLosses {
    /// Discriminator-side code loss.
    pub d_loss: f64,
    /// Non-saturating generator loss.
    pub g_loss: f64,
}

impl AclModule {
    pub fn new(
        prior: PriorSpec,
        code_dim: usize,
        width: usize,
        seed: u64,
        adam: AdamConfig,
    ) -> Result<Self> {
        prior.validate()?;
        let gz = NetworkSpec::code_generator(prior.dim, width, code_dim)?;
        let dc = NetworkSpec::code_discriminator(code_dim, width)?;
        Ok(Self {
            generator: Network::new(gz, seed, adam),
            discriminator: Network::new(dc, seed.wrapping_add(1), adam),
            prior,
            options: AclOptions::default(),
        })
    }

    pub fn code_dim(&self) -> usize {
        self.generator.spec.output_dim()
    }

    /// `G_z(z)` for `n` fresh prior draws.
    pub fn generate_codes<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Tensor> {
        let z = sample_prior(&self.prior, n, rng);
        self.generator.predict(&z)
    }

    /// Discriminator gradients for one batch, without applying them.
    pub fn discriminator_phase(
        &self,
        target_codes: &Tensor,
        z: &Tensor,
    ) -> Result<(f64, Vec<Tensor>)> {
        let mut tape = Tape::new();
        let gz = self.generator.register(&mut tape, false);
        let zv = tape.constant(z.clone());
        let fake = forward(&mut tape, &self.generator.spec, &gz, zv)?;
        let real = tape.constant(target_codes.clone());
        let dc = self.discriminator.register(&mut tape, true);
        let loss = code_loss_discriminator(&mut tape, &self.discriminator.spec, &dc, real, fake)?;
        let scaled = tape.scale(loss, self.options.weight)?;
        let grads = tape.backward(scaled)?;
        Ok((tape.value(loss).item(), dc.gradients(&grads)))
    }

    /// Generator gradients for one batch, with the discriminator frozen.
    pub fn generator_phase(&self, z: &Tensor) -> Result<(f64, Vec<Tensor>)> {
        let mut tape = Tape::new();
        let gz = self.generator.register(&mut tape, true);
        let zv = tape.constant(z.clone());
        let fake = forward(&mut tape, &self.generator.spec, &gz, zv)?;
        let dc = self.discriminator.register(&mut tape, false);
        let loss = code_loss_generator(&mut tape, &self.discriminator.spec, &dc, fake)?;
        let scaled = tape.scale(loss, self.options.weight)?;
        let grads = tape.backward(scaled)?;
        Ok((tape.value(loss).item(), gz.gradients(&grads)))
    }

    /// Both networks descend the discriminator loss together.
    fn joint_phase(&mut self, target_codes: &Tensor, z: &Tensor) -> Result<f64> {
        let mut tape = Tape::new();
        let gz = self.generator.register(&mut tape, true);
        let zv = tape.constant(z.clone());
        let fake = forward(&mut tape, &self.generator.spec, &gz, zv)?;
        let real = tape.constant(target_codes.clone());
        let dc = self.discriminator.register(&mut tape, true);
        let d_out_real = forward(&mut tape, &self.discriminator.spec, &dc, real)?;
        let d_out_fake = forward(&mut tape, &self.discriminator.spec, &dc, fake)?;
        let lr = tape.bce_uniform(d_out_real, 1.0)?;
        let lf = tape.bce_uniform(d_out_fake, 0.0)?;
        let loss = tape.add(lr, lf)?;
        let scaled = tape.scale(loss, self.options.weight)?;
        let grads = tape.backward(scaled)?;
        self.generator.apply_gradients(&gz.gradients(&grads))?;
        self.discriminator.apply_gradients(&dc.gradients(&grads))?;
        Ok(tape.value(loss).item())
    }
}

/// `−(mean ln D_c(c) + mean ln(1 − D_c(c_f)))`.
///
/// Both code populations are detached first, so only the discriminator
/// variables can receive gradients.
pub fn code_loss_discriminator(
    tape: &mut Tape,
    dc_spec: &NetworkSpec,
    dc: &NetVars,
    real_codes: Var,
    fake_codes: Var,
) -> Result<Var> {
    if tape.shape(real_codes).get(1) != tape.shape(fake_codes).get(1) {
        return Err(Error::Shape {
            op: "code_loss_discriminator",
            left: tape.shape(real_codes).to_vec(),
            right: tape.shape(fake_codes).to_vec(),
        });
    }
    let real = tape.detach(real_codes);
    let fake = tape.detach(fake_codes);
    let p_real = forward(tape, dc_spec, dc, real)?;
    let p_fake = forward(tape, dc_spec, dc, fake)?;
    let l_real = tape.bce_uniform(p_real, 1.0)?;
    let l_fake = tape.bce_uniform(p_fake, 0.0)?;
    tape.add(l_real, l_fake)
}

/// Non-saturating generator loss `−mean ln D_c(G_z(z))`. Pass the
/// discriminator registered as frozen so only the generator trains.
pub fn code_loss_generator(
    tape: &mut Tape,
    dc_spec: &NetworkSpec,
    dc: &NetVars,
    fake_codes: Var,
) -> Result<Var> {
    if tape.shape(fake_codes).get(1) != Some(&dc_spec.input_dim()) {
        return Err(Error::Shape {
            op: "code_loss_generator",
            left: tape.shape(fake_codes).to_vec(),
            right: vec![dc_spec.input_dim()],
        });
    }
    let p_fake = forward(tape, dc_spec, dc, fake_codes)?;
    tape.bce_uniform(p_fake, 1.0)
}

/// One round of code learning against `target_codes`: `d_steps`
/// discriminator updates, then one generator update on fresh prior noise.
pub fn acl_step<R: Rng + ?Sized>(
    module: &mut AclModule,
    target_codes: &Tensor,
    rng: &mut R,
) -> Result<AclLosses> {
    if target_codes.cols() != module.code_dim() {
        return Err(Error::Shape {
            op: "acl_step",
            left: target_codes.shape().to_vec(),
            right: vec![module.code_dim()],
        });
    }
    let batch = target_codes.rows();
    if module.options.joint_update {
        let z = sample_prior(&module.prior, batch, rng);
        let d_loss = module.joint_phase(target_codes, &z)?;
        let z = sample_prior(&module.prior, batch, rng);
        let (g_loss, _) = module.generator_phase(&z)?;
        return Ok(AclLosses { d_loss, g_loss });
    }

    let mut d_loss = 0.0;
    for _ in 0..module.options.d_steps.max(1) {
        let z = sample_prior(&module.prior, batch, rng);
        let (loss, grads) = module.discriminator_phase(target_codes, &z)?;
        module.discriminator.apply_gradients(&grads)?;
        d_loss = loss;
    }
    let z = sample_prior(&module.prior, batch, rng);
    let (g_loss, grads) = module.generator_phase(&z)?;
    module.generator.apply_gradients(&grads)?;
    Ok(AclLosses { d_loss, g_loss })
}
