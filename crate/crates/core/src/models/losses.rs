//! Loss builders shared by the model steps. Each one records onto a tape and
//! returns the scalar loss node.

use rand::Rng;

use crate::error::{Error, Result};
use crate::networks::{feature_layer, forward, input_gradient, NetVars, Network, NetworkSpec};
use crate::numerics::{Tape, Tensor, Var};

/// Batch mean of per-row squared L2 norms of `a − b`.
fn mean_row_sq_dist(tape: &mut Tape, a: Var, b: Var) -> Result<Var> {
    let diff = tape.sub(a, b)?;
    let sq = tape.square(diff)?;
    let per_row = tape.sum_axis(sq, 1)?;
    tape.mean(per_row)
}

/// `L_E`: mean over the batch of `‖x − x̂‖²`.
pub fn reconstruction_loss(tape: &mut Tape, x: Var, reconstruction: Var) -> Result<Var> {
    mean_row_sq_dist(tape, x, reconstruction)
}

/// `L_R`: mean over the batch of `‖Φ(x_r) − Φ(x_f)‖²`, Φ being the last
/// hidden layer of the image discriminator.
pub fn feature_matching_loss(
    tape: &mut Tape,
    d_spec: &NetworkSpec,
    d: &NetVars,
    real: Var,
    fake: Var,
) -> Result<Var> {
    let phi_real = feature_layer(tape, d_spec, d, real)?;
    let phi_fake = feature_layer(tape, d_spec, d, fake)?;
    mean_row_sq_dist(tape, phi_real, phi_fake)
}

/// `−(mean ln D(x_r) + mean ln(1 − D(x_f)))`.
pub fn discriminator_loss(
    tape: &mut Tape,
    d_spec: &NetworkSpec,
    d: &NetVars,
    real: Var,
    fake: Var,
) -> Result<Var> {
    let p_real = forward(tape, d_spec, d, real)?;
    let p_fake = forward(tape, d_spec, d, fake)?;
    let l_real = tape.bce_uniform(p_real, 1.0)?;
    let l_fake = tape.bce_uniform(p_fake, 0.0)?;
    tape.add(l_real, l_fake)
}

/// Non-saturating generator loss `−mean ln D(x_f)`.
pub fn generator_loss(
    tape: &mut Tape,
    d_spec: &NetworkSpec,
    d: &NetVars,
    fake: Var,
) -> Result<Var> {
    let p_fake = forward(tape, d_spec, d, fake)?;
    tape.bce_uniform(p_fake, 1.0)
}

/// Row-wise `u·real + (1 − u)·fake`.
pub fn interpolates(real: &Tensor, fake: &Tensor, u: &[f64]) -> Result<Tensor> {
    if real.shape() != fake.shape() || u.len() != real.rows() {
        return Err(Error::Shape {
            op: "interpolates",
            left: real.shape().to_vec(),
            right: fake.shape().to_vec(),
        });
    }
    let mut out = real.clone();
    for (i, &t) in u.iter().enumerate() {
        for (o, &f) in out.row_mut(i).iter_mut().zip(fake.row(i)) {
            *o = t * *o + (1.0 - t) * f;
        }
    }
    Ok(out)
}

/// One `Uniform[0, 1)` mixing weight per row.
pub fn interpolation_weights<R: Rng + ?Sized>(rows: usize, rng: &mut R) -> Vec<f64> {
    (0..rows).map(|_| rng.random::<f64>()).collect()
}

/// Mean of `(‖∇_x̂ D_pre(x̂)‖₂ − 1)²` over the interpolates, where `D_pre`
/// is the discriminator before its output sigmoid.
pub fn gradient_penalty(
    tape: &mut Tape,
    d_spec: &NetworkSpec,
    d: &NetVars,
    real: &Tensor,
    fake: &Tensor,
    u: &[f64],
) -> Result<Var> {
    let x_hat = tape.constant(interpolates(real, fake, u)?);
    let g = input_gradient(tape, d_spec, d, x_hat)?;
    let sq = tape.square(g)?;
    let sq_norm = tape.sum_axis(sq, 1)?;
    let norm = tape.sqrt(sq_norm)?;
    let gap = tape.add_scalar(norm, -1.0)?;
    let gap_sq = tape.square(gap)?;
    tape.mean(gap_sq)
}

/// Value of the gradient penalty for a discriminator, drawing the
/// interpolation weights from `rng`.
pub fn gradient_penalty_value<R: Rng + ?Sized>(
    discriminator: &Network,
    real: &Tensor,
    fake: &Tensor,
    rng: &mut R,
) -> Result<f64> {
    let u = interpolation_weights(real.rows(), rng);
    let mut tape = Tape::new();
    let d = discriminator.register(&mut tape, false);
    let gp = gradient_penalty(&mut tape, &discriminator.spec, &d, real, fake, &u)?;
    Ok(tape.value(gp).item())
}
