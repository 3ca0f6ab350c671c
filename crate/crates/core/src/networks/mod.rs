//! Multi-layer perceptrons: declarative specs, parameters, and taped forward
//! passes for every network role in the assemblies.

mod checkpoint;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{AdamConfig, AdamState, Gradients, Tape, Tensor, Var, PROB_EPS};

pub use checkpoint::{
    read_checkpoint, read_params, write_checkpoint, write_params, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};

/// Slope of the leaky ReLU used by the default templates.
pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Linear,
    Relu,
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
}

impl Activation {
    fn apply(self, tape: &mut Tape, x: Var) -> Result<Var> {
        match self {
            Activation::Linear => Ok(x),
            Activation::Relu => tape.relu(x),
            Activation::LeakyRelu(slope) => tape.leaky_relu(x, slope),
            Activation::Tanh => tape.tanh(x),
            Activation::Sigmoid => tape.sigmoid(x),
        }
    }

    /// Elementwise derivative as a tape expression, given the pre-activation
    /// and activation nodes. `None` means the derivative is identically 1.
    fn derivative(self, tape: &mut Tape, pre: Var, post: Var) -> Result<Option<Var>> {
        Ok(Some(match self {
            Activation::Linear => return Ok(None),
            Activation::Relu => tape.leaky_relu_slope(pre, 0.0)?,
            Activation::LeakyRelu(slope) => tape.leaky_relu_slope(pre, slope)?,
            Activation::Tanh => {
                let sq = tape.square(post)?;
                let neg = tape.neg(sq)?;
                tape.add_scalar(neg, 1.0)?
            }
            Activation::Sigmoid => {
                let sq = tape.square(post)?;
                tape.sub(post, sq)?
            }
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    ImageEncoder,
    ImageGenerator,
    ImageDiscriminator,
    CodeGenerator,
    CodeDiscriminator,
    Classifier,
}

impl Role {
    pub fn is_discriminator(self) -> bool {
        matches!(self, Role::ImageDiscriminator | Role::CodeDiscriminator)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub role: Role,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(role: Role, layers: Vec<LayerSpec>) -> Result<Self> {
        let spec = Self { role, layers };
        spec.validate()?;
        Ok(spec)
    }

    /// `input → hidden[0] → … → output`, hidden layers sharing one activation.
    pub fn mlp(
        role: Role,
        input: usize,
        hidden: &[usize],
        output: usize,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        let dims: Vec<usize> = std::iter::once(input)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(output))
            .collect();
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                in_dim: w[0],
                out_dim: w[1],
                activation: if i == last {
                    output_activation
                } else {
                    hidden_activation
                },
            })
            .collect();
        Self::new(role, layers)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Network(format!("{:?} has no layers", self.role)));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(Error::Network(format!(
                    "{:?} layer {i} has a zero dimension",
                    self.role
                )));
            }
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Network(format!(
                    "{:?} layer {i} outputs {} but layer {} expects {}",
                    self.role,
                    pair[0].out_dim,
                    i + 1,
                    pair[1].in_dim
                )));
            }
        }
        if matches!(self.role, Role::CodeGenerator | Role::CodeDiscriminator)
            && self.layers.len() != 3
        {
            return Err(Error::Network(format!(
                "{:?} must have exactly 2 hidden layers, got {}",
                self.role,
                self.layers.len() - 1
            )));
        }
        if self.role.is_discriminator() {
            let last = self.layers.last().expect("non-empty");
            if last.out_dim != 1 || last.activation != Activation::Sigmoid {
                return Err(Error::Network(format!(
                    "{:?} must end in a single sigmoid unit",
                    self.role
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("validated spec").out_dim
    }

    pub fn encoder(data_dim: usize, hidden: &[usize], code_dim: usize) -> Result<Self> {
        let act = Activation::LeakyRelu(LEAKY_SLOPE);
        Self::mlp(
            Role::ImageEncoder,
            data_dim,
            hidden,
            code_dim,
            act,
            Activation::Linear,
        )
    }

    /// Decoder/generator. `bounded` selects a tanh output for pixel data in
    /// [−1, 1]; unbounded data (2-D synthetic points) uses a linear output.
    pub fn generator(
        code_dim: usize,
        hidden: &[usize],
        data_dim: usize,
        bounded: bool,
    ) -> Result<Self> {
        let act = Activation::LeakyRelu(LEAKY_SLOPE);
        let out = if bounded {
            Activation::Tanh
        } else {
            Activation::Linear
        };
        Self::mlp(Role::ImageGenerator, code_dim, hidden, data_dim, act, out)
    }

    pub fn discriminator(data_dim: usize, hidden: &[usize]) -> Result<Self> {
        let act = Activation::LeakyRelu(LEAKY_SLOPE);
        Self::mlp(
            Role::ImageDiscriminator,
            data_dim,
            hidden,
            1,
            act,
            Activation::Sigmoid,
        )
    }

    pub fn code_generator(prior_dim: usize, width: usize, code_dim: usize) -> Result<Self> {
        let act = Activation::LeakyRelu(LEAKY_SLOPE);
        Self::mlp(
            Role::CodeGenerator,
            prior_dim,
            &[width, width],
            code_dim,
            act,
            Activation::Linear,
        )
    }

    pub fn code_discriminator(code_dim: usize, width: usize) -> Result<Self> {
        let act = Activation::LeakyRelu(LEAKY_SLOPE);
        Self::mlp(
            Role::CodeDiscriminator,
            code_dim,
            &[width, width],
            1,
            act,
            Activation::Sigmoid,
        )
    }

    /// Feature trunk of a classifier; its output is the code layer.
    pub fn classifier_trunk(data_dim: usize, hidden: &[usize], code_dim: usize) -> Result<Self> {
        let act = Activation::LeakyRelu(LEAKY_SLOPE);
        Self::mlp(
            Role::Classifier,
            data_dim,
            hidden,
            code_dim,
            act,
            Activation::Linear,
        )
    }

    /// Linear map from the code layer to class logits.
    pub fn classifier_head(code_dim: usize, classes: usize) -> Result<Self> {
        Self::mlp(
            Role::Classifier,
            code_dim,
            &[],
            classes,
            Activation::Linear,
            Activation::Linear,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    /// `[in_dim × out_dim]`
    pub weight: Tensor,
    /// `[out_dim]`
    pub bias: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub layers: Vec<LayerParams>,
}

impl ParamSet {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let layers = spec
            .layers
            .iter()
            .map(|l| LayerParams {
                weight: Tensor::zeros(&[l.in_dim, l.out_dim]),
                bias: Tensor::zeros(&[l.out_dim]),
            })
            .collect();
        Self { layers }
    }

    /// Weights and biases interleaved: `w0, b0, w1, b1, …`.
    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
    }

    pub fn num_values(&self) -> usize {
        self.tensors().map(Tensor::len).sum()
    }

    pub fn matches(&self, spec: &NetworkSpec) -> bool {
        self.layers.len() == spec.layers.len()
            && self.layers.iter().zip(&spec.layers).all(|(p, l)| {
                p.weight.shape() == [l.in_dim, l.out_dim] && p.bias.shape() == [l.out_dim]
            })
    }
}

/// Glorot-uniform weights, zero biases. Deterministic in `seed`.
pub fn init_params(spec: &NetworkSpec, seed: u64) -> ParamSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = spec
        .layers
        .iter()
        .map(|l| {
            let limit = (6.0 / (l.in_dim + l.out_dim) as f64).sqrt();
            let data = (0..l.in_dim * l.out_dim)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            LayerParams {
                weight: Tensor::matrix(l.in_dim, l.out_dim, data).expect("dims"),
                bias: Tensor::zeros(&[l.out_dim]),
            }
        })
        .collect();
    ParamSet { layers }
}

/// A network's parameters placed on a tape.
#[derive(Clone, Debug)]
pub struct NetVars {
    layers: Vec<(Var, Var)>,
}

impl NetVars {
    /// Registers `params` as trainable leaves, or as constants when frozen.
    pub fn register(tape: &mut Tape, params: &ParamSet, trainable: bool) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|l| {
                if trainable {
                    (tape.param(l.weight.clone()), tape.param(l.bias.clone()))
                } else {
                    (
                        tape.constant(l.weight.clone()),
                        tape.constant(l.bias.clone()),
                    )
                }
            })
            .collect();
        Self { layers }
    }

    /// Wraps already-placed `(weight, bias)` leaves, one pair per layer.
    pub fn from_pairs(layers: Vec<(Var, Var)>) -> Self {
        Self { layers }
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.layers.iter().flat_map(|&(w, b)| [w, b])
    }

    /// Gradients in [`ParamSet::tensors`] order (zeros where unreached).
    pub fn gradients(&self, grads: &Gradients) -> Vec<Tensor> {
        self.vars().map(|v| grads.wrt(v)).collect()
    }
}

/// Intermediate nodes of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// Affine outputs, one per layer.
    pub pre_activations: Vec<Var>,
    /// Activated outputs, one per layer. The last entry is the network output.
    pub activations: Vec<Var>,
}

impl ForwardTrace {
    pub fn output(&self) -> Var {
        *self.activations.last().expect("non-empty trace")
    }

    pub fn logits(&self) -> Var {
        *self.pre_activations.last().expect("non-empty trace")
    }
}

pub fn forward_trace(
    tape: &mut Tape,
    spec: &NetworkSpec,
    vars: &NetVars,
    batch: Var,
) -> Result<ForwardTrace> {
    let width = tape.value(batch).cols();
    if tape.shape(batch).len() != 2 || width != spec.input_dim() {
        return Err(Error::Shape {
            op: "forward",
            left: tape.shape(batch).to_vec(),
            right: vec![spec.input_dim()],
        });
    }
    let mut pre_activations = Vec::with_capacity(spec.layers.len());
    let mut activations = Vec::with_capacity(spec.layers.len());
    let mut h = batch;
    for (i, (layer, &(w, b))) in spec.layers.iter().zip(&vars.layers).enumerate() {
        let z = tape.matmul(h, w)?;
        let z = tape.add_bias(z, b)?;
        let mut a = layer.activation.apply(tape, z)?;
        if spec.role.is_discriminator() && i + 1 == spec.layers.len() {
            a = tape.clamp(a, PROB_EPS, 1.0 - PROB_EPS)?;
        }
        pre_activations.push(z);
        activations.push(a);
        h = a;
    }
    Ok(ForwardTrace {
        pre_activations,
        activations,
    })
}

pub fn forward(tape: &mut Tape, spec: &NetworkSpec, vars: &NetVars, batch: Var) -> Result<Var> {
    Ok(forward_trace(tape, spec, vars, batch)?.output())
}

/// Φ: activation of the last hidden layer of an image discriminator.
pub fn feature_layer(
    tape: &mut Tape,
    spec: &NetworkSpec,
    vars: &NetVars,
    batch: Var,
) -> Result<Var> {
    if spec.role != Role::ImageDiscriminator {
        return Err(Error::Network(format!(
            "feature layer requires an image discriminator, got {:?}",
            spec.role
        )));
    }
    if spec.layers.len() < 2 {
        return Err(Error::Network("discriminator has no hidden layer".into()));
    }
    let trace = forward_trace(tape, spec, vars, batch)?;
    Ok(trace.activations[spec.layers.len() - 2])
}

/// Row-wise gradient of the network's pre-final-activation output with
/// respect to its input, built from differentiable tape operations so that
/// it can itself be differentiated (as the gradient penalty requires).
///
/// For a multi-output network this is the gradient of the row sum of the
/// final pre-activations.
pub fn input_gradient(
    tape: &mut Tape,
    spec: &NetworkSpec,
    vars: &NetVars,
    batch: Var,
) -> Result<Var> {
    let trace = forward_trace(tape, spec, vars, batch)?;
    let rows = tape.value(batch).rows();
    let mut g = tape.constant(Tensor::filled(&[rows, spec.output_dim()], 1.0));
    for l in (0..spec.layers.len()).rev() {
        let (w, _) = vars.layers[l];
        let wt = tape.transpose(w)?;
        g = tape.matmul(g, wt)?;
        if l > 0 {
            let act = spec.layers[l - 1].activation;
            if let Some(d) =
                act.derivative(tape, trace.pre_activations[l - 1], trace.activations[l - 1])?
            {
                g = tape.mul(g, d)?;
            }
        }
    }
    Ok(g)
}

/// Untaped forward pass for evaluation.
pub fn predict(spec: &NetworkSpec, params: &ParamSet, batch: &Tensor) -> Result<Tensor> {
    let mut tape = Tape::new();
    let vars = NetVars::register(&mut tape, params, false);
    let x = tape.constant(batch.clone());
    let y = forward(&mut tape, spec, &vars, x)?;
    Ok(tape.value(y).clone())
}

/// A network bundled with its optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    pub params: ParamSet,
    pub adam: AdamState,
}

impl Network {
    pub fn new(spec: NetworkSpec, seed: u64, adam: AdamConfig) -> Self {
        let params = init_params(&spec, seed);
        let state = AdamState::new(adam, params.tensors());
        Self {
            spec,
            params,
            adam: state,
        }
    }

    pub fn register(&self, tape: &mut Tape, trainable: bool) -> NetVars {
        NetVars::register(tape, &self.params, trainable)
    }

    pub fn apply_gradients(&mut self, grads: &[Tensor]) -> Result<()> {
        self.adam.step(self.params.tensors_mut(), grads)
    }

    pub fn predict(&self, batch: &Tensor) -> Result<Tensor> {
        predict(&self.spec, &self.params, batch)
    }

    /// Replaces the parameters, keeping the optimizer state fresh.
    pub fn load_params(&mut self, params: ParamSet) -> Result<()> {
        if !params.matches(&self.spec) {
            return Err(Error::Network(format!(
                "checkpoint parameters do not match the {:?} architecture",
                self.spec.role
            )));
        }
        self.adam = AdamState::new(self.adam.config, params.tensors());
        self.params = params;
        Ok(())
    }
}
