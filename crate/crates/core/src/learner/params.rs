use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense affine map `y = W x + b` with `W` of shape `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<T = f64> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn zeros(input: usize, output: usize) -> Self {
        Linear {
            weight: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    /// Uniform `±√(6/fan_in)` weights, zero bias.
    fn init(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / input.max(1) as f64).sqrt();
        Linear {
            weight: Array2::from_shape_fn((output, input), |_| T::of(rng.random_range(-bound..bound))),
            bias: Array1::zeros(output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }
}

/// Parameters of the learned cost: message-passing layers producing node
/// embeddings and a two-layer insertion/deletion head.
#[derive(Clone, Debug, PartialEq)]
pub struct CostModelParams<T = f64> {
    pub gnn_layers: Vec<Linear<T>>,
    pub insdel_hidden: Linear<T>,
    pub insdel_out: Linear<T>,
    /// Self-loop weight of the sum aggregation; held at zero and never trained.
    pub epsilon_gin: T,
}

/// Derivative of a loss with respect to every trainable tensor of [`CostModelParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient<T = f64>(pub CostModelParams<T>);

impl<T: Scalar> CostModelParams<T> {
    pub fn init(input_dim: usize, hidden_dim: usize, layers: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gnn_layers = Vec::with_capacity(layers);
        let mut width = input_dim;
        for _ in 0..layers {
            gnn_layers.push(Linear::init(width, hidden_dim, &mut rng));
            width = hidden_dim;
        }
        CostModelParams {
            gnn_layers,
            insdel_hidden: Linear::init(width, hidden_dim, &mut rng),
            insdel_out: Linear::init(hidden_dim, 1, &mut rng),
            epsilon_gin: T::zero(),
        }
    }

    /// Same shapes as `self`, all zeros.
    pub fn zeros_like(&self) -> Self {
        let z = |l: &Linear<T>| Linear::zeros(l.input_dim(), l.output_dim());
        CostModelParams {
            gnn_layers: self.gnn_layers.iter().map(z).collect(),
            insdel_hidden: z(&self.insdel_hidden),
            insdel_out: z(&self.insdel_out),
            epsilon_gin: T::zero(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.gnn_layers.first().map_or(self.insdel_hidden.input_dim(), Linear::input_dim)
    }

    pub fn embedding_dim(&self) -> usize {
        self.gnn_layers.last().map_or(self.input_dim(), Linear::output_dim)
    }

    pub fn validate(&self) -> Result<()> {
        let mut width = self.input_dim();
        for (l, layer) in self.gnn_layers.iter().enumerate() {
            if layer.input_dim() != width || layer.bias.len() != layer.output_dim() {
                return Err(Error::DimensionMismatch(format!("gnn layer {l} does not chain")));
            }
            width = layer.output_dim();
        }
        if self.insdel_hidden.input_dim() != width
            || self.insdel_out.input_dim() != self.insdel_hidden.output_dim()
            || self.insdel_out.output_dim() != 1
        {
            return Err(Error::DimensionMismatch("insertion/deletion head does not chain".into()));
        }
        if self.tensors().iter().any(|(_, t)| t.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite { stage: "parameters" });
        }
        Ok(())
    }

    /// Named views of every trainable tensor in a fixed order.
    pub fn tensors(&self) -> Vec<(String, Vec<T>)> {
        let mut out = Vec::new();
        let mut push = |name: String, l: &Linear<T>| {
            out.push((format!("{name}.weight"), l.weight.iter().copied().collect()));
            out.push((format!("{name}.bias"), l.bias.to_vec()));
        };
        for (i, l) in self.gnn_layers.iter().enumerate() {
            push(format!("gnn.{i}"), l);
        }
        push("insdel.0".into(), &self.insdel_hidden);
        push("insdel.1".into(), &self.insdel_out);
        out
    }

    fn linears(&self) -> impl Iterator<Item = &Linear<T>> {
        self.gnn_layers.iter().chain([&self.insdel_hidden, &self.insdel_out])
    }

    fn linears_mut(&mut self) -> impl Iterator<Item = &mut Linear<T>> {
        self.gnn_layers
            .iter_mut()
            .chain([&mut self.insdel_hidden, &mut self.insdel_out])
    }

    pub fn len(&self) -> usize {
        self.linears().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        for l in self.linears() {
            out.extend(l.weight.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    /// Overwrites every trainable value from `flat`, in [`CostModelParams::flatten`] order.
    pub fn assign_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                self.len()
            )));
        }
        let mut it = flat.iter().copied();
        for l in self.linears_mut() {
            l.weight.iter_mut().chain(l.bias.iter_mut()).for_each(|x| *x = it.next().unwrap());
        }
        Ok(())
    }

    /// Softplus output of the insertion/deletion head for one embedding.
    pub fn insdel_cost(&self, h: ArrayView1<'_, T>) -> T {
        let hidden = (self.insdel_hidden.weight.dot(&h) + &self.insdel_hidden.bias).mapv(|z| z.max(T::zero()));
        let z = self.insdel_out.weight.row(0).dot(&hidden) + self.insdel_out.bias[0];
        z.softplus()
    }
}

impl<T: Scalar> Gradient<T> {
    pub fn zeros_for(params: &CostModelParams<T>) -> Self {
        Gradient(params.zeros_like())
    }

    pub fn flatten(&self) -> Vec<T> {
        self.0.flatten()
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|x| x.is_finite())
    }
}
