use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{Bound, ParamId, ParameterSet};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Self::Identity => x,
            Self::Tanh => tape.tanh(x),
            Self::Relu => tape.relu(x),
            Self::Sigmoid => tape.sigmoid(x),
        }
    }
}

#[derive(Clone, Debug)]
struct Layer {
    weight: ParamId,
    bias: ParamId,
    fan_in: usize,
}

/// Affine/activation stack with a linear (or chosen) output layer. Weights
/// are stored `[in, out]` so a batch `[B, in]` maps with one matmul.
#[derive(Clone, Debug)]
pub struct Mlp {
    layers: Vec<Layer>,
    hidden: Activation,
    output: Activation,
}

impl Mlp {
    /// Register the layers `sizes[0] -> ... -> sizes[last]` under `prefix`,
    /// initialized uniform in ±1/√fan_in.
    pub fn new(
        params: &mut ParameterSet,
        prefix: &str,
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "mlp `{prefix}` needs at least two positive sizes, got {sizes:?}"
            )));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for (l, w) in sizes.windows(2).enumerate() {
            let bound = 1.0 / (w[0] as f64).sqrt();
            let weight = params.insert_uniform(format!("{prefix}.l{l}.w"), &[w[0], w[1]], bound, rng)?;
            let bias = params.insert_uniform(format!("{prefix}.l{l}.b"), &[w[1]], bound, rng)?;
            layers.push(Layer {
                weight,
                bias,
                fan_in: w[0],
            });
        }
        Ok(Self {
            layers,
            hidden,
            output,
        })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn output_width(&self, params: &ParameterSet) -> usize {
        let last = self.layers.last().expect("mlp has layers");
        params.by_id(last.bias).numel()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var> {
        let width = tape.shape(x).last().copied().unwrap_or(0);
        if tape.shape(x).len() != 2 || width != self.input_width() {
            return Err(Error::ShapeMismatch {
                op: "mlp",
                left: tape.shape(x).to_vec(),
                right: vec![self.input_width()],
            });
        }
        let mut h = x;
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            h = tape.matmul(h, bound[layer.weight])?;
            h = tape.add(h, bound[layer.bias])?;
            let act = if l == last { self.output } else { self.hidden };
            h = act.apply(tape, h);
        }
        Ok(h)
    }

    /// Gradient of the summed scalar output with respect to the input rows,
    /// expressed in tape operations so that it can itself be differentiated
    /// with respect to the parameters. Requires a single output unit.
    pub fn input_gradient(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var> {
        let rows = tape.shape(x)[0];
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x;
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = tape.matmul(h, bound[layer.weight])?;
            let z = tape.add(z, bound[layer.bias])?;
            let act = if l == last { self.output } else { self.hidden };
            pre.push((z, act));
            h = act.apply(tape, z);
        }
        let out_w = tape.shape(h)[1];
        if out_w != 1 {
            return Err(Error::InvalidArgument(format!(
                "input gradient needs a scalar head, got width {out_w}"
            )));
        }
        let mut g = tape.constant(&[rows, 1], vec![1.0; rows])?;
        for (layer, (z, act)) in self.layers.iter().zip(pre).rev() {
            let d = activation_derivative(tape, act, z)?;
            g = tape.mul(g, d)?;
            let w = bound[layer.weight];
            let wt = transpose(tape, w)?;
            g = tape.matmul(g, wt)?;
        }
        Ok(g)
    }
}

fn activation_derivative(tape: &mut Tape, act: Activation, z: Var) -> Result<Var> {
    let shape = tape.shape(z).to_vec();
    Ok(match act {
        Activation::Identity => tape.constant(&shape, vec![1.0; shape.iter().product()])?,
        Activation::Relu => {
            // Piecewise-constant: zero derivative with respect to z.
            let mask = tape.value(z).iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
            tape.constant(&shape, mask)?
        }
        Activation::Tanh => {
            let y = tape.tanh(z);
            let y2 = tape.square(y);
            tape.affine(y2, -1.0, 1.0)
        }
        Activation::Sigmoid => {
            let y = tape.sigmoid(z);
            let one_minus = tape.affine(y, -1.0, 1.0);
            tape.mul(y, one_minus)?
        }
    })
}

/// Differentiable transpose of a 2-D node, as a gather over its flattened entries.
fn transpose(tape: &mut Tape, w: Var) -> Result<Var> {
    let shape = tape.shape(w).to_vec();
    let (r, c) = (shape[0], shape[1]);
    let flat = tape.reshape(w, &[r * c, 1])?;
    let index: std::rc::Rc<[usize]> = (0..c).flat_map(|j| (0..r).map(move |i| i * c + j)).collect();
    let g = tape.gather_rows(flat, index)?;
    tape.reshape(g, &[c, r])
}
