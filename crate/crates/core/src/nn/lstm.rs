use rand::Rng;

use super::params::{Bound, ParamId, ParameterSet};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

/// Single LSTM cell. Gate blocks in the fused weight are ordered
/// input, forget, candidate, output.
#[derive(Clone, Debug)]
pub struct LstmCell {
    weight: ParamId,
    bias: ParamId,
    input: usize,
    hidden: usize,
}

impl LstmCell {
    /// Uniform ±1/√(input+hidden) init with the forget-gate bias set to +1.
    pub fn new(
        params: &mut ParameterSet,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let fan_in = input + hidden;
        let bound = 1.0 / (fan_in as f64).sqrt();
        let weight = params.insert_uniform(format!("{prefix}.w"), &[fan_in, 4 * hidden], bound, rng)?;
        let bias = params.insert_uniform(format!("{prefix}.b"), &[4 * hidden], bound, rng)?;
        let b = params.by_id_mut(bias).data_mut();
        b[hidden..2 * hidden].iter_mut().for_each(|x| *x = 1.0);
        Ok(Self {
            weight,
            bias,
            input,
            hidden,
        })
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn input_size(&self) -> usize {
        self.input
    }

    /// One step over a batch: `x [B, input]`, `h, c [B, hidden]` → `(h', c')`.
    pub fn step(&self, tape: &mut Tape, bound: &Bound, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let rows = tape.shape(x)[0];
        for (v, w) in [(x, self.input), (h, self.hidden), (c, self.hidden)] {
            if tape.shape(v) != [rows, w] {
                return Err(Error::ShapeMismatch {
                    op: "lstm_step",
                    left: tape.shape(v).to_vec(),
                    right: vec![rows, w],
                });
            }
        }
        let xh = tape.concat(&[x, h], 1)?;
        let z = tape.matmul(xh, bound[self.weight])?;
        let z = tape.add(z, bound[self.bias])?;
        let hs = self.hidden;
        let gi = tape.narrow(z, 1, 0, hs)?;
        let gf = tape.narrow(z, 1, hs, hs)?;
        let gg = tape.narrow(z, 1, 2 * hs, hs)?;
        let go = tape.narrow(z, 1, 3 * hs, hs)?;
        let i = tape.sigmoid(gi);
        let f = tape.sigmoid(gf);
        let g = tape.tanh(gg);
        let o = tape.sigmoid(go);
        let fc = tape.mul(f, c)?;
        let ig = tape.mul(i, g)?;
        let c_next = tape.add(fc, ig)?;
        let tc = tape.tanh(c_next);
        let h_next = tape.mul(o, tc)?;
        Ok((h_next, c_next))
    }
}
