use std::ops::Index;

use indexmap::IndexMap;
use rand::Rng;

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Stable position of a parameter inside its [`ParameterSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

/// Named trainable arrays of one network, in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterSet {
    entries: IndexMap<String, Tensor>,
}

/// Tape handles for every parameter of a set, valid for one forward pass.
#[derive(Clone, Debug)]
pub struct Bound(Vec<Var>);

impl Index<ParamId> for Bound {
    type Output = Var;

    fn index(&self, id: ParamId) -> &Var {
        &self.0[id.0]
    }
}

impl Bound {
    pub fn vars(&self) -> &[Var] {
        &self.0
    }
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, mut tensor: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::InvalidArgument(format!("duplicate parameter `{name}`")));
        }
        tensor.set_requires_grad(true);
        let (idx, _) = self.entries.insert_full(name, tensor);
        Ok(ParamId(idx))
    }

    /// Insert a parameter drawn uniformly from `[-bound, bound]`.
    pub fn insert_uniform(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        bound: f64,
        rng: &mut impl Rng,
    ) -> Result<ParamId> {
        let n = shape.iter().product();
        let data = (0..n)
            .map(|_| if bound > 0.0 { rng.gen_range(-bound..=bound) } else { 0.0 })
            .collect();
        self.insert(name, Tensor::new(shape.to_vec(), data)?)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.entries.get_index_of(name).map(ParamId)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.get_mut(name)
    }

    pub fn by_id(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0]
    }

    pub fn by_id_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_params(&self) -> usize {
        self.entries.values().map(Tensor::numel).sum()
    }

    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound(self.entries.values().map(|t| tape.leaf(t)).collect())
    }

    /// Copy of the set whose leaves are constants on the tape.
    pub fn bind_frozen(&self, tape: &mut Tape) -> Bound {
        Bound(
            self.entries
                .values()
                .map(|t| {
                    tape.constant(t.shape(), t.data().to_vec())
                        .expect("parameter shape is consistent")
                })
                .collect(),
        )
    }

    /// Add the tape gradients of a bound pass into the parameters. Parameters
    /// the loss never reached receive an explicit zero gradient.
    pub fn accumulate_grads(&mut self, tape: &Tape, bound: &Bound) {
        for (t, &v) in self.entries.values_mut().zip(bound.vars()) {
            match tape.grad(v) {
                Some(g) => t.accumulate_grad(g),
                None => {
                    let zeros = vec![0.0; t.numel()];
                    t.accumulate_grad(&zeros);
                }
            }
        }
    }

    pub fn zero_grad(&mut self) {
        self.entries.values_mut().for_each(Tensor::zero_grad);
    }

    /// Check that `other` has the same names and shapes, in the same order.
    pub fn check_same_layout(&self, other: &ParameterSet) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::ParameterMismatch(format!(
                "{} vs {} entries",
                self.len(),
                other.len()
            )));
        }
        for ((na, ta), (nb, tb)) in self.iter().zip(other.iter()) {
            if na != nb {
                return Err(Error::ParameterMismatch(format!("`{na}` vs `{nb}`")));
            }
            if ta.shape() != tb.shape() {
                return Err(Error::ParameterMismatch(format!(
                    "`{na}` shaped {:?} vs {:?}",
                    ta.shape(),
                    tb.shape()
                )));
            }
        }
        Ok(())
    }

    /// Flat copy of all parameter values, in order.
    pub fn flatten(&self) -> Vec<f64> {
        self.entries
            .values()
            .flat_map(|t| t.data().iter().copied())
            .collect()
    }
}
