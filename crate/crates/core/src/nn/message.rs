//! Node-to-edge and edge-to-node message passing on fully connected graphs.
//!
//! Node rows are laid out `[B * N, d]` (graph-major). Edge rows enumerate,
//! for each graph, every ordered pair `(i, j)` with `i != j`: sender `i`
//! outer, receiver `j` inner. Self pairs never appear, so aggregation at a
//! node only ever sees messages from its `N - 1` neighbors.

use std::rc::Rc;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct FullGraph {
    batch: usize,
    nodes: usize,
    senders: Rc<[usize]>,
    receivers: Rc<[usize]>,
}

impl FullGraph {
    pub fn new(batch: usize, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidArgument(format!(
                "message passing needs at least 2 nodes, got {nodes}"
            )));
        }
        let mut senders = Vec::with_capacity(batch * nodes * (nodes - 1));
        let mut receivers = Vec::with_capacity(senders.capacity());
        for b in 0..batch {
            for i in 0..nodes {
                for j in (0..nodes).filter(|&j| j != i) {
                    senders.push(b * nodes + i);
                    receivers.push(b * nodes + j);
                }
            }
        }
        Ok(Self {
            batch,
            nodes,
            senders: senders.into(),
            receivers: receivers.into(),
        })
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Ordered pairs per graph, `N (N - 1)`.
    pub fn pairs(&self) -> usize {
        self.nodes * (self.nodes - 1)
    }

    pub fn node_rows(&self) -> usize {
        self.batch * self.nodes
    }

    pub fn edge_rows(&self) -> usize {
        self.senders.len()
    }

    pub fn senders(&self) -> &Rc<[usize]> {
        &self.senders
    }

    pub fn receivers(&self) -> &Rc<[usize]> {
        &self.receivers
    }

    /// Position of the pair `(i, j)` within one graph's edge block.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j && i < self.nodes && j < self.nodes);
        i * (self.nodes - 1) + if j > i { j - 1 } else { j }
    }
}

/// `h_(i,j) = f_e([h_i, h_j, s_(i,j)])` for every ordered pair.
pub fn node_to_edge<F>(
    tape: &mut Tape,
    graph: &FullGraph,
    h_nodes: Var,
    edge_feats: Option<Var>,
    f_e: F,
) -> Result<Var>
where
    F: FnOnce(&mut Tape, Var) -> Result<Var>,
{
    if tape.shape(h_nodes).len() != 2 || tape.shape(h_nodes)[0] != graph.node_rows() {
        return Err(Error::ShapeMismatch {
            op: "node_to_edge",
            left: tape.shape(h_nodes).to_vec(),
            right: vec![graph.node_rows()],
        });
    }
    let hi = tape.gather_rows(h_nodes, graph.senders.clone())?;
    let hj = tape.gather_rows(h_nodes, graph.receivers.clone())?;
    let joined = match edge_feats {
        Some(s) => tape.concat(&[hi, hj, s], 1)?,
        None => tape.concat(&[hi, hj], 1)?,
    };
    f_e(tape, joined)
}

/// Sum of incoming edge rows per receiving node, `[B * N, d]`.
pub fn aggregate_incoming(tape: &mut Tape, graph: &FullGraph, h_edges: Var) -> Result<Var> {
    if tape.shape(h_edges).first() != Some(&graph.edge_rows()) {
        return Err(Error::ShapeMismatch {
            op: "edge_to_node",
            left: tape.shape(h_edges).to_vec(),
            right: vec![graph.edge_rows()],
        });
    }
    tape.scatter_add_rows(h_edges, graph.receivers.clone(), graph.node_rows())
}

/// `h_j = f_v([Σ_{i≠j} h_(i,j), s_j])` for every node.
pub fn edge_to_node<F>(
    tape: &mut Tape,
    graph: &FullGraph,
    h_edges: Var,
    node_feats: Option<Var>,
    f_v: F,
) -> Result<Var>
where
    F: FnOnce(&mut Tape, Var) -> Result<Var>,
{
    let agg = aggregate_incoming(tape, graph, h_edges)?;
    let joined = match node_feats {
        Some(s) => tape.concat(&[agg, s], 1)?,
        None => agg,
    };
    f_v(tape, joined)
}
