//! Reverse-mode automatic differentiation over the layer kernels.
//!
//! A [`Graph`] is an arena of [`ComputationNode`]s. Builder methods run the
//! forward pass eagerly, append a node holding the produced value plus
//! whatever the matching backward kernel needs (pool argmax, dropout mask,
//! LSTM activations), and return a [`NodeId`]. Creation order is a
//! topological order, so [`Graph::backward`] is a single reverse walk: it
//! seeds the loss gradient, pushes gradients from each node to its inputs,
//! frees the node's value and cache once consumed, and returns the gradients
//! of every trainable leaf.
//!
//! Gradient bookkeeping is skipped for subtrees that contain no trainable
//! leaf (`requires_grad` propagation), which avoids the input-gradient GEMMs
//! of the first layer during ordinary training.

use crate::error::{Error, Result};
use crate::nn::{self, Activation, DropoutMask, LstmCache, MaxPoolCache, Reduction};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Handle to a node inside one [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

/// Whether stochastic layers (dropout) are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

enum Op {
    Leaf,
    Conv1d {
        stride: usize,
    },
    MaxPool1d {
        window: usize,
        stride: usize,
        cache: MaxPoolCache,
    },
    Dense,
    Activation(Activation),
    Dropout {
        mask: DropoutMask,
    },
    Flatten,
    Lstm {
        return_sequence: bool,
        cache: Box<LstmCache>,
    },
    Bce {
        target: Tensor,
        reduction: Reduction,
        l2: f64,
    },
    /// Placeholder left behind once the backward walk has consumed a node.
    Freed,
}

/// One node of the computation graph: the forward value, the op that
/// produced it, and the ids of its operands.
pub struct ComputationNode {
    op: Op,
    inputs: Vec<NodeId>,
    value: Tensor,
    requires_grad: bool,
}

/// Gradients of the trainable leaves, indexed by [`NodeId`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Removes and returns the gradient for `id`, if any was produced.
    pub fn take(&mut self, id: NodeId) -> Option<Tensor> {
        self.grads.get_mut(id.0).and_then(|g| g.take())
    }
}

/// Arena-based computation graph for one forward/backward pass.
pub struct Graph {
    nodes: Vec<ComputationNode>,
    mode: Mode,
}

impl Graph {
    pub fn new(mode: Mode) -> Self {
        Graph {
            nodes: Vec::new(),
            mode,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a node.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Non-trainable leaf (network input, constants).
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push_leaf(value, false)
    }

    /// Trainable leaf; [`Graph::backward`] reports its gradient.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.push_leaf(value, true)
    }

    fn push_leaf(&mut self, value: Tensor, requires_grad: bool) -> NodeId {
        self.push_node(Op::Leaf, Vec::new(), value, requires_grad)
    }

    fn push_node(
        &mut self,
        op: Op,
        inputs: Vec<NodeId>,
        value: Tensor,
        requires_grad: bool,
    ) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(ComputationNode {
            op,
            inputs,
            value,
            requires_grad,
        });
        id
    }

    fn any_requires_grad(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].requires_grad)
    }

    /// Temporal convolution node; see [`nn::conv1d`].
    pub fn conv1d(
        &mut self,
        input: NodeId,
        kernels: NodeId,
        bias: NodeId,
        stride: usize,
    ) -> Result<NodeId> {
        let value = nn::conv1d(
            self.value(input),
            self.value(kernels),
            self.value(bias),
            stride,
        )?;
        let ids = vec![input, kernels, bias];
        let rg = self.any_requires_grad(&ids);
        Ok(self.push_node(Op::Conv1d { stride }, ids, value, rg))
    }

    /// Temporal max-pooling node; see [`nn::maxpool1d`].
    pub fn maxpool1d(&mut self, input: NodeId, window: usize, stride: usize) -> Result<NodeId> {
        let (value, cache) = nn::maxpool1d(self.value(input), window, stride)?;
        let rg = self.nodes[input.0].requires_grad;
        Ok(self.push_node(
            Op::MaxPool1d {
                window,
                stride,
                cache,
            },
            vec![input],
            value,
            rg,
        ))
    }

    /// Fully-connected node; see [`nn::dense`].
    pub fn dense(&mut self, input: NodeId, weights: NodeId, bias: NodeId) -> Result<NodeId> {
        let value = nn::dense(self.value(input), self.value(weights), self.value(bias))?;
        let ids = vec![input, weights, bias];
        let rg = self.any_requires_grad(&ids);
        Ok(self.push_node(Op::Dense, ids, value, rg))
    }

    /// Element-wise activation node.
    pub fn activation(&mut self, input: NodeId, act: Activation) -> Result<NodeId> {
        let value = act.apply(self.value(input));
        let rg = self.nodes[input.0].requires_grad;
        Ok(self.push_node(Op::Activation(act), vec![input], value, rg))
    }

    /// Inverted-dropout node. In [`Mode::Eval`] the layer is an exact
    /// identity: no node is added and no random numbers are drawn.
    pub fn dropout(&mut self, input: NodeId, rate: f64, rng: &mut Rng) -> Result<NodeId> {
        if self.mode == Mode::Eval || rate == 0.0 {
            return Ok(input);
        }
        let mask = nn::sample_mask(rng, self.value(input).numel(), rate)?;
        let value = nn::apply_mask(self.value(input), &mask)?;
        let rg = self.nodes[input.0].requires_grad;
        Ok(self.push_node(Op::Dropout { mask }, vec![input], value, rg))
    }

    /// Flatten node collapsing a sequence into a feature vector.
    pub fn flatten(&mut self, input: NodeId) -> Result<NodeId> {
        let value = nn::flatten(self.value(input))?;
        let rg = self.nodes[input.0].requires_grad;
        Ok(self.push_node(Op::Flatten, vec![input], value, rg))
    }

    /// LSTM node over weight leaves `w_input`, `w_recurrent`, `bias`.
    pub fn lstm(
        &mut self,
        input: NodeId,
        w_input: NodeId,
        w_recurrent: NodeId,
        bias: NodeId,
        return_sequence: bool,
    ) -> Result<NodeId> {
        let (value, cache) = nn::lstm_forward(
            self.value(input),
            self.value(w_input),
            self.value(w_recurrent),
            self.value(bias),
            return_sequence,
        )?;
        let ids = vec![input, w_input, w_recurrent, bias];
        let rg = self.any_requires_grad(&ids);
        Ok(self.push_node(
            Op::Lstm {
                return_sequence,
                cache: Box::new(cache),
            },
            ids,
            value,
            rg,
        ))
    }

    /// Scalar loss node: binary cross-entropy against `target` plus an
    /// optional L2 penalty `l2 * Σ‖w‖²` over the tensors in `penalties`
    /// (pass the weight matrices, not the biases).
    pub fn bce_loss(
        &mut self,
        pred: NodeId,
        target: Tensor,
        reduction: Reduction,
        l2: f64,
        penalties: &[NodeId],
    ) -> Result<NodeId> {
        if l2 < 0.0 {
            return Err(Error::config(format!(
                "l2 penalty coefficient must be non-negative, got {l2}"
            )));
        }
        let mut loss = nn::bce_loss(self.value(pred), &target, reduction)?;
        for &w in penalties {
            loss += l2 * self.value(w).squared_norm();
        }
        let mut ids = vec![pred];
        ids.extend_from_slice(penalties);
        let rg = self.any_requires_grad(&ids);
        Ok(self.push_node(
            Op::Bce {
                target,
                reduction,
                l2,
            },
            ids,
            Tensor::scalar(loss),
            rg,
        ))
    }

    /// Reverse walk from `loss` with the seed gradient `∂L/∂loss = 1`.
    pub fn backward(self, loss: NodeId) -> Result<Gradients> {
        self.backward_scaled(loss, 1.0)
    }

    /// Reverse walk with an explicit seed gradient. Callers accumulating
    /// micro-batches under [`Reduction::Sum`] pass the `1/(batch·units)`
    /// factor here instead of rescaling every gradient afterwards.
    pub fn backward_scaled(mut self, loss: NodeId, seed: f64) -> Result<Gradients> {
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(Error::shape(format!(
                "backward requires a scalar loss node, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        if !self.nodes[loss.0].value.all_finite() {
            return Err(Error::numerics(
                "backward: loss value is not finite".to_string(),
            ));
        }
        let n = self.nodes.len();
        let mut pending: Vec<Option<Tensor>> = Vec::new();
        pending.resize_with(n, || None);
        let mut leaf_grads: Vec<Option<Tensor>> = Vec::new();
        leaf_grads.resize_with(n, || None);
        pending[loss.0] = Some(Tensor::scalar(seed));

        for i in (0..=loss.0).rev() {
            let Some(grad) = pending[i].take() else {
                continue;
            };
            if !self.nodes[i].requires_grad {
                continue;
            }
            let input_grads = self.propagate(i, &grad)?;
            if matches!(self.nodes[i].op, Op::Leaf) {
                leaf_grads[i] = Some(grad);
            } else {
                // Intermediate value, cache and gradient are no longer
                // needed: free them as the walk passes.
                self.nodes[i].op = Op::Freed;
                self.nodes[i].value = Tensor::zeros(&[0]);
            }
            for (slot, g) in input_grads {
                match &mut pending[slot.0] {
                    Some(acc) => acc.add_scaled(1.0, &g)?,
                    empty => *empty = Some(g),
                }
            }
        }

        Ok(Gradients { grads: leaf_grads })
    }

    /// Computes the gradients this node sends to its inputs.
    fn propagate(&self, idx: usize, grad: &Tensor) -> Result<Vec<(NodeId, Tensor)>> {
        let node = &self.nodes[idx];
        let needs = |k: usize| self.nodes[node.inputs[k].0].requires_grad;
        let mut out = Vec::new();
        match &node.op {
            Op::Leaf | Op::Freed => {}
            Op::Conv1d { stride } => {
                let (x, k, b) = (node.inputs[0], node.inputs[1], node.inputs[2]);
                let (dx, dk, db) = nn::conv1d_backward(
                    self.value(x),
                    self.value(k),
                    self.value(b),
                    *stride,
                    grad,
                    needs(0),
                )?;
                if let Some(dx) = dx {
                    out.push((x, dx));
                }
                if needs(1) {
                    out.push((k, dk));
                }
                if needs(2) {
                    out.push((b, db));
                }
            }
            Op::MaxPool1d {
                window,
                stride,
                cache,
            } => {
                if needs(0) {
                    let x = node.inputs[0];
                    let dx = nn::maxpool1d_backward(
                        self.value(x).shape(),
                        *window,
                        *stride,
                        cache,
                        grad,
                    )?;
                    out.push((x, dx));
                }
            }
            Op::Dense => {
                let (x, w, b) = (node.inputs[0], node.inputs[1], node.inputs[2]);
                let (dx, dw, db) = nn::dense_backward(
                    self.value(x),
                    self.value(w),
                    self.value(b),
                    grad,
                    needs(0),
                )?;
                if let Some(dx) = dx {
                    out.push((x, dx));
                }
                if needs(1) {
                    out.push((w, dw));
                }
                if needs(2) {
                    out.push((b, db));
                }
            }
            Op::Activation(act) => {
                if needs(0) {
                    let x = node.inputs[0];
                    let dx = act.backward(self.value(x), &node.value, grad)?;
                    out.push((x, dx));
                }
            }
            Op::Dropout { mask } => {
                if needs(0) {
                    let x = node.inputs[0];
                    out.push((x, nn::apply_mask(grad, mask)?));
                }
            }
            Op::Flatten => {
                if needs(0) {
                    let x = node.inputs[0];
                    let dx = grad.clone().reshaped(self.value(x).shape())?;
                    out.push((x, dx));
                }
            }
            Op::Lstm {
                return_sequence,
                cache,
            } => {
                let (x, wx, wh, b) = (
                    node.inputs[0],
                    node.inputs[1],
                    node.inputs[2],
                    node.inputs[3],
                );
                let grads = nn::lstm_backward(
                    self.value(x),
                    self.value(wx),
                    self.value(wh),
                    self.value(b),
                    cache,
                    *return_sequence,
                    grad,
                    needs(0),
                )?;
                if let Some(dx) = grads.d_input {
                    out.push((x, dx));
                }
                if needs(1) {
                    out.push((wx, grads.d_w_input));
                }
                if needs(2) {
                    out.push((wh, grads.d_w_recurrent));
                }
                if needs(3) {
                    out.push((b, grads.d_bias));
                }
            }
            Op::Bce {
                target,
                reduction,
                l2,
            } => {
                let g = grad.as_scalar()?;
                let pred = node.inputs[0];
                if needs(0) {
                    let mut dpred = nn::bce_backward(self.value(pred), target, *reduction)?;
                    if g != 1.0 {
                        for v in dpred.data_mut() {
                            *v *= g;
                        }
                    }
                    out.push((pred, dpred));
                }
                for (k, &w) in node.inputs.iter().enumerate().skip(1) {
                    if needs(k) {
                        out.push((w, self.value(w).map(|x| g * 2.0 * l2 * x)));
                    }
                }
            }
        }
        Ok(out)
    }
}
