//! Tape-based reverse-mode differentiation over dense matrices.
//!
//! Operations are recorded eagerly: every op computes its forward value
//! immediately and appends a node whose inputs are earlier nodes, so the node
//! list is always in topological order. [`Tape::backward`] walks it in exact
//! reverse order.
//!
//! A tape is meant to live for one forward/backward pass (one optimizer step)
//! and then be dropped. It is single-threaded; use one tape per thread.

use std::cell::RefCell;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    /// `m×n + 1×n`
    AddRow(usize, usize),
    /// `m×n ∘ m×1`
    MulCol(usize, usize),
    Scale(usize, f64),
    AddScalar(usize),
    MatMul(usize, usize),
    Transpose(usize),
    Exp(usize),
    LeakyRelu(usize, f64),
    SumAll(usize),
    /// `m×n -> 1×n`
    SumRows(usize),
    /// `m×n -> m×1`
    SumCols(usize),
    SoftmaxRows(usize),
    SoftmaxCols(usize),
    LayerNormRows(usize, f64),
    ConcatCols(Vec<usize>),
    GatherRows(usize, Rc<[usize]>),
    ScatterAddRows(usize, Rc<[usize]>),
    RowSqNorm(usize),
    SqDist(usize, usize),
    LogSumExpRows(usize),
    Reshape(usize),
    SliceCols(usize, usize),
    /// Packed `[U | S | V]` as a `3×7` value.
    Svd3(usize),
}

pub(crate) struct Node {
    pub(crate) value: Tensor,
    pub(crate) op: Op,
    pub(crate) needs_grad: bool,
}

/// Records operations for one forward pass.
#[derive(Default)]
pub struct Tape {
    pub(crate) nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    pub(crate) tape: &'t Tape,
    pub(crate) id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var(#{} {:?})", self.id, self.shape())
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a leaf; it receives a gradient iff `t.requires_grad`.
    pub fn leaf(&self, t: Tensor) -> Var<'_> {
        let needs_grad = t.requires_grad;
        self.push(t, Op::Leaf, needs_grad)
    }

    /// Records a trainable leaf.
    pub fn param(&self, t: Tensor) -> Var<'_> {
        self.leaf(t.with_grad())
    }

    pub fn constant(&self, t: Tensor) -> Var<'_> {
        let mut t = t;
        t.requires_grad = false;
        self.leaf(t)
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn push(&self, value: Tensor, op: Op, needs_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    pub(crate) fn needs_grad(&self, id: usize) -> bool {
        self.nodes.borrow()[id].needs_grad
    }

    /// Back-propagates from a scalar output.
    pub fn backward(&self, output: Var<'_>) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let out = &nodes[output.id].value;
        if out.len() != 1 {
            return Err(Error::NonScalar(out.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; nodes.len()];
        let (r, c) = out.dims();
        grads[output.id] = Some(Tensor::filled(r, c, 1.0));

        for id in (0..=output.id).rev() {
            let Some(g) = grads[id].take() else {
                continue;
            };
            if !nodes[id].needs_grad {
                continue;
            }
            super::ops::backprop(&nodes, id, &g, &mut grads);
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

/// Gradients from one backward pass, indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var<'_>) -> Option<&Tensor> {
        self.grads.get(v.id).and_then(Option::as_ref)
    }

    /// Gradient of `v`, or zeros shaped like `v` if nothing flowed into it.
    pub fn wrt(&self, v: Var<'_>) -> Tensor {
        match self.get(v) {
            Some(g) => g.clone(),
            None => {
                let (r, c) = v.dims();
                Tensor::zeros(r, c)
            }
        }
    }
}

pub(crate) fn accumulate(grads: &mut [Option<Tensor>], id: usize, g: Tensor) {
    match &mut grads[id] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Tensor {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    pub fn with_value<R>(&self, f: impl FnOnce(&Tensor) -> R) -> R {
        f(&self.tape.nodes.borrow()[self.id].value)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.with_value(|t| t.shape().to_vec())
    }

    pub fn dims(&self) -> (usize, usize) {
        self.with_value(Tensor::dims)
    }

    pub fn item(&self) -> Result<f64> {
        self.with_value(Tensor::item)
    }

    pub fn needs_grad(&self) -> bool {
        self.tape.needs_grad(self.id)
    }
}
