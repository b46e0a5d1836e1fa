use super::init::glorot_uniform;
use super::tensor::{matmul_acc, matmul_nt, matmul_tn_acc};
use super::{NnError, ParamId, ParamStore, Tensor};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    pub fn derivative_at_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub fn forward(self, x: &mut Tensor) {
        if self != Activation::Identity {
            x.data.iter_mut().for_each(|v| *v = self.apply(*v));
        }
    }

    /// Turn `dy` (gradient w.r.t. output `y`) into the gradient w.r.t. the
    /// pre-activation, in place.
    pub fn backward(self, y: &Tensor, dy: &mut Tensor) {
        if self != Activation::Identity {
            for (d, &o) in dy.data.iter_mut().zip(&y.data) {
                *d *= self.derivative_at_output(o);
            }
        }
    }
}

/// `act(x·W + b)` on raw arrays.
pub fn dense(x: &Tensor, w: &Tensor, b: &Tensor, act: Activation) -> Result<Tensor, NnError> {
    if w.rank() != 2 || b.shape != [w.cols()] {
        return Err(NnError::ShapeMismatch {
            op: "dense",
            expected: format!("W [in, out] and b [out], got W {:?}", w.shape),
            found: format!("b {:?}", b.shape),
        });
    }
    x.check_matrix("dense", w.rows())?;
    let (m, k, n) = (x.rows(), w.rows(), w.cols());
    let mut y = Tensor::zeros(&[m, n]);
    for i in 0..m {
        y.row_mut(i).copy_from_slice(&b.data);
    }
    matmul_acc(&x.data, m, k, &w.data, n, &mut y.data);
    act.forward(&mut y);
    Ok(y)
}

/// Fully connected layer with weights `{name}.w` [in, out] and bias `{name}.b`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub output: usize,
    pub act: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    x: Tensor,
    y: Tensor,
}

impl Dense {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        act: Activation,
        rng: &mut R,
    ) -> Self {
        let w = store.register(format!("{name}.w"), glorot_uniform(rng, input, output, &[input, output]), true);
        let b = store.register(format!("{name}.b"), Tensor::zeros(&[output]), true);
        Dense {
            w,
            b,
            input,
            output,
            act,
        }
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<(Tensor, DenseCache), NnError> {
        let y = dense(x, store.value(self.w), store.value(self.b), self.act)?;
        Ok((
            y.clone(),
            DenseCache {
                x: x.clone(),
                y,
            },
        ))
    }

    /// Accumulates parameter gradients; returns the gradient w.r.t. `x`.
    pub fn backward(&self, store: &mut ParamStore, cache: &DenseCache, dy: &Tensor) -> Tensor {
        let mut g = dy.clone();
        self.act.backward(&cache.y, &mut g);
        let (m, k, n) = (cache.x.rows(), self.input, self.output);
        matmul_tn_acc(&cache.x.data, m, k, &g.data, n, &mut store.grad_mut(self.w).data);
        let db = store.grad_mut(self.b);
        for i in 0..m {
            for (d, v) in db.data.iter_mut().zip(g.row(i)) {
                *d += v;
            }
        }
        let dx = matmul_nt(&g.data, m, n, &store.value(self.w).data, k);
        Tensor {
            shape: vec![m, k],
            data: dx,
        }
    }
}

/// One input row given as the nonzero blocks of a concatenated vector:
/// (block index, values), in ascending block order.
pub type BlockRow = Vec<(usize, Vec<f64>)>;

/// A dense layer whose input is a concatenation of fixed-width blocks, most
/// of them zero. Absent blocks are skipped in both directions; the result
/// equals [`Dense`] applied to the zero-filled concatenation.
#[derive(Debug, Clone)]
pub struct BlockDense {
    pub w: ParamId,
    pub b: ParamId,
    pub widths: Vec<usize>,
    offsets: Vec<usize>,
    pub output: usize,
}

#[derive(Debug, Clone)]
pub struct BlockDenseCache {
    rows: Vec<BlockRow>,
}

impl BlockDense {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, widths: Vec<usize>, output: usize, rng: &mut R) -> Self {
        let input: usize = widths.iter().sum();
        let w = store.register(format!("{name}.w"), glorot_uniform(rng, input, output, &[input, output]), true);
        let b = store.register(format!("{name}.b"), Tensor::zeros(&[output]), true);
        let offsets = widths
            .iter()
            .scan(0, |acc, &w| {
                let o = *acc;
                *acc += w;
                Some(o)
            })
            .collect();
        BlockDense {
            w,
            b,
            widths,
            offsets,
            output,
        }
    }

    pub fn input(&self) -> usize {
        self.widths.iter().sum()
    }

    fn check(&self, rows: &[BlockRow]) -> Result<(), NnError> {
        for row in rows {
            let mut last = None;
            for (blk, v) in row {
                if *blk >= self.widths.len() || v.len() != self.widths[*blk] || last >= Some(*blk) {
                    return Err(NnError::ShapeMismatch {
                        op: "block_dense",
                        expected: format!("ascending blocks with widths {:?}", self.widths),
                        found: format!("block {blk} of width {}", v.len()),
                    });
                }
                last = Some(*blk);
            }
        }
        Ok(())
    }

    /// Pre-activation outputs [rows, output] (identity activation).
    pub fn forward(&self, store: &ParamStore, rows: Vec<BlockRow>) -> Result<(Tensor, BlockDenseCache), NnError> {
        self.check(&rows)?;
        let n = self.output;
        let w = &store.value(self.w).data;
        let mut y = Tensor::zeros(&[rows.len(), n]);
        for (i, row) in rows.iter().enumerate() {
            let out = y.row_mut(i);
            out.copy_from_slice(&store.value(self.b).data);
            for (blk, v) in row {
                let off = self.offsets[*blk] * n;
                matmul_acc(v, 1, v.len(), &w[off..off + v.len() * n], n, out);
            }
        }
        Ok((y, BlockDenseCache { rows }))
    }

    /// Gradients for each present block, aligned with the cached rows.
    pub fn backward(&self, store: &mut ParamStore, cache: &BlockDenseCache, dy: &Tensor) -> Vec<Vec<Vec<f64>>> {
        let n = self.output;
        {
            let dw = &mut store.grad_mut(self.w).data;
            for (i, row) in cache.rows.iter().enumerate() {
                for (blk, v) in row {
                    let off = self.offsets[*blk] * n;
                    matmul_tn_acc(v, 1, v.len(), dy.row(i), n, &mut dw[off..off + v.len() * n]);
                }
            }
        }
        let db = store.grad_mut(self.b);
        for i in 0..cache.rows.len() {
            for (d, v) in db.data.iter_mut().zip(dy.row(i)) {
                *d += v;
            }
        }
        let w = &store.value(self.w).data;
        cache
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .map(|(blk, v)| {
                        let off = self.offsets[*blk] * n;
                        matmul_nt(dy.row(i), 1, n, &w[off..off + v.len() * n], v.len())
                    })
                    .collect()
            })
            .collect()
    }
}
