use super::init::glorot_uniform;
use super::{ParamId, ParamStore, Tensor};
use rand::Rng;

/// Lookup table [vocab, dim].
#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: ParamId,
    pub vocab: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, vocab: usize, dim: usize, rng: &mut R) -> Self {
        let table = store.register(name.to_string(), glorot_uniform(rng, vocab, dim, &[vocab, dim]), true);
        Embedding { table, vocab, dim }
    }

    /// Rows for `indices` as a [len, dim] matrix. Out-of-range indices panic.
    pub fn forward(&self, store: &ParamStore, indices: &[usize]) -> Tensor {
        let t = store.value(self.table);
        let rows: Vec<&[f64]> = indices.iter().map(|&i| t.row(i)).collect();
        Tensor::from_rows(&rows, self.dim)
    }

    pub fn backward(&self, store: &mut ParamStore, indices: &[usize], d_out: &Tensor) {
        let g = store.grad_mut(self.table);
        for (r, &i) in indices.iter().enumerate() {
            for (a, b) in g.row_mut(i).iter_mut().zip(d_out.row(r)) {
                *a += b;
            }
        }
    }
}
