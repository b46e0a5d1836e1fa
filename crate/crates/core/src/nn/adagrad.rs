use super::{ParamStore, Tensor};

/// Adagrad: `G += g²; θ -= lr · g / (√G + eps)`, trainable parameters only.
#[derive(Debug, Clone)]
pub struct Adagrad {
    pub lr: f64,
    pub eps: f64,
    pub accum: Vec<Tensor>,
}

impl Adagrad {
    pub fn new(store: &ParamStore, lr: f64, eps: f64) -> Self {
        Adagrad {
            lr,
            eps,
            accum: store.iter().map(|p| Tensor::zeros(&p.value.shape)).collect(),
        }
    }

    /// Apply one update and zero all gradients.
    pub fn step(&mut self, store: &mut ParamStore) {
        for (p, acc) in store.iter_mut().zip(&mut self.accum) {
            if p.trainable {
                for ((v, &g), a) in p.value.data.iter_mut().zip(&p.grad.data).zip(&mut acc.data) {
                    *a += g * g;
                    *v -= self.lr * g / (a.sqrt() + self.eps);
                }
            }
            p.grad.fill(0.0);
        }
    }
}
