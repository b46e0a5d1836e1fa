use super::{NnError, ParamId, ParamStore, Tensor};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BnMode {
    Train,
    Eval,
}

/// Per-feature batch normalization. `gamma`/`beta` are trainable; running
/// statistics are registered as frozen parameters so they travel with
/// checkpoints.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
    pub features: usize,
    pub momentum: f64,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    mode: BnMode,
    xhat: Tensor,
    inv_std: Vec<f64>,
    batch_mean: Vec<f64>,
    batch_var: Vec<f64>,
}

impl BatchNorm {
    pub fn new(store: &mut ParamStore, name: &str, features: usize) -> Self {
        let mut ones = Tensor::zeros(&[features]);
        ones.fill(1.0);
        BatchNorm {
            gamma: store.register(format!("{name}.gamma"), ones.clone(), true),
            beta: store.register(format!("{name}.beta"), Tensor::zeros(&[features]), true),
            running_mean: store.register(format!("{name}.running_mean"), Tensor::zeros(&[features]), false),
            running_var: store.register(format!("{name}.running_var"), ones, false),
            features,
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    /// Normalize `x` [batch, features]. Train mode uses batch statistics and
    /// does not touch the running statistics; call [`BatchNorm::update_running`]
    /// with the returned cache afterwards.
    pub fn forward(&self, store: &ParamStore, x: &Tensor, mode: BnMode) -> Result<(Tensor, BatchNormCache), NnError> {
        x.check_matrix("batchnorm", self.features)?;
        let (n, f) = (x.rows(), self.features);
        let (mean, var) = match mode {
            BnMode::Train => {
                if n < 2 {
                    return Err(NnError::BatchTooSmall { batch: n });
                }
                let mut mean = vec![0.0; f];
                for i in 0..n {
                    for (m, v) in mean.iter_mut().zip(x.row(i)) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n as f64);
                let mut var = vec![0.0; f];
                for i in 0..n {
                    for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                var.iter_mut().for_each(|s| *s /= n as f64);
                (mean, var)
            }
            BnMode::Eval => (
                store.value(self.running_mean).data.clone(),
                store.value(self.running_var).data.clone(),
            ),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let gamma = &store.value(self.gamma).data;
        let beta = &store.value(self.beta).data;
        let mut xhat = Tensor::zeros(&x.shape);
        let mut y = Tensor::zeros(&x.shape);
        for i in 0..n {
            let xr = x.row(i);
            let hr = xhat.row_mut(i);
            for j in 0..f {
                hr[j] = (xr[j] - mean[j]) * inv_std[j];
            }
            let yr = y.row_mut(i);
            for j in 0..f {
                yr[j] = gamma[j] * xhat.data[i * f + j] + beta[j];
            }
        }
        Ok((
            y,
            BatchNormCache {
                mode,
                xhat,
                inv_std,
                batch_mean: mean,
                batch_var: var,
            },
        ))
    }

    /// Exponential moving update of the running statistics from a Train-mode
    /// pass (unbiased batch variance).
    pub fn update_running(&self, store: &mut ParamStore, cache: &BatchNormCache) {
        if cache.mode != BnMode::Train {
            return;
        }
        let n = cache.xhat.rows() as f64;
        let m = self.momentum;
        let rm = &mut store.value_mut(self.running_mean).data;
        for (r, b) in rm.iter_mut().zip(&cache.batch_mean) {
            *r = (1.0 - m) * *r + m * b;
        }
        let rv = &mut store.value_mut(self.running_var).data;
        for (r, b) in rv.iter_mut().zip(&cache.batch_var) {
            *r = (1.0 - m) * *r + m * b * n / (n - 1.0);
        }
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &BatchNormCache, dy: &Tensor) -> Tensor {
        let (n, f) = (dy.rows(), self.features);
        let gamma = store.value(self.gamma).data.clone();
        let mut dgamma = vec![0.0; f];
        let mut dbeta = vec![0.0; f];
        for i in 0..n {
            for j in 0..f {
                let d = dy.data[i * f + j];
                dgamma[j] += d * cache.xhat.data[i * f + j];
                dbeta[j] += d;
            }
        }
        let mut dx = Tensor::zeros(&dy.shape);
        match cache.mode {
            BnMode::Eval => {
                for i in 0..n {
                    for j in 0..f {
                        dx.data[i * f + j] = dy.data[i * f + j] * gamma[j] * cache.inv_std[j];
                    }
                }
            }
            BnMode::Train => {
                let nf = n as f64;
                // sums of dxhat and dxhat * xhat per feature
                let mut s1 = vec![0.0; f];
                let mut s2 = vec![0.0; f];
                for i in 0..n {
                    for j in 0..f {
                        let dxh = dy.data[i * f + j] * gamma[j];
                        s1[j] += dxh;
                        s2[j] += dxh * cache.xhat.data[i * f + j];
                    }
                }
                for i in 0..n {
                    for j in 0..f {
                        let dxh = dy.data[i * f + j] * gamma[j];
                        let xh = cache.xhat.data[i * f + j];
                        dx.data[i * f + j] = cache.inv_std[j] / nf * (nf * dxh - s1[j] - xh * s2[j]);
                    }
                }
            }
        }
        for (g, d) in store.grad_mut(self.gamma).data.iter_mut().zip(&dgamma) {
            *g += d;
        }
        for (g, d) in store.grad_mut(self.beta).data.iter_mut().zip(&dbeta) {
            *g += d;
        }
        dx
    }
}
