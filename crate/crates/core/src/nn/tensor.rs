use super::NnError;
use serde::{Deserialize, Serialize};

/// Dense row-major array of 64-bit reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NnError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NnError::ShapeMismatch {
                op: "from_vec",
                expected: format!("{expected} elements for {shape:?}"),
                found: format!("{} elements", data.len()),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    /// Matrix with one row per slice.
    pub fn from_rows(rows: &[&[f64]], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Tensor {
            shape: vec![rows.len(), cols],
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Leading dimension of a matrix.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Trailing dimension of a matrix.
    pub fn cols(&self) -> usize {
        *self.shape.last().unwrap_or(&1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        axpy(1.0, &other.data, &mut self.data);
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn check_matrix(&self, op: &'static str, cols: usize) -> Result<(), NnError> {
        if self.rank() != 2 || self.cols() != cols {
            return Err(NnError::ShapeMismatch {
                op,
                expected: format!("[_, {cols}]"),
                found: format!("{:?}", self.shape),
            });
        }
        Ok(())
    }
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `out[i,:] += x[i,:] · W` for row-major `x` [m,k] and `W` [k,n].
///
/// Each output row depends only on its own input row and accumulates in
/// ascending k, so results do not depend on which other rows are present.
/// Zero inputs are skipped.
pub fn matmul_acc(x: &[f64], m: usize, k: usize, w: &[f64], n: usize, out: &mut [f64]) {
    debug_assert_eq!(x.len(), m * k);
    debug_assert_eq!(w.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for (kk, &a) in x[i * k..(i + 1) * k].iter().enumerate() {
            if a != 0.0 {
                axpy(a, &w[kk * n..(kk + 1) * n], orow);
            }
        }
    }
}

/// `dW += xᵀ · g` for `x` [m,k], `g` [m,n], `dW` [k,n].
pub fn matmul_tn_acc(x: &[f64], m: usize, k: usize, g: &[f64], n: usize, dw: &mut [f64]) {
    debug_assert_eq!(x.len(), m * k);
    debug_assert_eq!(g.len(), m * n);
    debug_assert_eq!(dw.len(), k * n);
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for (kk, &a) in x[i * k..(i + 1) * k].iter().enumerate() {
            if a != 0.0 {
                axpy(a, grow, &mut dw[kk * n..(kk + 1) * n]);
            }
        }
    }
}

/// `g · Wᵀ` for `g` [m,n] and `W` [k,n]; returns [m,k].
pub fn matmul_nt(g: &[f64], m: usize, n: usize, w: &[f64], k: usize) -> Vec<f64> {
    debug_assert_eq!(g.len(), m * n);
    debug_assert_eq!(w.len(), k * n);
    let mut out = vec![0.0; m * k];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for kk in 0..k {
            out[i * k + kk] = dot(grow, &w[kk * n..(kk + 1) * n]);
        }
    }
    out
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn matmul_matches_naive() {
        let x = [1.0, 2.0, 0.0, -1.0, 0.5, 3.0];
        let w = [1.0, 0.0, 2.0, 1.0, -1.0, 4.0, 0.5, 0.5, 0.5];
        let mut out = vec![0.0; 6];
        matmul_acc(&x, 2, 3, &w, 3, &mut out);
        for i in 0..2 {
            for j in 0..3 {
                let naive: f64 = (0..3).map(|k| x[i * 3 + k] * w[k * 3 + j]).sum();
                assert!((out[i * 3 + j] - naive).abs() < 1e-12);
            }
        }
        let back = matmul_nt(&out, 2, 3, &w, 3);
        for i in 0..2 {
            for k in 0..3 {
                let naive: f64 = (0..3).map(|j| out[i * 3 + j] * w[k * 3 + j]).sum();
                assert!((back[i * 3 + k] - naive).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn row_results_do_not_depend_on_batch() {
        let w: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = [0.1, -0.7, 0.3];
        let b = [2.0, 0.0, -1.0];
        let mut alone = vec![0.0; 4];
        matmul_acc(&a, 1, 3, &w, 4, &mut alone);
        let mut both = vec![0.0; 8];
        let x: Vec<f64> = b.iter().chain(&a).copied().collect();
        matmul_acc(&x, 2, 3, &w, 4, &mut both);
        assert_eq!(&both[4..], &alone[..]);
    }

    #[test]
    fn sigmoid_and_softmax_are_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(1e3).is_finite() && sigmoid(-1e3).is_finite());
        let s = softmax(&[1e3, -1e3, 0.0]);
        assert!(s.iter().all(|v| v.is_finite()));
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
