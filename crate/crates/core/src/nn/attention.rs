use super::tensor::{axpy, dot, softmax};
use super::{NnError, Tensor};

/// Dot-product attention over the rows of `h` with `query`: returns the
/// context vector and the attention weights.
pub fn dot_attention(h: &Tensor, query: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    h.check_matrix("dot_attention", query.len())?;
    if h.rows() == 0 {
        return Err(NnError::EmptySequence);
    }
    let scores: Vec<f64> = (0..h.rows()).map(|t| dot(h.row(t), query)).collect();
    let alpha = softmax(&scores);
    let mut ctx = vec![0.0; query.len()];
    for (t, &a) in alpha.iter().enumerate() {
        axpy(a, h.row(t), &mut ctx);
    }
    Ok((ctx, alpha))
}

/// Gradients w.r.t. `h` and `query` given the gradient of the context.
pub fn dot_attention_backward(h: &Tensor, query: &[f64], alpha: &[f64], d_ctx: &[f64]) -> (Tensor, Vec<f64>) {
    let len = h.rows();
    let d_alpha: Vec<f64> = (0..len).map(|t| dot(d_ctx, h.row(t))).collect();
    let mean = dot(alpha, &d_alpha);
    let mut dh = Tensor::zeros(&h.shape);
    let mut dq = vec![0.0; query.len()];
    for t in 0..len {
        let ds = alpha[t] * (d_alpha[t] - mean);
        let row = dh.row_mut(t);
        axpy(alpha[t], d_ctx, row);
        axpy(ds, query, row);
        axpy(ds, h.row(t), &mut dq);
    }
    (dh, dq)
}
