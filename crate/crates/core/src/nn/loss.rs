use super::tensor::softmax;
use super::{NnError, Tensor};

/// Mean over the batch of `w[y] * -log softmax(logits)[y]`, and its gradient
/// w.r.t. the logits.
pub fn weighted_xent(logits: &Tensor, labels: &[usize], class_weights: &[f64]) -> Result<(f64, Tensor), NnError> {
    logits.check_matrix("weighted_xent", class_weights.len())?;
    if logits.rows() != labels.len() || labels.iter().any(|&y| y >= class_weights.len()) {
        return Err(NnError::ShapeMismatch {
            op: "weighted_xent",
            expected: format!("{} labels below {}", logits.rows(), class_weights.len()),
            found: format!("{labels:?}"),
        });
    }
    let n = labels.len();
    let mut grad = Tensor::zeros(&logits.shape);
    if n == 0 {
        return Ok((0.0, grad));
    }
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let w = class_weights[y];
        loss += w * (lse - row[y]);
        let p = softmax(row);
        let g = grad.row_mut(i);
        for (k, pk) in p.iter().enumerate() {
            let target = if k == y { 1.0 } else { 0.0 };
            g[k] = w * (pk - target) / n as f64;
        }
    }
    Ok((loss / n as f64, grad))
}
