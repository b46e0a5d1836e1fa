use super::Tensor;
use rand::Rng;

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize, shape: &[usize]) -> Tensor {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(rng, a, shape)
}

pub fn uniform<R: Rng>(rng: &mut R, a: f64, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-a..a)).collect();
    Tensor {
        shape: shape.to_vec(),
        data,
    }
}
