//! Finite-difference checks of every differentiable building block and of
//! the composed model loss, packaged for the CLI and for test suites.

use crate::dependence::build_vocabs;
use crate::frontend::parse_source;
use crate::model::{ModelConfig, ModelError, PreparedProgram, VulcanModel};
use crate::nn::{
    dot_attention, dot_attention_backward, finite_diff_report, init, weighted_xent, Activation, BatchNorm, BiLstm, BnMode,
    Dense, GradCheckReport, Lstm, ParamId, ParamStore, Tensor,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Central-difference step.
pub const STEP: f64 = 1e-6;
/// Tolerance for the individual operations.
pub const OP_TOLERANCE: f64 = 1e-5;
/// Tolerance for the composed model loss.
pub const MODEL_TOLERANCE: f64 = 1e-4;
/// Coordinates where both gradients are below this are rounding noise.
const FLOOR: f64 = 1e-9;
/// The composed model has many near-zero gradients; central differences of
/// a loss around 1 carry about 1e-10 absolute noise at this step.
const MODEL_FLOOR: f64 = 1e-5;

/// The five-line program the composed check runs on.
pub const CHECK_PROGRAM: &str = "\
func foo(n, y, r) { while n > 0 {
        r = r + 1 }
    y = y * 2
    x = y / r
    return x
}
";

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub report: GradCheckReport,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.report.max_rel_err < self.tolerance && self.report.checked > 0
    }
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    init::uniform(rng, 1.0, shape)
}

/// Sum of `y` against fixed pseudo-random coefficients, and its gradient.
fn probe(y: &Tensor, seed: u64) -> (f64, Tensor) {
    let coef = random(&mut ChaCha8Rng::seed_from_u64(seed), &y.shape);
    (y.data.iter().zip(&coef.data).map(|(a, b)| a * b).sum(), coef)
}

fn flat(store: &ParamStore) -> (Vec<f64>, Vec<f64>) {
    let values = store.iter().flat_map(|p| p.value.data.iter().copied()).collect();
    let grads = store.iter().flat_map(|p| p.grad.data.iter().copied()).collect();
    (values, grads)
}

fn with_values(store: &ParamStore, theta: &[f64]) -> ParamStore {
    let mut s = store.clone();
    let mut k = 0;
    for p in s.iter_mut() {
        let n = p.value.len();
        p.value.data.copy_from_slice(&theta[k..k + n]);
        k += n;
    }
    s
}

fn merge(a: GradCheckReport, b: GradCheckReport) -> GradCheckReport {
    GradCheckReport {
        max_rel_err: a.max_rel_err.max(b.max_rel_err),
        checked: a.checked + b.checked,
        below_floor: a.below_floor + b.below_floor,
    }
}

fn result(name: &str, report: GradCheckReport, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        report,
        tolerance,
    }
}

fn check_dense(rng: &mut ChaCha8Rng) -> GradCheckReport {
    let mut store = ParamStore::new();
    let layer = Dense::new(&mut store, "d", 4, 3, Activation::Tanh, rng);
    store.value_mut(layer.b).data = vec![0.1, -0.2, 0.3];
    let x = random(rng, &[5, 4]);
    let (y, cache) = layer.forward(&store, &x).expect("shapes agree");
    let (_, dy) = probe(&y, 1);
    let dx = layer.backward(&mut store, &cache, &dy);
    let loss = |s: &ParamStore, x: &Tensor| probe(&layer.forward(s, x).expect("shapes agree").0, 1).0;
    let (theta, grad) = flat(&store);
    let params = finite_diff_report(|t| loss(&with_values(&store, t), &x), &theta, &grad, STEP, FLOOR);
    let input = finite_diff_report(
        |t| loss(&store, &Tensor::from_vec(&x.shape, t.to_vec()).expect("same size")),
        &x.data,
        &dx.data,
        STEP,
        FLOOR,
    );
    merge(params, input)
}

/// An LSTM unrolled over three steps, which exercises the cell's gradient
/// through time.
fn check_lstm(rng: &mut ChaCha8Rng) -> GradCheckReport {
    let mut store = ParamStore::new();
    let lstm = Lstm::new(&mut store, "l", 3, 4, rng);
    let xs = random(rng, &[3, 3]);
    let (outs, cache) = lstm.forward(&store, &[&xs]).expect("shapes agree");
    let (_, dy) = probe(&outs[0], 2);
    let dx = lstm.backward(&mut store, &cache, &[dy]);
    let loss = |s: &ParamStore, x: &Tensor| probe(&lstm.forward(s, &[x]).expect("shapes agree").0[0], 2).0;
    let (theta, grad) = flat(&store);
    let params = finite_diff_report(|t| loss(&with_values(&store, t), &xs), &theta, &grad, STEP, FLOOR);
    let input = finite_diff_report(
        |t| loss(&store, &Tensor::from_vec(&xs.shape, t.to_vec()).expect("same size")),
        &xs.data,
        &dx[0].data,
        STEP,
        FLOOR,
    );
    merge(params, input)
}

fn check_bilstm(rng: &mut ChaCha8Rng) -> GradCheckReport {
    let mut store = ParamStore::new();
    let bi = BiLstm::new(&mut store, "p", 2, 3, rng);
    let xs = random(rng, &[4, 2]);
    let (outs, cache) = bi.forward(&store, &[&xs]).expect("shapes agree");
    let (_, dy) = probe(&outs[0], 3);
    let dx = bi.backward(&mut store, &cache, &[dy]);
    let loss = |s: &ParamStore, x: &Tensor| probe(&bi.forward(s, &[x]).expect("shapes agree").0[0], 3).0;
    let (theta, grad) = flat(&store);
    let params = finite_diff_report(|t| loss(&with_values(&store, t), &xs), &theta, &grad, STEP, FLOOR);
    let input = finite_diff_report(
        |t| loss(&store, &Tensor::from_vec(&xs.shape, t.to_vec()).expect("same size")),
        &xs.data,
        &dx[0].data,
        STEP,
        FLOOR,
    );
    merge(params, input)
}

fn check_attention(rng: &mut ChaCha8Rng) -> GradCheckReport {
    let h = random(rng, &[5, 4]);
    let q = random(rng, &[4]).data;
    let coef = random(rng, &[4]).data;
    let loss = |h: &Tensor, q: &[f64]| {
        let (ctx, _) = dot_attention(h, q).expect("shapes agree");
        ctx.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>()
    };
    let (_, alpha) = dot_attention(&h, &q).expect("shapes agree");
    let (dh, dq) = dot_attention_backward(&h, &q, &alpha, &coef);
    let wrt_h = finite_diff_report(
        |t| loss(&Tensor::from_vec(&[5, 4], t.to_vec()).expect("same size"), &q),
        &h.data,
        &dh.data,
        STEP,
        FLOOR,
    );
    let wrt_q = finite_diff_report(|t| loss(&h, t), &q, &dq, STEP, FLOOR);
    merge(wrt_h, wrt_q)
}

fn check_batchnorm(rng: &mut ChaCha8Rng) -> GradCheckReport {
    let mut store = ParamStore::new();
    let bn = BatchNorm::new(&mut store, "bn", 3);
    store.value_mut(bn.gamma).data = vec![1.5, -0.5, 0.8];
    store.value_mut(bn.beta).data = vec![0.1, 0.2, -0.3];
    let x = random(rng, &[4, 3]);
    let (y, cache) = bn.forward(&store, &x, BnMode::Train).expect("batch of four");
    let (_, dy) = probe(&y, 4);
    let dx = bn.backward(&mut store, &cache, &dy);
    let loss = |s: &ParamStore, x: &Tensor| probe(&bn.forward(s, x, BnMode::Train).expect("batch of four").0, 4).0;
    let mut total = finite_diff_report(
        |t| loss(&store, &Tensor::from_vec(&x.shape, t.to_vec()).expect("same size")),
        &x.data,
        &dx.data,
        STEP,
        FLOOR,
    );
    for id in [bn.gamma, bn.beta] {
        let theta = store.value(id).data.clone();
        let grad = store.param(id).grad.data.clone();
        let r = finite_diff_report(
            |t| {
                let mut s = store.clone();
                s.value_mut(id).data = t.to_vec();
                loss(&s, &x)
            },
            &theta,
            &grad,
            STEP,
            FLOOR,
        );
        total = merge(total, r);
    }
    total
}

fn check_xent(rng: &mut ChaCha8Rng) -> GradCheckReport {
    let logits = random(rng, &[4, 2]);
    let labels = [0, 1, 1, 0];
    let w = [1.0, 3.5];
    let (_, grad) = weighted_xent(&logits, &labels, &w).expect("shapes agree");
    finite_diff_report(
        |t| {
            weighted_xent(&Tensor::from_vec(&[4, 2], t.to_vec()).expect("same size"), &labels, &w)
                .expect("shapes agree")
                .0
        },
        &logits.data,
        &grad.data,
        STEP,
        FLOOR,
    )
}

/// One result per operation: dense, lstm_cell, bilstm, attention,
/// batchnorm, weighted_xent.
pub fn op_checks(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        result("dense", check_dense(&mut rng), OP_TOLERANCE),
        result("lstm_cell", check_lstm(&mut rng), OP_TOLERANCE),
        result("bilstm", check_bilstm(&mut rng), OP_TOLERANCE),
        result("attention", check_attention(&mut rng), OP_TOLERANCE),
        result("batchnorm", check_batchnorm(&mut rng), OP_TOLERANCE),
        result("weighted_xent", check_xent(&mut rng), OP_TOLERANCE),
    ]
}

/// Training-mode loss that leaves running statistics alone.
fn frozen_loss(model: &VulcanModel, prog: &PreparedProgram, roots: &[(usize, usize)], labels: &[usize], w: &[f64; 2]) -> f64 {
    let (logits, _) = model.forward(&[prog], roots, BnMode::Train).expect("checked program");
    weighted_xent(&logits, labels, w).expect("shapes agree").0
}

/// Gradient of the weighted loss over lines 2–4 of [`CHECK_PROGRAM`] with
/// respect to every trainable parameter. Batch statistics are used for
/// every group of two or more rows so the check covers them.
pub fn model_check(mut cfg: ModelConfig, seed: u64) -> Result<CheckResult, ModelError> {
    cfg.bn_min_batch = 2;
    let ast = parse_source(CHECK_PROGRAM).map_err(crate::dependence::DependenceError::from)?;
    let vocab = build_vocabs(std::slice::from_ref(&ast), cfg.endpoint_mode())?;
    let name = format!("model/{}", cfg.variant());
    let mut model = VulcanModel::new(cfg, vocab, seed)?;
    let prog = model.prepare("check", CHECK_PROGRAM)?;
    let roots = [(0, 2), (0, 3), (0, 4)];
    let labels = [0, 1, 1];
    let w = [1.0, 2.5];
    let (logits, cache) = model.forward(&[&prog], &roots, BnMode::Train)?;
    let (_, dlogits) = weighted_xent(&logits, &labels, &w)?;
    model.store.zero_grads();
    model.backward(&cache, &dlogits);
    let mut total = GradCheckReport {
        max_rel_err: 0.0,
        checked: 0,
        below_floor: 0,
    };
    for id in (0..model.store.len()).map(ParamId) {
        if !model.store.param(id).trainable {
            continue;
        }
        let theta = model.store.value(id).data.clone();
        let grad = model.store.param(id).grad.data.clone();
        let mut probe_model = model.clone();
        let r = finite_diff_report(
            |t| {
                probe_model.store.value_mut(id).data.copy_from_slice(t);
                frozen_loss(&probe_model, &prog, &roots, &labels, &w)
            },
            &theta,
            &grad,
            STEP,
            MODEL_FLOOR,
        );
        total = merge(total, r);
    }
    Ok(result(&name, total, MODEL_TOLERANCE))
}
