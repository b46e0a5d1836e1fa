use super::init::glorot_uniform;
use super::tensor::{matmul_acc, matmul_nt, matmul_tn_acc, sigmoid};
use super::{NnError, ParamId, ParamStore, Tensor};
use rand::Rng;

/// LSTM with fused weights `W` [(d_in + h), 4h] over `[x; h_prev]` and bias
/// [4h]; gate columns are ordered i, f, o, g.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub hidden: usize,
}

/// Gate activations and state for one cell application.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutput {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub o: Vec<f64>,
    pub g: Vec<f64>,
}

/// One step of the standard LSTM cell on raw arrays.
pub fn lstm_cell(x: &[f64], h_prev: &[f64], c_prev: &[f64], w: &Tensor, b: &Tensor) -> Result<CellOutput, NnError> {
    let h = h_prev.len();
    if c_prev.len() != h || w.shape != [x.len() + h, 4 * h] || b.shape != [4 * h] {
        return Err(NnError::ShapeMismatch {
            op: "lstm_cell",
            expected: format!("W [{}, {}], b [{}], c [{h}]", x.len() + h, 4 * h, 4 * h),
            found: format!("W {:?}, b {:?}, c [{}]", w.shape, b.shape, c_prev.len()),
        });
    }
    let z: Vec<f64> = x.iter().chain(h_prev).copied().collect();
    let mut pre = b.data.clone();
    matmul_acc(&z, 1, z.len(), &w.data, 4 * h, &mut pre);
    let gates = activate_gates(&pre, h);
    let mut out = CellOutput {
        h: vec![0.0; h],
        c: vec![0.0; h],
        i: gates[..h].to_vec(),
        f: gates[h..2 * h].to_vec(),
        o: gates[2 * h..3 * h].to_vec(),
        g: gates[3 * h..].to_vec(),
    };
    for j in 0..h {
        out.c[j] = out.f[j] * c_prev[j] + out.i[j] * out.g[j];
        out.h[j] = out.o[j] * out.c[j].tanh();
    }
    Ok(out)
}

fn activate_gates(pre: &[f64], h: usize) -> Vec<f64> {
    pre.iter()
        .enumerate()
        .map(|(k, &v)| if k < 3 * h { sigmoid(v) } else { v.tanh() })
        .collect()
}

/// Saved activations for one time step across the active sequences.
#[derive(Debug, Clone)]
struct StepCache {
    active: Vec<usize>,
    z: Vec<f64>,
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    lens: Vec<usize>,
    steps: Vec<StepCache>,
}

impl Lstm {
    /// Glorot-uniform weights, zero bias except forget-gate bias 1.
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        let rows = input + hidden;
        let w = store.register(
            format!("{name}.w"),
            glorot_uniform(rng, rows, 4 * hidden, &[rows, 4 * hidden]),
            true,
        );
        let mut bias = Tensor::zeros(&[4 * hidden]);
        bias.data[hidden..2 * hidden].fill(1.0);
        let b = store.register(format!("{name}.b"), bias, true);
        Lstm { w, b, input, hidden }
    }

    /// Run every sequence (rows = time steps) from zero state. Sequences are
    /// processed together step by step; each output depends only on its own
    /// sequence.
    pub fn forward(&self, store: &ParamStore, seqs: &[&Tensor]) -> Result<(Vec<Tensor>, LstmCache), NnError> {
        let (d, h) = (self.input, self.hidden);
        for s in seqs {
            s.check_matrix("lstm", d)?;
            if s.rows() == 0 {
                return Err(NnError::EmptySequence);
            }
        }
        let w = &store.value(self.w).data;
        let b = &store.value(self.b).data;
        let lens: Vec<usize> = seqs.iter().map(|s| s.rows()).collect();
        let max_len = lens.iter().copied().max().unwrap_or(0);
        let mut outs: Vec<Tensor> = lens.iter().map(|&l| Tensor::zeros(&[l, h])).collect();
        let mut hs = vec![vec![0.0; h]; seqs.len()];
        let mut cs = vec![vec![0.0; h]; seqs.len()];
        let mut steps = Vec::with_capacity(max_len);
        for t in 0..max_len {
            let active: Vec<usize> = (0..seqs.len()).filter(|&s| lens[s] > t).collect();
            let m = active.len();
            let mut z = Vec::with_capacity(m * (d + h));
            for &s in &active {
                z.extend_from_slice(seqs[s].row(t));
                z.extend_from_slice(&hs[s]);
            }
            let mut pre = Vec::with_capacity(m * 4 * h);
            for _ in 0..m {
                pre.extend_from_slice(b);
            }
            matmul_acc(&z, m, d + h, w, 4 * h, &mut pre);
            let mut gates = Vec::with_capacity(pre.len());
            let mut c_prev = Vec::with_capacity(m * h);
            let mut tanh_c = Vec::with_capacity(m * h);
            for (r, &s) in active.iter().enumerate() {
                let gr = activate_gates(&pre[r * 4 * h..(r + 1) * 4 * h], h);
                c_prev.extend_from_slice(&cs[s]);
                for j in 0..h {
                    let c = gr[h + j] * cs[s][j] + gr[j] * gr[3 * h + j];
                    let tc = c.tanh();
                    cs[s][j] = c;
                    hs[s][j] = gr[2 * h + j] * tc;
                    tanh_c.push(tc);
                }
                outs[s].row_mut(t).copy_from_slice(&hs[s]);
                gates.extend_from_slice(&gr);
            }
            steps.push(StepCache {
                active,
                z,
                gates,
                c_prev,
                tanh_c,
            });
        }
        Ok((outs, LstmCache { lens, steps }))
    }

    /// Backpropagate output gradients (one [len, h] per sequence); returns
    /// input gradients per sequence.
    pub fn backward(&self, store: &mut ParamStore, cache: &LstmCache, d_out: &[Tensor]) -> Vec<Tensor> {
        let (d, h) = (self.input, self.hidden);
        let n = cache.lens.len();
        let mut dxs: Vec<Tensor> = cache.lens.iter().map(|&l| Tensor::zeros(&[l, d])).collect();
        let mut dh_next = vec![vec![0.0; h]; n];
        let mut dc_next = vec![vec![0.0; h]; n];
        let mut dw = std::mem::take(&mut store.grad_mut(self.w).data);
        let mut db = std::mem::take(&mut store.grad_mut(self.b).data);
        let w = &store.value(self.w).data;
        for (t, step) in cache.steps.iter().enumerate().rev() {
            let m = step.active.len();
            let mut dpre = vec![0.0; m * 4 * h];
            for (r, &s) in step.active.iter().enumerate() {
                let g = &step.gates[r * 4 * h..(r + 1) * 4 * h];
                let dp = &mut dpre[r * 4 * h..(r + 1) * 4 * h];
                let dout = d_out[s].row(t);
                for j in 0..h {
                    let (gi, gf, go, gg) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                    let tc = step.tanh_c[r * h + j];
                    let dh = dout[j] + dh_next[s][j];
                    let dc = dh * go * (1.0 - tc * tc) + dc_next[s][j];
                    dp[j] = dc * gg * gi * (1.0 - gi);
                    dp[h + j] = dc * step.c_prev[r * h + j] * gf * (1.0 - gf);
                    dp[2 * h + j] = dh * tc * go * (1.0 - go);
                    dp[3 * h + j] = dc * gi * (1.0 - gg * gg);
                    dc_next[s][j] = dc * gf;
                }
                for (acc, v) in db.iter_mut().zip(dp.iter()) {
                    *acc += v;
                }
            }
            matmul_tn_acc(&step.z, m, d + h, &dpre, 4 * h, &mut dw);
            let dz = matmul_nt(&dpre, m, 4 * h, w, d + h);
            for (r, &s) in step.active.iter().enumerate() {
                let row = &dz[r * (d + h)..(r + 1) * (d + h)];
                dxs[s].row_mut(t).copy_from_slice(&row[..d]);
                dh_next[s].copy_from_slice(&row[d..]);
            }
        }
        store.grad_mut(self.w).data = dw;
        store.grad_mut(self.b).data = db;
        dxs
    }
}

/// Forward and backward LSTMs; each output row is `[h_fwd_t ; h_bwd_t]`.
#[derive(Debug, Clone)]
pub struct BiLstm {
    pub fwd: Lstm,
    pub bwd: Lstm,
}

#[derive(Debug, Clone)]
pub struct BiLstmCache {
    fwd: LstmCache,
    bwd: LstmCache,
}

fn reverse_rows(t: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(&t.shape);
    let n = t.rows();
    for i in 0..n {
        out.row_mut(i).copy_from_slice(t.row(n - 1 - i));
    }
    out
}

impl BiLstm {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        let fwd = Lstm::new(store, &format!("{name}.fwd"), input, hidden, rng);
        let bwd = Lstm::new(store, &format!("{name}.bwd"), input, hidden, rng);
        BiLstm { fwd, bwd }
    }

    pub fn hidden(&self) -> usize {
        self.fwd.hidden
    }

    pub fn forward(&self, store: &ParamStore, seqs: &[&Tensor]) -> Result<(Vec<Tensor>, BiLstmCache), NnError> {
        let (hf, fc) = self.fwd.forward(store, seqs)?;
        let reversed: Vec<Tensor> = seqs.iter().map(|s| reverse_rows(s)).collect();
        let refs: Vec<&Tensor> = reversed.iter().collect();
        let (hb, bc) = self.bwd.forward(store, &refs)?;
        let h = self.hidden();
        let outs = hf
            .iter()
            .zip(&hb)
            .map(|(f, b)| {
                let len = f.rows();
                let mut o = Tensor::zeros(&[len, 2 * h]);
                for t in 0..len {
                    let row = o.row_mut(t);
                    row[..h].copy_from_slice(f.row(t));
                    row[h..].copy_from_slice(b.row(len - 1 - t));
                }
                o
            })
            .collect();
        Ok((outs, BiLstmCache { fwd: fc, bwd: bc }))
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &BiLstmCache, d_out: &[Tensor]) -> Vec<Tensor> {
        let h = self.hidden();
        let mut df = Vec::with_capacity(d_out.len());
        let mut db = Vec::with_capacity(d_out.len());
        for d in d_out {
            let len = d.rows();
            let mut f = Tensor::zeros(&[len, h]);
            let mut b = Tensor::zeros(&[len, h]);
            for t in 0..len {
                f.row_mut(t).copy_from_slice(&d.row(t)[..h]);
                b.row_mut(len - 1 - t).copy_from_slice(&d.row(t)[h..]);
            }
            df.push(f);
            db.push(b);
        }
        let mut dx = self.fwd.backward(store, &cache.fwd, &df);
        let dxb = self.bwd.backward(store, &cache.bwd, &db);
        for (x, xb) in dx.iter_mut().zip(&dxb) {
            x.add_assign(&reverse_rows(xb));
        }
        dx
    }
}
