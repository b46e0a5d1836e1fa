use super::plan::{build_plan, Plan, SlotDefine};
use super::{ModelError, PreparedProgram, VulcanModel};
use crate::dependence::EncodedPath;
use crate::nn::batchnorm::BatchNormCache;
use crate::nn::dense::{BlockDenseCache, DenseCache};
use crate::nn::lstm::BiLstmCache;
use crate::nn::tensor::{axpy, softmax};
use crate::nn::{dot_attention, dot_attention_backward, weighted_xent, BatchNorm, BlockDense, BlockRow, BnMode, Dense, Tensor};

/// Activations saved by [`VulcanModel::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub plan: Plan,
    /// Line vector of every plan node.
    pub reps: Vec<Vec<f64>>,
    paths: Option<PathCache>,
    ffn_a: Option<FfnCache>,
    levels: Vec<FfnCache>,
    classifier: Option<(DenseCache, DenseCache)>,
}

#[derive(Debug, Clone)]
struct PathCache {
    bilstm: BiLstmCache,
    hs: Vec<Tensor>,
    queries: Vec<Vec<f64>>,
    alphas: Vec<Vec<f64>>,
    readout: DenseCache,
}

#[derive(Debug, Clone)]
struct FfnCache {
    nodes: Vec<usize>,
    hidden: BlockDenseCache,
    bn: BatchNormCache,
    relu: Tensor,
    out: DenseCache,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    /// Probability of the vulnerable class per requested line.
    pub probs: Vec<f64>,
    pub loss: f64,
}

struct Ffn<'a> {
    hidden: &'a BlockDense,
    bn: &'a BatchNorm,
    out: &'a Dense,
}

impl VulcanModel {
    fn ffn_a(&self) -> Ffn<'_> {
        Ffn {
            hidden: &self.layers.ffn_a_hidden,
            bn: &self.layers.ffn_a_bn,
            out: &self.layers.ffn_a_out,
        }
    }

    fn ffn_b(&self) -> Ffn<'_> {
        Ffn {
            hidden: &self.layers.ffn_b_hidden,
            bn: &self.layers.ffn_b_bn,
            out: &self.layers.ffn_b_out,
        }
    }

    /// hidden → batch norm → ReLU → output layer.
    fn run_ffn(&self, ffn: Ffn<'_>, nodes: Vec<usize>, rows: Vec<BlockRow>, mode: BnMode) -> Result<(Tensor, FfnCache), ModelError> {
        let (pre, hidden) = ffn.hidden.forward(&self.store, rows)?;
        let bn_mode = if mode == BnMode::Train && pre.rows() >= self.cfg.bn_min_batch {
            BnMode::Train
        } else {
            BnMode::Eval
        };
        let (mut relu, bn) = ffn.bn.forward(&self.store, &pre, bn_mode)?;
        relu.data.iter_mut().for_each(|v| *v = v.max(0.0));
        let (y, out) = ffn.out.forward(&self.store, &relu)?;
        Ok((
            y,
            FfnCache {
                nodes,
                hidden,
                bn,
                relu,
                out,
            },
        ))
    }

    fn ffn_backward(&mut self, which: char, cache: &FfnCache, dy: &Tensor) -> Vec<Vec<Vec<f64>>> {
        let layers = &self.layers;
        let (hidden, bn, out) = if which == 'a' {
            (&layers.ffn_a_hidden, &layers.ffn_a_bn, &layers.ffn_a_out)
        } else {
            (&layers.ffn_b_hidden, &layers.ffn_b_bn, &layers.ffn_b_out)
        };
        let mut dr = out.backward(&mut self.store, &cache.out, dy);
        for (d, &r) in dr.data.iter_mut().zip(&cache.relu.data) {
            if r <= 0.0 {
                *d = 0.0;
            }
        }
        let dpre = bn.backward(&mut self.store, &cache.bn, &dr);
        hidden.backward(&mut self.store, &cache.hidden, &dpre)
    }

    /// Per-path read-out vectors [paths, path_repr].
    fn run_paths(&self, paths: &[Vec<usize>]) -> Result<(Tensor, PathCache), ModelError> {
        let l = &self.layers;
        let h = self.cfg.lstm_hidden;
        let embedded: Vec<Tensor> = paths.iter().map(|p| l.embed.forward(&self.store, p)).collect();
        let refs: Vec<&Tensor> = embedded.iter().collect();
        let (hs, bilstm) = l.bilstm.forward(&self.store, &refs)?;
        let width = if self.cfg.no_attn { 2 * h } else { 4 * h };
        let mut rin = Tensor::zeros(&[paths.len(), width]);
        let mut queries = Vec::with_capacity(paths.len());
        let mut alphas = Vec::with_capacity(paths.len());
        for (p, hm) in hs.iter().enumerate() {
            let last = hm.rows() - 1;
            let query: Vec<f64> = hm.row(last)[..h].iter().chain(&hm.row(0)[h..]).copied().collect();
            let row = rin.row_mut(p);
            if self.cfg.no_attn {
                row.copy_from_slice(&query);
            } else {
                let (ctx, alpha) = dot_attention(hm, &query)?;
                row[..2 * h].copy_from_slice(&ctx);
                row[2 * h..].copy_from_slice(&query);
                alphas.push(alpha);
            }
            queries.push(query);
        }
        let (vecs, readout) = l.readout.forward(&self.store, &rin)?;
        Ok((
            vecs,
            PathCache {
                bilstm,
                hs,
                queries,
                alphas,
                readout,
            },
        ))
    }

    fn backward_paths(&mut self, plan: &Plan, cache: &PathCache, dvecs: &Tensor) {
        let h = self.cfg.lstm_hidden;
        let drin = self.layers.readout.backward(&mut self.store, &cache.readout, dvecs);
        let mut dhs = Vec::with_capacity(cache.hs.len());
        for (p, hm) in cache.hs.iter().enumerate() {
            let d = drin.row(p);
            let (mut dh, dq) = if self.cfg.no_attn {
                (Tensor::zeros(&hm.shape), d.to_vec())
            } else {
                let (dh, mut dq) = dot_attention_backward(hm, &cache.queries[p], &cache.alphas[p], &d[..2 * h]);
                axpy(1.0, &d[2 * h..], &mut dq);
                (dh, dq)
            };
            let last = hm.rows() - 1;
            axpy(1.0, &dq[..h], &mut dh.row_mut(last)[..h]);
            axpy(1.0, &dq[h..], &mut dh.row_mut(0)[h..]);
            dhs.push(dh);
        }
        let dembedded = self.layers.bilstm.backward(&mut self.store, &cache.bilstm, &dhs);
        for (p, d) in dembedded.iter().enumerate() {
            self.layers.embed.backward(&mut self.store, &plan.paths[p], d);
        }
    }

    fn define_vector<'a>(&'a self, def: SlotDefine, reps: &'a [Vec<f64>]) -> &'a [f64] {
        match def {
            SlotDefine::Undefined => &self.store.value(self.layers.undefined.expect("define vectors enabled")).data,
            SlotDefine::OneHot(i) => self.store.value(self.layers.e_op.expect("define vectors enabled")).row(i),
            SlotDefine::Node(n) => &reps[n],
        }
    }

    /// Represent and classify `roots` (program index, line). Returns the
    /// logits [roots, 2] and the cache; with `BnMode::Train`, batch
    /// normalization uses batch statistics where groups are large enough.
    pub fn forward(
        &self,
        programs: &[&PreparedProgram],
        roots: &[(usize, usize)],
        mode: BnMode,
    ) -> Result<(Tensor, ForwardCache), ModelError> {
        let plan = build_plan(programs, roots, &self.cfg)?;
        let n = plan.nodes.len();
        let (vecs, paths) = if plan.paths.is_empty() {
            (Tensor::zeros(&[0, self.cfg.path_repr]), None)
        } else {
            let (v, c) = self.run_paths(&plan.paths)?;
            (v, Some(c))
        };

        let mut ffn_a = None;
        let mut ctx = Tensor::zeros(&[0, self.cfg.q]);
        if n > 0 {
            let rows: Vec<BlockRow> = plan
                .nodes
                .iter()
                .map(|node| {
                    node.slots
                        .iter()
                        .enumerate()
                        .filter_map(|(s, slot)| slot.context.map(|p| (s, vecs.row(p).to_vec())))
                        .collect()
                })
                .collect();
            let (c, cache) = self.run_ffn(self.ffn_a(), (0..n).collect(), rows, mode)?;
            ctx = c;
            ffn_a = Some(cache);
        }

        let mut reps = vec![Vec::new(); n];
        let mut levels = Vec::with_capacity(plan.levels.len());
        let ctx_block = self.cfg.max_tokens_per_line;
        for level in &plan.levels {
            let rows: Vec<BlockRow> = level
                .iter()
                .map(|&i| {
                    if self.cfg.no_endpoints {
                        return vec![(0, ctx.row(i).to_vec())];
                    }
                    let mut row: BlockRow = plan.nodes[i]
                        .slots
                        .iter()
                        .enumerate()
                        .map(|(s, slot)| (s, self.define_vector(slot.define.expect("define enabled"), &reps).to_vec()))
                        .collect();
                    row.push((ctx_block, ctx.row(i).to_vec()));
                    row
                })
                .collect();
            let (out, cache) = self.run_ffn(self.ffn_b(), level.clone(), rows, mode)?;
            for (r, &i) in level.iter().enumerate() {
                reps[i] = out.row(r).to_vec();
            }
            levels.push(cache);
        }

        let mut logits = Tensor::zeros(&[plan.roots.len(), 2]);
        let mut classifier = None;
        if !plan.roots.is_empty() {
            let rows: Vec<&[f64]> = plan.roots.iter().map(|&r| reps[r].as_slice()).collect();
            let x = Tensor::from_rows(&rows, self.cfg.t);
            let (hid, c1) = self.layers.ffn_c_hidden.forward(&self.store, &x)?;
            let (lg, c2) = self.layers.ffn_c_out.forward(&self.store, &hid)?;
            logits = lg;
            classifier = Some((c1, c2));
        }
        Ok((
            logits,
            ForwardCache {
                plan,
                reps,
                paths,
                ffn_a,
                levels,
                classifier,
            },
        ))
    }

    /// Accumulate parameter gradients for `dlogits` [roots, 2].
    pub fn backward(&mut self, cache: &ForwardCache, dlogits: &Tensor) {
        let Some((c1, c2)) = &cache.classifier else {
            return;
        };
        let plan = &cache.plan;
        let n = plan.nodes.len();
        let dhid = self.layers.ffn_c_out.backward(&mut self.store, c2, dlogits);
        let droots = self.layers.ffn_c_hidden.backward(&mut self.store, c1, &dhid);
        let mut d_rep = vec![vec![0.0; self.cfg.t]; n];
        for (r, &root) in plan.roots.iter().enumerate() {
            axpy(1.0, droots.row(r), &mut d_rep[root]);
        }
        let mut d_ctx = Tensor::zeros(&[n, self.cfg.q]);
        for fc in cache.levels.iter().rev() {
            let rows: Vec<&[f64]> = fc.nodes.iter().map(|&i| d_rep[i].as_slice()).collect();
            let dy = Tensor::from_rows(&rows, self.cfg.t);
            let grads = self.ffn_backward('b', fc, &dy);
            for (r, &i) in fc.nodes.iter().enumerate() {
                let blocks = &grads[r];
                let ctx_grad = blocks.last().expect("context block");
                axpy(1.0, ctx_grad, d_ctx.row_mut(i));
                if self.cfg.no_endpoints {
                    continue;
                }
                for (slot, g) in plan.nodes[i].slots.iter().zip(blocks) {
                    match slot.define.expect("define enabled") {
                        SlotDefine::Undefined => {}
                        SlotDefine::OneHot(k) => {
                            let e = self.layers.e_op.expect("define enabled");
                            axpy(1.0, g, self.store.grad_mut(e).row_mut(k));
                        }
                        SlotDefine::Node(m) => axpy(1.0, g, &mut d_rep[m]),
                    }
                }
            }
        }
        let Some(fa) = &cache.ffn_a else {
            return;
        };
        let grads = self.ffn_backward('a', fa, &d_ctx);
        let Some(pc) = &cache.paths else {
            return;
        };
        let mut dvecs = Tensor::zeros(&[plan.paths.len(), self.cfg.path_repr]);
        for (i, node) in plan.nodes.iter().enumerate() {
            let ctx_slots = node.slots.iter().filter_map(|s| s.context);
            for (p, g) in ctx_slots.zip(&grads[i]) {
                axpy(1.0, g, dvecs.row_mut(p));
            }
        }
        self.backward_paths(plan, pc, &dvecs);
    }

    /// Fold batch statistics from a training pass into the running averages.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        if let Some(fa) = &cache.ffn_a {
            self.layers.ffn_a_bn.update_running(&mut self.store, &fa.bn);
        }
        for fc in &cache.levels {
            self.layers.ffn_b_bn.update_running(&mut self.store, &fc.bn);
        }
    }

    /// Training pass over labeled lines: loss, gradients accumulated into
    /// the store, running statistics updated. `examples` are
    /// (program index, line, label).
    pub fn train_batch(
        &mut self,
        programs: &[&PreparedProgram],
        examples: &[(usize, usize, usize)],
        class_weights: &[f64; 2],
    ) -> Result<BatchResult, ModelError> {
        self.loss_and_grad(programs, examples, class_weights, BnMode::Train, true)
    }

    /// Loss and probabilities; gradients are accumulated when `backward` is
    /// set, running statistics are updated in training mode.
    pub fn loss_and_grad(
        &mut self,
        programs: &[&PreparedProgram],
        examples: &[(usize, usize, usize)],
        class_weights: &[f64; 2],
        mode: BnMode,
        backward: bool,
    ) -> Result<BatchResult, ModelError> {
        let roots: Vec<(usize, usize)> = examples.iter().map(|&(p, l, _)| (p, l)).collect();
        let labels: Vec<usize> = examples.iter().map(|e| e.2).collect();
        let (logits, cache) = self.forward(programs, &roots, mode)?;
        let (loss, dlogits) = weighted_xent(&logits, &labels, class_weights)?;
        if backward {
            self.backward(&cache, &dlogits);
        }
        if mode == BnMode::Train {
            self.update_running_stats(&cache);
        }
        Ok(BatchResult {
            probs: probabilities(&logits),
            loss,
        })
    }

    /// Every labeled line of one program: probabilities and weighted loss;
    /// gradients flow through the whole recursion.
    pub fn forward_program(
        &mut self,
        program: &PreparedProgram,
        labels: &[(usize, usize)],
        class_weights: &[f64; 2],
        mode: BnMode,
    ) -> Result<BatchResult, ModelError> {
        let examples: Vec<(usize, usize, usize)> = labels
            .iter()
            .filter(|&&(line, _)| line <= program.represented_lines())
            .map(|&(line, y)| (0, line, y))
            .collect();
        self.loss_and_grad(&[program], &examples, class_weights, mode, true)
    }

    /// Evaluation-mode line vectors.
    pub fn represent_lines(&self, program: &PreparedProgram, lines: &[usize]) -> Result<Vec<Vec<f64>>, ModelError> {
        let roots: Vec<(usize, usize)> = lines.iter().map(|&l| (0, l)).collect();
        let (_, cache) = self.forward(&[program], &roots, BnMode::Eval)?;
        Ok(cache.plan.roots.iter().map(|&r| cache.reps[r].clone()).collect())
    }

    pub fn represent_line(&self, program: &PreparedProgram, line: usize) -> Result<Vec<f64>, ModelError> {
        Ok(self.represent_lines(program, &[line])?.remove(0))
    }

    /// Evaluation-mode probabilities of the vulnerable class.
    pub fn predict(&self, program: &PreparedProgram, lines: &[usize]) -> Result<Vec<f64>, ModelError> {
        let roots: Vec<(usize, usize)> = lines.iter().map(|&l| (0, l)).collect();
        let (logits, _) = self.forward(&[program], &roots, BnMode::Eval)?;
        Ok(probabilities(&logits))
    }

    /// Probability of the vulnerable class for a line vector.
    pub fn classify_line(&self, rep: &[f64]) -> Result<f64, ModelError> {
        let x = Tensor::from_rows(&[rep], self.cfg.t);
        let (hid, _) = self.layers.ffn_c_hidden.forward(&self.store, &x)?;
        let (logits, _) = self.layers.ffn_c_out.forward(&self.store, &hid)?;
        Ok(probabilities(&logits)[0])
    }

    /// Evaluation-mode fused context for up to `max_tokens_per_line` slots;
    /// `None` slots contribute zero vectors.
    pub fn stage2_context(&self, paths: &[Option<EncodedPath>]) -> Result<Vec<f64>, ModelError> {
        let present: Vec<Vec<usize>> = paths.iter().flatten().map(|p| p.indices.clone()).collect();
        let vecs = if present.is_empty() {
            Tensor::zeros(&[0, self.cfg.path_repr])
        } else {
            self.run_paths(&present)?.0
        };
        let mut row = BlockRow::new();
        let mut k = 0;
        for (s, p) in paths.iter().enumerate().take(self.cfg.max_tokens_per_line) {
            if p.is_some() {
                row.push((s, vecs.row(k).to_vec()));
                k += 1;
            }
        }
        let (out, _) = self.run_ffn(self.ffn_a(), vec![0], vec![row], BnMode::Eval)?;
        Ok(out.row(0).to_vec())
    }
}

/// Softmax probability of class 1 for each logit row.
pub fn probabilities(logits: &Tensor) -> Vec<f64> {
    (0..logits.rows()).map(|i| softmax(logits.row(i))[1]).collect()
}
