//! Graph encoder, level-wise pooling, recipe embedding and the decoder family
//! (causal transformer plus three baselines), built on [`crate::tape`].

mod checkpoint;
mod graph;
mod params;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointMeta, CHECKPOINT_VERSION};
pub use graph::{GraphInput, NODE_FEATURES};
pub use params::{ParamEntry, ParamGroup, ParamStore};

use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::tape::{AttnBlock, Csr, Tape, Var};
use params::{normal, xavier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    /// Causal self-attention, cross-attention to the level sequence, FFN.
    Transformer,
    /// Pooled graph vector plus convolutional recipe summary, final QoR only.
    Mlp,
    /// Same trunk as [`DecoderKind::Mlp`] with one output per step.
    MlpMultitask,
    /// LSTM over the recipe tokens, state initialized from the graph.
    Recurrent,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 4] = [
        DecoderKind::Transformer,
        DecoderKind::Mlp,
        DecoderKind::MlpMultitask,
        DecoderKind::Recurrent,
    ];

    /// Whether the decoder predicts every step rather than only the last.
    pub fn predicts_trajectory(self) -> bool {
        self != DecoderKind::Mlp
    }

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Transformer => "transformer",
            DecoderKind::Mlp => "mlp",
            DecoderKind::MlpMultitask => "mlp_multitask",
            DecoderKind::Recurrent => "recurrent",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        DecoderKind::ALL
            .into_iter()
            .find(|d| d.name() == key)
            .or(match key.as_str() {
                "lstm" => Some(DecoderKind::Recurrent),
                "multitask" => Some(DecoderKind::MlpMultitask),
                _ => None,
            })
            .ok_or_else(|| format!("unknown decoder `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub decoder: DecoderKind,
    /// Node embedding width; the decoder works at twice this width.
    pub d_h: usize,
    pub gcn_layers: usize,
    pub heads: usize,
    pub ffn_width: usize,
    pub blocks: usize,
    pub regressor_hidden: usize,
    pub steps: usize,
    pub d_max: usize,
    pub vocab: usize,
    /// Denominator of the positional-encoding exponent.
    pub pe_denominator: usize,
    /// Mask level rows beyond a circuit's depth in cross-attention.
    pub padding_mask: bool,
    pub conv_kernel: usize,
    pub conv_channels: usize,
    pub mlp_hidden: usize,
}

impl ModelConfig {
    pub fn new(decoder: DecoderKind, steps: usize, d_max: usize) -> Self {
        ModelConfig {
            decoder,
            d_h: 32,
            gcn_layers: 2,
            heads: 4,
            ffn_width: 256,
            blocks: 1,
            regressor_hidden: 32,
            steps,
            d_max,
            vocab: crate::dataset::VOCAB_SIZE,
            pe_denominator: 64,
            padding_mask: false,
            conv_kernel: steps.min(3),
            conv_channels: 16,
            mlp_hidden: 128,
        }
    }

    /// A reduced configuration for tests and gradient checks.
    pub fn tiny(decoder: DecoderKind, steps: usize, d_max: usize) -> Self {
        ModelConfig {
            d_h: 4,
            heads: 2,
            ffn_width: 16,
            regressor_hidden: 4,
            pe_denominator: 8,
            conv_channels: 3,
            mlp_hidden: 6,
            ..ModelConfig::new(decoder, steps, d_max)
        }
    }

    pub fn width(&self) -> usize {
        2 * self.d_h
    }

    /// Number of predicted values per sample.
    pub fn outputs(&self) -> usize {
        if self.decoder.predicts_trajectory() {
            self.steps
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.d_h == 0 || self.gcn_layers == 0 || self.steps == 0 || self.vocab == 0 {
            return bad("d_h, gcn_layers, steps and vocab must be positive");
        }
        if self.heads == 0 || !self.width().is_multiple_of(self.heads) {
            return bad("heads must divide the decoder width");
        }
        if self.pe_denominator == 0 {
            return bad("pe_denominator must be positive");
        }
        match self.decoder {
            DecoderKind::Transformer if self.blocks == 0 || self.ffn_width == 0 || self.regressor_hidden == 0 => {
                bad("transformer needs blocks, ffn_width and regressor_hidden")
            }
            DecoderKind::Mlp | DecoderKind::MlpMultitask
                if self.conv_kernel == 0 || self.conv_kernel > self.steps || self.conv_channels == 0 || self.mlp_hidden == 0 =>
            {
                bad("conv_kernel must be in 1..=steps and MLP widths positive")
            }
            DecoderKind::Recurrent if self.regressor_hidden == 0 => bad("regressor_hidden must be positive"),
            _ => Ok(()),
        }
    }
}

/// Sinusoidal position table, `steps × width`.
pub fn positional_encoding(steps: usize, width: usize, denominator: usize) -> Array2<f64> {
    let mut pe = Array2::zeros((steps, width));
    for m in 0..steps {
        for c in 0..width {
            let k = c / 2;
            let angle = m as f64 / 10000f64.powf(k as f64 / denominator as f64);
            pe[[m, c]] = if c % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    pe
}

/// Level-wise `[mean | max]` pooling of node embeddings, zero rows for
/// levels beyond the graph's depth up to `d_max`.
pub fn level_pool(h: &Array2<f64>, levels: &[Vec<usize>], d_max: usize) -> Array2<f64> {
    let mut tape = Tape::new();
    let x = tape.input(h.clone());
    let segs = (0..=d_max).map(|l| levels.get(l).cloned().unwrap_or_default()).collect();
    let y = tape.segment_pool(x, Rc::new(segs));
    tape.value(y).clone()
}

/// One model input: a preprocessed circuit and a token sequence.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub graph: &'a GraphInput,
    pub tokens: &'a [usize],
}

/// Handles into the tape produced by a batched forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// `batch × outputs`, normalized QoR.
    pub pred: Var,
    /// Node embeddings of the distinct graphs, stacked.
    pub node_embeddings: Var,
    /// Per block: self-attention and cross-attention nodes.
    pub self_attention: Vec<Var>,
    pub cross_attention: Vec<Var>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamStore,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamStore::new();
        let (dh, w) = (config.d_h, config.width());
        let bias = |n: usize| Array2::zeros((1, n));
        let mut fan_in = NODE_FEATURES;
        for l in 0..config.gcn_layers {
            p.add(format!("gcn.{l}.w"), ParamGroup::GraphEncoder, xavier(&mut rng, fan_in, dh));
            p.add(format!("gcn.{l}.b"), ParamGroup::GraphEncoder, bias(dh));
            fan_in = dh;
        }
        p.add("token_table", ParamGroup::RecipeEncoder, normal(&mut rng, config.vocab, w));
        match config.decoder {
            DecoderKind::Transformer => {
                for b in 0..config.blocks {
                    for att in ["self", "cross"] {
                        for m in ["wq", "wk", "wv", "wo"] {
                            p.add(format!("block{b}.{att}.{m}"), ParamGroup::Decoder, xavier(&mut rng, w, w));
                        }
                    }
                    for ln in 1..=3 {
                        p.add(format!("block{b}.ln{ln}.gamma"), ParamGroup::Decoder, Array2::ones((1, w)));
                        p.add(format!("block{b}.ln{ln}.beta"), ParamGroup::Decoder, bias(w));
                    }
                    p.add(format!("block{b}.ffn.w1"), ParamGroup::Decoder, xavier(&mut rng, w, config.ffn_width));
                    p.add(format!("block{b}.ffn.b1"), ParamGroup::Decoder, bias(config.ffn_width));
                    p.add(format!("block{b}.ffn.w2"), ParamGroup::Decoder, xavier(&mut rng, config.ffn_width, w));
                    p.add(format!("block{b}.ffn.b2"), ParamGroup::Decoder, bias(w));
                }
                add_regressor(&mut p, &mut rng, &config);
            }
            DecoderKind::Mlp | DecoderKind::MlpMultitask => {
                let (k, c) = (config.conv_kernel, config.conv_channels);
                p.add("conv.w", ParamGroup::RecipeEncoder, xavier(&mut rng, k * w, c));
                p.add("conv.b", ParamGroup::RecipeEncoder, bias(c));
                let summary = (config.steps - k + 1) * c;
                p.add("trunk.w1", ParamGroup::Decoder, xavier(&mut rng, w + summary, config.mlp_hidden));
                p.add("trunk.b1", ParamGroup::Decoder, bias(config.mlp_hidden));
                p.add("trunk.w2", ParamGroup::Decoder, xavier(&mut rng, config.mlp_hidden, w));
                p.add("trunk.b2", ParamGroup::Decoder, bias(w));
                p.add("head.w", ParamGroup::Regressor, xavier(&mut rng, w, config.outputs()));
                p.add("head.b", ParamGroup::Regressor, bias(config.outputs()));
            }
            DecoderKind::Recurrent => {
                p.add("init.w", ParamGroup::Decoder, xavier(&mut rng, w, w));
                p.add("init.b", ParamGroup::Decoder, bias(w));
                p.add("lstm.wx", ParamGroup::Decoder, xavier(&mut rng, w, 4 * w));
                p.add("lstm.wh", ParamGroup::Decoder, xavier(&mut rng, w, 4 * w));
                let mut b = bias(4 * w);
                b.slice_mut(ndarray::s![.., w..2 * w]).fill(1.0);
                p.add("lstm.b", ParamGroup::Decoder, b);
                add_regressor(&mut p, &mut rng, &config);
            }
        }
        Ok(Model { config, params: p })
    }

    fn param(&self, tape: &mut Tape, name: &str) -> Result<Var, ModelError> {
        let id = self.params.id(name)?;
        Ok(tape.param(id, &self.params.entry(id).value))
    }

    fn linear(&self, tape: &mut Tape, x: Var, w: &str, b: Option<&str>) -> Result<Var, ModelError> {
        let wv = self.param(tape, w)?;
        let y = tape.matmul(x, wv);
        match b {
            Some(b) => {
                let bv = self.param(tape, b)?;
                Ok(tape.add_bias(y, bv))
            }
            None => Ok(y),
        }
    }

    fn check(&self, batch: &[Sample]) -> Result<(), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::Config("empty batch".into()));
        }
        for s in batch {
            if s.tokens.len() != self.config.steps {
                return Err(ModelError::StepMismatch {
                    expected: self.config.steps,
                    got: s.tokens.len(),
                });
            }
            if let Some(&t) = s.tokens.iter().find(|&&t| t >= self.config.vocab) {
                return Err(ModelError::TokenOutOfRange {
                    token: t,
                    vocab: self.config.vocab,
                });
            }
            if self.config.decoder == DecoderKind::Transformer && s.graph.depth > self.config.d_max {
                return Err(ModelError::DepthExceeded {
                    depth: s.graph.depth,
                    d_max: self.config.d_max,
                });
            }
        }
        Ok(())
    }

    /// GCN over the distinct graphs of a batch, stacked block-diagonally.
    fn encode_graphs(&self, tape: &mut Tape, graphs: &[&GraphInput]) -> Result<Var, ModelError> {
        let ax = if graphs.len() == 1 {
            graphs[0].ax.clone()
        } else {
            let views: Vec<_> = graphs.iter().map(|g| g.ax.view()).collect();
            ndarray::concatenate(ndarray::Axis(0), &views).expect("feature widths agree")
        };
        let ax = tape.input(ax);
        let mut h = self.linear(tape, ax, "gcn.0.w", Some("gcn.0.b"))?;
        if self.config.gcn_layers > 1 {
            let adj = if graphs.len() == 1 {
                Rc::new(graphs[0].adj.clone())
            } else {
                let parts: Vec<&Csr> = graphs.iter().map(|g| &g.adj).collect();
                Rc::new(Csr::block_diag(&parts))
            };
            for l in 1..self.config.gcn_layers {
                h = tape.relu(h);
                let w = self.param(tape, &format!("gcn.{l}.w"))?;
                let hw = tape.matmul(h, w);
                let agg = tape.spmm(adj.clone(), hw);
                let b = self.param(tape, &format!("gcn.{l}.b"))?;
                h = tape.add_bias(agg, b);
            }
        }
        Ok(h)
    }

    /// Node embeddings of a single graph (`N × d_h`).
    pub fn encode_graph(&self, graph: &GraphInput) -> Result<Array2<f64>, ModelError> {
        let mut tape = Tape::new();
        let h = self.encode_graphs(&mut tape, &[graph])?;
        Ok(tape.value(h).clone())
    }

    /// Level sequence of a single graph (`(d_max + 1) × 2 d_h`), zero padded.
    pub fn level_sequence(&self, graph: &GraphInput) -> Result<Array2<f64>, ModelError> {
        if graph.depth > self.config.d_max {
            return Err(ModelError::DepthExceeded {
                depth: graph.depth,
                d_max: self.config.d_max,
            });
        }
        let mut tape = Tape::new();
        let h = self.encode_graphs(&mut tape, &[graph])?;
        let segs = level_segments(&[graph], &[0], self.config.d_max);
        let pooled = tape.segment_pool(h, Rc::new(segs));
        Ok(tape.value(pooled).clone())
    }

    /// Batched forward pass. Samples sharing a graph (by address) share its
    /// encoding; grouping such samples contiguously also shares keys in
    /// cross-attention.
    pub fn forward(&self, tape: &mut Tape, batch: &[Sample]) -> Result<Forward, ModelError> {
        self.check(batch)?;
        let mut graphs: Vec<&GraphInput> = Vec::new();
        let mut slot = Vec::with_capacity(batch.len());
        for s in batch {
            let i = match graphs.iter().position(|g| std::ptr::eq(*g, s.graph)) {
                Some(i) => i,
                None => {
                    graphs.push(s.graph);
                    graphs.len() - 1
                }
            };
            slot.push(i);
        }
        let mut offsets = Vec::with_capacity(graphs.len());
        let mut total = 0;
        for g in &graphs {
            offsets.push(total);
            total += g.num_nodes;
        }
        let h = self.encode_graphs(tape, &graphs)?;
        let token_index: Vec<usize> = batch.iter().flat_map(|s| s.tokens.iter().copied()).collect();
        let table = self.param(tape, "token_table")?;
        let emb = tape.gather_rows(table, Rc::new(token_index));
        let mut fwd = Forward {
            pred: h,
            node_embeddings: h,
            self_attention: Vec::new(),
            cross_attention: Vec::new(),
        };
        fwd.pred = match self.config.decoder {
            DecoderKind::Transformer => {
                let levels = tape.segment_pool(h, Rc::new(level_segments(&graphs, &offsets, self.config.d_max)));
                self.transformer(tape, batch, &graphs, &slot, emb, levels, &mut fwd)?
            }
            DecoderKind::Mlp | DecoderKind::MlpMultitask => {
                let gvec = self.graph_vectors(tape, h, &graphs, &offsets, &slot);
                self.mlp(tape, batch.len(), gvec, emb)?
            }
            DecoderKind::Recurrent => {
                let gvec = self.graph_vectors(tape, h, &graphs, &offsets, &slot);
                self.recurrent(tape, batch.len(), gvec, emb)?
            }
        };
        Ok(fwd)
    }

    /// Global `[mean | max]` pooling of each sample's graph, `batch × 2 d_h`.
    fn graph_vectors(&self, tape: &mut Tape, h: Var, graphs: &[&GraphInput], offsets: &[usize], slot: &[usize]) -> Var {
        let segs: Vec<Vec<usize>> = graphs
            .iter()
            .zip(offsets)
            .map(|(g, &o)| (o..o + g.num_nodes).collect())
            .collect();
        let pooled = tape.segment_pool(h, Rc::new(segs));
        tape.gather_rows(pooled, Rc::new(slot.to_vec()))
    }

    #[allow(clippy::too_many_arguments)]
    fn transformer(
        &self,
        tape: &mut Tape,
        batch: &[Sample],
        graphs: &[&GraphInput],
        slot: &[usize],
        emb: Var,
        levels: Var,
        fwd: &mut Forward,
    ) -> Result<Var, ModelError> {
        let cfg = &self.config;
        let (m, w, l) = (cfg.steps, cfg.width(), cfg.d_max + 1);
        let pe = positional_encoding(m, w, cfg.pe_denominator);
        let pe_views: Vec<_> = (0..batch.len()).map(|_| pe.view()).collect();
        let pe = tape.input(ndarray::concatenate(ndarray::Axis(0), &pe_views).expect("same widths"));
        let mut x = tape.add(emb, pe);
        let self_blocks: Rc<Vec<AttnBlock>> = Rc::new((0..batch.len()).map(|i| AttnBlock::causal(i * m..(i + 1) * m)).collect());
        let mut cross = Vec::new();
        let mut i = 0;
        while i < batch.len() {
            let mut j = i + 1;
            while j < batch.len() && slot[j] == slot[i] {
                j += 1;
            }
            let s = slot[i];
            let mut blk = AttnBlock::full(i * m..j * m, s * l..(s + 1) * l);
            if cfg.padding_mask {
                blk.valid_keys = graphs[s].depth + 1;
            }
            cross.push(blk);
            i = j;
        }
        let cross_blocks = Rc::new(cross);
        for b in 0..cfg.blocks {
            let p = |n: &str| format!("block{b}.{n}");
            let q = self.linear(tape, x, &p("self.wq"), None)?;
            let k = self.linear(tape, x, &p("self.wk"), None)?;
            let v = self.linear(tape, x, &p("self.wv"), None)?;
            let a = tape.attention(q, k, v, cfg.heads, self_blocks.clone());
            fwd.self_attention.push(a);
            let o = self.linear(tape, a, &p("self.wo"), None)?;
            let r = tape.add(x, o);
            x = self.layer_norm(tape, r, &p("ln1"))?;

            let q = self.linear(tape, x, &p("cross.wq"), None)?;
            let k = self.linear(tape, levels, &p("cross.wk"), None)?;
            let v = self.linear(tape, levels, &p("cross.wv"), None)?;
            let a = tape.attention(q, k, v, cfg.heads, cross_blocks.clone());
            fwd.cross_attention.push(a);
            let o = self.linear(tape, a, &p("cross.wo"), None)?;
            let r = tape.add(x, o);
            x = self.layer_norm(tape, r, &p("ln2"))?;

            let f = self.linear(tape, x, &p("ffn.w1"), Some(&p("ffn.b1")))?;
            let f = tape.relu(f);
            let f = self.linear(tape, f, &p("ffn.w2"), Some(&p("ffn.b2")))?;
            let r = tape.add(x, f);
            x = self.layer_norm(tape, r, &p("ln3"))?;
        }
        let y = self.regress(tape, x)?;
        Ok(tape.reshape(y, batch.len(), m))
    }

    fn layer_norm(&self, tape: &mut Tape, x: Var, prefix: &str) -> Result<Var, ModelError> {
        let g = self.param(tape, &format!("{prefix}.gamma"))?;
        let b = self.param(tape, &format!("{prefix}.beta"))?;
        Ok(tape.layer_norm(x, g, b))
    }

    /// Shared per-step MLP, `rows × 1`.
    fn regress(&self, tape: &mut Tape, x: Var) -> Result<Var, ModelError> {
        let r = self.linear(tape, x, "regressor.w1", Some("regressor.b1"))?;
        let r = tape.relu(r);
        self.linear(tape, r, "regressor.w2", Some("regressor.b2"))
    }

    fn mlp(&self, tape: &mut Tape, n: usize, gvec: Var, emb: Var) -> Result<Var, ModelError> {
        let cfg = &self.config;
        let (m, w, k) = (cfg.steps, cfg.width(), cfg.conv_kernel);
        let windows = m - k + 1;
        let idx: Vec<usize> = (0..n)
            .flat_map(|i| (0..windows).flat_map(move |s| (0..k).map(move |j| i * m + s + j)))
            .collect();
        let patches = tape.gather_rows(emb, Rc::new(idx));
        let patches = tape.reshape(patches, n * windows, k * w);
        let c = self.linear(tape, patches, "conv.w", Some("conv.b"))?;
        let c = tape.relu(c);
        let summary = tape.reshape(c, n, windows * cfg.conv_channels);
        let x = tape.concat_cols(&[gvec, summary]);
        let x = self.linear(tape, x, "trunk.w1", Some("trunk.b1"))?;
        let x = tape.relu(x);
        let x = self.linear(tape, x, "trunk.w2", Some("trunk.b2"))?;
        let x = tape.relu(x);
        self.linear(tape, x, "head.w", Some("head.b"))
    }

    fn recurrent(&self, tape: &mut Tape, n: usize, gvec: Var, emb: Var) -> Result<Var, ModelError> {
        let (m, w) = (self.config.steps, self.config.width());
        let init = self.linear(tape, gvec, "init.w", Some("init.b"))?;
        let mut h = tape.tanh(init);
        let mut c = tape.input(Array2::zeros((n, w)));
        let wx = self.param(tape, "lstm.wx")?;
        let wh = self.param(tape, "lstm.wh")?;
        let b = self.param(tape, "lstm.b")?;
        let mut outs = Vec::with_capacity(m);
        for k in 0..m {
            let x = tape.gather_rows(emb, Rc::new((0..n).map(|i| i * m + k).collect()));
            let gx = tape.matmul(x, wx);
            let gh = tape.matmul(h, wh);
            let g = tape.add(gx, gh);
            let g = tape.add_bias(g, b);
            let i_s = tape.slice_cols(g, 0..w);
            let f_s = tape.slice_cols(g, w..2 * w);
            let g_s = tape.slice_cols(g, 2 * w..3 * w);
            let o_s = tape.slice_cols(g, 3 * w..4 * w);
            let (ig, fg, gg, og) = (tape.sigmoid(i_s), tape.sigmoid(f_s), tape.tanh(g_s), tape.sigmoid(o_s));
            let keep = tape.mul(fg, c);
            let write = tape.mul(ig, gg);
            c = tape.add(keep, write);
            let tc = tape.tanh(c);
            h = tape.mul(og, tc);
            outs.push(self.regress(tape, h)?);
        }
        Ok(tape.concat_cols(&outs))
    }

    /// Normalized predictions for a batch, one row per sample.
    pub fn predict_batch(&self, batch: &[Sample]) -> Result<Array2<f64>, ModelError> {
        let mut tape = Tape::new();
        let f = self.forward(&mut tape, batch)?;
        Ok(tape.value(f.pred).clone())
    }

    /// Normalized predictions for one sample (`outputs()` values).
    pub fn predict(&self, graph: &GraphInput, tokens: &[usize]) -> Result<Vec<f64>, ModelError> {
        Ok(self.predict_batch(&[Sample { graph, tokens }])?.row(0).to_vec())
    }
}

fn add_regressor(p: &mut ParamStore, rng: &mut ChaCha8Rng, config: &ModelConfig) {
    let (w, r) = (config.width(), config.regressor_hidden);
    p.add("regressor.w1", ParamGroup::Regressor, xavier(rng, w, r));
    p.add("regressor.b1", ParamGroup::Regressor, Array2::zeros((1, r)));
    p.add("regressor.w2", ParamGroup::Regressor, xavier(rng, r, 1));
    p.add("regressor.b2", ParamGroup::Regressor, Array2::zeros((1, 1)));
}

/// Segments for level pooling: `d_max + 1` rows per graph, empty beyond
/// the graph's depth.
fn level_segments(graphs: &[&GraphInput], offsets: &[usize], d_max: usize) -> Vec<Vec<usize>> {
    let mut segs = Vec::with_capacity(graphs.len() * (d_max + 1));
    for (g, &o) in graphs.iter().zip(offsets) {
        for l in 0..=d_max {
            segs.push(g.levels.get(l).map_or_else(Vec::new, |lv| lv.iter().map(|&n| n + o).collect()));
        }
    }
    segs
}
