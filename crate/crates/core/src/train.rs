//! Joint trajectory loss, MAPE, Adam training with early stopping, freeze
//! modes and evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Normalizer, Split};
use crate::error::TrainError;
use crate::model::{DecoderKind, GraphInput, Model, ModelConfig, ParamGroup, Sample};
use crate::tape::Tape;

const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Every step of the trajectory is supervised.
    Trajectory,
    FinalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezeMode {
    None,
    FreezeGraphEncoder,
    FreezeRecipeEncoder,
    FreezeBoth,
}

impl FreezeMode {
    pub fn is_frozen(self, group: ParamGroup) -> bool {
        matches!(
            (self, group),
            (FreezeMode::FreezeGraphEncoder | FreezeMode::FreezeBoth, ParamGroup::GraphEncoder)
                | (FreezeMode::FreezeRecipeEncoder | FreezeMode::FreezeBoth, ParamGroup::RecipeEncoder)
        )
    }
}

macro_rules! snake_enum_str {
    ($t:ty { $($v:ident => $s:literal),* $(,)? }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(<$t>::$v => $s),* })
            }
        }

        impl FromStr for $t {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.to_ascii_lowercase().replace('-', "_").as_str() {
                    $($s => Ok(<$t>::$v),)*
                    other => Err(format!("unknown value `{other}`")),
                }
            }
        }
    };
}

snake_enum_str!(LossMode { Trajectory => "trajectory", FinalOnly => "final_only" });
snake_enum_str!(FreezeMode {
    None => "none",
    FreezeGraphEncoder => "freeze_graph_encoder",
    FreezeRecipeEncoder => "freeze_recipe_encoder",
    FreezeBoth => "freeze_both",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Optional cap on optimizer steps across all epochs.
    pub max_steps: Option<usize>,
    pub seed: u64,
    pub loss_mode: LossMode,
    pub decoder: DecoderKind,
    pub freeze_mode: FreezeMode,
    /// Return the last model instead of the best-validation one; disables
    /// early stopping.
    #[serde(default)]
    pub keep_last: bool,
}

impl TrainConfig {
    pub fn new(decoder: DecoderKind, loss_mode: LossMode, seed: u64) -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            patience: 20,
            max_steps: None,
            seed,
            loss_mode,
            decoder,
            freeze_mode: FreezeMode::None,
            keep_last: false,
        }
    }

    /// The untrained model a run with this configuration starts from.
    pub fn initial_model(&self, model_cfg: &ModelConfig) -> Result<Model, TrainError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(STREAM_INIT);
        Ok(Model::new(model_cfg.clone(), rand::Rng::gen(&mut rng))?)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 || self.max_steps == Some(0) {
            return Err(TrainError::Config("batch size, epochs, patience and step cap must be positive".into()));
        }
        Ok(())
    }
}

/// Mean over rows of the per-row sum of squared errors. In final-only mode
/// only the last column counts.
pub fn joint_loss(pred: &Array2<f64>, target: &Array2<f64>, mode: LossMode) -> Result<f64, TrainError> {
    if pred.dim() != target.dim() || pred.nrows() == 0 || pred.ncols() == 0 {
        return Err(TrainError::Config(format!(
            "prediction shape {:?} does not match target shape {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let w = loss_weights(pred.nrows(), pred.ncols(), mode);
    let total: f64 = ndarray::Zip::from(pred).and(target).and(&w).fold(0.0, |acc, &p, &t, &w| acc + w * (p - t) * (p - t));
    Ok(total / pred.nrows() as f64)
}

fn loss_weights(rows: usize, cols: usize, mode: LossMode) -> Array2<f64> {
    match mode {
        LossMode::Trajectory => Array2::ones((rows, cols)),
        LossMode::FinalOnly => Array2::from_shape_fn((rows, cols), |(_, c)| if c + 1 == cols { 1.0 } else { 0.0 }),
    }
}

/// Mean absolute percentage error, in percent.
pub fn mape(pred: &[f64], truth: &[f64]) -> Result<f64, TrainError> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(TrainError::Config("MAPE needs equal, non-empty inputs".into()));
    }
    let mut total = 0.0;
    for (&p, &t) in pred.iter().zip(truth) {
        if t == 0.0 {
            return Err(TrainError::ZeroGroundTruth {
                circuit_id: usize::MAX,
                recipe_id: usize::MAX,
            });
        }
        total += ((p - t) / t).abs();
    }
    Ok(100.0 * total / pred.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_mape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train_mape: f64,
    pub val_mape: f64,
    /// Validation MAPE per step; `None` for steps the decoder does not predict.
    pub per_step_val_mape: Vec<Option<f64>>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub steps_run: usize,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_mape_curve: Vec<f64>,
    /// Validation final-step MAPE per circuit id.
    pub per_circuit_val_mape: BTreeMap<usize, f64>,
}

/// Predictions and metrics on a set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Raw-space predictions, one row per sample, `outputs` columns.
    pub predictions: Vec<Vec<f64>>,
    /// Final-step MAPE.
    pub mape: f64,
    pub per_step_mape: Vec<Option<f64>>,
    pub per_circuit_mape: BTreeMap<usize, f64>,
    /// Joint loss in normalized space under the evaluated loss mode.
    pub loss: f64,
}

/// A dataset with a fixed split, its normalizer and precomputed graph inputs.
pub struct Experiment<'a> {
    pub dataset: &'a Dataset,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub normalizer: Normalizer,
    pub graphs: Vec<GraphInput>,
}

impl<'a> Experiment<'a> {
    pub fn new(dataset: &'a Dataset, split: &Split) -> Result<Self, TrainError> {
        Self::with_indices(dataset, split.train.clone(), split.val.clone())
    }

    /// Uses explicit sample indices; the normalizer is fitted on `train`.
    pub fn with_indices(dataset: &'a Dataset, train: Vec<usize>, val: Vec<usize>) -> Result<Self, TrainError> {
        if train.is_empty() || val.is_empty() {
            return Err(TrainError::Config("train and validation sets must be non-empty".into()));
        }
        if let Some(&bad) = train.iter().chain(&val).find(|&&i| i >= dataset.samples.len()) {
            return Err(TrainError::Config(format!("sample index {bad} out of range")));
        }
        let finals: Vec<f64> = train.iter().map(|&i| dataset.samples[i].final_qor()).collect();
        let normalizer = Normalizer::fit(&finals)?;
        for &i in train.iter().chain(&val) {
            let s = &dataset.samples[i];
            if s.trajectory.values.contains(&0.0) {
                return Err(TrainError::ZeroGroundTruth {
                    circuit_id: s.circuit_id,
                    recipe_id: s.recipe_id,
                });
            }
        }
        let graphs = dataset.circuits.iter().map(|c| GraphInput::new(&c.graph)).collect();
        Ok(Experiment {
            dataset,
            train,
            val,
            normalizer,
            graphs,
        })
    }

    /// Default model configuration for this dataset.
    pub fn model_config(&self, decoder: DecoderKind) -> ModelConfig {
        let d_max = self.graphs.iter().map(|g| g.depth).max().unwrap_or(0);
        ModelConfig::new(decoder, self.dataset.steps(), d_max)
    }

    fn samples(&self, idx: &[usize]) -> Vec<Sample<'_>> {
        idx.iter()
            .map(|&i| {
                let s = &self.dataset.samples[i];
                Sample {
                    graph: &self.graphs[s.circuit_id],
                    tokens: &self.dataset.recipe(s.recipe_id).steps,
                }
            })
            .collect()
    }

    fn targets(&self, idx: &[usize], outputs: usize) -> Array2<f64> {
        let m = self.dataset.steps();
        Array2::from_shape_fn((idx.len(), outputs), |(r, c)| {
            let v = &self.dataset.samples[idx[r]].trajectory.values;
            self.normalizer.normalize(v[m - outputs + c])
        })
    }

    /// Sample indices reordered so samples of one circuit are adjacent.
    fn grouped(&self, idx: &[usize]) -> Vec<usize> {
        let mut v = idx.to_vec();
        v.sort_by_key(|&i| self.dataset.samples[i].circuit_id);
        v
    }

    /// Mean-predictor baseline: the training mean of final QoR.
    pub fn mean_predictor_mape(&self, idx: &[usize]) -> Result<f64, TrainError> {
        let truth: Vec<f64> = idx.iter().map(|&i| self.dataset.samples[i].final_qor()).collect();
        mape(&vec![self.normalizer.mean; truth.len()], &truth)
    }

    pub fn evaluate(&self, model: &Model, idx: &[usize], mode: LossMode) -> Result<Evaluation, TrainError> {
        if idx.is_empty() {
            return Err(TrainError::Config("cannot evaluate an empty set".into()));
        }
        let m = self.dataset.steps();
        let outputs = model.config.outputs();
        let order = self.grouped(idx);
        let mut pred_norm = Array2::zeros((order.len(), outputs));
        for (c, chunk) in order.chunks(64).enumerate() {
            let p = model.predict_batch(&self.samples(chunk))?;
            pred_norm.slice_mut(ndarray::s![c * 64..c * 64 + chunk.len(), ..]).assign(&p);
        }
        let loss = joint_loss(&pred_norm, &self.targets(&order, outputs), mode)?;
        let raw = pred_norm.mapv(|y| self.normalizer.denormalize(y));
        let mut per_step = vec![None; m];
        for (c, slot) in per_step.iter_mut().enumerate().skip(m - outputs) {
            let col = c + outputs - m;
            let truth: Vec<f64> = order.iter().map(|&i| self.dataset.samples[i].trajectory.values[c]).collect();
            *slot = Some(mape(&raw.column(col).to_vec(), &truth)?);
        }
        let mut per_circuit: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for (r, &i) in order.iter().enumerate() {
            let s = &self.dataset.samples[i];
            let e = per_circuit.entry(s.circuit_id).or_insert((0.0, 0));
            e.0 += ((raw[[r, outputs - 1]] - s.final_qor()) / s.final_qor()).abs();
            e.1 += 1;
        }
        let mut predictions = vec![Vec::new(); order.len()];
        let pos: BTreeMap<usize, usize> = idx.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        for (r, &i) in order.iter().enumerate() {
            predictions[pos[&i]] = raw.row(r).to_vec();
        }
        Ok(Evaluation {
            predictions,
            mape: per_step[m - 1].expect("last step is always predicted"),
            per_step_mape: per_step,
            per_circuit_mape: per_circuit.into_iter().map(|(k, (s, n))| (k, 100.0 * s / n as f64)).collect(),
            loss,
        })
    }

    /// Trains from a fresh initialization (or from `init`) and returns the
    /// best-validation model with its report.
    pub fn train(&self, cfg: &TrainConfig, model_cfg: &ModelConfig, init: Option<&Model>) -> Result<(Model, EvalReport), TrainError> {
        self.train_with(cfg, model_cfg, init, |_| {})
    }

    pub fn train_with(
        &self,
        cfg: &TrainConfig,
        model_cfg: &ModelConfig,
        init: Option<&Model>,
        mut on_epoch: impl FnMut(&EpochRecord),
    ) -> Result<(Model, EvalReport), TrainError> {
        cfg.validate()?;
        if model_cfg.decoder != cfg.decoder {
            return Err(TrainError::Config(format!(
                "decoder mismatch: training {} but model is {}",
                cfg.decoder, model_cfg.decoder
            )));
        }
        if model_cfg.steps != self.dataset.steps() {
            return Err(TrainError::Config("model steps differ from dataset recipe length".into()));
        }
        let mut model = match init {
            Some(m) if m.config == *model_cfg => m.clone(),
            Some(_) => return Err(TrainError::Config("initial model has a different configuration".into())),
            None => cfg.initial_model(model_cfg)?,
        };
        let outputs = model_cfg.outputs();
        let mut shuffle = ChaCha8Rng::seed_from_u64(cfg.seed);
        shuffle.set_stream(STREAM_SHUFFLE);
        let mut adam = Adam::new(&model, cfg.learning_rate);
        let trainable: Vec<bool> = model.params.entries().iter().map(|e| !cfg.freeze_mode.is_frozen(e.group)).collect();

        let mut best = (f64::INFINITY, model.clone(), 0usize);
        let mut report = EvalReport {
            train_mape: f64::NAN,
            val_mape: f64::NAN,
            per_step_val_mape: Vec::new(),
            best_epoch: 0,
            epochs_run: 0,
            steps_run: 0,
            train_loss: Vec::new(),
            val_loss: Vec::new(),
            val_mape_curve: Vec::new(),
            per_circuit_val_mape: BTreeMap::new(),
        };
        let mut order = self.train.clone();
        'epochs: for epoch in 0..cfg.max_epochs {
            order.shuffle(&mut shuffle);
            let (mut loss_sum, mut batches) = (0.0, 0usize);
            for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
                let idx = self.grouped(chunk);
                let mut tape = Tape::new();
                let fwd = model.forward(&mut tape, &self.samples(&idx))?;
                let loss = tape.sq_err(
                    fwd.pred,
                    self.targets(&idx, outputs),
                    loss_weights(idx.len(), outputs, cfg.loss_mode),
                    1.0 / idx.len() as f64,
                );
                let value = tape.scalar(loss);
                if !value.is_finite() {
                    return Err(TrainError::Divergence { epoch, batch: b });
                }
                let grads = tape.backward(loss, model.params.len());
                adam.step(&mut model, &grads, &trainable);
                loss_sum += value;
                batches += 1;
                report.steps_run += 1;
                if cfg.max_steps.is_some_and(|s| report.steps_run >= s) {
                    self.finish_epoch(&model, cfg, epoch, loss_sum / batches as f64, &mut report, &mut best, &mut on_epoch)?;
                    break 'epochs;
                }
            }
            let stop = self.finish_epoch(&model, cfg, epoch, loss_sum / batches as f64, &mut report, &mut best, &mut on_epoch)?;
            if stop {
                break;
            }
        }
        let (_, best_model, best_epoch) = best;
        let val = self.evaluate(&best_model, &self.val, cfg.loss_mode)?;
        report.best_epoch = best_epoch;
        report.val_mape = val.mape;
        report.per_step_val_mape = val.per_step_mape;
        report.per_circuit_val_mape = val.per_circuit_mape;
        report.train_mape = self.evaluate(&best_model, &self.train, cfg.loss_mode)?.mape;
        Ok((best_model, report))
    }

    /// Records an epoch and updates the best model. Returns whether the
    /// patience budget is exhausted.
    #[allow(clippy::too_many_arguments)]
    fn finish_epoch(
        &self,
        model: &Model,
        cfg: &TrainConfig,
        epoch: usize,
        train_loss: f64,
        report: &mut EvalReport,
        best: &mut (f64, Model, usize),
        on_epoch: &mut impl FnMut(&EpochRecord),
    ) -> Result<bool, TrainError> {
        let val = self.evaluate(model, &self.val, cfg.loss_mode)?;
        if !val.loss.is_finite() {
            return Err(TrainError::Divergence { epoch, batch: usize::MAX });
        }
        report.epochs_run = epoch + 1;
        report.train_loss.push(train_loss);
        report.val_loss.push(val.loss);
        report.val_mape_curve.push(val.mape);
        on_epoch(&EpochRecord {
            epoch,
            steps: report.steps_run,
            train_loss,
            val_loss: val.loss,
            val_mape: val.mape,
        });
        if val.mape < best.0 || cfg.keep_last {
            *best = (val.mape, model.clone(), epoch);
        }
        Ok(epoch - best.2 >= cfg.patience)
    }
}

/// Adam with the usual defaults (β1 0.9, β2 0.999, ε 1e-8).
struct Adam {
    lr: f64,
    t: i32,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &Model, lr: f64) -> Self {
        let zeros: Vec<Array2<f64>> = model.params.entries().iter().map(|e| Array2::zeros(e.value.dim())).collect();
        Adam {
            lr,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    fn step(&mut self, model: &mut Model, grads: &[Option<Array2<f64>>], trainable: &[bool]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let step = self.lr * c2.sqrt() / c1;
        for (id, g) in grads.iter().enumerate() {
            let Some(g) = g else { continue };
            if !trainable[id] {
                continue;
            }
            let (m, v) = (&mut self.m[id], &mut self.v[id]);
            ndarray::Zip::from(model.params.value_mut(id)).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = Self::B1 * *m + (1.0 - Self::B1) * g;
                *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
                *p -= step * *m / (v.sqrt() + Self::EPS * c2.sqrt());
            });
        }
    }
}
