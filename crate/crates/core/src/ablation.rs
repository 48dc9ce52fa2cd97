//! Ablation grids: supervision × decoder, decoder family, and encoder
//! probing. Identical (cell, seed) runs are trained once and shared across
//! tables.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::TrainError;
use crate::model::{DecoderKind, Model, ModelConfig};
use crate::train::{EvalReport, Experiment, FreezeMode, LossMode, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationTable {
    /// Frozen / random encoders against supervised training.
    EncoderProbing,
    /// Final-only versus trajectory supervision, MLP versus transformer.
    Supervision,
    /// Four decoder families, trajectory supervision where applicable.
    Decoders,
}

impl AblationTable {
    pub const ALL: [AblationTable; 3] = [AblationTable::EncoderProbing, AblationTable::Supervision, AblationTable::Decoders];

    /// The table number used on the command line.
    pub fn number(self) -> u8 {
        match self {
            AblationTable::EncoderProbing => 3,
            AblationTable::Supervision => 4,
            AblationTable::Decoders => 5,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.number() == n)
    }

    pub fn cells(self) -> Vec<Cell> {
        use DecoderKind::*;
        use FreezeMode::*;
        use LossMode::*;
        match self {
            AblationTable::EncoderProbing => vec![
                Cell::new("Random Freeze", Transformer, FinalOnly, FreezeBoth),
                Cell::new("Random AIG Enc.", Transformer, Trajectory, FreezeGraphEncoder),
                Cell::new("Random recipe Enc.", Transformer, Trajectory, FreezeRecipeEncoder),
                Cell {
                    pretrained: true,
                    ..Cell::new("Freezed LSOformer", Transformer, FinalOnly, FreezeBoth)
                },
                Cell::new("Supervised baseline", Mlp, FinalOnly, None),
                Cell::new("Supervised LSOformer", Transformer, Trajectory, None),
            ],
            AblationTable::Supervision => vec![
                Cell::new("OpenABC (Baseline)", Mlp, FinalOnly, None),
                Cell::new("OpenABC + SSL", MlpMultitask, Trajectory, None),
                Cell::new("Transformer Decoder", Transformer, FinalOnly, None),
                Cell::new("LSOformer", Transformer, Trajectory, None),
            ],
            AblationTable::Decoders => vec![
                Cell::new("MLP", Mlp, FinalOnly, None),
                Cell::new("MLP + multi-task", MlpMultitask, Trajectory, None),
                Cell::new("Auto-regressive LSTM", Recurrent, Trajectory, None),
                Cell::new("Transformer", Transformer, Trajectory, None),
            ],
        }
    }
}

/// One row of an ablation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub label: &'static str,
    pub decoder: DecoderKind,
    pub loss_mode: LossMode,
    pub freeze_mode: FreezeMode,
    /// Start from a trajectory-trained model of the same decoder and seed.
    pub pretrained: bool,
}

impl Cell {
    pub fn new(label: &'static str, decoder: DecoderKind, loss_mode: LossMode, freeze_mode: FreezeMode) -> Self {
        Cell {
            label,
            decoder,
            loss_mode,
            freeze_mode,
            pretrained: false,
        }
    }

    fn key(&self, seed: u64) -> RunKey {
        RunKey {
            decoder: self.decoder,
            loss_mode: self.loss_mode,
            freeze_mode: self.freeze_mode,
            pretrained: self.pretrained,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct RunKey {
    decoder: DecoderKind,
    loss_mode: LossMode,
    freeze_mode: FreezeMode,
    pretrained: bool,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub decoder: DecoderKind,
    pub loss_mode: LossMode,
    pub freeze_mode: FreezeMode,
    pub pretrained: bool,
    pub seeds: Vec<u64>,
    pub val_mapes: Vec<f64>,
    pub median_val_mape: f64,
    pub reports: Vec<EvalReport>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub type RunCallback<'e> = Box<dyn FnMut(&Cell, u64, &EvalReport) + 'e>;

/// Trains ablation cells on one experiment, memoizing every run.
pub struct AblationRunner<'e, 'd> {
    pub experiment: &'e Experiment<'d>,
    /// Hyperparameters shared by all cells; decoder and modes are overridden.
    pub base: TrainConfig,
    /// Adjusts the default model configuration of each decoder.
    pub model_config: Box<dyn Fn(ModelConfig) -> ModelConfig + 'e>,
    cache: HashMap<RunKey, (Model, EvalReport)>,
    /// Called after every fresh run.
    pub on_run: RunCallback<'e>,
}

impl<'e, 'd> AblationRunner<'e, 'd> {
    pub fn new(experiment: &'e Experiment<'d>, base: TrainConfig) -> Self {
        AblationRunner {
            experiment,
            base,
            model_config: Box::new(|c| c),
            cache: HashMap::new(),
            on_run: Box::new(|_, _, _| {}),
        }
    }

    pub fn runs_trained(&self) -> usize {
        self.cache.len()
    }

    /// Model and report for one cell and seed.
    pub fn run(&mut self, cell: &Cell, seed: u64) -> Result<(Model, EvalReport), TrainError> {
        let key = cell.key(seed);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let init = if cell.pretrained {
            let pre = Cell::new("pretraining", cell.decoder, LossMode::Trajectory, FreezeMode::None);
            Some(self.run(&pre, seed)?.0)
        } else {
            None
        };
        let cfg = TrainConfig {
            seed,
            decoder: cell.decoder,
            loss_mode: cell.loss_mode,
            freeze_mode: cell.freeze_mode,
            ..self.base.clone()
        };
        let model_cfg = (self.model_config)(self.experiment.model_config(cell.decoder));
        let out = self.experiment.train(&cfg, &model_cfg, init.as_ref())?;
        (self.on_run)(cell, seed, &out.1);
        self.cache.insert(key, out.clone());
        Ok(out)
    }

    pub fn row(&mut self, cell: &Cell, seeds: &[u64]) -> Result<AblationRow, TrainError> {
        let mut reports = Vec::with_capacity(seeds.len());
        for &s in seeds {
            reports.push(self.run(cell, s)?.1);
        }
        let val_mapes: Vec<f64> = reports.iter().map(|r| r.val_mape).collect();
        Ok(AblationRow {
            label: cell.label.to_string(),
            decoder: cell.decoder,
            loss_mode: cell.loss_mode,
            freeze_mode: cell.freeze_mode,
            pretrained: cell.pretrained,
            seeds: seeds.to_vec(),
            median_val_mape: median(&val_mapes),
            val_mapes,
            reports,
        })
    }

    pub fn table(&mut self, table: AblationTable, seeds: &[u64]) -> Result<Vec<AblationRow>, TrainError> {
        table.cells().iter().map(|c| self.row(c, seeds)).collect()
    }
}

/// CSV with one line per row: label, modes, median and per-seed MAPE.
pub fn rows_to_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("label,decoder,loss_mode,freeze_mode,pretrained,median_val_mape,val_mape_per_seed,median_train_mape,best_epochs\n");
    for r in rows {
        let join = |v: Vec<String>| v.join(";");
        let train: Vec<f64> = r.reports.iter().map(|x| x.train_mape).collect();
        let _ = writeln!(
            out,
            "\"{}\",{},{},{},{},{:.6},{},{:.6},{}",
            r.label,
            r.decoder,
            r.loss_mode,
            r.freeze_mode,
            r.pretrained,
            r.median_val_mape,
            join(r.val_mapes.iter().map(|m| format!("{m:.6}")).collect()),
            median(&train),
            join(r.reports.iter().map(|x| x.best_epoch.to_string()).collect()),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shapes() {
        assert_eq!(AblationTable::Supervision.cells().len(), 4);
        assert_eq!(AblationTable::Decoders.cells().len(), 4);
        assert_eq!(AblationTable::EncoderProbing.cells().len(), 6);
        for t in AblationTable::ALL {
            assert_eq!(AblationTable::from_number(t.number()), Some(t));
        }
        let labels: Vec<_> = AblationTable::Decoders.cells().iter().map(|c| c.label).collect();
        assert_eq!(labels, ["MLP", "MLP + multi-task", "Auto-regressive LSTM", "Transformer"]);
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
