use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lsoformer::ablation::{rows_to_csv, AblationRunner, AblationTable};
use lsoformer::dataset::{
    build_dataset, load_circuits, read_dataset, sample_recipes, split, synthetic_circuits, write_dataset, Dataset,
    Normalizer, Split, SplitSetup, SplitSpec, SyntheticSpec,
};
use lsoformer::model::{load_checkpoint, save_checkpoint, GraphInput, ModelConfig};
use lsoformer::train::{EvalReport, Experiment, LossMode, TrainConfig};
use lsoformer_aig::{parse_netlist, NetlistFormat};
use lsoformer_synth::Recipe;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{io_error, CliError};
use crate::manifest::RunManifest;
use crate::{AblateArgs, EvalArgs, ExportArgs, GenDataArgs, ModelArgs, OptimArgs, PredictArgs, SplitArgs, Subset, TrainArgs};

/// Contents of `report.json` in a training run directory.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrainSummary {
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub mean_predictor_val_mape: f64,
    pub circuit_names: BTreeMap<usize, String>,
    pub report: EvalReport,
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

/// Reads every netlist of `dir`, reporting all files that fail to parse.
fn check_netlists(dir: &Path) -> Result<(), CliError> {
    let entries = fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    let mut failures = Vec::new();
    for p in paths {
        let Some(fmt) = p.extension().and_then(|e| e.to_str()).and_then(NetlistFormat::from_extension) else {
            continue;
        };
        let text = fs::read_to_string(&p).map_err(|e| io_error(&p, e))?;
        if let Err(e) = parse_netlist(&text, fmt) {
            failures.push(format!("{}: {e}", p.display()));
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        for f in &failures {
            eprintln!("{f}");
        }
        Err(CliError::Data(format!("{} netlist(s) failed to parse", failures.len())))
    }
}

pub fn gen_data(a: GenDataArgs) -> Result<(), CliError> {
    let out = a.out.resolve("gen-data");
    let mut manifest = RunManifest::new(
        "gen-data",
        json!({
            "circuits": a.circuits,
            "synth": a.synth,
            "min_nodes": a.min_nodes,
            "max_nodes": a.max_nodes,
            "recipes": a.recipes,
            "len": a.len,
            "metric": a.metric,
            "split": a.split,
        }),
        vec![a.seed],
    );
    let circuits = match (&a.circuits, a.synth) {
        (Some(dir), _) => {
            check_netlists(dir)?;
            let circuits = load_circuits(dir)?;
            let mut names: Vec<PathBuf> = fs::read_dir(dir)
                .map_err(|e| io_error(dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().and_then(|e| e.to_str()).and_then(NetlistFormat::from_extension).is_some())
                .collect();
            names.sort();
            for p in &names {
                manifest.input(p)?;
            }
            circuits
        }
        (None, Some(count)) => {
            if a.min_nodes == 0 || a.min_nodes > a.max_nodes {
                return Err(CliError::Usage("--min-nodes must be positive and at most --max-nodes".into()));
            }
            synthetic_circuits(&SyntheticSpec {
                min_nodes: a.min_nodes,
                max_nodes: a.max_nodes,
                ..SyntheticSpec::new(count, a.seed)
            })
        }
        (None, None) => return Err(CliError::Usage("one of --circuits or --synth is required".into())),
    };
    let recipes = sample_recipes(a.recipes, a.len, a.seed)?;
    let dataset = build_dataset(circuits, recipes, a.metric, a.seed)?;
    let (sp, norm) = match a.split {
        Some(setup) => {
            let sp = split(&dataset, &SplitSpec::new(setup, a.seed))?;
            let norm = Normalizer::fit_split(&dataset, &sp)?;
            (Some(sp), Some(norm))
        }
        None => (None, None),
    };
    create_dir(&out)?;
    let ds_manifest = write_dataset(&out, &dataset, sp.as_ref(), norm.as_ref())?;
    manifest.outputs.push(out.join("manifest.json"));
    manifest.outputs.push(out.join(&ds_manifest.samples_file));
    for c in &ds_manifest.circuits {
        manifest.outputs.push(out.join(&c.file));
    }
    manifest.write(&out)?;
    println!(
        "wrote {} samples ({} circuits x {} recipes, M = {}) to {}",
        dataset.samples.len(),
        dataset.circuits.len(),
        dataset.recipes.len(),
        dataset.steps(),
        out.display()
    );
    Ok(())
}

struct Loaded {
    dataset: Dataset,
    split: Split,
}

fn load_data(dir: &Path, args: &SplitArgs, run: &mut RunManifest) -> Result<Loaded, CliError> {
    let (dataset, manifest) = read_dataset(dir)?;
    run.input(&dir.join("manifest.json"))?;
    run.input(&dir.join(&manifest.samples_file))?;
    let stored = manifest.split.clone();
    let sp = match (stored, args.split) {
        (Some(s), None) if args.split_seed.is_none() => s,
        (_, setup) => {
            let setup = setup.unwrap_or(SplitSetup::RecipeInductive);
            split(&dataset, &SplitSpec::new(setup, args.split_seed.unwrap_or(dataset.seed)))?
        }
    };
    Ok(Loaded { dataset, split: sp })
}

fn apply_model_args(mut mc: ModelConfig, m: &ModelArgs) -> ModelConfig {
    if let Some(v) = m.d_h {
        mc.d_h = v;
    }
    if let Some(v) = m.gcn_layers {
        mc.gcn_layers = v;
    }
    if let Some(v) = m.heads {
        mc.heads = v;
    }
    if let Some(v) = m.ffn_width {
        mc.ffn_width = v;
    }
    if let Some(v) = m.blocks {
        mc.blocks = v;
    }
    if let Some(v) = m.regressor_hidden {
        mc.regressor_hidden = v;
    }
    if let Some(v) = m.mlp_hidden {
        mc.mlp_hidden = v;
    }
    mc.padding_mask |= m.padding_mask;
    mc
}

fn apply_optim(mut cfg: TrainConfig, o: &OptimArgs) -> TrainConfig {
    cfg.learning_rate = o.lr;
    cfg.batch_size = o.batch_size;
    cfg.max_epochs = o.epochs;
    cfg.patience = o.patience;
    cfg.max_steps = o.max_steps;
    cfg.keep_last = o.keep_last;
    cfg
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let out = a.out.resolve("train");
    let mut run = RunManifest::new("train", json!(null), vec![a.seed]);
    let data = load_data(&a.data, &a.split, &mut run)?;
    let exp = Experiment::new(&data.dataset, &data.split)?;
    let loss = a.loss.unwrap_or(if a.decoder.predicts_trajectory() {
        LossMode::Trajectory
    } else {
        LossMode::FinalOnly
    });
    let cfg = TrainConfig {
        freeze_mode: a.freeze,
        ..apply_optim(TrainConfig::new(a.decoder, loss, a.seed), &a.optim)
    };
    let init = match &a.init {
        Some(path) => {
            run.input(path)?;
            Some(load_checkpoint(path)?.0)
        }
        None => None,
    };
    let mc = match &init {
        Some(m) => m.config.clone(),
        None => apply_model_args(exp.model_config(a.decoder), &a.model),
    };
    run.config = json!({ "train": cfg, "model": mc, "split": data.split.spec });

    create_dir(&out)?;
    let mut metrics = String::new();
    let (model, report) = exp.train_with(&cfg, &mc, init.as_ref(), |rec| {
        eprintln!(
            "epoch {:>3}  train {:.5}  val {:.5}  val MAPE {:.3}%",
            rec.epoch, rec.train_loss, rec.val_loss, rec.val_mape
        );
        metrics.push_str(&serde_json::to_string(rec).expect("record serializes"));
        metrics.push('\n');
    })?;

    let ckpt = out.join("model.ckpt");
    save_checkpoint(&ckpt, &model, Some(exp.normalizer), Some(data.dataset.metric))?;
    write_file(&out.join("metrics.jsonl"), &metrics)?;
    let summary = TrainSummary {
        train: cfg.clone(),
        model: mc,
        mean_predictor_val_mape: exp.mean_predictor_mape(&exp.val)?,
        circuit_names: data.dataset.circuits.iter().map(|c| (c.id, c.name.clone())).collect(),
        report,
    };
    write_file(
        &out.join("report.json"),
        serde_json::to_string_pretty(&summary).expect("report serializes"),
    )?;
    write_file(&out.join("curves.csv"), curves_csv(None, &summary.report))?;
    for f in ["model.ckpt", "metrics.jsonl", "report.json", "curves.csv"] {
        run.outputs.push(out.join(f));
    }
    run.write(&out)?;
    let r = &summary.report;
    println!(
        "best epoch {}: train MAPE {:.3}%, val MAPE {:.3}% (mean predictor {:.3}%), wrote {}",
        r.best_epoch,
        r.train_mape,
        r.val_mape,
        summary.mean_predictor_val_mape,
        out.display()
    );
    Ok(())
}

fn curves_csv(run: Option<&str>, r: &EvalReport) -> String {
    let mut s = String::new();
    if run.is_some() {
        s.push_str("run,");
    }
    s.push_str("epoch,train_loss,val_loss,val_mape\n");
    for e in 0..r.epochs_run {
        if let Some(name) = run {
            let _ = write!(s, "{name},");
        }
        let _ = writeln!(s, "{e},{},{},{}", r.train_loss[e], r.val_loss[e], r.val_mape_curve[e]);
    }
    s
}

fn same_normalizer(a: &Normalizer, b: &Normalizer) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0);
    close(a.mean, b.mean) && close(a.std, b.std)
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let out = a.out.resolve("eval");
    let mut run = RunManifest::new("eval", json!(null), Vec::new());
    run.input(&a.checkpoint)?;
    let (model, meta) = load_checkpoint(&a.checkpoint)?;
    let data = load_data(&a.data, &a.split, &mut run)?;
    let exp = Experiment::new(&data.dataset, &data.split)?;
    if model.config.steps != data.dataset.steps() {
        return Err(CliError::Data(format!(
            "checkpoint predicts {} steps but the dataset has recipes of length {}",
            model.config.steps,
            data.dataset.steps()
        )));
    }
    if let Some(metric) = meta.metric {
        if metric != data.dataset.metric {
            return Err(CliError::Data(format!(
                "checkpoint was trained on {metric} but the dataset measures {}",
                data.dataset.metric
            )));
        }
    }
    match &meta.normalizer {
        Some(n) if !same_normalizer(n, &exp.normalizer) => {
            return Err(CliError::Data(format!(
                "normalizer mismatch: checkpoint mean {} std {}, dataset split mean {} std {}",
                n.mean, n.std, exp.normalizer.mean, exp.normalizer.std
            )))
        }
        _ => {}
    }
    let idx: Vec<usize> = match a.subset {
        Subset::Train => exp.train.clone(),
        Subset::Val => exp.val.clone(),
        Subset::All => (0..data.dataset.samples.len()).collect(),
    };
    let loss = if model.config.decoder.predicts_trajectory() {
        LossMode::Trajectory
    } else {
        LossMode::FinalOnly
    };
    let ev = exp.evaluate(&model, &idx, loss)?;
    let baseline = exp.mean_predictor_mape(&idx)?;
    run.config = json!({ "subset": format!("{:?}", a.subset).to_lowercase(), "split": data.split.spec, "model": model.config });
    create_dir(&out)?;
    let result = json!({
        "subset": format!("{:?}", a.subset).to_lowercase(),
        "samples": idx.len(),
        "mape": ev.mape,
        "mean_predictor_mape": baseline,
        "loss": ev.loss,
        "per_step_mape": ev.per_step_mape,
        "per_circuit_mape": ev.per_circuit_mape,
    });
    let path = out.join("eval.json");
    write_file(&path, serde_json::to_string_pretty(&result).expect("result serializes"))?;
    run.outputs.push(path);
    run.write(&out)?;
    println!(
        "{} samples: final-step MAPE {:.4}% (mean predictor {:.4}%)",
        idx.len(),
        ev.mape,
        baseline
    );
    Ok(())
}

pub fn ablate(a: AblateArgs) -> Result<(), CliError> {
    let out = a.out.resolve("ablate");
    if a.seeds.is_empty() {
        return Err(CliError::Usage("--seeds must list at least one seed".into()));
    }
    let table = AblationTable::from_number(a.table).ok_or_else(|| CliError::Usage(format!("no ablation table {}", a.table)))?;
    let mut run = RunManifest::new("ablate", json!(null), a.seeds.clone());
    let data = load_data(&a.data, &a.split, &mut run)?;
    let exp = Experiment::new(&data.dataset, &data.split)?;
    let base = apply_optim(
        TrainConfig::new(lsoformer::model::DecoderKind::Transformer, LossMode::Trajectory, 0),
        &a.optim,
    );
    base.validate()?;
    let model_args = a.model.clone();
    run.config = json!({
        "table": a.table,
        "train": base,
        "model": {
            "d_h": model_args.d_h,
            "gcn_layers": model_args.gcn_layers,
            "heads": model_args.heads,
            "ffn_width": model_args.ffn_width,
            "blocks": model_args.blocks,
            "regressor_hidden": model_args.regressor_hidden,
            "mlp_hidden": model_args.mlp_hidden,
            "padding_mask": model_args.padding_mask,
        },
        "split": data.split.spec,
    });
    let mut runner = AblationRunner::new(&exp, base);
    runner.model_config = Box::new(move |mc| apply_model_args(mc, &model_args));
    runner.on_run = Box::new(|cell, seed, rep| {
        eprintln!("{} (seed {seed}): val MAPE {:.3}% after {} epochs", cell.label, rep.val_mape, rep.epochs_run);
    });
    let rows = runner.table(table, &a.seeds)?;
    create_dir(&out)?;
    let csv_path = out.join(format!("table{}.csv", a.table));
    write_file(&csv_path, rows_to_csv(&rows))?;
    run.outputs.push(csv_path.clone());
    run.write(&out)?;
    for r in &rows {
        println!("{:<28} {:>8.3}%", r.label, r.median_val_mape);
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<(), CliError> {
    let (model, meta) = load_checkpoint(&a.checkpoint)?;
    let norm = meta
        .normalizer
        .ok_or_else(|| CliError::Data("checkpoint has no normalizer; cannot report raw QoR".into()))?;
    let fmt = a
        .netlist
        .extension()
        .and_then(|e| e.to_str())
        .and_then(NetlistFormat::from_extension)
        .ok_or_else(|| CliError::Usage(format!("{}: expected a .bench or .aag file", a.netlist.display())))?;
    let text = fs::read_to_string(&a.netlist).map_err(|e| io_error(&a.netlist, e))?;
    let graph = parse_netlist(&text, fmt).map_err(|e| CliError::Data(format!("{}: {e}", a.netlist.display())))?;
    let recipe = Recipe::parse(0, &a.recipe).map_err(|e| CliError::Usage(format!("--recipe: {e}")))?;
    if recipe.len() != model.config.steps {
        return Err(CliError::Usage(format!(
            "recipe has {} steps but the model expects {}",
            recipe.len(),
            model.config.steps
        )));
    }
    let input = GraphInput::new(&graph);
    let pred: Vec<f64> = model.predict(&input, &recipe.steps)?.into_iter().map(|y| norm.denormalize(y)).collect();
    if pred.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Numeric("prediction is not finite".into()));
    }
    let m = recipe.len();
    let first = m - pred.len();
    let metric = meta.metric.map(|m| m.to_string()).unwrap_or_else(|| "qor".into());
    for (i, h) in recipe.heuristics().enumerate() {
        if i >= first {
            println!("step {:>2} {:<8} {metric} {:.6}", i + 1, h, pred[i - first]);
        }
    }
    println!("final {metric} {:.6}", pred[pred.len() - 1]);
    Ok(())
}

fn run_name(dir: &Path) -> String {
    dir.file_name().and_then(|s| s.to_str()).unwrap_or("run").to_string()
}

pub fn export_plots(a: ExportArgs) -> Result<(), CliError> {
    let out = a.out.resolve("export-plots");
    let mut run = RunManifest::new("export-plots", json!({ "runs": a.runs }), Vec::new());
    let mut summaries = Vec::new();
    for dir in &a.runs {
        let path = dir.join("report.json");
        run.input(&path)?;
        let text = fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
        let s: TrainSummary =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        summaries.push((run_name(dir), s));
    }
    let mut circuits: BTreeMap<usize, String> = BTreeMap::new();
    let mut ids = BTreeSet::new();
    for (_, s) in &summaries {
        ids.extend(s.report.per_circuit_val_mape.keys().copied());
        circuits.extend(s.circuit_names.iter().map(|(k, v)| (*k, v.clone())));
    }
    let mut table = String::from("circuit_id,circuit");
    for (name, _) in &summaries {
        let _ = write!(table, ",{name}");
    }
    table.push('\n');
    for id in &ids {
        let _ = write!(table, "{id},{}", circuits.get(id).map(String::as_str).unwrap_or(""));
        for (_, s) in &summaries {
            match s.report.per_circuit_val_mape.get(id) {
                Some(v) => {
                    let _ = write!(table, ",{v}");
                }
                None => table.push(','),
            }
        }
        table.push('\n');
    }
    table.push_str(",mean");
    for (_, s) in &summaries {
        let _ = write!(table, ",{}", s.report.val_mape);
    }
    table.push('\n');

    let mut curves = String::from("run,epoch,train_loss,val_loss,val_mape\n");
    for (name, s) in &summaries {
        curves.push_str(curves_csv(Some(name), &s.report).split_once('\n').map(|x| x.1).unwrap_or(""));
    }
    create_dir(&out)?;
    let p1 = out.join("per_circuit_mape.csv");
    let p2 = out.join("loss_curves.csv");
    write_file(&p1, table)?;
    write_file(&p2, curves)?;
    run.outputs.extend([p1, p2]);
    run.write(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
