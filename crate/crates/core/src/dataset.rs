//! Recipe sampling, trajectory datasets, train/validation splits,
//! normalization and on-disk persistence.
//!
//! On-disk layout of a dataset directory:
//!
//! * `samples.jsonl`: one JSON object per line with `circuit_id`,
//!   `recipe_id`, `steps`, `raw_trajectory`, `metric` and `initial_qor`.
//! * `circuits/<id>_<name>.bench`: the input netlists.
//! * `manifest.json`: generation parameters, recipe list, circuit hashes,
//!   split membership and the normalizer fitted on the training split.

use std::collections::HashSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use lsoformer_aig::{parse_netlist, random_aig, serialize_netlist, AigGraph, NetlistFormat, RandomAigConfig};
use lsoformer_synth::{run_recipes, Heuristic, Metric, QorTrajectory, Recipe};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::DataError;

pub const VOCAB_SIZE: usize = Heuristic::ALL.len();
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeSet {
    pub length: usize,
    pub recipes: Vec<Recipe>,
}

impl RecipeSet {
    pub fn len(&self) -> usize {
        self.recipes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recipes.is_empty()
    }

    pub fn from_recipes(recipes: Vec<Recipe>) -> Result<Self, DataError> {
        let length = recipes.first().map_or(0, Recipe::len);
        if recipes.iter().any(|r| r.len() != length) {
            return Err(DataError::RaggedRecipes);
        }
        Ok(RecipeSet { length, recipes })
    }
}

/// `count` distinct recipes of `length` i.i.d. uniform tokens; collisions are
/// resampled.
pub fn sample_recipes(count: usize, length: usize, seed: u64) -> Result<RecipeSet, DataError> {
    if length == 0 {
        return Err(DataError::EmptyRecipe);
    }
    let available = (VOCAB_SIZE as u128).checked_pow(length as u32).unwrap_or(u128::MAX);
    if count as u128 > available {
        return Err(DataError::InfeasibleRecipeCount {
            requested: count,
            length,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut recipes = Vec::with_capacity(count);
    while recipes.len() < count {
        let steps: Vec<usize> = (0..length).map(|_| rng.gen_range(0..VOCAB_SIZE)).collect();
        if seen.insert(steps.clone()) {
            recipes.push(Recipe::new(recipes.len(), steps)?);
        }
    }
    Ok(RecipeSet { length, recipes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub id: usize,
    pub name: String,
    pub graph: AigGraph,
}

/// Shape of the seeded synthetic circuit corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub count: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub max_inputs: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(count: usize, seed: u64) -> Self {
        SyntheticSpec {
            count,
            min_nodes: 50,
            max_nodes: 2000,
            max_inputs: 48,
            seed,
        }
    }
}

/// Random AIGs with node counts drawn log-uniformly from the spec's range.
pub fn synthetic_circuits(spec: &SyntheticSpec) -> Vec<Circuit> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = ((spec.min_nodes.max(8) as f64).ln(), (spec.max_nodes.max(spec.min_nodes.max(8)) as f64).ln());
    (0..spec.count)
        .map(|id| {
            let size = rng.gen_range(lo..=hi).exp().round() as usize;
            let graph_seed: u64 = rng.gen();
            let name = format!("synth_{id:02}");
            let graph = random_aig(&RandomAigConfig::for_size(size, spec.max_inputs), graph_seed).with_name(&name);
            Circuit { id, name, graph }
        })
        .collect()
}

/// Loads every `.bench` / `.aag` file of a directory, sorted by file name.
pub fn load_circuits(dir: &Path) -> Result<Vec<Circuit>, DataError> {
    let io = |source| DataError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<(PathBuf, NetlistFormat)> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| {
            let fmt = p.extension().and_then(|e| e.to_str()).and_then(NetlistFormat::from_extension)?;
            Some((p, fmt))
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    if files.is_empty() {
        return Err(DataError::NoCircuits);
    }
    files
        .into_iter()
        .enumerate()
        .map(|(id, (path, fmt))| {
            let text = fs::read_to_string(&path).map_err(|source| DataError::Io {
                path: path.clone(),
                source,
            })?;
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("circuit").to_string();
            let graph = parse_netlist(&text, fmt)
                .map_err(|source| DataError::Netlist {
                    path: path.clone(),
                    source,
                })?
                .with_name(&name);
            Ok(Circuit { id, name, graph })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    pub circuit_id: usize,
    pub recipe_id: usize,
    pub trajectory: QorTrajectory,
}

impl DatasetSample {
    pub fn final_qor(&self) -> f64 {
        self.trajectory.final_qor()
    }

    pub fn normalized(&self, norm: &Normalizer) -> Vec<f64> {
        self.trajectory.values.iter().map(|&v| norm.normalize(v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub metric: Metric,
    pub seed: u64,
    pub circuits: Vec<Circuit>,
    pub recipes: RecipeSet,
    /// Circuit-major, recipes in set order.
    pub samples: Vec<DatasetSample>,
}

impl Dataset {
    pub fn steps(&self) -> usize {
        self.recipes.length
    }

    pub fn recipe(&self, id: usize) -> &Recipe {
        &self.recipes.recipes[id]
    }

    pub fn circuit(&self, id: usize) -> &Circuit {
        &self.circuits[id]
    }

    /// Largest circuit depth in the dataset.
    pub fn max_depth(&self) -> usize {
        self.circuits
            .iter()
            .map(|c| lsoformer_aig::levelize(&c.graph).max_depth())
            .max()
            .unwrap_or(0)
    }
}

/// Runs every recipe on every circuit. Circuits must have ids `0..n` and
/// recipes ids `0..R` in order.
pub fn build_dataset(circuits: Vec<Circuit>, recipes: RecipeSet, metric: Metric, seed: u64) -> Result<Dataset, DataError> {
    if circuits.is_empty() {
        return Err(DataError::NoCircuits);
    }
    for (i, c) in circuits.iter().enumerate() {
        if c.id != i {
            return Err(DataError::Inconsistent(format!("circuit at position {i} has id {}", c.id)));
        }
    }
    for (i, r) in recipes.recipes.iter().enumerate() {
        if r.id != i {
            return Err(DataError::Inconsistent(format!("recipe at position {i} has id {}", r.id)));
        }
    }
    let per_circuit: Vec<Vec<DatasetSample>> = circuits
        .par_iter()
        .map(|c| {
            run_recipes(&c.graph, &recipes.recipes, metric)
                .into_iter()
                .map(|mut t| {
                    t.circuit_id = c.id;
                    DatasetSample {
                        circuit_id: c.id,
                        recipe_id: t.recipe_id,
                        trajectory: t,
                    }
                })
                .collect()
        })
        .collect();
    Ok(Dataset {
        metric,
        seed,
        circuits,
        recipes,
        samples: per_circuit.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSetup {
    IpInductive,
    RecipeInductive,
}

impl std::str::FromStr for SplitSetup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ip_inductive" | "ip" => Ok(SplitSetup::IpInductive),
            "recipe_inductive" | "recipe" => Ok(SplitSetup::RecipeInductive),
            other => Err(format!("unknown split setup `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub setup: SplitSetup,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(setup: SplitSetup, seed: u64) -> Self {
        SplitSpec {
            setup,
            train_fraction: 0.66,
            val_fraction: 0.33,
            seed,
        }
    }
}

/// Sample indices per side plus the partitioned ids (circuit ids for
/// ip-inductive, recipe ids for recipe-inductive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub spec: SplitSpec,
    pub train_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// Partitions circuits or recipes. Validation gets `floor(n * val_fraction)`
/// ids (at least one), training the rest.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<Split, DataError> {
    if !(spec.train_fraction > 0.0 && spec.val_fraction > 0.0 && spec.train_fraction + spec.val_fraction <= 1.0 + 1e-12) {
        return Err(DataError::InvalidFractions {
            train: spec.train_fraction,
            val: spec.val_fraction,
        });
    }
    let (axis, n) = match spec.setup {
        SplitSetup::IpInductive => ("circuits", dataset.circuits.len()),
        SplitSetup::RecipeInductive => ("recipes", dataset.recipes.len()),
    };
    if n < 2 {
        return Err(DataError::TooFewToSplit { axis, got: n });
    }
    let n_val = ((n as f64 * spec.val_fraction).floor() as usize).clamp(1, n - 1);
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut val_ids = ids[..n_val].to_vec();
    let mut train_ids = ids[n_val..].to_vec();
    val_ids.sort_unstable();
    train_ids.sort_unstable();
    let mut is_val = vec![false; n];
    for &i in &val_ids {
        is_val[i] = true;
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (idx, s) in dataset.samples.iter().enumerate() {
        let key = match spec.setup {
            SplitSetup::IpInductive => s.circuit_id,
            SplitSetup::RecipeInductive => s.recipe_id,
        };
        if is_val[key] {
            val.push(idx);
        } else {
            train.push(idx);
        }
    }
    Ok(Split {
        spec: spec.clone(),
        train_ids,
        val_ids,
        train,
        val,
    })
}

/// Zero-mean scaling shared by every trajectory step, fitted on training
/// final QoRs with the population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: f64,
    pub std: f64,
}

impl Normalizer {
    pub fn fit(finals: &[f64]) -> Result<Self, DataError> {
        if finals.is_empty() {
            return Err(DataError::ZeroVariance);
        }
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let var = finals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if !std.is_finite() || std <= 0.0 {
            return Err(DataError::ZeroVariance);
        }
        Ok(Normalizer { mean, std })
    }

    pub fn fit_split(dataset: &Dataset, split: &Split) -> Result<Self, DataError> {
        let finals: Vec<f64> = split.train.iter().map(|&i| dataset.samples[i].final_qor()).collect();
        Normalizer::fit(&finals)
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn denormalize(&self, y: f64) -> f64 {
        y * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SampleRecord {
    circuit_id: usize,
    recipe_id: usize,
    steps: Vec<usize>,
    raw_trajectory: Vec<f64>,
    metric: Metric,
    initial_qor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitEntry {
    pub id: usize,
    pub name: String,
    pub file: String,
    pub sha256: String,
    pub nodes: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub steps: usize,
    pub num_recipes: usize,
    pub metric: Metric,
    pub circuits: Vec<CircuitEntry>,
    pub recipes: Vec<Vec<usize>>,
    pub samples_file: String,
    pub samples_sha256: String,
    pub split: Option<Split>,
    pub normalizer: Option<Normalizer>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let io = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

/// The `samples.jsonl` text for a dataset.
pub fn samples_jsonl(dataset: &Dataset) -> String {
    let mut out = String::new();
    for s in &dataset.samples {
        let rec = SampleRecord {
            circuit_id: s.circuit_id,
            recipe_id: s.recipe_id,
            steps: dataset.recipe(s.recipe_id).steps.clone(),
            raw_trajectory: s.trajectory.values.clone(),
            metric: s.trajectory.metric,
            initial_qor: s.trajectory.initial,
        };
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Writes the dataset directory and returns the manifest.
pub fn write_dataset(dir: &Path, dataset: &Dataset, split: Option<&Split>, normalizer: Option<&Normalizer>) -> Result<Manifest, DataError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DataError::Io { path, source }
    };
    let circuit_dir = dir.join("circuits");
    fs::create_dir_all(&circuit_dir).map_err(io(&circuit_dir))?;
    let mut entries = Vec::with_capacity(dataset.circuits.len());
    for c in &dataset.circuits {
        let text = serialize_netlist(&c.graph, NetlistFormat::Bench);
        let file = format!("circuits/{:03}_{}.bench", c.id, sanitize(&c.name));
        write_file(&dir.join(&file), text.as_bytes())?;
        entries.push(CircuitEntry {
            id: c.id,
            name: c.name.clone(),
            file,
            sha256: sha256_hex(text.as_bytes()),
            nodes: c.graph.num_nodes(),
            depth: lsoformer_aig::levelize(&c.graph).max_depth(),
        });
    }
    let samples = samples_jsonl(dataset);
    write_file(&dir.join("samples.jsonl"), samples.as_bytes())?;
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        seed: dataset.seed,
        steps: dataset.steps(),
        num_recipes: dataset.recipes.len(),
        metric: dataset.metric,
        circuits: entries,
        recipes: dataset.recipes.recipes.iter().map(|r| r.steps.clone()).collect(),
        samples_file: "samples.jsonl".into(),
        samples_sha256: sha256_hex(samples.as_bytes()),
        split: split.cloned(),
        normalizer: normalizer.copied(),
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|source| DataError::Json { path: path.clone(), source })?;
    write_file(&path, json.as_bytes())?;
    Ok(manifest)
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, DataError> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|source| DataError::Io { path: path.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| DataError::Json { path, source })
}

/// Reads a dataset directory written by [`write_dataset`], verifying hashes.
pub fn read_dataset(dir: &Path) -> Result<(Dataset, Manifest), DataError> {
    let manifest = read_manifest(dir)?;
    let mut circuits = Vec::with_capacity(manifest.circuits.len());
    for (i, e) in manifest.circuits.iter().enumerate() {
        let path = dir.join(&e.file);
        let text = fs::read_to_string(&path).map_err(|source| DataError::Io { path: path.clone(), source })?;
        if sha256_hex(text.as_bytes()) != e.sha256 {
            return Err(DataError::Inconsistent(format!("{} does not match its recorded hash", e.file)));
        }
        if e.id != i {
            return Err(DataError::Inconsistent(format!("circuit entry {i} has id {}", e.id)));
        }
        let graph = parse_netlist(&text, NetlistFormat::Bench)
            .map_err(|source| DataError::Netlist { path: path.clone(), source })?
            .with_name(&e.name);
        circuits.push(Circuit {
            id: e.id,
            name: e.name.clone(),
            graph,
        });
    }
    let recipes = RecipeSet::from_recipes(
        manifest
            .recipes
            .iter()
            .enumerate()
            .map(|(id, steps)| Recipe::new(id, steps.clone()))
            .collect::<Result<_, _>>()?,
    )?;
    let path = dir.join(&manifest.samples_file);
    let text = fs::read_to_string(&path).map_err(|source| DataError::Io { path: path.clone(), source })?;
    if sha256_hex(text.as_bytes()) != manifest.samples_sha256 {
        return Err(DataError::Inconsistent("samples file does not match its recorded hash".into()));
    }
    let mut samples = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let rec: SampleRecord = serde_json::from_str(line).map_err(|source| DataError::Json { path: path.clone(), source })?;
        if rec.circuit_id >= circuits.len() || rec.recipe_id >= recipes.len() {
            return Err(DataError::Inconsistent(format!(
                "sample references circuit {} / recipe {}",
                rec.circuit_id, rec.recipe_id
            )));
        }
        if rec.raw_trajectory.len() != recipes.length || recipes.recipes[rec.recipe_id].steps != rec.steps {
            return Err(DataError::Inconsistent(format!("sample ({}, {}) disagrees with its recipe", rec.circuit_id, rec.recipe_id)));
        }
        samples.push(DatasetSample {
            circuit_id: rec.circuit_id,
            recipe_id: rec.recipe_id,
            trajectory: QorTrajectory {
                circuit_id: rec.circuit_id,
                recipe_id: rec.recipe_id,
                metric: rec.metric,
                values: rec.raw_trajectory,
                initial: rec.initial_qor,
            },
        });
    }
    let dataset = Dataset {
        metric: manifest.metric,
        seed: manifest.seed,
        circuits,
        recipes,
        samples,
    };
    Ok((dataset, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_circuits(n: usize) -> Vec<Circuit> {
        (0..n)
            .map(|id| Circuit {
                id,
                name: format!("c{id}"),
                graph: random_aig(&RandomAigConfig::new(6, 30 + 10 * id), id as u64),
            })
            .collect()
    }

    #[test]
    fn recipe_sampling() {
        let a = sample_recipes(1, 3, 11).unwrap();
        assert_eq!(a, sample_recipes(1, 3, 11).unwrap());
        assert_eq!(a.recipes[0].len(), 3);
        let many = sample_recipes(200, 10, 1).unwrap();
        let distinct: HashSet<_> = many.recipes.iter().map(|r| r.steps.clone()).collect();
        assert_eq!(distinct.len(), 200);
        assert!(matches!(sample_recipes(50, 2, 0), Err(DataError::InfeasibleRecipeCount { .. })));
        assert_eq!(sample_recipes(49, 2, 0).unwrap().len(), 49);
    }

    #[test]
    fn dataset_cardinality() {
        let ds = build_dataset(tiny_circuits(2), sample_recipes(3, 4, 0).unwrap(), Metric::Delay, 0).unwrap();
        assert_eq!(ds.samples.len(), 6);
        assert!(ds.samples.iter().all(|s| s.trajectory.values.len() == 4));
    }

    #[test]
    fn split_rounding_and_disjointness() {
        let ds = build_dataset(tiny_circuits(3), sample_recipes(5, 3, 2).unwrap(), Metric::Area, 0).unwrap();
        let ip = split(&ds, &SplitSpec::new(SplitSetup::IpInductive, 4)).unwrap();
        assert_eq!((ip.train_ids.len(), ip.val_ids.len()), (2, 1));
        assert_eq!(ip.train.len() + ip.val.len(), ds.samples.len());
        let rc = split(&ds, &SplitSpec::new(SplitSetup::RecipeInductive, 4)).unwrap();
        assert_eq!((rc.train_ids.len(), rc.val_ids.len()), (4, 1));
        let train_recipes: HashSet<_> = rc.train.iter().map(|&i| ds.samples[i].recipe_id).collect();
        let val_recipes: HashSet<_> = rc.val.iter().map(|&i| ds.samples[i].recipe_id).collect();
        assert!(train_recipes.is_disjoint(&val_recipes));
        let one = build_dataset(tiny_circuits(1), sample_recipes(2, 3, 2).unwrap(), Metric::Area, 0).unwrap();
        assert!(matches!(
            split(&one, &SplitSpec::new(SplitSetup::IpInductive, 0)),
            Err(DataError::TooFewToSplit { .. })
        ));
    }

    #[test]
    fn normalizer_examples() {
        let n = Normalizer::fit(&[2.0, 4.0]).unwrap();
        assert_eq!((n.mean, n.std), (3.0, 1.0));
        assert_eq!(n.normalize(4.0), 1.0);
        assert_eq!(n.normalize(n.mean), 0.0);
        assert!(matches!(Normalizer::fit(&[5.0, 5.0]), Err(DataError::ZeroVariance)));
    }

    #[test]
    fn synthetic_sizes_in_range() {
        let cs = synthetic_circuits(&SyntheticSpec::new(20, 7));
        assert_eq!(cs.len(), 20);
        for c in &cs {
            assert!((30..=2100).contains(&c.graph.num_nodes()), "{} has {}", c.name, c.graph.num_nodes());
        }
        assert_eq!(cs, synthetic_circuits(&SyntheticSpec::new(20, 7)));
    }
}
