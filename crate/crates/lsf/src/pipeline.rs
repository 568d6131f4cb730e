//! Stage-wise orchestration of the full flow: fusion training, per-video
//! feature extraction, selector fitting, index building, single-video
//! classification and sweep evaluation. Each stage persists its artifact
//! so stages are independently re-runnable.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::descriptor::{
    load_descriptors, manifest_row_count, sample_labeled_rows, DatasetManifest,
    DEFAULT_BLOCK_WIDTHS,
};
use crate::error::{Error, Result};
use crate::features::{
    apply_selection, apply_selection_matrix, average_pool, fisher_scores, fit_selector,
    load_selector, save_selector, DEFAULT_SELECT_PERCENT,
};
use crate::index::{build_index, load_index, save_index, Vote, DEFAULT_K, DEFAULT_NUM_HASHES};
use crate::lsfnet::{
    init_model, load_model, save_model, train, LayerDims, LossKind, LsfNetModel, TrainConfig,
    DEFAULT_CODE_DIM, DEFAULT_HIDDEN_DIM,
};

/// Which labeling a stage trains or evaluates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelTask {
    /// Multi-class background motion labels from the manifest.
    Background,
    /// Binary foreground flag.
    Foreground,
}

impl LabelTask {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "background" => Ok(LabelTask::Background),
            "foreground" => Ok(LabelTask::Foreground),
            other => Err(Error::InvalidArgument(format!(
                "unknown task {other:?} (expected background or foreground)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub train_manifest: Option<PathBuf>,
    pub test_manifest: Option<PathBuf>,
    pub model_path: PathBuf,
    pub selector_path: PathBuf,
    pub index_path: PathBuf,
    pub out_dir: PathBuf,
    pub block_widths: [usize; 4],
    pub hidden_dim: usize,
    pub code_dim: usize,
    pub sample_size: usize,
    pub train: TrainConfig,
    pub q: f64,
    pub num_hashes: usize,
    pub k: usize,
    /// Evaluation sweep; when `random_pairs` is set the grid is replaced by
    /// that many (N, K) pairs drawn from the same ranges.
    pub n_sweep: Vec<usize>,
    pub k_sweep: Vec<usize>,
    pub random_pairs: Option<usize>,
    pub task: LabelTask,
    pub seed: u64,
    pub quiet: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            train_manifest: None,
            test_manifest: None,
            model_path: PathBuf::from("model.lsfm"),
            selector_path: PathBuf::from("selector.lsfs"),
            index_path: PathBuf::from("index.lsfi"),
            out_dir: PathBuf::from("."),
            block_widths: DEFAULT_BLOCK_WIDTHS,
            hidden_dim: DEFAULT_HIDDEN_DIM,
            code_dim: DEFAULT_CODE_DIM,
            sample_size: 1_000_000,
            train: TrainConfig::default(),
            q: DEFAULT_SELECT_PERCENT,
            num_hashes: DEFAULT_NUM_HASHES,
            k: DEFAULT_K,
            n_sweep: vec![10, 20, 30, 40, 50],
            k_sweep: vec![50, 75, 100],
            random_pairs: None,
            task: LabelTask::Background,
            seed: 0,
            quiet: false,
        }
    }
}

impl PipelineConfig {
    /// Merge `key=value` lines into this config. `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(path, format!("expected key=value, got {line:?}")))?;
            self.apply_key(key.trim(), value.trim())
                .map_err(|e| Error::format(path, e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_usize = |v: &str| -> Result<usize> {
            v.parse()
                .map_err(|_| Error::InvalidArgument(format!("{key}: bad integer {v:?}")))
        };
        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::InvalidArgument(format!("{key}: bad number {v:?}")))
        };
        let parse_list = |v: &str| -> Result<Vec<usize>> {
            v.split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("{key}: bad list {v:?}")))
                })
                .collect()
        };
        match key {
            "train_manifest" => self.train_manifest = Some(PathBuf::from(value)),
            "test_manifest" => self.test_manifest = Some(PathBuf::from(value)),
            "model" => self.model_path = PathBuf::from(value),
            "selector" => self.selector_path = PathBuf::from(value),
            "index" => self.index_path = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "block_widths" => {
                let widths = parse_list(value)?;
                if widths.len() != 4 {
                    return Err(Error::InvalidArgument(
                        "block_widths needs exactly 4 entries".into(),
                    ));
                }
                self.block_widths = [widths[0], widths[1], widths[2], widths[3]];
            }
            "hidden_dim" => self.hidden_dim = parse_usize(value)?,
            "code_dim" => self.code_dim = parse_usize(value)?,
            "sample_size" => self.sample_size = parse_usize(value)?,
            "lr_autoencoder" => self.train.lr_autoencoder = parse_f64(value)?,
            "lr_classifier" => self.train.lr_classifier = parse_f64(value)?,
            "iterations" => self.train.iterations = parse_usize(value)?,
            "batch_size" => self.train.batch_size = parse_usize(value)?,
            "early_stop_tol" => self.train.early_stop_tol = Some(parse_f64(value)?),
            "q" => self.q = parse_f64(value)?,
            "n" => self.num_hashes = parse_usize(value)?,
            "k" => self.k = parse_usize(value)?,
            "n_sweep" => self.n_sweep = parse_list(value)?,
            "k_sweep" => self.k_sweep = parse_list(value)?,
            "random_pairs" => self.random_pairs = Some(parse_usize(value)?),
            "task" => self.task = LabelTask::parse(value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("seed: bad integer {value:?}")))?;
                self.train.seed = self.seed;
            }
            other => {
                return Err(Error::InvalidArgument(format!("unknown config key {other:?}")))
            }
        }
        Ok(())
    }

    fn log(&self, message: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", message.as_ref());
        }
    }

    fn require_train_manifest(&self) -> Result<&PathBuf> {
        self.train_manifest
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("train_manifest is required".into()))
    }
}

/// Labels for the configured task; background ids or the foreground flag
/// mapped to {0, 1}. Also returns the class names for reporting.
pub fn task_labels(
    manifest: &DatasetManifest,
    task: LabelTask,
) -> Result<(Vec<usize>, Vec<String>)> {
    match task {
        LabelTask::Background => {
            let labels = manifest
                .entries
                .iter()
                .map(|e| {
                    e.background_label.ok_or_else(|| {
                        Error::InvalidArgument(format!("{}: missing background label", e.video_id))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((labels, manifest.class_names.clone()))
        }
        LabelTask::Foreground => {
            let labels = manifest
                .entries
                .iter()
                .map(|e| {
                    e.foreground
                        .map(|f| f as usize)
                        .ok_or_else(|| {
                            Error::InvalidArgument(format!(
                                "{}: missing foreground flag",
                                e.video_id
                            ))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((labels, vec!["background".into(), "foreground".into()]))
        }
    }
}

/// Phase-1 training: sample labeled descriptor rows, train the fusion
/// network, persist the model and both loss curves.
pub fn cmd_train_fusion(config: &PipelineConfig) -> Result<PathBuf> {
    let manifest_path = config.require_train_manifest()?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let population = manifest_row_count(&manifest)?;
    let sample_size = config.sample_size.min(population);
    config.log(format!(
        "sampling {sample_size} of {population} descriptor rows"
    ));
    let batch = sample_labeled_rows(&manifest, config.block_widths, sample_size, config.seed)?;
    let batches = batch.batches(config.train.batch_size);

    let d_in: usize = config.block_widths.iter().sum();
    let dims = LayerDims::new(d_in, config.hidden_dim, config.code_dim);
    let mut model = init_model(dims, manifest.num_classes(), config.seed)?;
    config.log(format!(
        "training {} parameters for up to {} epochs over {} batches",
        model.param_count(),
        config.train.iterations,
        batches.len()
    ));
    let history = train(&mut model, &batches, &config.train)?;

    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    save_model(&config.model_path, &model)?;

    let curve_path = config.out_dir.join("loss_curves.csv");
    let file = File::create(&curve_path).map_err(|e| Error::io(&curve_path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "epoch,batch,loss,value")?;
        for record in &history.records {
            let name = match record.kind {
                LossKind::Reconstruction => "reconstruction",
                LossKind::Classification => "classification",
            };
            writeln!(w, "{},{},{},{}", record.epoch, record.batch, name, record.value)?;
        }
        w.flush()
    })()
    .map_err(|e| Error::io(&curve_path, e))?;

    let l1 = history.curve(LossKind::Reconstruction);
    let l2 = history.curve(LossKind::Classification);
    config.log(format!(
        "done: L1 {:.6} -> {:.6}, L2 {:.6} -> {:.6}",
        l1.first().unwrap_or(&f64::NAN),
        l1.last().unwrap_or(&f64::NAN),
        l2.first().unwrap_or(&f64::NAN),
        l2.last().unwrap_or(&f64::NAN)
    ));
    Ok(config.model_path.clone())
}

fn pooled_feature(
    model: &LsfNetModel,
    manifest_entry_path: &Path,
    block_widths: [usize; 4],
) -> Result<Array1<f64>> {
    let matrix = load_descriptors(manifest_entry_path, block_widths)?;
    let codes = model.encode(&matrix.rows.view())?;
    average_pool(&codes.view())
}

/// Encode and pool every video of a manifest, in manifest order.
pub fn extract_features(
    model: &LsfNetModel,
    manifest: &DatasetManifest,
    block_widths: [usize; 4],
) -> Result<(Vec<String>, Array2<f64>)> {
    let mut ids = Vec::with_capacity(manifest.entries.len());
    let mut rows = Array2::<f64>::zeros((manifest.entries.len(), model.dims.code));
    let mut failures = Vec::new();
    for (i, entry) in manifest.entries.iter().enumerate() {
        match pooled_feature(model, &entry.path, block_widths) {
            Ok(values) => {
                rows.row_mut(i).assign(&values);
                ids.push(entry.video_id.clone());
            }
            Err(e) => failures.push(format!("{}: {e}", entry.video_id)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} video(s) failed extraction:\n{}",
            failures.len(),
            failures.join("\n")
        )));
    }
    Ok((ids, rows))
}

/// Phase-2 extraction to a features CSV (`video_id,v0,...`).
pub fn cmd_extract(
    config: &PipelineConfig,
    manifest_path: &Path,
    out_path: &Path,
) -> Result<PathBuf> {
    let model = load_model(&config.model_path)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let (ids, rows) = extract_features(&model, &manifest, config.block_widths)?;
    write_features_csv(out_path, &ids, &rows)?;
    config.log(format!(
        "extracted {} x {} features to {}",
        rows.nrows(),
        rows.ncols(),
        out_path.display()
    ));
    Ok(out_path.to_path_buf())
}

pub fn write_features_csv(path: &Path, ids: &[String], rows: &Array2<f64>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        for (id, row) in ids.iter().zip(rows.rows()) {
            write!(w, "{id}")?;
            for v in row {
                // shortest round-trippable decimal form
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

pub fn read_features_csv(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields
            .next()
            .ok_or_else(|| Error::format(path, format!("line {}: empty", lineno + 1)))?;
        ids.push(id.to_string());
        let mut count = 0usize;
        for field in fields {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::format(path, format!("line {}: bad value {field:?}", lineno + 1))
            })?;
            values.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::format(
                    path,
                    format!("line {}: width {count}, expected {w}", lineno + 1),
                ))
            }
            _ => {}
        }
    }
    let width = width.ok_or_else(|| Error::format(path, "no feature rows"))?;
    let rows = Array2::from_shape_vec((ids.len(), width), values).expect("widths checked");
    Ok((ids, rows))
}

/// Align a features matrix to manifest order by video id.
fn align_to_manifest(
    manifest: &DatasetManifest,
    ids: &[String],
    rows: &Array2<f64>,
) -> Result<Array2<f64>> {
    let by_id: std::collections::HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut out = Array2::<f64>::zeros((manifest.entries.len(), rows.ncols()));
    for (i, entry) in manifest.entries.iter().enumerate() {
        let &row = by_id.get(entry.video_id.as_str()).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "features file has no row for video {}",
                entry.video_id
            ))
        })?;
        out.row_mut(i).assign(&rows.row(row));
    }
    Ok(out)
}

/// Fisher-rank the training features and persist the top-q% selector.
pub fn cmd_fit_selector(config: &PipelineConfig, features_path: &Path) -> Result<PathBuf> {
    let manifest = DatasetManifest::load(config.require_train_manifest()?)?;
    let (ids, rows) = read_features_csv(features_path)?;
    let rows = align_to_manifest(&manifest, &ids, &rows)?;
    let (labels, _) = task_labels(&manifest, config.task)?;
    let (_, scores) = fisher_scores(&rows.view(), &labels)?;
    let selector = fit_selector(&scores.view(), config.q)?;
    save_selector(&config.selector_path, &selector)?;
    crate::features::export_selector_csv(
        &config.out_dir.join("fisher_scores.csv"),
        &selector,
    )?;

    let mut ranked: Vec<(usize, f64)> = scores.iter().cloned().enumerate().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    config.log("top components by Fisher score:");
    for (component, score) in ranked.iter().take(10) {
        config.log(format!("  {component:4}  {score:.6}"));
    }
    config.log(format!(
        "selected {} of {} components (q={})",
        selector.selected.len(),
        scores.len(),
        config.q
    ));
    Ok(config.selector_path.clone())
}

/// Project the selected training features per class and persist the index.
pub fn cmd_build_index(config: &PipelineConfig, features_path: &Path) -> Result<PathBuf> {
    let manifest = DatasetManifest::load(config.require_train_manifest()?)?;
    let (ids, rows) = read_features_csv(features_path)?;
    let rows = align_to_manifest(&manifest, &ids, &rows)?;
    let (labels, _) = task_labels(&manifest, config.task)?;
    let selector = load_selector(&config.selector_path)?;
    let selected = apply_selection_matrix(&selector, &rows.view())?;
    let manifest_ids: Vec<String> = manifest
        .entries
        .iter()
        .map(|e| e.video_id.clone())
        .collect();
    let index = build_index(
        &selected.view(),
        &labels,
        &manifest_ids,
        config.num_hashes,
        config.seed,
    )?;
    save_index(&config.index_path, &index)?;
    config.log(format!(
        "indexed {} vectors across {} classes (N={})",
        selected.nrows(),
        index.num_classes(),
        config.num_hashes
    ));
    Ok(config.index_path.clone())
}

/// Classify a single descriptor file against the persisted artifacts.
pub fn cmd_classify(config: &PipelineConfig, descriptor_path: &Path) -> Result<Vote> {
    let model = load_model(&config.model_path)?;
    let selector = load_selector(&config.selector_path)?;
    let index = load_index(&config.index_path)?;
    let pooled = pooled_feature(&model, descriptor_path, config.block_widths)?;
    let selected = apply_selection(&selector, &pooled.view())?;
    let vote = index.classify(&selected.view(), config.k)?;

    let class_names: Vec<String> = match (&config.train_manifest, config.task) {
        (Some(path), LabelTask::Background) => DatasetManifest::load(path)?.class_names,
        (_, LabelTask::Foreground) => vec!["background".into(), "foreground".into()],
        _ => (0..vote.confidences.len())
            .map(|c| format!("class_{c}"))
            .collect(),
    };
    let name = class_names
        .get(vote.predicted)
        .cloned()
        .unwrap_or_else(|| format!("class_{}", vote.predicted));
    println!("predicted: {} ({})", vote.predicted, name);
    let formatted: Vec<String> = vote
        .confidences
        .iter()
        .map(|c| format!("{c:.4}"))
        .collect();
    println!("confidences: [{}]", formatted.join(", "));
    Ok(vote)
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub per_pair: Vec<(usize, usize, f64)>,
    pub mean_accuracy: f64,
    /// Confusion matrix at the reference pair; row = true class.
    pub confusion: Array2<usize>,
    pub reference_pair: (usize, usize),
    pub class_names: Vec<String>,
    pub timings: Vec<(String, f64)>,
}

impl EvalReport {
    pub fn accuracy_at_reference(&self) -> f64 {
        let trace: usize = (0..self.confusion.nrows()).map(|i| self.confusion[[i, i]]).sum();
        trace as f64 / self.confusion.sum().max(1) as f64
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("N,K,accuracy\n");
        for &(n, k, acc) in &self.per_pair {
            out.push_str(&format!("{n},{k},{acc:.4}\n"));
        }
        out.push_str(&format!("mean accuracy: {:.4}\n", self.mean_accuracy));
        out.push_str(&format!(
            "confusion at (N={}, K={}), accuracy {:.4}:\n",
            self.reference_pair.0,
            self.reference_pair.1,
            self.accuracy_at_reference()
        ));
        for (i, row) in self.confusion.rows().into_iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:5}")).collect();
            let name = self
                .class_names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("class_{i}"));
            out.push_str(&format!("  {name:<16} {}\n", cells.join(" ")));
        }
        for (stage, seconds) in &self.timings {
            out.push_str(&format!("{stage}: {seconds:.2}s\n"));
        }
        out
    }
}

fn sweep_pairs(config: &PipelineConfig) -> Vec<(usize, usize)> {
    match config.random_pairs {
        Some(count) => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5157_4545_5053_5752);
            let n_lo = *config.n_sweep.iter().min().unwrap_or(&10);
            let n_hi = *config.n_sweep.iter().max().unwrap_or(&50);
            let k_lo = *config.k_sweep.iter().min().unwrap_or(&50);
            let k_hi = *config.k_sweep.iter().max().unwrap_or(&100);
            (0..count)
                .map(|_| (rng.gen_range(n_lo..=n_hi), rng.gen_range(k_lo..=k_hi)))
                .collect()
        }
        None => {
            let mut pairs = Vec::new();
            for &n in &config.n_sweep {
                for &k in &config.k_sweep {
                    pairs.push((n, k));
                }
            }
            pairs
        }
    }
}

fn pair_seed(base: u64, n: usize, k: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((n as u64) << 32)
        .wrapping_add(k as u64)
}

/// Classify every test video for each (N, K) pair of the sweep, rebuilding
/// the per-class projections with a pair-derived seed each time.
pub fn cmd_evaluate(config: &PipelineConfig) -> Result<EvalReport> {
    let train_manifest = DatasetManifest::load(config.require_train_manifest()?)?;
    let test_manifest_path = config
        .test_manifest
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("test_manifest is required".into()))?;
    let test_manifest = DatasetManifest::load(test_manifest_path)?;

    let model = load_model(&config.model_path)?;
    let selector = load_selector(&config.selector_path)?;

    let start = Instant::now();
    let (_, train_rows) = extract_features(&model, &train_manifest, config.block_widths)?;
    let (_, test_rows) = extract_features(&model, &test_manifest, config.block_widths)?;
    let extract_time = start.elapsed().as_secs_f64();

    let (train_labels, class_names) = task_labels(&train_manifest, config.task)?;
    let (test_labels, _) = task_labels(&test_manifest, config.task)?;
    let train_selected = apply_selection_matrix(&selector, &train_rows.view())?;
    let test_selected = apply_selection_matrix(&selector, &test_rows.view())?;
    let train_ids: Vec<String> = train_manifest
        .entries
        .iter()
        .map(|e| e.video_id.clone())
        .collect();

    let classes = class_names.len();
    let pairs = sweep_pairs(config);
    let reference = *pairs
        .iter()
        .min_by_key(|(n, k)| {
            (*n as i64 - DEFAULT_NUM_HASHES as i64).abs() * 1000
                + (*k as i64 - DEFAULT_K as i64).abs()
        })
        .ok_or_else(|| Error::InvalidArgument("empty (N, K) sweep".into()))?;

    let sweep_start = Instant::now();
    let mut per_pair = Vec::with_capacity(pairs.len());
    let mut confusion = Array2::<usize>::zeros((classes, classes));
    for (n, k) in pairs {
        let index = build_index(
            &train_selected.view(),
            &train_labels,
            &train_ids,
            n,
            pair_seed(config.seed, n, k),
        )?;
        let mut correct = 0usize;
        let mut pair_confusion = Array2::<usize>::zeros((classes, classes));
        for (row, &truth) in test_selected.rows().into_iter().zip(&test_labels) {
            let vote = index.classify(&row, k)?;
            if vote.predicted == truth {
                correct += 1;
            }
            pair_confusion[[truth, vote.predicted]] += 1;
        }
        let accuracy = correct as f64 / test_labels.len() as f64;
        config.log(format!("N={n:3} K={k:3} accuracy {accuracy:.4}"));
        if (n, k) == reference {
            confusion = pair_confusion;
        }
        per_pair.push((n, k, accuracy));
    }
    let sweep_time = sweep_start.elapsed().as_secs_f64();

    let mean_accuracy =
        per_pair.iter().map(|&(_, _, a)| a).sum::<f64>() / per_pair.len() as f64;
    let report = EvalReport {
        per_pair,
        mean_accuracy,
        confusion,
        reference_pair: reference,
        class_names,
        timings: vec![
            ("feature extraction".into(), extract_time),
            ("index sweep".into(), sweep_time),
        ],
    };

    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let report_path = config.out_dir.join("eval_report.txt");
    std::fs::write(&report_path, report.render()).map_err(|e| Error::io(&report_path, e))?;
    let confusion_path = config.out_dir.join("confusion.csv");
    let mut csv = String::new();
    for row in report.confusion.rows() {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    std::fs::write(&confusion_path, csv).map_err(|e| Error::io(&confusion_path, e))?;
    Ok(report)
}
