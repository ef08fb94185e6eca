//! One function per pipeline stage. Each reads the previous stage's
//! artifacts from the output directory and writes its own plus a manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rotor_vrae::artifact::{self, Artifact};
use rotor_vrae::clustering::{dbscan, default_dbscan_eps, hierarchical, kmeans_pp, ClusterAssignment, KMeansConfig};
use rotor_vrae::dataset::{
    generate_fleet, load_dataset_dir, select_features, split, windows_from_records, write_dataset_dir, MinMaxScaler,
    WindowedDataset, METADATA_FILE,
};
use rotor_vrae::numerics::Matrix;
use rotor_vrae::projection::{
    default_rbf_gamma, kernel_pca_rbf, pca, spectral_embedding, tsne, Embedding, ProjectionParams,
};
use rotor_vrae::scalar::Scalar;
use rotor_vrae::scoring::{render_table, score_assignment, silhouette, ScoreReport, NORMAL_CLASS};
use rotor_vrae::vrae::{encode_dataset, train_with_validation_every, Checkpoint, EpochStats, LatentSet};

use crate::config::{ClusterInput, ClusterMethod, DataSource, EvalSplit, PipelineConfig, Precision, ProjectionMethod};
use crate::error::{CliError, CliResult};
use crate::manifest::write_manifest;
use crate::plot::render_scatter;

/// File names inside the output directory.
#[derive(Clone, Debug)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(config: &PipelineConfig) -> Self {
        Layout {
            root: config.out_dir.clone(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }
    pub fn train_set(&self) -> PathBuf {
        self.root.join("train.json")
    }
    pub fn test_set(&self) -> PathBuf {
        self.root.join("test.json")
    }
    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("checkpoint.json")
    }
    pub fn training_log(&self) -> PathBuf {
        self.root.join("training_log.csv")
    }
    pub fn latents(&self) -> PathBuf {
        self.root.join("latents.json")
    }
    pub fn embedding(&self) -> PathBuf {
        self.root.join("embedding.json")
    }
    pub fn clusters(&self, method: ClusterMethod) -> PathBuf {
        self.root.join(format!("clusters-{}.json", method.name()))
    }
    pub fn score(&self, method: ClusterMethod) -> PathBuf {
        self.root.join(format!("score-{}.json", method.name()))
    }
    pub fn score_table(&self) -> PathBuf {
        self.root.join("scores.txt")
    }
    pub fn plot(&self) -> PathBuf {
        self.root.join("plots").join("embedding.svg")
    }
}

fn require(path: &Path, what: &'static str, stage: &'static str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingArtifact {
            what,
            path: path.to_path_buf(),
            stage,
        })
    }
}

fn load_stage<A: Artifact>(path: &Path, what: &'static str, stage: &'static str) -> CliResult<A> {
    require(path, what, stage)?;
    Ok(artifact::load(path)?)
}

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Data(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Simulates the fleet and writes one CSV per run plus the metadata file.
pub fn generate(config: &PipelineConfig) -> CliResult<Vec<PathBuf>> {
    let layout = Layout::new(config);
    let records = generate_fleet(&config.synth_config(), &config.data.fleet)?;
    let dir = layout.data_dir();
    let mut files = write_dataset_dir(&records, &dir)?;
    files.sort();
    write_manifest(config, "generate", &[], &files)?;
    log::info!("wrote {} simulations to {}", records.len(), dir.display());
    Ok(files)
}

fn source_dir(config: &PipelineConfig) -> PathBuf {
    match (config.data.source, &config.data.csv_dir) {
        (DataSource::Csv, Some(dir)) => dir.clone(),
        _ => Layout::new(config).data_dir(),
    }
}

fn csv_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

/// Feature selection, windowing, task labels, a stratified split, and a
/// min-max scaler fitted on the training windows alone.
pub fn preprocess(config: &PipelineConfig) -> CliResult<(WindowedDataset<f64>, WindowedDataset<f64>)> {
    let layout = Layout::new(config);
    let dir = source_dir(config);
    require(&dir.join(METADATA_FILE), "simulation metadata", "generate")?;
    let records = load_dataset_dir(&dir)?
        .iter()
        .map(|r| select_features(r, &config.preprocess.features))
        .collect::<Result<Vec<_>, _>>()?;
    let p = &config.preprocess;
    let mut data: WindowedDataset<f64> = windows_from_records(&records, p.window_length, p.stride)?;
    for l in data.labels.iter_mut() {
        *l = config.task.class_of(*l);
    }
    let (mut train, mut test) = if p.train_fraction >= 1.0 {
        let empty = data.empty_like();
        (data, empty)
    } else {
        split(&data, p.train_fraction, config.seed)?
    };
    let scaler = MinMaxScaler::fit_windows(&train)?;
    scaler.apply_windows(&mut train)?;
    scaler.apply_windows(&mut test)?;
    let outputs = [layout.train_set(), layout.test_set()];
    artifact::save(&train, &outputs[0])?;
    artifact::save(&test, &outputs[1])?;
    write_manifest(config, "preprocess", &csv_files(&dir)?, &outputs)?;
    log::info!("{} training and {} test windows", train.len(), test.len());
    Ok((train, test))
}

fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,beta,train_total,train_recon,train_kl,val_total,val_recon,val_kl\n");
    for s in history {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            s.epoch + 1,
            s.beta,
            s.train.total,
            s.train.recon,
            s.train.kl
        );
        match &s.validation {
            Some(v) => {
                let _ = writeln!(out, ",{},{},{}", v.total, v.recon, v.kl);
            }
            None => out.push_str(",,,\n"),
        }
    }
    out
}

fn log_epoch(s: &EpochStats, total: usize) {
    let e = s.epoch + 1;
    if e == 1 || e == total || e % 10 == 0 {
        let val = s
            .validation
            .as_ref()
            .map_or(String::new(), |v| format!("  val {:.6}", v.total));
        log::info!(
            "epoch {e:>4}/{total}  loss {:.6}  recon {:.6}  kl {:.3}{val}",
            s.train.total,
            s.train.recon,
            s.train.kl
        );
    }
}

fn train_as<T: Scalar>(
    config: &PipelineConfig,
    train: &WindowedDataset<f64>,
    test: &WindowedDataset<f64>,
) -> CliResult<Vec<EpochStats>> {
    let vrae = config.vrae_config();
    let train_t: WindowedDataset<T> = train.cast();
    let test_t: WindowedDataset<T> = test.cast();
    let validation = (!test_t.is_empty()).then_some(&test_t);
    let ckpt: Checkpoint<T> = train_with_validation_every(
        &vrae,
        &train_t,
        validation,
        config.model.validation_interval,
        |s| log_epoch(s, vrae.epochs),
    )?;
    ckpt.save(Layout::new(config).checkpoint())?;
    Ok(ckpt.history)
}

/// Trains the autoencoder on the training windows and writes the checkpoint
/// and a per-epoch loss log.
pub fn train(config: &PipelineConfig) -> CliResult<Vec<EpochStats>> {
    let layout = Layout::new(config);
    let train: WindowedDataset<f64> = load_stage(&layout.train_set(), "training windows", "preprocess")?;
    let test: WindowedDataset<f64> = load_stage(&layout.test_set(), "test windows", "preprocess")?;
    let history = match config.model.precision {
        Precision::F32 => train_as::<f32>(config, &train, &test)?,
        Precision::F64 => train_as::<f64>(config, &train, &test)?,
    };
    write_text(&layout.training_log(), &history_csv(&history))?;
    write_manifest(
        config,
        "train",
        &[layout.train_set(), layout.test_set()],
        &[layout.checkpoint(), layout.training_log()],
    )?;
    Ok(history)
}

fn encode_as<T: Scalar>(path: &Path, data: &WindowedDataset<f64>) -> CliResult<LatentSet<f64>> {
    require(path, "model checkpoint", "train")?;
    let ckpt: Checkpoint<T> = Checkpoint::load(path)?;
    let set = encode_dataset(&ckpt, &data.cast::<T>())?;
    Ok(LatentSet {
        latents: set.latents.cast(),
        labels: set.labels,
    })
}

/// Posterior means of the evaluation windows.
pub fn encode(config: &PipelineConfig) -> CliResult<LatentSet<f64>> {
    let layout = Layout::new(config);
    let inputs: Vec<PathBuf> = match config.preprocess.evaluate_on {
        EvalSplit::Train => vec![layout.train_set()],
        EvalSplit::Test => vec![layout.test_set()],
        EvalSplit::All => vec![layout.train_set(), layout.test_set()],
    };
    let mut data: Option<WindowedDataset<f64>> = None;
    for p in &inputs {
        let part: WindowedDataset<f64> = load_stage(p, "windowed dataset", "preprocess")?;
        match data.as_mut() {
            Some(d) => d.extend(&part)?,
            None => data = Some(part),
        }
    }
    let data = data.expect("at least one split");
    if data.is_empty() {
        return Err(CliError::Data("the evaluation split has no windows".into()));
    }
    let ckpt = layout.checkpoint();
    let set = match config.model.precision {
        Precision::F32 => encode_as::<f32>(&ckpt, &data)?,
        Precision::F64 => encode_as::<f64>(&ckpt, &data)?,
    };
    artifact::save(&set, layout.latents())?;
    let mut all_inputs = vec![ckpt];
    all_inputs.extend(inputs);
    write_manifest(config, "encode", &all_inputs, &[layout.latents()])?;
    log::info!("encoded {} windows into {} dimensions", set.labels.len(), set.latents.cols());
    Ok(set)
}

/// Low-dimensional embedding of `x` by the chosen method.
pub fn embed(config: &PipelineConfig, method: ProjectionMethod, x: &Matrix<f64>) -> CliResult<Embedding<f64>> {
    let k = config.projection.components;
    let d = x.cols();
    let e = match method {
        ProjectionMethod::Pca => {
            if k > d {
                return Err(CliError::Usage(format!(
                    "cannot take {k} principal components of {d}-dimensional latents"
                )));
            }
            pca(x, k)?.embedding
        }
        ProjectionMethod::KernelPca => {
            let gamma = config.projection.gamma.unwrap_or_else(|| default_rbf_gamma(x));
            kernel_pca_rbf(x, k, gamma)?
        }
        ProjectionMethod::Tsne => {
            if k != 2 {
                return Err(CliError::Usage(format!("t-SNE embeds into 2 dimensions, not {k}")));
            }
            let r = tsne(x, &config.tsne_config())?;
            log::info!("t-SNE final KL {:.4}", r.final_kl());
            r.embedding
        }
        ProjectionMethod::Spectral => spectral_embedding(x, config.projection.neighbors, k)?,
    };
    Ok(e)
}

/// Projects the latents and stores the class tags alongside.
pub fn project(config: &PipelineConfig, method: Option<ProjectionMethod>) -> CliResult<Embedding<f64>> {
    let layout = Layout::new(config);
    let set: LatentSet<f64> = load_stage(&layout.latents(), "latent vectors", "encode")?;
    let method = method.unwrap_or(config.projection.method);
    let embedding = embed(config, method, &set.latents)?.with_labels(set.labels)?;
    artifact::save(&embedding, layout.embedding())?;
    write_manifest(config, "project", &[layout.latents()], &[layout.embedding()])?;
    Ok(embedding)
}

/// The points a clustering or score stage works on, with their class tags.
fn cluster_points(config: &PipelineConfig) -> CliResult<(PathBuf, Matrix<f64>, Vec<usize>)> {
    let layout = Layout::new(config);
    match config.clustering.on {
        ClusterInput::Embedding => {
            let e: Embedding<f64> = load_stage(&layout.embedding(), "embedding", "project")?;
            e.validate()?;
            Ok((layout.embedding(), e.points, e.labels))
        }
        ClusterInput::Latents => {
            let s: LatentSet<f64> = load_stage(&layout.latents(), "latent vectors", "encode")?;
            Ok((layout.latents(), s.latents, s.labels))
        }
    }
}

pub fn cluster_with(config: &PipelineConfig, method: ClusterMethod, x: &Matrix<f64>) -> CliResult<ClusterAssignment<f64>> {
    let c = &config.clustering;
    let a = match method {
        ClusterMethod::Kmeans => kmeans_pp(
            x,
            &KMeansConfig {
                k: c.k,
                seed: config.seed,
                max_iter: c.max_iter,
                tol: c.tol,
                restarts: c.restarts,
            },
        )?,
        ClusterMethod::Hierarchical => hierarchical(x, c.k, c.linkage)?,
        ClusterMethod::Dbscan => {
            let eps = c.eps.unwrap_or_else(|| default_dbscan_eps(x, c.min_pts));
            dbscan(x, eps, c.min_pts)?
        }
    };
    Ok(a)
}

fn methods_or_default(config: &PipelineConfig, method: Option<ClusterMethod>) -> Vec<ClusterMethod> {
    method.map_or_else(|| config.clustering.methods.clone(), |m| vec![m])
}

/// Clusters the embedding (or latents) with each requested method.
pub fn cluster(config: &PipelineConfig, method: Option<ClusterMethod>) -> CliResult<Vec<ClusterAssignment<f64>>> {
    let layout = Layout::new(config);
    let (input, x, _) = cluster_points(config)?;
    let mut out = Vec::new();
    for m in methods_or_default(config, method) {
        let a = cluster_with(config, m, &x)?;
        log::info!("{}: {} clusters, {} noise points", m.display_name(), a.n_clusters(), a.noise_count());
        let path = layout.clusters(m);
        artifact::save(&a, &path)?;
        write_manifest(config, "cluster", std::slice::from_ref(&input), &[path])?;
        out.push(a);
    }
    Ok(out)
}

/// Mean silhouette of normal versus abnormal windows, when both are present.
pub fn normal_silhouette(points: &Matrix<f64>, labels: &[usize]) -> Option<f64> {
    let binary: Vec<usize> = labels.iter().map(|&l| usize::from(l != NORMAL_CLASS)).collect();
    if binary.iter().all(|&b| b == binary[0]) {
        return None;
    }
    silhouette(points, &binary).ok()
}

/// Outcome of the score stage.
#[derive(Clone, Debug)]
pub struct ScoreSummary {
    pub reports: Vec<ScoreReport>,
    pub silhouette: Option<f64>,
    pub text: String,
}

/// Matches every stored assignment to the truth, writes one report per
/// method and a combined text table.
pub fn score(config: &PipelineConfig, method: Option<ClusterMethod>) -> CliResult<ScoreSummary> {
    let layout = Layout::new(config);
    let (input, x, truth) = cluster_points(config)?;
    if truth.len() != x.rows() {
        return Err(CliError::Data(format!(
            "{} has {} class tags for {} points",
            input.display(),
            truth.len(),
            x.rows()
        )));
    }
    let names = config.class_names();
    let mut reports = Vec::new();
    let mut inputs = vec![input];
    let mut outputs = Vec::new();
    for m in methods_or_default(config, method) {
        let path = layout.clusters(m);
        let a: ClusterAssignment<f64> = load_stage(&path, "cluster assignment", "cluster")?;
        a.validate()?;
        let report = score_assignment(m.display_name(), &a, &x, &truth, &names)?;
        let out = layout.score(m);
        artifact::save(&report, &out)?;
        inputs.push(path);
        outputs.push(out);
        reports.push(report);
    }
    let sil = normal_silhouette(&x, &truth);
    let refs: Vec<&ScoreReport> = reports.iter().collect();
    let mut text = render_table(&refs);
    if let Some(s) = sil {
        let _ = writeln!(text, "\nSilhouette (normal vs abnormal): {s:.4}");
    }
    for r in &reports {
        text.push('\n');
        text.push_str(&r.detail_text());
    }
    write_text(&layout.score_table(), &text)?;
    outputs.insert(0, layout.score_table());
    write_manifest(config, "score", &inputs, &outputs)?;
    Ok(ScoreSummary {
        reports,
        silhouette: sil,
        text,
    })
}

fn axis_name(params: &ProjectionParams) -> &'static str {
    match params {
        ProjectionParams::Pca { .. } => ProjectionMethod::Pca.display_name(),
        ProjectionParams::KernelPca { .. } => ProjectionMethod::KernelPca.display_name(),
        ProjectionParams::Tsne(_) => ProjectionMethod::Tsne.display_name(),
        ProjectionParams::Spectral { .. } => ProjectionMethod::Spectral.display_name(),
    }
}

/// Scatter plot of the embedding coloured by class.
pub fn plot(config: &PipelineConfig, output: Option<&Path>) -> CliResult<PathBuf> {
    let layout = Layout::new(config);
    let e: Embedding<f64> = load_stage(&layout.embedding(), "embedding", "project")?;
    let svg = render_scatter(&e.points, &e.labels, &config.class_names(), axis_name(&e.params))?;
    let path = output.map_or_else(|| layout.plot(), Path::to_path_buf);
    write_text(&path, &svg)?;
    write_manifest(config, "plot", &[layout.embedding()], std::slice::from_ref(&path))?;
    Ok(path)
}

/// Every stage in order.
pub fn run(config: &PipelineConfig) -> CliResult<ScoreSummary> {
    if config.data.source == DataSource::Synthetic {
        generate(config)?;
    }
    preprocess(config)?;
    train(config)?;
    encode(config)?;
    project(config, None)?;
    cluster(config, None)?;
    let summary = score(config, None)?;
    plot(config, None)?;
    Ok(summary)
}
