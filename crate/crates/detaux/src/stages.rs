//! Pipeline stages. Each stage loads its inputs from the output directory,
//! computes, and writes its artifacts; running a stage twice with the same
//! configuration and seed produces bit-identical files. `full_run` chains
//! the stages and emits the final comparison report plus a manifest of
//! artifact hashes.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use detaux_core::metrics::nmi_excluding_noise;
use detaux_core::mtlearn::{train_mtl, train_stl, RunReport};
use detaux_core::rng::{derive_seed, Stream};
use detaux_core::scalar::Scalar;
use detaux_core::subspace::{separation_stats, train, DisModel, SubspaceConfig};
use detaux_core::synthgen::{generate, read_dtxd, split_holdout, write_dtxd, FactorDataset};
use detaux_core::taskmine::{
    cross_subspace_covariance, discover_aux_task, mine_clusters, pca_project, ClusterAssignment,
    SubspaceScore,
};

use crate::config::{PipelineConfig, RunMode};
use crate::manifest::RunManifest;
use crate::report::{FinalReport, ReplicateOutcome, SeparationSummary};
use crate::svg::scatter_svg;
use crate::PipelineError;

/// Artifact locations inside the output directory.
pub struct StagePaths {
    root: PathBuf,
}

impl StagePaths {
    pub fn new(out_dir: &Path) -> Self {
        Self {
            root: out_dir.to_path_buf(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn data(&self) -> PathBuf {
        self.root.join("data.dtxd")
    }
    pub fn split(&self) -> PathBuf {
        self.root.join("split.json")
    }
    pub fn dis_model(&self) -> PathBuf {
        self.root.join("dis_model.dtxm")
    }
    pub fn dis_history(&self) -> PathBuf {
        self.root.join("dis_history.csv")
    }
    pub fn discover_json(&self) -> PathBuf {
        self.root.join("discover.json")
    }
    pub fn aux_labels(&self) -> PathBuf {
        self.root.join("aux_labels.csv")
    }
    pub fn pca_csv(&self) -> PathBuf {
        self.root.join("pca.csv")
    }
    pub fn pca_svg(&self) -> PathBuf {
        self.root.join("pca.svg")
    }
    pub fn mtl_report(&self, rep: usize) -> PathBuf {
        self.root.join(format!("mtl_report_rep{}.json", rep))
    }
    pub fn stl_report(&self, rep: usize) -> PathBuf {
        self.root.join(format!("stl_report_rep{}.json", rep))
    }
    pub fn mtl_model(&self, rep: usize) -> PathBuf {
        self.root.join(format!("mtl_model_rep{}.dtxm", rep))
    }
    pub fn stl_model(&self, rep: usize) -> PathBuf {
        self.root.join(format!("stl_model_rep{}.dtxm", rep))
    }
    pub fn final_report(&self) -> PathBuf {
        self.root.join("report.json")
    }
    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}

#[derive(Serialize, Deserialize)]
struct SplitFile {
    train: Vec<usize>,
    test: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreEntry {
    /// 1-based subspace index.
    pub subspace: usize,
    pub mean_share: f64,
    pub pairs: usize,
}

/// Written as `discover.json`. Holds only training-side facts; evaluation
/// against hidden factors happens at reporting time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoverSummary {
    pub status: String,
    pub mode: String,
    /// 1-based index of the mined subspace (absent in the ablation mode,
    /// which clusters the raw latent code).
    pub subspace: Option<usize>,
    pub num_clusters: usize,
    pub aux_classes: Option<usize>,
    pub noise_fraction: f64,
    pub min_cluster_size: usize,
    pub scores: Vec<ScoreEntry>,
    pub separation: Option<SeparationSummary>,
}

pub const STATUS_OK: &str = "ok";
pub const STATUS_NO_AUX: &str = "no auxiliary task";

// ── stage: gen-data ─────────────────────────────────────────────────

pub fn gen_data(cfg: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let paths = StagePaths::new(&cfg.out_dir);
    fs::create_dir_all(paths.root())?;
    let spec = cfg.dataset.factor_spec();
    let dataset = generate(
        &spec,
        cfg.dataset.noise_fraction,
        cfg.dataset.per_channel_noise,
        cfg.dataset.replicas,
        cfg.seed,
    )?;
    let (train_idx, test_idx) = split_holdout(
        &dataset,
        &cfg.dataset.holdout_factors,
        cfg.dataset.holdout_fraction,
        cfg.seed,
    )?;
    write_dtxd(&paths.data(), &dataset)?;
    let split = SplitFile {
        train: train_idx,
        test: test_idx,
    };
    fs::write(
        paths.split(),
        serde_json::to_string_pretty(&split).expect("split serializes") + "\n",
    )?;
    Ok(vec![paths.data(), paths.split()])
}

fn load_dataset(cfg: &PipelineConfig) -> Result<FactorDataset, PipelineError> {
    let paths = StagePaths::new(&cfg.out_dir);
    if !paths.data().exists() {
        return Err(PipelineError::MissingArtifact {
            path: paths.data(),
            stage: "gen-data",
        });
    }
    let raw = read_dtxd(&paths.data())?;
    Ok(raw.into_dataset(cfg.dataset.factor_spec())?)
}

fn load_split(cfg: &PipelineConfig, n: usize) -> Result<(Vec<usize>, Vec<usize>), PipelineError> {
    let paths = StagePaths::new(&cfg.out_dir);
    if !paths.split().exists() {
        return Err(PipelineError::MissingArtifact {
            path: paths.split(),
            stage: "gen-data",
        });
    }
    let text = fs::read_to_string(paths.split())?;
    let split: SplitFile =
        serde_json::from_str(&text).map_err(|e| PipelineError::Run(format!("split.json: {}", e)))?;
    if split.train.iter().chain(&split.test).any(|&i| i >= n) {
        return Err(PipelineError::Run("split indices out of range".into()));
    }
    Ok((split.train, split.test))
}

/// The ablation trains the same architecture on reconstruction alone: all
/// structural weights zero, which the schedule realizes as an all-warm-up
/// run.
fn effective_subspace_config(cfg: &PipelineConfig) -> Result<SubspaceConfig, PipelineError> {
    let mut core = cfg.subspace.to_core()?;
    if cfg.mode == RunMode::NoDisentangle {
        core.contrast_weight = 0.0;
        core.consistency_weight = 0.0;
        core.balance_weight = 0.0;
        core.warmup_epochs = core.epochs;
    }
    Ok(core)
}

// ── stage: train-dis ────────────────────────────────────────────────

pub fn train_dis<S: Scalar>(cfg: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let paths = StagePaths::new(&cfg.out_dir);
    let dataset = load_dataset(cfg)?;
    let (train_idx, _) = load_split(cfg, dataset.len())?;
    let view = dataset.view(&train_idx);
    let core_cfg = effective_subspace_config(cfg)?;
    let mut model = DisModel::<S>::init(view.input_dim(), &core_cfg, cfg.seed)?;
    let history = train(&mut model, &view, &core_cfg, cfg.seed)?;
    model.save(&paths.dis_model(), &core_cfg)?;

    let mut csv = String::from("epoch,reconstruction,distance,sparsity,consistency,balance,total\n");
    for e in &history.epochs {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.epoch, e.reconstruction, e.distance, e.sparsity, e.consistency, e.balance, e.total
        ));
    }
    fs::write(paths.dis_history(), csv)?;
    Ok(vec![paths.dis_model(), paths.dis_history()])
}

fn load_dis_model<S: Scalar>(
    cfg: &PipelineConfig,
) -> Result<(DisModel<S>, SubspaceConfig), PipelineError> {
    let paths = StagePaths::new(&cfg.out_dir);
    if !paths.dis_model().exists() {
        return Err(PipelineError::MissingArtifact {
            path: paths.dis_model(),
            stage: "train-dis",
        });
    }
    Ok(DisModel::<S>::load(&paths.dis_model(), 0)?)
}

// ── stage: discover ─────────────────────────────────────────────────

pub fn discover_stage<S: Scalar>(
    cfg: &PipelineConfig,
) -> Result<(DiscoverSummary, Vec<PathBuf>), PipelineError> {
    let paths = StagePaths::new(&cfg.out_dir);
    let dataset = load_dataset(cfg)?;
    let (train_idx, test_idx) = load_split(cfg, dataset.len())?;
    let view = dataset.view(&train_idx);
    let (model, core_cfg) = load_dis_model::<S>(cfg)?;
    let options = cfg.mining.to_core();

    let mode_name = mode_name(cfg.mode);
    let (scores, subspace, assignment, task, points): (
        Vec<SubspaceScore>,
        Option<usize>,
        ClusterAssignment,
        Option<detaux_core::taskmine::AuxTask>,
        Vec<Vec<f64>>,
    );
    match cfg.mode {
        RunMode::NoDisentangle => {
            // cluster the raw latent code, no projection and no scoring
            let raw = model.encode_view(&view, 256);
            let params = options.hdbscan_params(view.len());
            let (assign, t) = mine_clusters(&raw, &params, 0)?;
            scores = Vec::new();
            subspace = None;
            assignment = assign;
            task = t;
            points = raw;
        }
        _ => {
            let discovery = discover_aux_task(
                &model,
                &view,
                core_cfg.forced_subspace,
                core_cfg.distance,
                &options,
                cfg.seed,
            )?;
            points = model.project_view(&view, discovery.subspace, 256);
            scores = discovery.scores;
            subspace = Some(discovery.subspace);
            assignment = discovery.assignment;
            task = discovery.task;
        }
    }

    let mut artifacts = Vec::new();
    if let Some(task) = &task {
        let mut csv = String::from("index,y,y_aux\n");
        for (i, &label) in task.labels.iter().enumerate() {
            csv.push_str(&format!("{},{},{}\n", view.global_index(i), view.label(i), label));
        }
        fs::write(paths.aux_labels(), csv)?;
        artifacts.push(paths.aux_labels());
    }

    // scatter diagnostic of the clustered point cloud
    let out_dims = 3.min(points.first().map_or(1, |p| p.len()));
    let pca = pca_project(&points, out_dims)?;
    let mut csv = String::from("index,cluster,pc1,pc2,pc3\n");
    for (i, proj) in pca.projected.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            view.global_index(i),
            assignment.labels[i],
            proj.first().copied().unwrap_or(0.0),
            proj.get(1).copied().unwrap_or(0.0),
            proj.get(2).copied().unwrap_or(0.0),
        ));
    }
    fs::write(paths.pca_csv(), csv)?;
    fs::write(paths.pca_svg(), scatter_svg(&pca.projected, &assignment.labels))?;
    artifacts.push(paths.pca_csv());
    artifacts.push(paths.pca_svg());

    let separation = if cfg.mode == RunMode::Full && !test_idx.is_empty() {
        let test_view = dataset.view(&test_idx);
        let stats = separation_stats(
            &model,
            &test_view,
            core_cfg.forced_subspace,
            core_cfg.distance,
            cfg.mining.separation_pairs,
            cfg.seed,
        )?;
        Some(SeparationSummary {
            mean_differing: stats.mean_differing,
            mean_same: stats.mean_same,
            ratio: stats.ratio,
        })
    } else {
        None
    };

    let summary = DiscoverSummary {
        status: if task.is_some() { STATUS_OK } else { STATUS_NO_AUX }.to_string(),
        mode: mode_name.to_string(),
        subspace: subspace.map(|j| j + 1),
        num_clusters: assignment.num_clusters,
        aux_classes: task.as_ref().map(|t| t.num_classes),
        noise_fraction: assignment.noise_count() as f64 / assignment.labels.len().max(1) as f64,
        min_cluster_size: options.hdbscan_params(view.len()).min_cluster_size,
        scores: scores
            .iter()
            .map(|s| ScoreEntry {
                subspace: s.subspace + 1,
                mean_share: s.mean_share,
                pairs: s.pairs,
            })
            .collect(),
        separation,
    };
    fs::write(
        paths.discover_json(),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;
    artifacts.push(paths.discover_json());
    Ok((summary, artifacts))
}

fn load_discover_summary(cfg: &PipelineConfig) -> Result<DiscoverSummary, PipelineError> {
    let paths = StagePaths::new(&cfg.out_dir);
    if !paths.discover_json().exists() {
        return Err(PipelineError::MissingArtifact {
            path: paths.discover_json(),
            stage: "discover",
        });
    }
    let text = fs::read_to_string(paths.discover_json())?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Run(format!("discover.json: {}", e)))
}

fn load_aux_labels(
    cfg: &PipelineConfig,
    train_idx: &[usize],
) -> Result<(Vec<i64>, usize), PipelineError> {
    let paths = StagePaths::new(&cfg.out_dir);
    if !paths.aux_labels().exists() {
        return Err(PipelineError::MissingArtifact {
            path: paths.aux_labels(),
            stage: "discover",
        });
    }
    let text = fs::read_to_string(paths.aux_labels())?;
    let mut labels = Vec::new();
    for (row, line) in text.lines().skip(1).enumerate() {
        let mut cols = line.split(',');
        let idx: usize = cols
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| PipelineError::Run(format!("aux_labels.csv row {}: bad index", row)))?;
        let _y = cols.next();
        let y_aux: i64 = cols
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| PipelineError::Run(format!("aux_labels.csv row {}: bad label", row)))?;
        if train_idx.get(row) != Some(&idx) {
            return Err(PipelineError::Run(format!(
                "aux_labels.csv row {} indexes sample {}, expected the training split order",
                row, idx
            )));
        }
        labels.push(y_aux);
    }
    if labels.len() != train_idx.len() {
        return Err(PipelineError::Run(format!(
            "aux_labels.csv has {} rows, training split has {}",
            labels.len(),
            train_idx.len()
        )));
    }
    let classes = labels.iter().copied().max().unwrap_or(-1) + 1;
    if classes < 2 {
        return Err(PipelineError::Run(
            "aux_labels.csv holds fewer than two classes".into(),
        ));
    }
    Ok((labels, classes as usize))
}

// ── evaluation-only context shared by the reporting paths ───────────

struct EvalContext {
    /// Hidden reference factor values of the training samples, if any.
    reference: Option<Vec<i64>>,
}

impl EvalContext {
    fn new(cfg: &PipelineConfig, dataset: &FactorDataset, train_idx: &[usize]) -> Self {
        let reference = cfg
            .dataset
            .resolved_reference_factor()
            .and_then(|name| dataset.factor_column(&name).ok())
            .map(|col| train_idx.iter().map(|&i| col[i] as i64).collect());
        Self { reference }
    }

    fn nmi(&self, aux_labels: &[i64]) -> (Option<f64>, Option<f64>) {
        match &self.reference {
            Some(reference) => {
                let (nmi, noise) = nmi_excluding_noise(aux_labels, reference);
                (Some(nmi), Some(noise))
            }
            None => (None, None),
        }
    }
}

fn replicate_seed(cfg: &PipelineConfig, rep: usize) -> u64 {
    derive_seed(cfg.seed, Stream::Replicate, rep as u64)
}

// ── stage: train-mtl ────────────────────────────────────────────────

pub fn train_mtl_stage<S: Scalar>(
    cfg: &PipelineConfig,
) -> Result<(Vec<RunReport>, Vec<PathBuf>), PipelineError> {
    let paths = StagePaths::new(&cfg.out_dir);
    let dataset = load_dataset(cfg)?;
    let (train_idx, test_idx) = load_split(cfg, dataset.len())?;
    let (aux_labels, aux_classes) = load_aux_labels(cfg, &train_idx)?;
    let summary = load_discover_summary(cfg)?;
    let train_view = dataset.view(&train_idx);
    let test_view = dataset.view(&test_idx);
    let mtl_cfg = cfg.mtl.to_core()?;
    let eval = EvalContext::new(cfg, &dataset, &train_idx);

    // the covariance diagnostic needs the trained subspace model
    let covariance = match (cfg.mode, summary.subspace) {
        (RunMode::Full, Some(subspace_1b)) => {
            let (model, core_cfg) = load_dis_model::<S>(cfg)?;
            Some(cross_subspace_covariance(
                &model,
                &train_view,
                core_cfg.forced_subspace,
                subspace_1b - 1,
            )?)
        }
        _ => None,
    };

    let mut reports = Vec::new();
    let mut artifacts = Vec::new();
    for rep in 0..cfg.mtl.replicates {
        let seed = replicate_seed(cfg, rep);
        let (model, mut report) = train_mtl::<S>(
            &train_view,
            &test_view,
            &aux_labels,
            aux_classes,
            &mtl_cfg,
            seed,
        )?;
        let (nmi, noise) = eval.nmi(&aux_labels);
        report.aux_nmi = nmi;
        report.aux_noise_fraction = noise;
        report.covariance_diag = covariance;
        model.save(&paths.mtl_model(rep), &mtl_cfg)?;
        fs::write(
            paths.mtl_report(rep),
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        )?;
        artifacts.push(paths.mtl_model(rep));
        artifacts.push(paths.mtl_report(rep));
        reports.push(report);
    }
    Ok((reports, artifacts))
}

// ── stage: train-stl ────────────────────────────────────────────────

pub fn train_stl_stage<S: Scalar>(
    cfg: &PipelineConfig,
) -> Result<(Vec<RunReport>, Vec<PathBuf>), PipelineError> {
    let paths = StagePaths::new(&cfg.out_dir);
    let dataset = load_dataset(cfg)?;
    let (train_idx, test_idx) = load_split(cfg, dataset.len())?;
    let train_view = dataset.view(&train_idx);
    let test_view = dataset.view(&test_idx);
    let mtl_cfg = cfg.mtl.to_core()?;

    let mut reports = Vec::new();
    let mut artifacts = Vec::new();
    for rep in 0..cfg.mtl.replicates {
        let seed = replicate_seed(cfg, rep);
        let (model, report) = train_stl::<S>(&train_view, &test_view, &mtl_cfg, seed)?;
        model.save(&paths.stl_model(rep), &mtl_cfg)?;
        fs::write(
            paths.stl_report(rep),
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        )?;
        artifacts.push(paths.stl_model(rep));
        artifacts.push(paths.stl_report(rep));
        reports.push(report);
    }
    Ok((reports, artifacts))
}

// ── full run ────────────────────────────────────────────────────────

fn mode_name(mode: RunMode) -> &'static str {
    match mode {
        RunMode::Full => "full",
        RunMode::NoDisentangle => "entangled-ablation",
        RunMode::StlOnly => "stl-only",
    }
}

pub fn full_run<S: Scalar>(cfg: &PipelineConfig) -> Result<FinalReport, PipelineError> {
    let paths = StagePaths::new(&cfg.out_dir);
    let mut manifest = RunManifest::new(cfg);

    let t = Instant::now();
    let artifacts = gen_data(cfg)?;
    record(&mut manifest, "gen-data", t, &artifacts)?;

    let mut summary: Option<DiscoverSummary> = None;
    if cfg.mode != RunMode::StlOnly {
        let t = Instant::now();
        let artifacts = train_dis::<S>(cfg)?;
        record(&mut manifest, "train-dis", t, &artifacts)?;

        let t = Instant::now();
        let (s, artifacts) = discover_stage::<S>(cfg)?;
        record(&mut manifest, "discover", t, &artifacts)?;
        summary = Some(s);
    }

    let t = Instant::now();
    let (stl_reports, artifacts) = train_stl_stage::<S>(cfg)?;
    record(&mut manifest, "train-stl", t, &artifacts)?;

    let have_task = summary.as_ref().is_some_and(|s| s.aux_classes.is_some());
    let mtl_reports = if have_task {
        let t = Instant::now();
        let (reports, artifacts) = train_mtl_stage::<S>(cfg)?;
        record(&mut manifest, "train-mtl", t, &artifacts)?;
        Some(reports)
    } else {
        None
    };

    let report = build_final_report(cfg, summary.as_ref(), &stl_reports, mtl_reports.as_deref());
    fs::write(paths.final_report(), report.to_json())?;
    manifest.write(&paths.manifest())?;
    Ok(report)
}

fn record(
    manifest: &mut RunManifest,
    stage: &str,
    started: Instant,
    artifacts: &[PathBuf],
) -> Result<(), PipelineError> {
    let refs: Vec<&Path> = artifacts.iter().map(|p| p.as_path()).collect();
    manifest.record(stage, started, &refs)
}

fn build_final_report(
    cfg: &PipelineConfig,
    summary: Option<&DiscoverSummary>,
    stl_reports: &[RunReport],
    mtl_reports: Option<&[RunReport]>,
) -> FinalReport {
    let mean = |vals: &[f64]| vals.iter().sum::<f64>() / vals.len().max(1) as f64;
    let stl_accs: Vec<f64> = stl_reports.iter().map(|r| r.test_accuracy_main).collect();
    let stl_acc = mean(&stl_accs);
    let mtl_accs: Option<Vec<f64>> =
        mtl_reports.map(|rs| rs.iter().map(|r| r.test_accuracy_main).collect());
    let mtl_acc = mtl_accs.as_deref().map(mean);
    let delta = mtl_acc.map(|m| m - stl_acc);

    let per_replicate = stl_reports
        .iter()
        .enumerate()
        .map(|(rep, stl)| {
            let mtl = mtl_reports.and_then(|rs| rs.get(rep));
            ReplicateOutcome {
                replicate: rep,
                seed: stl.seed,
                stl_acc: stl.test_accuracy_main,
                mtl_acc: mtl.map(|r| r.test_accuracy_main),
                delta: mtl.map(|r| r.test_accuracy_main - stl.test_accuracy_main),
            }
        })
        .collect();

    let first_mtl = mtl_reports.and_then(|rs| rs.first());
    let status = match (cfg.mode, summary) {
        (RunMode::StlOnly, _) => STATUS_OK.to_string(),
        (_, Some(s)) => s.status.clone(),
        _ => STATUS_OK.to_string(),
    };
    FinalReport {
        mode: mode_name(cfg.mode).to_string(),
        status,
        seed: cfg.seed,
        stl_acc,
        mtl_acc,
        delta,
        aux_classes: summary.and_then(|s| s.aux_classes),
        aux_nmi: first_mtl.and_then(|r| r.aux_nmi),
        aux_noise_fraction: first_mtl.and_then(|r| r.aux_noise_fraction),
        covariance_diag: first_mtl.and_then(|r| r.covariance_diag),
        separation: summary.and_then(|s| s.separation.clone()),
        mined_subspace: summary.and_then(|s| s.subspace),
        replicates: cfg.mtl.replicates,
        per_replicate,
    }
}
