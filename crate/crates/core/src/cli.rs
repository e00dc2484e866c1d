//! Command-line front end.
//!
//! Every command takes a directory of frames (`<stem>.bin`, plus
//! `<stem>.label` where ground truth is needed), processes them in
//! lexicographic order on a worker pool and writes one set of outputs per
//! frame. A frame that fails is logged and skipped; the run then reports a
//! nonzero failure count.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::{export_samples, SampleArchive};
use crate::bbox::OrientedBBox;
use crate::cloud::PointCloud;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::eval::{
    benchmark_stage1, generate_synthetic_scene, pointwise_metrics, proposal_recall_from_labels,
    random_scene_spec, MetricsReport, ProposalRecall, RandomSceneOptions, SceneSpec, TimingReport,
};
use crate::io;
use crate::pipeline::{run_stage1, Stage1Params};
use crate::prep::prepare_proposal;
use crate::refine::{adaptive_threshold, Proposal};

#[derive(Debug, Parser)]
#[command(name = "ringseg", version, about = "Ring-based LiDAR cluster proposals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster proposals for every frame.
    Segment(CommonArgs),
    /// Turn segmented frames into a sample archive.
    Prepare(PrepareArgs),
    /// Point-wise metrics and proposal recall against ground truth.
    Eval(EvalArgs),
    /// Per-stage timing of the proposal pipeline.
    Bench(BenchArgs),
    /// Write synthetic scans with ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory holding `segment` output; defaults to the input directory.
    #[arg(long)]
    pub segments: Option<PathBuf>,
    /// Emit all eight symmetric views of each foreground sample.
    #[arg(long)]
    pub augment: bool,
    #[arg(long)]
    pub n_points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory of predicted `<stem>.label` files.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Directory holding `segment` output; the pipeline is run in memory
    /// when absent.
    #[arg(long)]
    pub segments: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Also time the pipeline with its internal parallelism enabled.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of random scenes when no scene file is given as input.
    #[arg(long, default_value_t = 1)]
    pub frames: usize,
}

/// Outcome of a command over a set of frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub frames: usize,
    pub failed: usize,
}

impl RunSummary {
    pub fn success(&self) -> bool {
        self.failed == 0
    }
}

pub fn run(cli: Cli) -> Result<RunSummary> {
    match cli.command {
        Command::Segment(a) => cmd_segment(&a),
        Command::Prepare(a) => cmd_prepare(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn load_config(args: &CommonArgs) -> Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
    }
    if let Some(p) = &args.output {
        cfg.output = Some(p.clone());
    }
    if let Some(s) = args.seed {
        cfg.rng_seed = s;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    Ok(cfg)
}

fn required(path: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
    path.clone()
        .ok_or_else(|| Error::config(key, format!("required; set it in the config file or pass --{key}")))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Precondition(format!("worker pool: {e}")))
}

/// `<stem>.bin` files under `input` sorted by name, or `input` itself when
/// it is a file.
pub fn list_frames(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let entries = fs::read_dir(input).map_err(|e| Error::io(input, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(input, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "bin") {
            frames.push(path);
        }
    }
    frames.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(frames)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn sibling(dir: &Path, stem: &str, ext: &str) -> PathBuf {
    dir.join(format!("{stem}.{ext}"))
}

fn frame_dir(frame: &Path) -> PathBuf {
    frame.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Format(e.to_string()))
}

/// Logs failures and counts them.
fn tally<T>(frames: &[PathBuf], results: &[Result<T>]) -> RunSummary {
    let mut failed = 0;
    for (frame, r) in frames.iter().zip(results) {
        if let Err(e) = r {
            error!("{}: {e}", frame.display());
            failed += 1;
        }
    }
    RunSummary {
        frames: frames.len(),
        failed,
    }
}

/// Adaptive count threshold settings, reported alongside results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub th_num_base: usize,
    pub d_ref: f64,
    pub th_num_floor: usize,
    pub distance_statistic: String,
}

impl ThresholdConfig {
    fn from_params(params: &Stage1Params) -> Self {
        Self {
            th_num_base: params.refine.th_num_base,
            d_ref: params.refine.d_ref,
            th_num_floor: params.refine.th_num_floor,
            distance_statistic: "centroid".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub cluster_id: u32,
    pub member_count: usize,
    pub distance: f64,
    pub threshold: usize,
    pub bbox: OrientedBBox,
}

/// Per-frame `<stem>.proposals.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameManifest {
    pub frame: String,
    pub points: usize,
    pub clusters_formed: usize,
    pub points_passed: usize,
    pub threshold: ThresholdConfig,
    pub proposals: Vec<ProposalRecord>,
}

fn segment_frame(frame: &Path, output: &Path, params: &Stage1Params) -> Result<usize> {
    let cloud = io::load_point_cloud(frame)?;
    let out = run_stage1(&cloud, params)?;
    let name = stem(frame);
    let proposals = out
        .proposals
        .iter()
        .map(|p| {
            Ok(ProposalRecord {
                cluster_id: p.cluster_id,
                member_count: p.members.len(),
                distance: p.distance,
                threshold: adaptive_threshold(p.distance, &params.refine)?,
                bbox: p.bbox,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = FrameManifest {
        frame: name.clone(),
        points: cloud.len(),
        clusters_formed: out.clusters_formed(),
        points_passed: out.points_passed(),
        threshold: ThresholdConfig::from_params(params),
        proposals,
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    io::save_cluster_ids(sibling(output, &name, "clusters"), &out.point_labels)?;
    write_file(&sibling(output, &name, "proposals.json"), &json)?;
    Ok(manifest.proposals.len())
}

pub fn cmd_segment(args: &CommonArgs) -> Result<RunSummary> {
    let cfg = load_config(args)?;
    cfg.validate()?;
    let input = required(&cfg.input, "input")?;
    let output = required(&cfg.output, "output")?;
    let frames = list_frames(&input)?;
    if frames.is_empty() {
        warn!("no frames in {}", input.display());
        return Ok(RunSummary::default());
    }
    create_dir(&output)?;
    let params = cfg.stage1();
    let results: Vec<Result<usize>> = pool(cfg.jobs)?
        .install(|| frames.par_iter().map(|f| segment_frame(f, &output, &params)).collect());
    let summary = tally(&frames, &results);
    info!(
        "segmented {} of {} frames into {} proposals",
        summary.frames - summary.failed,
        summary.frames,
        results.iter().flatten().sum::<usize>()
    );
    Ok(summary)
}

/// Rebuilds the proposals of a segmented frame from its manifest and
/// cluster id file. Members are in ascending point order.
pub fn load_segmented_frame(dir: &Path, name: &str, n_points: usize) -> Result<Vec<Proposal>> {
    let ids = io::load_cluster_ids(sibling(dir, name, "clusters"), n_points)?;
    let path = sibling(dir, name, "proposals.json");
    let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: FrameManifest =
        serde_json::from_slice(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &id) in ids.iter().enumerate() {
        if id != 0 {
            members.entry(id).or_default().push(i);
        }
    }
    manifest
        .proposals
        .iter()
        .map(|r| {
            let m = members.remove(&r.cluster_id).unwrap_or_default();
            if m.len() != r.member_count {
                return Err(Error::Format(format!(
                    "{name}: proposal {} lists {} members, cluster file has {}",
                    r.cluster_id,
                    r.member_count,
                    m.len()
                )));
            }
            Ok(Proposal {
                cluster_id: r.cluster_id,
                members: m,
                bbox: r.bbox,
                distance: r.distance,
            })
        })
        .collect()
}

fn load_labeled(frame: &Path) -> Result<PointCloud> {
    let cloud = io::load_point_cloud(frame)?;
    let name = stem(frame);
    let label_path = sibling(&frame_dir(frame), &name, "label");
    if !label_path.is_file() {
        return Err(Error::Precondition(format!("frame {name}: missing label file")));
    }
    let labels = io::load_labels(&label_path, cloud.len())?;
    cloud.with_labels(labels)
}

pub fn cmd_prepare(args: &PrepareArgs) -> Result<RunSummary> {
    let mut cfg = load_config(&args.common)?;
    if args.augment {
        cfg.prep.augment = true;
    }
    if let Some(n) = args.n_points {
        cfg.prep.n_points = n;
    }
    cfg.validate()?;
    let input = required(&cfg.input, "input")?;
    let output = required(&cfg.output, "output")?;
    let segments = args.segments.clone().unwrap_or_else(|| input.clone());
    let frames = list_frames(&input)?;
    if frames.is_empty() {
        warn!("no frames in {}", input.display());
        return Ok(RunSummary::default());
    }
    create_dir(&output)?;
    let params = cfg.prep_params();
    let results: Vec<Result<Vec<_>>> = pool(cfg.jobs)?.install(|| {
        frames
            .par_iter()
            .enumerate()
            .map(|(frame_id, frame)| {
                let cloud = load_labeled(frame)?;
                let proposals = load_segmented_frame(&segments, &stem(frame), cloud.len())?;
                let mut out = Vec::new();
                for p in &proposals {
                    out.extend(prepare_proposal(p, &cloud, frame_id as u32, &params)?);
                }
                Ok(out)
            })
            .collect()
    });
    let summary = tally(&frames, &results);
    let mut archive = SampleArchive::new(params.n_points as u32);
    for r in results.into_iter().flatten() {
        archive.samples.extend(r);
    }
    export_samples(output.join("samples.ps3d"), &archive)?;
    info!("wrote {} samples", archive.samples.len());
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameEval {
    pub frame: String,
    pub points: usize,
    pub recall: ProposalRecall,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
}

/// Pooled over all evaluated frames.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub frames: usize,
    pub recall: f64,
    pub proposals_per_frame: f64,
    pub points_passed_per_frame: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_iou: Option<f64>,
    pub threshold: ThresholdConfig,
}

impl EvalSummary {
    pub fn from_frames(frames: &[FrameEval], params: &Stage1Params) -> Self {
        let n = frames.len().max(1) as f64;
        let covered: usize = frames.iter().map(|f| f.recall.foreground_covered).sum();
        let total: usize = frames.iter().map(|f| f.recall.foreground_total).sum();
        let ious: Vec<f64> = frames
            .iter()
            .filter_map(|f| f.metrics.as_ref().map(|m| m.average_iou))
            .collect();
        Self {
            frames: frames.len(),
            recall: if total == 0 {
                1.0
            } else {
                covered as f64 / total as f64
            },
            proposals_per_frame: frames.iter().map(|f| f.recall.proposals).sum::<usize>() as f64 / n,
            points_passed_per_frame: frames.iter().map(|f| f.recall.points_passed).sum::<usize>() as f64
                / n,
            average_iou: (!ious.is_empty()).then(|| ious.iter().sum::<f64>() / ious.len() as f64),
            threshold: ThresholdConfig::from_params(params),
        }
    }

    /// One-line report: recall in percent, proposals and points passed on
    /// per frame.
    pub fn headline(&self) -> String {
        format!(
            "point-wise recall {:.1}% | {:.1} proposals/frame | {:.0} points passed/frame | {} frames",
            self.recall * 100.0,
            self.proposals_per_frame,
            self.points_passed_per_frame,
            self.frames
        )
    }
}

fn eval_frame(
    frame: &Path,
    args: &EvalArgs,
    params: &Stage1Params,
) -> Result<FrameEval> {
    let cloud = load_labeled(frame)?;
    let gt = cloud.labels().unwrap_or_default();
    let name = stem(frame);
    let point_labels = match &args.segments {
        Some(dir) => io::load_cluster_ids(sibling(dir, &name, "clusters"), cloud.len())?,
        None => run_stage1(&cloud, params)?.point_labels,
    };
    let recall = proposal_recall_from_labels(&point_labels, gt)?;
    let metrics = match &args.pred {
        Some(dir) => {
            let pred = io::load_labels(sibling(dir, &name, "label"), cloud.len())?;
            Some(pointwise_metrics(&pred, gt)?)
        }
        None => None,
    };
    Ok(FrameEval {
        frame: name,
        points: cloud.len(),
        recall,
        metrics,
    })
}

pub fn cmd_eval(args: &EvalArgs) -> Result<RunSummary> {
    let cfg = load_config(&args.common)?;
    cfg.validate()?;
    let input = required(&cfg.input, "input")?;
    let output = required(&cfg.output, "output")?;
    let frames = list_frames(&input)?;
    if frames.is_empty() {
        warn!("no frames in {}", input.display());
        return Ok(RunSummary::default());
    }
    create_dir(&output)?;
    let params = cfg.stage1();
    let results: Vec<Result<FrameEval>> = pool(cfg.jobs)?
        .install(|| frames.par_iter().map(|f| eval_frame(f, args, &params)).collect());
    let summary = tally(&frames, &results);
    let evals: Vec<FrameEval> = results.into_iter().flatten().collect();
    let mut text = String::new();
    for e in &evals {
        text += &to_json_line(e)?;
        text.push('\n');
    }
    let pooled = EvalSummary::from_frames(&evals, &params);
    text += &to_json_line(&serde_json::json!({ "summary": pooled }))?;
    text.push('\n');
    write_file(&output.join("eval.jsonl"), text.as_bytes())?;
    println!("{}", pooled.headline());
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameTiming {
    pub frame: String,
    #[serde(flatten)]
    pub report: TimingReport,
}

pub fn cmd_bench(args: &BenchArgs) -> Result<RunSummary> {
    let cfg = load_config(&args.common)?;
    cfg.validate()?;
    if args.reps == 0 {
        return Err(Error::config("reps", "must be >= 1"));
    }
    let input = required(&cfg.input, "input")?;
    let output = required(&cfg.output, "output")?;
    let frames = list_frames(&input)?;
    if frames.is_empty() {
        warn!("no frames in {}", input.display());
        return Ok(RunSummary::default());
    }
    create_dir(&output)?;
    let params = cfg.stage1();
    let modes: &[bool] = if args.parallel { &[false, true] } else { &[false] };
    // frames are timed one at a time so runs do not compete for cores
    let results: Vec<Result<Vec<FrameTiming>>> = frames
        .iter()
        .map(|f| {
            let cloud = io::load_point_cloud(f)?;
            modes
                .iter()
                .map(|&parallel| {
                    Ok(FrameTiming {
                        frame: stem(f),
                        report: benchmark_stage1(&cloud, &params, args.reps, parallel)?,
                    })
                })
                .collect()
        })
        .collect();
    let summary = tally(&frames, &results);
    let mut text = String::new();
    for t in results.iter().flatten().flatten() {
        println!(
            "{} parallel={} total median {:.0} us p95 {:.0} us, {} proposals",
            t.frame, t.report.parallel, t.report.total.median_us, t.report.total.p95_us, t.report.proposals_out
        );
        text += &to_json_line(t)?;
        text.push('\n');
    }
    write_file(&output.join("bench.jsonl"), text.as_bytes())?;
    Ok(summary)
}

fn load_scene(path: &Path) -> Result<SceneSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Scene(format!("{}: {}", path.display(), e.message())))
}

fn write_scene(spec: &SceneSpec, output: &Path, name: &str) -> Result<()> {
    let scene = generate_synthetic_scene(spec)?;
    io::save_point_cloud(sibling(output, name, "bin"), &scene.cloud)?;
    io::save_labels(sibling(output, name, "label"), &scene.labels)?;
    io::save_ring_ids(sibling(output, name, "ring"), &scene.ring_ids)?;
    io::save_mask(sibling(output, name, "ground"), &scene.ground_mask)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<RunSummary> {
    let cfg = load_config(&args.common)?;
    cfg.validate()?;
    let output = required(&cfg.output, "output")?;
    let specs: Vec<SceneSpec> = match &args.common.input {
        Some(path) => {
            let mut spec = load_scene(path)?;
            if let Some(seed) = args.common.seed {
                spec.rng_seed = seed;
            }
            vec![spec]
        }
        None => {
            let mut opts = RandomSceneOptions::default();
            opts.sensor.num_rings = cfg.num_rings;
            (0..args.frames as u64)
                .map(|k| random_scene_spec(cfg.rng_seed.wrapping_add(k), &opts))
                .collect()
        }
    };
    for s in &specs {
        s.validate()?;
    }
    create_dir(&output)?;
    let names: Vec<PathBuf> = (0..specs.len()).map(|k| PathBuf::from(format!("{k:06}"))).collect();
    let results: Vec<Result<()>> = pool(cfg.jobs)?.install(|| {
        specs
            .par_iter()
            .zip(&names)
            .map(|(s, n)| write_scene(s, &output, &n.to_string_lossy()))
            .collect()
    });
    Ok(tally(&names, &results))
}
