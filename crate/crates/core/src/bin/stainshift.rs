use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stainshift::adapters::{serve_builtin, Adapter};
use stainshift::pipeline::{
    self, emit_boxplot, BoxGroup, Config, DatasetManifest, PatchImage, PatchRequest, PredSource, RunOptions,
};
use stainshift::raster;
use stainshift::{Error, Result};

#[derive(Parser)]
#[command(name = "stainshift", version, about = "Segmentation, domain-shift and retrieval evaluation harness")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Global {
    /// Dataset manifest (JSON).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Run configuration (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Concurrent sections.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a manifest and report every problem found.
    Validate,
    /// Two-arm epidermis segmentation comparison.
    SegEval,
    /// Instance metrics for cell segmentation.
    CellEval {
        #[arg(long, value_enum, default_value = "precomputed")]
        pred: PredArg,
    },
    /// k-NN KL divergence of raw and transferred images to paired H&E.
    Kl,
    /// Stack, smooth and threshold per-slice masks.
    Volume,
    /// Query-patch similarity heat map.
    PatchMap {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        query_x: usize,
        #[arg(long)]
        query_y: usize,
        /// Binary mask of the class the query belongs to; enables F1.
        #[arg(long)]
        annotation: Option<PathBuf>,
    },
    /// Render a box plot from `[{"name": .., "values": [..]}, ..]`.
    Boxplot {
        #[arg(long)]
        input: PathBuf,
    },
    /// Serve a built-in mock over the adapter file protocol.
    MockAdapter {
        /// Adapter as JSON (`{"type":"erode-oracle","k":1}`) or a bare type name.
        #[arg(long)]
        adapter: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        bbox: Option<String>,
        #[arg(long)]
        meta: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PredArg {
    /// `pred_label_path` of each entry.
    Precomputed,
    /// Segment with `arm_a` from the config.
    ArmA,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Validation(problems)) => {
            for p in problems {
                eprintln!("invalid: {p}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let mut config = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    let opts = RunOptions { workers: g.workers.max(1) };
    let out = g.out_dir.as_path();

    match cli.command {
        Cmd::Validate => {
            let m = manifest(g)?;
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            println!("{} entries ok", m.len());
        }
        Cmd::SegEval => {
            let report = pipeline::evaluate_segmentation(&manifest(g)?, &config, opts)?;
            report.write(out)?;
            let s = |v: &Option<_>| v.as_ref().map(|s: &stainshift::metrics::SummaryStats| format!("{:.4}", s.mean));
            println!(
                "{} sections ({} excluded), mean dice {} / {}",
                report.rows.len(),
                report.excluded,
                s(&report.summary_arm_a).unwrap_or_else(|| "-".into()),
                s(&report.summary_arm_b).unwrap_or_else(|| "-".into())
            );
        }
        Cmd::CellEval { pred } => {
            let source = match pred {
                PredArg::Precomputed => PredSource::Precomputed,
                PredArg::ArmA => PredSource::Adapter(
                    config.arm_a.clone().ok_or_else(|| Error::InvalidInput("config has no arm_a".into()))?,
                ),
            };
            let report = pipeline::evaluate_cells(&manifest(g)?, &source, &config, opts)?;
            report.write(out)?;
            if let Some(m) = &report.mean {
                println!("dice {:.4} dq {:.4} sq {:.4} pq {:.4}", m.dice, m.dq, m.sq, m.pq);
            }
        }
        Cmd::Kl => {
            let embedder =
                config.embedder.clone().ok_or_else(|| Error::InvalidInput("config has no embedder".into()))?;
            let report =
                pipeline::evaluate_domain_distance(&manifest(g)?, &embedder, config.domain_transfer.as_ref(), &config)?;
            report.write(out)?;
            println!("kl raw->he {:.4} transferred->he {:?}", report.kl_raw_he, report.kl_transferred_he);
        }
        Cmd::Volume => {
            let arm = config.arm_a.clone().ok_or_else(|| Error::InvalidInput("config has no arm_a".into()))?;
            let report = pipeline::reconstruct_volume(&manifest(g)?, &arm, &config, opts)?;
            report.write(out)?;
            println!("{:?} voxels, {} foreground", report.dims, report.foreground_voxels_final);
        }
        Cmd::PatchMap { image, query_x, query_y, annotation } => {
            let embedder =
                config.embedder.clone().ok_or_else(|| Error::InvalidInput("config has no embedder".into()))?;
            let image = match config.domain_transfer {
                Some(_) => PatchImage::Gray(raster::read_gray(&image)?),
                None => PatchImage::Rgb(raster::read_rgb(&image)?),
            };
            let annotation = annotation.as_deref().map(raster::read_mask).transpose()?;
            let req = PatchRequest {
                image,
                query_xy: (query_x, query_y),
                embedder: &embedder,
                domain_transfer: config.domain_transfer.as_ref(),
                annotation,
            };
            let result = pipeline::patch_classify(&req, &config)?;
            result.write(out)?;
            match &result.score {
                Some(s) => println!("{} patches, f1 {:.4}", result.patches, s.f1),
                None => println!("{} patches", result.patches),
            }
        }
        Cmd::Boxplot { input } => {
            let bytes = std::fs::read(&input).map_err(|e| Error::io(&input, e))?;
            let groups: Vec<BoxGroup> = serde_json::from_slice(&bytes)?;
            let svg = emit_boxplot(&groups)?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            raster::write_atomic(out.join("boxplot.svg"), svg.as_bytes())?;
        }
        Cmd::MockAdapter { adapter, input, output, bbox, meta } => {
            let a = parse_adapter(&adapter)?;
            serve_builtin(&a, &input, &output, bbox.as_deref(), meta.as_deref())?;
        }
    }
    Ok(())
}

fn manifest(g: &Global) -> Result<DatasetManifest> {
    let path: &Path = g.manifest.as_deref().ok_or_else(|| Error::InvalidInput("--manifest is required".into()))?;
    pipeline::validate_manifest(path)
}

fn parse_adapter(s: &str) -> Result<Adapter> {
    let a: Adapter = if s.trim_start().starts_with('{') {
        serde_json::from_str(s)?
    } else {
        serde_json::from_value(serde_json::json!({ "type": s }))?
    };
    if matches!(a, Adapter::External(_)) {
        return Err(Error::InvalidInput("mock-adapter serves built-in adapters only".into()));
    }
    Ok(a)
}
