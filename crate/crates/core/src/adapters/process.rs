//! Subprocess adapters.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{AdapterKind, SectionMeta, SegmenterRequest, SEED_ENV};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::raster::{self, AnyImage, BinaryMask, ImageGray, ImageRgb};

/// Command template plus limits for an external model process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterSpec {
    pub kind: AdapterKind,
    /// Program followed by arguments; placeholders are substituted per call.
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workdir: Option<PathBuf>,
}

fn default_timeout() -> f64 {
    600.0
}

impl AdapterSpec {
    pub fn new(kind: AdapterKind, command: &[&str], timeout_s: f64) -> Self {
        Self { kind, command: command.iter().map(|s| s.to_string()).collect(), timeout_s, workdir: None }
    }

    pub fn required_placeholders(kind: AdapterKind) -> &'static [&'static str] {
        match kind {
            AdapterKind::Segmenter => &["{input}", "{output}", "{bbox}"],
            AdapterKind::DomainTransfer | AdapterKind::Embedder => &["{input}", "{output}"],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.command.is_empty() {
            return Err(Error::InvalidInput("adapter command is empty".into()));
        }
        if !(self.timeout_s > 0.0) || !self.timeout_s.is_finite() {
            return Err(Error::InvalidInput(format!("adapter timeout {} must be positive", self.timeout_s)));
        }
        let joined = self.command.join(" ");
        let missing: Vec<&str> =
            Self::required_placeholders(self.kind).iter().copied().filter(|p| !joined.contains(p)).collect();
        if !missing.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{:?} adapter command lacks placeholder(s) {}",
                self.kind,
                missing.join(", ")
            )));
        }
        Ok(())
    }

    /// Runs the expanded command to completion, enforcing the timeout.
    pub fn invoke(&self, vars: &Placeholders, seed: u64) -> Result<()> {
        self.validate()?;
        let args: Vec<String> = self.command.iter().map(|a| vars.expand(a)).collect();
        let mut cmd = Command::new(&args[0]);
        cmd.args(&args[1..]).env(SEED_ENV, seed.to_string()).stdin(Stdio::null()).stdout(Stdio::null()).stderr(Stdio::piped());
        if let Some(dir) = &self.workdir {
            cmd.current_dir(dir);
        }
        let mut child = cmd.spawn().map_err(|e| Error::AdapterFailed {
            status: "spawn failed".into(),
            stderr: format!("{}: {e}", args[0]),
        })?;

        let mut stderr_pipe = child.stderr.take().expect("stderr piped");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr_pipe.read_to_end(&mut buf);
            String::from_utf8_lossy(&buf).into_owned()
        });

        let timeout = Duration::from_secs_f64(self.timeout_s);
        let start = Instant::now();
        let status = loop {
            match child.try_wait().map_err(|e| Error::io(&args[0], e))? {
                Some(status) => break status,
                None if start.elapsed() >= timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(Error::AdapterTimeout(timeout));
                }
                None => std::thread::sleep(Duration::from_millis(5)),
            }
        };
        let stderr = reader.join().unwrap_or_default();
        if !status.success() {
            return Err(Error::AdapterFailed { status: status.to_string(), stderr: stderr.trim_end().to_string() });
        }
        Ok(())
    }
}

/// Values substituted into a command template.
#[derive(Debug, Clone, Default)]
pub struct Placeholders {
    pub input: String,
    pub output: String,
    pub bbox: String,
    pub meta: String,
}

impl Placeholders {
    fn expand(&self, arg: &str) -> String {
        arg.replace("{input}", &self.input)
            .replace("{output}", &self.output)
            .replace("{bbox}", &self.bbox)
            .replace("{meta}", &self.meta)
    }
}

struct Scratch {
    dir: tempfile::TempDir,
}

impl Scratch {
    fn new() -> Result<Self> {
        let dir = tempfile::Builder::new().prefix("stainshift-").tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        Ok(Self { dir })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write_meta(&self, meta: &SectionMeta) -> Result<PathBuf> {
        let p = self.path("meta.json");
        raster::write_atomic(&p, &serde_json::to_vec_pretty(meta)?)?;
        Ok(p)
    }
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn require_output(p: &Path) -> Result<()> {
    if !p.exists() {
        return Err(Error::ProtocolViolation(format!("adapter exited 0 but wrote no output at {}", p.display())));
    }
    Ok(())
}

pub(super) fn domain_transfer(spec: &AdapterSpec, img: &ImageGray, meta: &SectionMeta) -> Result<ImageRgb> {
    let s = Scratch::new()?;
    let input = s.path("input.png");
    let output = s.path("output.png");
    raster::write_gray(&input, img)?;
    let vars = Placeholders {
        input: path_str(&input),
        output: path_str(&output),
        meta: path_str(&s.write_meta(meta)?),
        ..Default::default()
    };
    spec.invoke(&vars, meta.seed)?;
    require_output(&output)?;
    raster::read_rgb(&output)
}

pub(super) fn segment(spec: &AdapterSpec, req: &SegmenterRequest, meta: &SectionMeta) -> Result<BinaryMask> {
    let s = Scratch::new()?;
    let input = s.path("input.png");
    let output = s.path("mask.png");
    match &req.image {
        AnyImage::Gray(g) => raster::write_gray(&input, g)?,
        AnyImage::Rgb(c) => raster::write_rgb(&input, c)?,
    }
    let meta = SectionMeta { bbox: Some(req.bbox), ..meta.clone() };
    let vars = Placeholders {
        input: path_str(&input),
        output: path_str(&output),
        bbox: serde_json::to_string(&req.bbox)?,
        meta: path_str(&s.write_meta(&meta)?),
    };
    spec.invoke(&vars, meta.seed)?;
    require_output(&output)?;
    raster::read_mask(&output)
}

/// Patches are passed as a directory of `patch_{i:05}.png` files.
pub(super) fn embed(spec: &AdapterSpec, patches: &[ImageRgb], meta: &SectionMeta) -> Result<EmbeddingSet> {
    let s = Scratch::new()?;
    let input = s.path("patches");
    std::fs::create_dir(&input).map_err(|e| Error::io(&input, e))?;
    for (i, p) in patches.iter().enumerate() {
        raster::write_rgb(input.join(patch_file_name(i)), p)?;
    }
    let output = s.path("embeddings.emb");
    let vars = Placeholders {
        input: path_str(&input),
        output: path_str(&output),
        meta: path_str(&s.write_meta(meta)?),
        ..Default::default()
    };
    spec.invoke(&vars, meta.seed)?;
    require_output(&output)?;
    EmbeddingSet::read(&output, meta.id.clone())
}

pub fn patch_file_name(i: usize) -> String {
    format!("patch_{i:05}.png")
}
