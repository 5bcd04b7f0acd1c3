//! Experiment runner behind the `maskcl` binary: multi-seed runs, the
//! results JSON schema, and summary tables.

mod results;
mod summary;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use results::{
    Aggregate, ConfigEcho, MeanStd, ModeAggregate, ModeResult, RunResult, SeedRun, SCHEMA_VERSION,
};
pub use summary::{summarize, summarize_files, Summary, SummaryRow};

use crate::continual::{run_stream, MethodConfig, TaskStream};
use crate::data::{gen_blobs, load_mnist_dir, BlobSpec, LabeledDataset};
use crate::{Error, Result};

/// Environment variable naming the directory holding the MNIST IDX files.
pub const MNIST_DIR_ENV: &str = "MASKCL_MNIST_DIR";

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSpec {
    /// Split-MNIST from the four IDX files in `dir`.
    Mnist { dir: PathBuf },
    /// Synthetic Gaussian blobs, for smoke tests.
    Blobs(BlobSpec),
}

impl DatasetSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetSpec::Mnist { .. } => "mnist",
            DatasetSpec::Blobs(_) => "blobs",
        }
    }

    pub fn load(&self) -> Result<(LabeledDataset, LabeledDataset)> {
        match self {
            DatasetSpec::Mnist { dir } => load_mnist_dir(dir),
            DatasetSpec::Blobs(spec) => gen_blobs(spec),
        }
    }

    /// Small blob stream: 4 classes in 16 dimensions, 200 samples per class.
    pub fn small_blobs(seed: u64) -> Self {
        DatasetSpec::Blobs(BlobSpec::separated(4, 16, 0.08, 200, seed))
    }
}

/// Default MNIST location: `$MASKCL_MNIST_DIR`, else `data/mnist`.
pub fn default_mnist_dir() -> PathBuf {
    std::env::var_os(MNIST_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data/mnist"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub classes_per_task: usize,
    pub method: MethodConfig,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.method.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if self.classes_per_task == 0 {
            return Err(Error::config("classes per task must be positive"));
        }
        if let DatasetSpec::Blobs(spec) = &self.dataset {
            spec.validate()?;
        }
        Ok(())
    }
}

/// Validates `cfg`, loads the data, runs every seed in parallel and writes
/// the JSON atomically to `cfg.out` when set.
///
/// Per-seed results depend only on the seed, so output is reproducible
/// regardless of thread scheduling; only `wall_clock_secs` varies.
pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    let (train, test) = cfg.dataset.load()?;
    let stream = TaskStream::natural(&train, &test, cfg.classes_per_task)?;
    let runs = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_stream(&stream, &cfg.method, seed).map(|o| SeedRun::new(seed, o)))
        .collect::<Result<Vec<_>>>()?;
    let result = RunResult {
        schema: SCHEMA_VERSION,
        engine: format!("maskcl {}", env!("CARGO_PKG_VERSION")),
        config: ConfigEcho {
            dataset: cfg.dataset.name().to_string(),
            classes_per_task: cfg.classes_per_task,
            seeds: cfg.seeds.clone(),
            method: cfg.method.clone(),
        },
        aggregate: Aggregate::of(&runs),
        runs,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    };
    if let Some(path) = &cfg.out {
        write_json_atomic(path, &result)?;
    }
    Ok(result)
}

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_json_atomic(path: &Path, result: &RunResult) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("output path {} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let body = serde_json::to_vec_pretty(result)?;
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&body)
        .and_then(|_| f.write_all(b"\n"))
        .and_then(|_| f.sync_all())
        .map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_result(path: &Path) -> Result<RunResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let schema = value.get("schema").and_then(|s| s.as_u64());
    if schema != Some(SCHEMA_VERSION as u64) {
        return Err(Error::config(format!(
            "{}: unsupported results schema {:?}, expected {SCHEMA_VERSION}",
            path.display(),
            schema
        )));
    }
    Ok(serde_json::from_value(value)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continual::Method;

    fn blob_cfg(method: Method, seeds: Vec<u64>) -> RunConfig {
        let mut m = MethodConfig::defaults(method, 20);
        m.hidden = vec![16];
        RunConfig {
            dataset: DatasetSpec::small_blobs(3),
            classes_per_task: 2,
            method: m,
            seeds,
            out: None,
        }
    }

    #[test]
    fn config_errors_come_first() {
        let mut c = blob_cfg(Method::Er, vec![1]);
        c.method.buffer_capacity = 0;
        c.dataset = DatasetSpec::Mnist { dir: "/nonexistent".into() };
        assert!(matches!(run(&c), Err(Error::Config(_))));
        let c = blob_cfg(Method::Sgd, vec![]);
        assert!(matches!(run(&c), Err(Error::Config(_))));
    }

    #[test]
    fn missing_mnist_is_io_error() {
        let mut c = blob_cfg(Method::Sgd, vec![1]);
        c.dataset = DatasetSpec::Mnist { dir: "/nonexistent".into() };
        assert!(matches!(run(&c), Err(Error::Io { .. })));
    }

    #[test]
    fn seeds_independent_of_parallelism() {
        let both = run(&blob_cfg(Method::ErMr, vec![4, 9])).unwrap();
        let single = run(&blob_cfg(Method::ErMr, vec![9])).unwrap();
        assert_eq!(both.runs[1], single.runs[0]);
    }

    #[test]
    fn atomic_write_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/r.json");
        let mut c = blob_cfg(Method::SgdMr, vec![2]);
        c.out = Some(path.clone());
        let r = run(&c).unwrap();
        assert_eq!(read_result(&path).unwrap(), r);
        let leftovers = fs::read_dir(path.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }
}
