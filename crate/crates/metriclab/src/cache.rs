//! On-disk cache of kernel series, keyed by domain text and degree cap.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use metriclab_core::{DomainSpec, KernelSeries};

pub const ENV_VAR: &str = "METRICLAB_CACHE_DIR";

#[derive(Clone, Debug)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    /// `$METRICLAB_CACHE_DIR`, else `$HOME/.cache/metriclab`, else disabled.
    pub fn from_env() -> Self {
        let dir = std::env::var_os(ENV_VAR)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("metriclab")));
        Cache { dir }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: Some(dir.into()) }
    }

    pub fn disabled() -> Self {
        Cache { dir: None }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path_for(&self, spec: &DomainSpec, degree_cap: u32) -> Option<PathBuf> {
        let key: String = spec
            .to_string()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
            .collect();
        self.dir.as_ref().map(|d| d.join(format!("{key}_D{degree_cap}.json")))
    }

    /// Loads the series from the cache or builds and stores it. A cache that
    /// cannot be read or written is silently bypassed.
    pub fn series(&self, spec: &DomainSpec, degree_cap: u32) -> metriclab_core::Result<KernelSeries> {
        let path = self.path_for(spec, degree_cap);
        if let Some(p) = &path {
            if let Some(series) = fs::read_to_string(p)
                .ok()
                .and_then(|t| serde_json::from_str::<KernelSeries>(&t).ok())
                .filter(|s| s.spec() == spec && s.degree_cap() == degree_cap)
            {
                return Ok(series);
            }
        }
        let series = KernelSeries::build(spec, degree_cap)?;
        if let Some(p) = &path {
            let _ = store(p, &series);
        }
        Ok(series)
    }

    /// Removes every cached series; returns how many files were deleted.
    pub fn clear(&self) -> io::Result<usize> {
        let Some(dir) = &self.dir else { return Ok(0) };
        let entries = match fs::read_dir(dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(e),
        };
        let mut removed = 0;
        for entry in entries {
            let path = entry?.path();
            if path.extension().is_some_and(|x| x == "json") {
                fs::remove_file(&path)?;
                removed += 1;
            }
        }
        Ok(removed)
    }
}

fn store(path: &Path, series: &KernelSeries) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, serde_json::to_vec(series).map_err(io::Error::other)?)?;
    fs::rename(&tmp, path)
}
