use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dance_core::config::RunConfig;
use dance_core::features::FeatureMatrix;
use dance_core::raster::{read_pgm, read_png, RasterImage};

use crate::args::{Common, Geometry};

/// Marks an error as a command-line usage problem (exit code 1).
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Marks an error as a bug or environment failure (exit code 3).
#[derive(Debug)]
pub struct Internal(pub String);

impl fmt::Display for Internal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Internal {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Writes through a sibling temporary file so readers never see a partial
/// file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = partial_path(path);
    fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot move {} into place", path.display()))
}

pub fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

/// Loads `--config` (or the defaults) and applies `--seed`.
pub fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub fn apply_geometry(cfg: &mut RunConfig, g: &Geometry) -> Result<()> {
    let k = &mut cfg.kaleidoscope;
    if let Some(d) = g.depth {
        k.depth = d;
    }
    if let Some(s) = g.scale {
        k.scale = s;
    }
    if let Some(a) = g.angle {
        k.angle = a;
    }
    if let Some(p) = &g.pos {
        let (x, y) = parse_pair::<f64>(p, ',').ok_or_else(|| usage(format!("--pos expects x,y, got {p:?}")))?;
        k.pos = [x, y];
    }
    Ok(())
}

/// Re-validates after command-line overrides; failures are usage errors.
pub fn validate_overrides(cfg: &RunConfig) -> Result<()> {
    cfg.validate().map_err(|e| usage(e.to_string()))
}

pub fn parse_pair<T: std::str::FromStr>(s: &str, sep: char) -> Option<(T, T)> {
    let (a, b) = s.split_once(sep)?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    match parse_pair::<usize>(&s.to_ascii_lowercase(), 'x') {
        Some((w, h)) if w > 0 && h > 0 => Ok((w, h)),
        _ => Err(usage(format!("--size expects WxH with positive integers, got {s:?}"))),
    }
}

/// Thread pool for per-item fan-out. `DANCE_NO_PARALLEL=1` forces one
/// thread; `jobs == 0` lets rayon pick.
pub fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    let serial = std::env::var("DANCE_NO_PARALLEL").is_ok_and(|v| v == "1");
    let threads = if serial { 1 } else { jobs };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Internal(format!("cannot start worker threads: {e}")).into())
}

/// Reads a feature matrix, choosing the format by content.
pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let bytes = read(path)?;
    let m = if bytes.starts_with(b"DNCF") {
        FeatureMatrix::from_binary(&bytes)
    } else {
        FeatureMatrix::read_csv(&bytes)
    };
    m.with_context(|| format!("in {}", path.display()))
}

pub fn write_features(path: &Path, m: &FeatureMatrix) -> Result<()> {
    let bytes = if is_csv(path) {
        let mut buf = Vec::new();
        m.write_csv(&mut buf)?;
        buf
    } else {
        m.to_binary()?
    };
    write_atomic(path, &bytes)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a PGM or PNG image, choosing the decoder by content.
pub fn read_image(path: &Path) -> Result<RasterImage> {
    let bytes = read(path)?;
    let img = if bytes.starts_with(b"\x89PNG") {
        read_png(&bytes)
    } else {
        read_pgm(&bytes)
    };
    img.with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_and_sizes() {
        assert_eq!(parse_pair::<f64>("1.5,-2", ','), Some((1.5, -2.0)));
        assert_eq!(parse_pair::<f64>("1.5", ','), None);
        assert_eq!(parse_size("380x200").unwrap(), (380, 200));
        assert_eq!(parse_size("64X64").unwrap(), (64, 64));
        assert!(parse_size("0x10").is_err());
        assert!(parse_size("10").is_err());
    }

    #[test]
    fn partial_names() {
        assert_eq!(partial_path(Path::new("/a/b.pgm")), Path::new("/a/b.pgm.partial"));
    }
}
