//! Output directory handling and the small file writers shared by commands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const OUT_DIR_ENV: &str = "PIPENAV_OUT_DIR";

/// `--out` wins, then `$PIPENAV_OUT_DIR/<command>`, then `out/<command>`.
pub fn resolve_out_dir(flag: Option<&Path>, command: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(base) if !base.is_empty() => PathBuf::from(base).join(command),
        _ => PathBuf::from("out").join(command),
    }
}

/// Fills a fresh temporary directory next to `dest`, then swaps it into
/// place. A failure part way leaves `dest` untouched.
pub fn write_atomically<F>(dest: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&Path) -> Result<()>,
{
    let parent = match dest.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
    let staging = tempfile::Builder::new()
        .prefix(".pipenav-")
        .tempdir_in(&parent)
        .with_context(|| format!("creating staging directory in {}", parent.display()))?;
    fill(staging.path())?;

    let staged = staging.keep();
    if dest.exists() {
        let old = tempfile::Builder::new()
            .prefix(".pipenav-old-")
            .tempdir_in(&parent)?
            .keep();
        fs::remove_dir(&old)?;
        fs::rename(dest, &old).with_context(|| format!("moving aside {}", dest.display()))?;
        if let Err(e) = fs::rename(&staged, dest) {
            let _ = fs::rename(&old, dest);
            let _ = fs::remove_dir_all(&staged);
            return Err(e).with_context(|| format!("renaming into {}", dest.display()));
        }
        fs::remove_dir_all(&old)?;
    } else {
        fs::rename(&staged, dest).with_context(|| format!("renaming into {}", dest.display()))?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text).with_context(|| format!("writing {name}"))
}

pub fn write_csv<R: Serialize>(dir: &Path, name: &str, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(name)).with_context(|| format!("writing {name}"))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Like [`write_csv`] but always emits the header, even with no rows.
pub fn write_csv_with_header<R: Serialize>(dir: &Path, name: &str, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(dir.join(name))
        .with_context(|| format!("writing {name}"))?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let mut f = fs::File::create(dir.join(name)).with_context(|| format!("writing {name}"))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// One entry of `plots.json`: which CSV to draw and which columns to use.
#[derive(Debug, Serialize)]
pub struct PlotSpec {
    pub title: String,
    pub file: String,
    pub x: String,
    pub y: Vec<String>,
    pub kind: PlotKind,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Line,
    Scatter,
    Histogram,
}

impl PlotSpec {
    pub fn new(title: &str, file: &str, x: &str, y: &[&str], kind: PlotKind) -> Self {
        Self {
            title: title.into(),
            file: file.into(),
            x: x.into(),
            y: y.iter().map(|s| s.to_string()).collect(),
            kind,
        }
    }
}
