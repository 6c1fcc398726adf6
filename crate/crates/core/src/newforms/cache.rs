//! On-disk coefficient cache: `heckelab-coeffs v1 <label> <k> <N> <B>`
//! followed by one integer per line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use super::series::{CoefficientSeries, NewformSpec};
use crate::error::{Error, Result};

const MAGIC: &str = "heckelab-coeffs";
const VERSION: &str = "v1";
const EXTENSION: &str = "coeffs";

pub fn cache_file_name(label: &str, bound: usize) -> String {
    format!("{label}-{bound}.{EXTENSION}")
}

fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::CacheFormat { path: path.display().to_string(), reason: reason.into() }
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_series(dir: &Path, series: &CoefficientSeries) -> Result<PathBuf> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    fs::create_dir_all(dir)?;
    let spec = series.spec();
    let target = dir.join(cache_file_name(&spec.label, series.bound()));
    let tmp = dir.join(format!(
        ".{}.{}.{}.tmp",
        cache_file_name(&spec.label, series.bound()),
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        writeln!(
            w,
            "{MAGIC} {VERSION} {} {} {} {}",
            spec.label,
            spec.weight,
            spec.level,
            series.bound()
        )?;
        for a in series.coefficients() {
            writeln!(w, "{a}")?;
        }
        w.flush()?;
        w.get_ref().sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}

/// Reads a cache file and checks it against the expected form data.
pub fn read_series(path: &Path, expected: &NewformSpec) -> Result<CoefficientSeries> {
    let file = fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().ok_or_else(|| format_error(path, "empty file"))??;
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 6 || fields[0] != MAGIC || fields[1] != VERSION {
        return Err(format_error(path, format!("bad header {header:?}")));
    }
    let weight: u32 = fields[3].parse().map_err(|_| format_error(path, "bad weight"))?;
    let level: u64 = fields[4].parse().map_err(|_| format_error(path, "bad level"))?;
    let bound: usize = fields[5].parse().map_err(|_| format_error(path, "bad bound"))?;
    if fields[2] != expected.label || weight != expected.weight || level != expected.level {
        return Err(format_error(
            path,
            format!(
                "header describes {} (k = {weight}, N = {level}), expected {} (k = {}, N = {})",
                fields[2], expected.label, expected.weight, expected.level
            ),
        ));
    }
    let mut coeffs = Vec::with_capacity(bound);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let v: i128 = line
            .parse()
            .map_err(|_| format_error(path, format!("line {}: not an integer: {line:?}", i + 2)))?;
        coeffs.push(v);
    }
    if coeffs.len() != bound {
        return Err(format_error(
            path,
            format!("header promises {bound} coefficients, found {}", coeffs.len()),
        ));
    }
    CoefficientSeries::new(expected.clone(), coeffs)
        .map_err(|_| format_error(path, "a(1) != 1"))
}

/// Cache entries for `label` with their bounds, smallest bound first.
pub fn list_entries(dir: &Path, label: Option<&str>) -> Result<Vec<(String, usize, PathBuf)>> {
    let mut out = Vec::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(e.into()),
    };
    for entry in entries {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(stem) = name.strip_suffix(&format!(".{EXTENSION}")) else { continue };
        if stem.starts_with('.') {
            continue;
        }
        let Some((l, b)) = stem.rsplit_once('-') else { continue };
        let Ok(b) = b.parse::<usize>() else { continue };
        if label.is_none_or(|want| want == l) {
            out.push((l.to_string(), b, path.clone()));
        }
    }
    out.sort();
    Ok(out)
}

/// Removes cache entries (all, or those of one label). Returns the count.
pub fn clear(dir: &Path, label: Option<&str>) -> Result<usize> {
    let entries = list_entries(dir, label)?;
    for (_, _, path) in &entries {
        fs::remove_file(path)?;
    }
    Ok(entries.len())
}
