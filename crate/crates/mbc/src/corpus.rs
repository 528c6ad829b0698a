//! Dataset ingestion, validation, statistics and export.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use mbc_core::document::parse_mbc_file;
use mbc_core::text::{count_lines, count_tokens};
use mbc_core::{BackgroundCheck, Split};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "splits.tsv";
pub const CHECKS_DIR: &str = "checks";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub split: Split,
    pub count: usize,
    pub avg_lines: f64,
    pub avg_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub slug: String,
    pub split: Split,
    pub source_name: String,
}

/// Reads `splits.tsv`: `slug<TAB>split[<TAB>source name]`, with blank
/// lines, `#` comments and a `slug<TAB>split` header ignored. The source
/// name defaults to the slug.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Config(format!("split manifest {} not found", path.display())),
        _ => Error::io(path, e),
    })?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let format_err = |message: String| Error::Format { path: path.to_path_buf(), line: i + 1, message };
        if fields.len() < 2 {
            return Err(format_err("expected `slug<TAB>split`".into()));
        }
        if i == 0 && fields[0].eq_ignore_ascii_case("slug") {
            continue;
        }
        let slug = fields[0].trim();
        if slug.is_empty() || slug.contains(['/', '\\']) || slug.starts_with('.') {
            return Err(format_err(format!("invalid slug `{slug}`")));
        }
        let split = Split::parse(fields[1]).ok_or_else(|| format_err(format!("unknown split `{}`", fields[1])))?;
        let source_name = fields.get(2).map(|s| s.trim()).filter(|s| !s.is_empty()).unwrap_or(slug);
        rows.push(ManifestRow { slug: slug.to_string(), split, source_name: source_name.to_string() });
    }
    Ok(rows)
}

pub fn load_dataset(root: &Path) -> Result<Vec<BackgroundCheck>> {
    let rows = read_manifest(&root.join(MANIFEST))?;
    let mut slugs = BTreeSet::new();
    for row in &rows {
        if !slugs.insert(row.slug.as_str()) {
            return Err(Error::Integrity(format!("slug `{}` listed twice in {MANIFEST}", row.slug)));
        }
    }
    let checks = root.join(CHECKS_DIR);
    let records: Vec<BackgroundCheck> = rows
        .par_iter()
        .map(|row| {
            let path = checks.join(format!("{}.txt", row.slug));
            let raw = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Ok(parse_mbc_file(&raw, &row.source_name)?.with_split(row.split))
        })
        .collect::<Result<_>>()?;
    let mut names = BTreeSet::new();
    for r in &records {
        if !names.insert(r.source_name.as_str()) {
            return Err(Error::Integrity(format!("duplicate source name `{}`", r.source_name)));
        }
    }
    Ok(records)
}

/// Loads gold checks from either a dataset directory or a JSON-lines export.
pub fn load_gold(path: &Path) -> Result<Vec<BackgroundCheck>> {
    if path.is_dir() {
        load_dataset(path)
    } else {
        read_jsonl(path)
    }
}

pub fn corpus_stats(records: &[BackgroundCheck]) -> Vec<SplitStats> {
    let mut acc: BTreeMap<Split, (usize, usize, usize)> = BTreeMap::new();
    for r in records {
        let text = r.to_file_text();
        let e = acc.entry(r.split).or_default();
        e.0 += 1;
        e.1 += count_lines(&text);
        e.2 += count_tokens(&text);
    }
    acc.into_iter()
        .map(|(split, (count, lines, tokens))| SplitStats {
            split,
            count,
            avg_lines: lines as f64 / count as f64,
            avg_tokens: tokens as f64 / count as f64,
        })
        .collect()
}

/// Writes a dataset in the on-disk layout `load_dataset` reads.
pub fn write_dataset(root: &Path, records: &[BackgroundCheck], mut slug: impl FnMut(&BackgroundCheck) -> String) -> Result<()> {
    let checks = root.join(CHECKS_DIR);
    fs::create_dir_all(&checks).map_err(|e| Error::io(&checks, e))?;
    let mut manifest = String::new();
    for r in records {
        let s = slug(r);
        let path = checks.join(format!("{s}.txt"));
        fs::write(&path, r.to_file_text()).map_err(|e| Error::io(&path, e))?;
        manifest.push_str(&format!("{s}\t{}\t{}\n", r.split, r.source_name));
    }
    let path = root.join(MANIFEST);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| Error::Validation(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| Error::Format { path: PathBuf::from(path), line: i + 1, message: e.to_string() })?;
        items.push(item);
    }
    Ok(items)
}
