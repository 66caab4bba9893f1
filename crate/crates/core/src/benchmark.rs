//! Dataset manifests and the method comparison over a whole dataset.
//!
//! A manifest lists one image per line:
//!
//! ```text
//! # image_id detections gt [omni]
//! frame_0001 frame_0001/detections.txt frame_0001/gt.txt frame_0001/omni.txt
//! ```
//!
//! `detections` holds the raw detector output on the virtual views (or
//! boxes already tagged `omni`); the optional `omni` file holds raw
//! detections of the same detector run directly on the fisheye image.
//! Relative paths are resolved against the manifest's directory.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::backproject::BackprojectMode;
use crate::camera::FisheyeCamera;
use crate::detfile::{parse_detection_lines, parse_detections, parse_ground_truth};
use crate::error::ParseError;
use crate::fusion::FusionParams;
use crate::pipeline::{
    backproject_detections, compare_methods, Comparison, EvalImage, PipelineError, ViewIndex,
};
use crate::view::VirtualView;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub line: usize,
    pub image_id: String,
    pub detections: PathBuf,
    pub ground_truth: PathBuf,
    pub omni: Option<PathBuf>,
}

impl ManifestEntry {
    fn resolve(&self, base: &Path) -> Self {
        let abs = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        Self {
            line: self.line,
            image_id: self.image_id.clone(),
            detections: abs(&self.detections),
            ground_truth: abs(&self.ground_truth),
            omni: self.omni.as_deref().map(abs),
        }
    }
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, ParseError> {
    let mut out: Vec<ManifestEntry> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split_once('#').map_or(raw, |(before, _)| before);
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if !(3..=4).contains(&toks.len()) {
            return Err(ParseError::at(
                line,
                format!(
                    "expected image_id detections gt [omni], got {} fields",
                    toks.len()
                ),
            ));
        }
        if let Some(first) = seen.insert(toks[0].to_string(), line) {
            return Err(ParseError::at(
                line,
                format!("duplicate image_id {:?} (first on line {first})", toks[0]),
            ));
        }
        out.push(ManifestEntry {
            line,
            image_id: toks[0].to_string(),
            detections: PathBuf::from(toks[1]),
            ground_truth: PathBuf::from(toks[2]),
            omni: toks.get(3).map(PathBuf::from),
        });
    }
    Ok(out)
}

/// Problem with one manifest entry; the entry is left out of the results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryError {
    pub line: usize,
    pub image_id: String,
    pub message: String,
}

impl fmt::Display for EntryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "manifest line {} ({}): {}",
            self.line, self.image_id, self.message
        )
    }
}

/// Geometry needed to back-project per-view detections.
#[derive(Debug, Clone, Copy)]
pub struct BenchmarkSetup<'a> {
    pub omni: &'a FisheyeCamera,
    pub views: &'a [VirtualView],
    pub mode: BackprojectMode,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadedImages {
    pub images: Vec<EvalImage>,
    pub errors: Vec<EntryError>,
    /// Boxes that left the field of view during back-projection.
    pub dropped: usize,
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn with_path(path: &Path, e: ParseError) -> String {
    format!("{}: {e}", path.display())
}

fn load_entry(
    entry: &ManifestEntry,
    setup: &BenchmarkSetup<'_>,
) -> Result<(EvalImage, usize), String> {
    let views = ViewIndex::new(setup.views);
    let lines = parse_detection_lines(&read(&entry.detections)?)
        .map_err(|e| with_path(&entry.detections, e))?;
    let pooled = backproject_detections(&lines, &views, setup.omni, setup.mode)
        .map_err(|e| with_path(&entry.detections, e))?;
    let ground_truth = parse_ground_truth(&read(&entry.ground_truth)?)
        .map_err(|e| with_path(&entry.ground_truth, e))?;
    let omni_raw = match &entry.omni {
        Some(p) => Some(parse_detections(&read(p)?).map_err(|e| with_path(p, e))?),
        None => None,
    };
    let image = EvalImage {
        image_id: entry.image_id.clone(),
        pooled: pooled.detections,
        omni_raw,
        ground_truth,
    };
    Ok((image, pooled.dropped))
}

/// Reads and back-projects every entry in parallel. Failed entries are
/// reported and skipped; the order of `images` follows the manifest.
pub fn load_images(
    entries: &[ManifestEntry],
    base_dir: &Path,
    setup: &BenchmarkSetup<'_>,
) -> LoadedImages {
    let results: Vec<Result<(EvalImage, usize), EntryError>> = entries
        .par_iter()
        .map(|e| {
            load_entry(&e.resolve(base_dir), setup).map_err(|message| EntryError {
                line: e.line,
                image_id: e.image_id.clone(),
                message,
            })
        })
        .collect();
    let mut out = LoadedImages::default();
    for r in results {
        match r {
            Ok((img, dropped)) => {
                out.dropped += dropped;
                out.images.push(img);
            }
            Err(e) => out.errors.push(e),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub comparison: Comparison,
    pub errors: Vec<EntryError>,
    /// Set when some entries failed and the table covers a subset.
    pub partial: bool,
    pub images: usize,
    pub dropped: usize,
}

/// Loads a manifest and compares the methods over the `params` list (see
/// [`compare_methods`]).
pub fn run_benchmark(
    manifest: &str,
    base_dir: &Path,
    setup: &BenchmarkSetup<'_>,
    params: &[FusionParams],
    overlap_threshold: f64,
) -> Result<BenchmarkReport, PipelineError> {
    let entries = parse_manifest(manifest).map_err(|source| PipelineError::Parse {
        stage: "manifest",
        source,
    })?;
    let loaded = load_images(&entries, base_dir, setup);
    let comparison =
        compare_methods(&loaded.images, params, overlap_threshold).map_err(|source| {
            PipelineError::Fusion {
                stage: "fuse",
                source,
            }
        })?;
    Ok(BenchmarkReport {
        comparison,
        partial: !loaded.errors.is_empty(),
        errors: loaded.errors,
        images: loaded.images.len(),
        dropped: loaded.dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    #[test]
    fn manifest_fields_and_errors() {
        let m = parse_manifest("# header\na d.txt g.txt\n\nb d2.txt g2.txt o2.txt # trailing\n")
            .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].line, 2);
        assert_eq!(m[0].omni, None);
        assert_eq!(m[1].omni, Some(PathBuf::from("o2.txt")));
        assert_eq!(parse_manifest("a b\n").unwrap_err().line, Some(1));
        assert_eq!(parse_manifest("a b c\na d e\n").unwrap_err().line, Some(2));
    }

    #[test]
    fn missing_files_are_reported_per_entry() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("d.txt"), "omni person 0.9 10 10 20 20\n").unwrap();
        fs::write(dir.path().join("g.txt"), "omni person 10 10 20 20\n").unwrap();
        let omni = FisheyeCamera::equidistant(185.0, Point2::new(300.0, 300.0), 600, 600).unwrap();
        let setup = BenchmarkSetup {
            omni: &omni,
            views: &[],
            mode: BackprojectMode::Corners,
        };
        let report = run_benchmark(
            "ok d.txt g.txt\nbad nowhere.txt g.txt\n",
            dir.path(),
            &setup,
            &[FusionParams::nms(0.5)],
            0.5,
        )
        .unwrap();
        assert!(report.partial);
        assert_eq!(report.images, 1);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, 2);
        assert!(report.errors[0].to_string().contains("nowhere.txt"));
        assert_eq!(report.comparison.rows[0].ap, 1.0);
    }
}
