//! ModelNet10 directory loader: `root/<class>/{train,test}/*.off`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{normalize_cloud, read_off, sample_mesh, LabeledCloud};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Points sampled per mesh.
pub const MODELNET_POINTS: usize = 1000;

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub loaded: usize,
    /// Files or directories that could not be used, with the reason.
    pub failures: Vec<(PathBuf, String)>,
}

#[derive(Debug, Clone)]
pub struct ModelNetData {
    pub train: Vec<LabeledCloud<f32>>,
    pub test: Vec<LabeledCloud<f32>>,
    /// Sorted lexicographically; the position is the label.
    pub class_names: Vec<String>,
    pub report: LoadReport,
}

fn sorted_entries(dir: &Path, want_dir: bool) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() == want_dir)
        .collect();
    out.sort();
    Ok(out)
}

/// Loads, samples and normalises every mesh. Each mesh's sampling seed is
/// derived from `seed` and its path relative to `root`, so results do not
/// depend on the order in which files are processed.
pub fn load_modelnet10(root: &Path, n_points: usize, seed: u64) -> Result<ModelNetData> {
    let class_dirs = sorted_entries(root, true).map_err(|e| Error::io(root, e))?;
    if class_dirs.is_empty() {
        return Err(Error::Data(format!("{} contains no class directories", root.display())));
    }
    let class_names: Vec<String> = class_dirs
        .iter()
        .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();

    let mut report = LoadReport::default();
    let mut jobs: Vec<(usize, bool, PathBuf)> = Vec::new();
    for (label, dir) in class_dirs.iter().enumerate() {
        for (split, is_train) in [("train", true), ("test", false)] {
            let split_dir = dir.join(split);
            match sorted_entries(&split_dir, false) {
                Ok(files) => jobs.extend(
                    files
                        .into_iter()
                        .filter(|f| f.extension().is_some_and(|e| e.eq_ignore_ascii_case("off")))
                        .map(|f| (label, is_train, f)),
                ),
                Err(e) => report.failures.push((split_dir, format!("unreadable directory: {e}"))),
            }
        }
    }

    let results: Vec<_> = jobs
        .par_iter()
        .map(|(label, is_train, path)| {
            let rel = path.strip_prefix(root).unwrap_or(path).to_string_lossy().replace('\\', "/");
            let cloud = read_off(path)
                .and_then(|mesh| sample_mesh::<f32>(&mesh, n_points, derive_seed(seed, &rel)))
                .map(|c| normalize_cloud(&c));
            (*label, *is_train, path.clone(), cloud)
        })
        .collect();

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (label, is_train, path, cloud) in results {
        match cloud {
            Ok(cloud) => {
                let item = LabeledCloud { cloud, label, class_name: class_names[label].clone() };
                if is_train { train.push(item) } else { test.push(item) }
                report.loaded += 1;
            }
            Err(e) => report.failures.push((path, e.to_string())),
        }
    }
    if report.loaded == 0 {
        return Err(Error::Data(format!("no meshes could be loaded from {}", root.display())));
    }
    for (path, why) in &report.failures {
        log::warn!("skipped {}: {why}", path.display());
    }
    Ok(ModelNetData { train, test, class_names, report })
}
