//! `PCLD` labelled-cloud files and dataset directories.
//!
//! Layout (little-endian): magic `PCLD`, version `u16`, `S` `u8`, `D` `u8`,
//! `N` `u32`, `N·(S+D)` `f32` values, label `u16`.
//!
//! A dataset directory holds `train/` and `test/` subdirectories of `.pcld`
//! files plus `manifest.csv` with columns `split,file,label,class_name`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::LabeledCloud;
use crate::layer::PointCloud;
use crate::{Error, Result};

pub const PCLD_MAGIC: &[u8; 4] = b"PCLD";
pub const PCLD_VERSION: u16 = 1;

pub fn write_pcld<W: Write>(mut w: W, item: &LabeledCloud<f32>) -> std::io::Result<()> {
    let c = &item.cloud;
    let label = u16::try_from(item.label)
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "label exceeds u16"))?;
    let n = u32::try_from(c.len())
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "too many points"))?;
    let mut buf = Vec::with_capacity(16 + c.as_slice().len() * 4);
    buf.extend_from_slice(PCLD_MAGIC);
    buf.extend_from_slice(&PCLD_VERSION.to_le_bytes());
    buf.push(c.spatial_dims() as u8);
    buf.push(c.feature_dims() as u8);
    buf.extend_from_slice(&n.to_le_bytes());
    for v in c.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&label.to_le_bytes());
    w.write_all(&buf)
}

/// Returns the cloud and its label; class names live in the manifest.
pub fn read_pcld<R: Read>(mut r: R) -> Result<(PointCloud<f32>, usize)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::Data(format!("reading PCLD: {e}")))?;
    if bytes.len() < 12 || &bytes[..4] != PCLD_MAGIC {
        return Err(Error::Data("not a PCLD file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != PCLD_VERSION {
        return Err(Error::Data(format!("unsupported PCLD version {version}")));
    }
    let s = bytes[6] as usize;
    let d = bytes[7] as usize;
    let n = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let values = n * (s + d);
    let expected = 12 + values * 4 + 2;
    if bytes.len() != expected {
        return Err(Error::Data(format!("PCLD length {} but header implies {expected}", bytes.len())));
    }
    let data = bytes[12..12 + values * 4]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    let label = u16::from_le_bytes([bytes[expected - 2], bytes[expected - 1]]) as usize;
    Ok((PointCloud::new(s, d, data)?, label))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub split: String,
    pub file: String,
    pub label: usize,
    pub class_name: String,
}

#[derive(Debug, Clone)]
pub struct DatasetDir {
    pub train: Vec<LabeledCloud<f32>>,
    pub test: Vec<LabeledCloud<f32>>,
    /// Indexed by label.
    pub class_names: Vec<String>,
}

/// Writes `train`/`test` clouds and the manifest under `root`. Returns the
/// manifest entries in file order.
pub fn write_dataset_dir(root: &Path, train: &[LabeledCloud<f32>], test: &[LabeledCloud<f32>]) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::with_capacity(train.len() + test.len());
    for (split, items) in [("train", train), ("test", test)] {
        let dir = root.join(split);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (i, item) in items.iter().enumerate() {
            let file = format!("{split}/{i:06}.pcld");
            let path = root.join(&file);
            let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_pcld(std::io::BufWriter::new(f), item).map_err(|e| Error::io(&path, e))?;
            entries.push(ManifestEntry { split: split.into(), file, label: item.label, class_name: item.class_name.clone() });
        }
    }
    let manifest = root.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest).map_err(|e| Error::Data(format!("{}: {e}", manifest.display())))?;
    for e in &entries {
        w.serialize(e).map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(&manifest, e))?;
    Ok(entries)
}

pub fn load_dataset_dir(root: &Path) -> Result<DatasetDir> {
    let manifest: PathBuf = root.join("manifest.csv");
    let mut reader = csv::Reader::from_path(&manifest)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", manifest.display())))?;
    let mut out = DatasetDir { train: Vec::new(), test: Vec::new(), class_names: Vec::new() };
    for (row, record) in reader.deserialize::<ManifestEntry>().enumerate() {
        let entry = record.map_err(|e| Error::Data(format!("manifest row {}: {e}", row + 1)))?;
        let path = root.join(&entry.file);
        let f = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let (cloud, label) = read_pcld(std::io::BufReader::new(f))
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        if label != entry.label {
            return Err(Error::Data(format!("{}: label {label} disagrees with manifest {}", path.display(), entry.label)));
        }
        if out.class_names.len() <= label {
            out.class_names.resize(label + 1, String::new());
        }
        if out.class_names[label].is_empty() {
            out.class_names[label] = entry.class_name.clone();
        } else if out.class_names[label] != entry.class_name {
            return Err(Error::Data(format!("label {label} names both {:?} and {:?}", out.class_names[label], entry.class_name)));
        }
        let item = LabeledCloud { cloud, label, class_name: entry.class_name };
        match entry.split.as_str() {
            "train" => out.train.push(item),
            "test" => out.test.push(item),
            other => return Err(Error::Data(format!("manifest row {}: unknown split {other:?}", row + 1))),
        }
    }
    if out.train.is_empty() && out.test.is_empty() {
        return Err(Error::Data(format!("{} lists no clouds", manifest.display())));
    }
    Ok(out)
}
