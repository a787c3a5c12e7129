//! Datasets: toy shapes, OFF meshes, ModelNet10 and the `PCLD` cache.

mod labeled;
mod mesh;
mod modelnet;
mod normalize;
mod off;
mod pcld;
mod toy;

pub use labeled::LabeledCloud;
pub use mesh::{sample_mesh, sample_mesh_with_faces, TriangleMesh};
pub use modelnet::{load_modelnet10, LoadReport, ModelNetData, MODELNET_POINTS};
pub use normalize::normalize_cloud;
pub use off::{parse_off, read_off};
pub use pcld::{
    load_dataset_dir, read_pcld, write_dataset_dir, write_pcld, DatasetDir, ManifestEntry, PCLD_MAGIC, PCLD_VERSION,
};
pub use toy::{gen_toy_cloud, gen_toy_dataset, ToyConfig, ToyShape, TOY_CLASSES};
