//! Point clouds and the generalized convolution.

mod cloud;
mod genconv;
mod head;
mod relations;
mod stride;

pub use cloud::PointCloud;
pub use genconv::{GenConvLayer, LayerTrace};
pub use head::{GlobalHead, HeadTrace};
pub use relations::{extract_relations, relation_width, RelationTensor};
pub use stride::{query_count, stride_sample};
