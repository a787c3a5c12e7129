use crate::layer::PointCloud;
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud<T = f32> {
    pub cloud: PointCloud<T>,
    pub label: usize,
    pub class_name: String,
}

impl<T: Real> LabeledCloud<T> {
    pub fn cast<U: Real>(&self) -> LabeledCloud<U> {
        LabeledCloud { cloud: self.cloud.cast(), label: self.label, class_name: self.class_name.clone() }
    }
}
