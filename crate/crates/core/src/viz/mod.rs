//! Filter visualization and runtime scaling measurements.

mod bench;
mod image;
mod probe;

pub use bench::{bench_scaling, doubling_ratios, median, write_bench_csv, BenchLayer, BenchRow};
pub use image::{write_image, Colormap};
pub use probe::{probe_filter, FilterImage, DEFAULT_SLICES};
