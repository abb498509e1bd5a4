//! Text localization in still images and video frames.
//!
//! The detector median-filters a grayscale input, emphasizes Sobel edges,
//! binarizes the edge map with Otsu's threshold, bridges and labels
//! 8-connected components, drops components that are small or edge-poor,
//! and finally dilates the survivors into text regions whose bounding boxes
//! are reported. [`evaluation`] scores detections against ground truth.

pub mod binarize;
pub mod components;
pub mod edge;
pub mod error;
pub mod evaluation;
pub mod imageio;
pub mod localize;
pub mod morphology;
pub mod pipeline;
pub mod preprocess;

pub use binarize::{apply_threshold, histogram, otsu_threshold, BinaryImage, Histogram256};
pub use components::{
    label_components, label_components_with_edges, prune_low_edge_density, prune_small, Component,
    LabelMap, Rect,
};
pub use edge::{
    convolve3x3, edge_emphasize, gradient_magnitude, sobel_gradients, GradientMap, Kernel3x3,
    MagnitudeMode, Plane,
};
pub use error::{Error, Result};
pub use evaluation::{
    compute_rates, f_measure, match_detections, precision_recall_f, Averaging, EvalCounts,
    EvalReport, MatchConfig, Metrics,
};
pub use imageio::{FrameSequence, GrayImage, Image, RgbImage};
pub use localize::{localize, merge_detections, TextRegion};
pub use morphology::{dilate, StructuringElement};
pub use pipeline::{detect, run_pipeline, run_sequence, PipelineConfig, SequenceOptions};
pub use preprocess::{median_filter, MedianConfig};
