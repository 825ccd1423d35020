//! Identification of valve areas, chamber volume and leak from sensor logs.

pub mod curve;
pub mod filter;
pub mod pipeline;
pub mod segment;
pub mod volume;

pub use filter::{estimate_pressure_rate, lowpass_zero_phase};
pub use segment::{fit_segment, Segment, SegmentFit, SegmentPriors};
pub use curve::{fit_area_curve, AreaCurveFit, AreaSample, Port};
pub use volume::{fit_volume_map, VolumeMapFit};
pub use pipeline::{identify, IdentifiedModel, IdentifyConfig, VolumeAnchor};
