//! Geodesy and raster overlay: south-polar stereographic projection,
//! classified label rasters and the drift shifts used to align them with
//! altimetry tracks.

mod projection;
mod raster;
mod shift;

pub use projection::{project_forward, project_inverse, GeoPoint, ProjectedPoint, StereoParams};
pub use raster::{raster_lookup, LabelRaster, NODATA};
pub use shift::{parse_shift, parse_shift_in, read_shift_table, ShiftFrame, ShiftPair, ShiftVector, DEFAULT_MAX_TIME_DIFF_MINUTES};
