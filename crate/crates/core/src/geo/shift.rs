use std::ops::Add;
use std::path::Path;

use serde::Deserialize;

use crate::{io, Error, Result};

/// Largest accepted image/track acquisition gap for a coincident pair.
pub const DEFAULT_MAX_TIME_DIFF_MINUTES: f64 = 80.0;

/// Translation on the projected plane, meters (east, north).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShiftVector {
    pub dx: f64,
    pub dy: f64,
}

impl ShiftVector {
    pub const ZERO: ShiftVector = ShiftVector { dx: 0.0, dy: 0.0 };

    pub fn magnitude(&self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

impl Add for ShiftVector {
    type Output = ShiftVector;

    fn add(self, rhs: ShiftVector) -> ShiftVector {
        ShiftVector {
            dx: self.dx + rhs.dx,
            dy: self.dy + rhs.dy,
        }
    }
}

/// Which side of the overlay a shift descriptor moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftFrame {
    /// The raster moves by the stated vector; the track stays fixed.
    #[default]
    RasterMoves,
    /// The descriptor states how the track moved; the raster is moved by the
    /// opposite vector.
    TrackMoves,
}

/// Parse a drift descriptor such as `"0 m"`, `"150 m / E"` or `"550 m / NW"`.
///
/// East is +x and north is +y; diagonal directions split the distance
/// equally over both axes.
pub fn parse_shift(text: &str) -> Result<ShiftVector> {
    parse_shift_in(text, ShiftFrame::RasterMoves)
}

pub fn parse_shift_in(text: &str, frame: ShiftFrame) -> Result<ShiftVector> {
    let mut parts = text.split('/');
    let distance_part = parts.next().unwrap_or("").trim();
    let direction = parts.next().map(str::trim);
    if parts.next().is_some() {
        return Err(Error::Parse(format!("too many '/' in shift '{text}'")));
    }

    let distance = distance_part
        .strip_suffix('m')
        .map(str::trim)
        .and_then(|d| d.parse::<f64>().ok())
        .filter(|d| d.is_finite() && *d >= 0.0)
        .ok_or_else(|| Error::Parse(format!("bad shift distance in '{text}'")))?;

    let (ux, uy) = match direction {
        None => {
            if distance != 0.0 {
                return Err(Error::Parse(format!("nonzero shift without direction: '{text}'")));
            }
            (0.0, 0.0)
        }
        Some(dir) => unit_vector(dir)
            .ok_or_else(|| Error::Parse(format!("unknown shift direction '{dir}'")))?,
    };

    let sign = match frame {
        ShiftFrame::RasterMoves => 1.0,
        ShiftFrame::TrackMoves => -1.0,
    };
    // 0 * x stays +0.0 for the "0 m" case
    Ok(ShiftVector {
        dx: sign * distance * ux + 0.0,
        dy: sign * distance * uy + 0.0,
    })
}

fn unit_vector(dir: &str) -> Option<(f64, f64)> {
    let d = std::f64::consts::FRAC_1_SQRT_2;
    Some(match dir.to_ascii_uppercase().as_str() {
        "N" => (0.0, 1.0),
        "S" => (0.0, -1.0),
        "E" => (1.0, 0.0),
        "W" => (-1.0, 0.0),
        "NE" => (d, d),
        "NW" => (-d, d),
        "SE" => (d, -d),
        "SW" => (-d, -d),
        _ => return None,
    })
}

/// One row of a coincident-pair shift table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ShiftPair {
    pub pair_id: String,
    pub track_file: String,
    pub raster_file: String,
    pub time_diff_minutes: f64,
    pub shift_text: String,
}

impl ShiftPair {
    pub fn shift(&self, frame: ShiftFrame) -> Result<ShiftVector> {
        parse_shift_in(&self.shift_text, frame)
    }
}

/// Read a shift table, rejecting pairs whose acquisition gap exceeds
/// `max_time_diff_minutes` and any row whose shift text does not parse.
pub fn read_shift_table(path: impl AsRef<Path>, max_time_diff_minutes: f64) -> Result<Vec<ShiftPair>> {
    let path = path.as_ref();
    let mut reader = io::csv_reader(path)?;
    let mut pairs = Vec::new();
    for row in reader.deserialize() {
        let pair: ShiftPair = row?;
        if !(pair.time_diff_minutes.abs() <= max_time_diff_minutes) {
            return Err(Error::invalid(format!(
                "pair {}: time difference {} min exceeds {} min",
                pair.pair_id, pair.time_diff_minutes, max_time_diff_minutes
            )));
        }
        parse_shift(&pair.shift_text)?;
        pairs.push(pair);
    }
    Ok(pairs)
}
