use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{io, Error, Result};

pub const PHOTON_HEADER: [&str; 7] = [
    "delta_time",
    "lat",
    "lon",
    "along_track",
    "height",
    "confidence",
    "background_rate",
];

/// One geolocated photon.
///
/// `height` is expected to already carry geophysical and first-photon-bias
/// corrections; files may instead provide them in an optional trailing
/// `height_correction` column, which is added on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonEvent {
    pub delta_time: f64,
    pub lat: f64,
    pub lon: f64,
    pub along_track: f64,
    pub height: f64,
    pub confidence: u8,
    pub background_rate: f64,
}

// csv cannot deserialize through `#[serde(flatten)]`, hence the copy.
#[derive(Deserialize)]
struct PhotonRow {
    delta_time: f64,
    lat: f64,
    lon: f64,
    along_track: f64,
    height: f64,
    confidence: u8,
    background_rate: f64,
    #[serde(default)]
    height_correction: f64,
}

pub fn read_photons(path: impl AsRef<Path>) -> Result<Vec<PhotonEvent>> {
    let path = path.as_ref();
    let text = io::read_to_string(path)?;
    io::check_header(&text, &PHOTON_HEADER)?;
    let rows: Vec<PhotonRow> = io::parse_csv(text.as_bytes(), true)?;
    let photons: Vec<PhotonEvent> = rows
        .into_iter()
        .map(|r| PhotonEvent {
            delta_time: r.delta_time,
            lat: r.lat,
            lon: r.lon,
            along_track: r.along_track,
            height: r.height + r.height_correction,
            confidence: r.confidence,
            background_rate: r.background_rate,
        })
        .collect();
    for (i, p) in photons.iter().enumerate() {
        if p.confidence > 4 {
            return Err(Error::invalid(format!("photon {i}: confidence {} > 4", p.confidence)));
        }
    }
    Ok(photons)
}

pub fn write_photons(path: impl AsRef<Path>, photons: &[PhotonEvent]) -> Result<()> {
    io::write_csv(path, &PHOTON_HEADER, photons)
}
