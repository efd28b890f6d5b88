use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::{Error, Result};

/// Maximum Newton-style iterations for latitude recovery in the inverse.
const MAX_INVERSE_ITERATIONS: usize = 20;
const INVERSE_TOLERANCE_RAD: f64 = 1e-10;

/// A geodetic position in the Southern Hemisphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::invalid(format!("non-finite coordinate ({lat}, {lon})")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::invalid(format!("longitude {lon} outside [-180, 180]")));
        }
        if lat < -90.0 {
            return Err(Error::invalid(format!("latitude {lat} below -90")));
        }
        if lat > 0.0 {
            return Err(Error::OutOfScope(format!(
                "latitude {lat} is in the Northern Hemisphere"
            )));
        }
        Ok(GeoPoint { lat, lon })
    }
}

/// Easting/northing on the south-polar stereographic plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProjectedPoint {
    pub x: f64,
    pub y: f64,
}

impl ProjectedPoint {
    pub fn new(x: f64, y: f64) -> Self {
        ProjectedPoint { x, y }
    }
}

/// Ellipsoid and grid definition for the polar stereographic projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoParams {
    pub semi_major_axis: f64,
    pub inverse_flattening: f64,
    /// Latitude of true scale, degrees, negative.
    pub standard_parallel: f64,
    pub central_meridian: f64,
}

impl Default for StereoParams {
    /// WGS84 with true scale at 70°S, the Antarctic polar stereographic grid
    /// (EPSG:3976).
    fn default() -> Self {
        StereoParams {
            semi_major_axis: 6_378_137.0,
            inverse_flattening: 298.257_223_563,
            standard_parallel: -70.0,
            central_meridian: 0.0,
        }
    }
}

impl StereoParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.semi_major_axis.is_finite()
            && self.semi_major_axis > 0.0
            && self.inverse_flattening.is_finite()
            && self.inverse_flattening > 0.0
            && self.standard_parallel > -90.0
            && self.standard_parallel < 0.0
            && self.central_meridian.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid projection parameters {self:?}")))
        }
    }

    fn eccentricity(&self) -> f64 {
        let f = 1.0 / self.inverse_flattening;
        (f * (2.0 - f)).sqrt()
    }

    /// Constants shared by forward and inverse: (e, a·m_c / t_c).
    fn scale_terms(&self) -> (f64, f64) {
        let e = self.eccentricity();
        let phi_c = -self.standard_parallel.to_radians();
        let sin_c = phi_c.sin();
        let m_c = phi_c.cos() / (1.0 - e * e * sin_c * sin_c).sqrt();
        let t_c = isometric_t(phi_c, e);
        (e, self.semi_major_axis * m_c / t_c)
    }
}

/// Snyder's `t` for a latitude measured toward the projection pole.
fn isometric_t(phi: f64, e: f64) -> f64 {
    let es = e * phi.sin();
    (FRAC_PI_4 - phi / 2.0).tan() / ((1.0 - es) / (1.0 + es)).powf(e / 2.0)
}

/// Ellipsoidal south-polar stereographic forward projection.
///
/// The pole maps to the origin, the central meridian to the positive y axis.
pub fn project_forward(p: GeoPoint, params: &StereoParams) -> Result<ProjectedPoint> {
    if !p.lat.is_finite() || !p.lon.is_finite() {
        return Err(Error::invalid(format!("non-finite coordinate ({}, {})", p.lat, p.lon)));
    }
    if p.lat > 0.0 {
        return Err(Error::OutOfScope(format!(
            "latitude {} is in the Northern Hemisphere",
            p.lat
        )));
    }
    if p.lat < -90.0 {
        return Err(Error::invalid(format!("latitude {} below -90", p.lat)));
    }
    params.validate()?;
    if p.lat == -90.0 {
        return Ok(ProjectedPoint::new(0.0, 0.0));
    }

    let (e, scale) = params.scale_terms();
    let rho = scale * isometric_t(-p.lat.to_radians(), e);
    let (sin_l, cos_l) = (p.lon - params.central_meridian).to_radians().sin_cos();
    Ok(ProjectedPoint::new(rho * sin_l, rho * cos_l))
}

/// Inverse of [`project_forward`]; latitude is recovered by fixed-point
/// iteration on the isometric latitude.
pub fn project_inverse(q: ProjectedPoint, params: &StereoParams) -> Result<GeoPoint> {
    if !q.x.is_finite() || !q.y.is_finite() {
        return Err(Error::invalid(format!("non-finite point ({}, {})", q.x, q.y)));
    }
    params.validate()?;
    let rho = q.x.hypot(q.y);
    if rho == 0.0 {
        return Ok(GeoPoint {
            lat: -90.0,
            lon: normalize_lon(params.central_meridian),
        });
    }

    let (e, scale) = params.scale_terms();
    let t = rho / scale;
    let half_e = e / 2.0;
    let mut phi = FRAC_PI_2 - 2.0 * t.atan();
    let mut converged = false;
    for _ in 0..MAX_INVERSE_ITERATIONS {
        let es = e * phi.sin();
        let next = FRAC_PI_2 - 2.0 * (t * ((1.0 - es) / (1.0 + es)).powf(half_e)).atan();
        let delta = (next - phi).abs();
        phi = next;
        if delta < INVERSE_TOLERANCE_RAD {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "latitude iteration did not converge for ({}, {})",
            q.x, q.y
        )));
    }

    let lon = params.central_meridian + q.x.atan2(q.y).to_degrees();
    Ok(GeoPoint {
        lat: -phi.to_degrees(),
        lon: normalize_lon(lon),
    })
}

fn normalize_lon(lon: f64) -> f64 {
    if (-180.0..=180.0).contains(&lon) {
        lon
    } else {
        (lon + 180.0).rem_euclid(360.0) - 180.0
    }
}
