//! Polar stereographic equations evaluated through the conformal latitude,
//! with the series form of the inverse. Kept separate from the library's
//! `t`-function and fixed-point implementation so the two can check each
//! other.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

pub struct Ellipsoid {
    pub a: f64,
    pub e2: f64,
}

pub const WGS84: Ellipsoid = Ellipsoid {
    a: 6_378_137.0,
    e2: 0.006_694_379_990_141_317,
};

fn conformal_latitude(phi: f64, e: f64) -> f64 {
    let es = e * phi.sin();
    2.0 * ((FRAC_PI_4 + phi / 2.0).tan() * ((1.0 - es) / (1.0 + es)).powf(e / 2.0)).atan() - FRAC_PI_2
}

/// South-polar forward projection; latitudes and longitudes in degrees.
pub fn forward(ell: &Ellipsoid, phi_c_deg: f64, lon0_deg: f64, lat_deg: f64, lon_deg: f64) -> (f64, f64) {
    let e = ell.e2.sqrt();
    // mirror onto the northern aspect
    let phi = -lat_deg.to_radians();
    let phi_c = -phi_c_deg.to_radians();
    let chi = conformal_latitude(phi, e);
    let chi_c = conformal_latitude(phi_c, e);
    let m_c = phi_c.cos() / (1.0 - ell.e2 * phi_c.sin().powi(2)).sqrt();
    let rho = ell.a * m_c * (FRAC_PI_4 - chi / 2.0).tan() / (FRAC_PI_4 - chi_c / 2.0).tan();
    let dl = (lon_deg - lon0_deg).to_radians();
    (rho * dl.sin(), rho * dl.cos())
}

/// South-polar inverse; returns (lat, lon) in degrees.
pub fn inverse(ell: &Ellipsoid, phi_c_deg: f64, lon0_deg: f64, x: f64, y: f64) -> (f64, f64) {
    let e = ell.e2.sqrt();
    let e2 = ell.e2;
    let (e4, e6, e8) = (e2 * e2, e2 * e2 * e2, e2 * e2 * e2 * e2);
    let phi_c = -phi_c_deg.to_radians();
    let chi_c = conformal_latitude(phi_c, e);
    let m_c = phi_c.cos() / (1.0 - e2 * phi_c.sin().powi(2)).sqrt();
    let rho = x.hypot(y);
    let t = rho * (FRAC_PI_4 - chi_c / 2.0).tan() / (ell.a * m_c);
    let chi = FRAC_PI_2 - 2.0 * t.atan();
    let phi = chi
        + (e2 / 2.0 + 5.0 * e4 / 24.0 + e6 / 12.0 + 13.0 * e8 / 360.0) * (2.0 * chi).sin()
        + (7.0 * e4 / 48.0 + 29.0 * e6 / 240.0 + 811.0 * e8 / 11520.0) * (4.0 * chi).sin()
        + (7.0 * e6 / 120.0 + 81.0 * e8 / 1120.0) * (6.0 * chi).sin()
        + (4279.0 * e8 / 161_280.0) * (8.0 * chi).sin();
    let lon = lon0_deg + x.atan2(y).to_degrees();
    let lon = (lon + 540.0).rem_euclid(360.0) - 180.0;
    (-phi.to_degrees(), lon)
}
