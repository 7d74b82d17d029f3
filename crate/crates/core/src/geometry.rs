//! Cell layout, user drops and the expected path-loss terms that the closed
//! forms are built from.
//!
//! The BS sits at the origin and the STAR-RIS at `(bs_ris_distance, 0)`.
//! Cell-center users are dropped uniformly in a disk around the BS, cell-edge
//! users uniformly in a disk around the RIS. Path loss is the bounded model
//! `(1 + d)^-m` everywhere.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::specfun::{gauss_legendre, hyper_pfq};

/// Node count used for the fixed-point-to-disk expectation unless overridden.
pub const DEFAULT_QUADRATURE_NODES: usize = 64;

/// Node count of the quadrature fallback for the two-random-points term.
const TWO_POINT_FALLBACK_NODES: usize = 256;

/// Below this radius the disk expectation switches to its Taylor series.
const SMALL_DISK_RADIUS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    /// Radius of the cell-center disk around the BS (m).
    pub center_radius: f64,
    /// Radius of the cell-edge disk around the RIS (m).
    pub edge_radius: f64,
    /// BS to RIS distance (m).
    pub bs_ris_distance: f64,
    /// Path-loss exponent.
    pub exponent: f64,
}

impl CellGeometry {
    /// Checked constructor: radii positive, RIS outside the center disk,
    /// exponent above 2.
    pub fn new(center_radius: f64, edge_radius: f64, bs_ris_distance: f64, exponent: f64) -> Result<Self> {
        let g = Self { center_radius, edge_radius, bs_ris_distance, exponent };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_radius > 0.0 && self.center_radius.is_finite()) {
            return Err(Error::Domain(format!("center radius must be positive (got {})", self.center_radius)));
        }
        if !(self.edge_radius > 0.0 && self.edge_radius.is_finite()) {
            return Err(Error::Domain(format!("edge radius must be positive (got {})", self.edge_radius)));
        }
        if !(self.bs_ris_distance > self.center_radius && self.bs_ris_distance.is_finite()) {
            return Err(Error::Domain(format!(
                "BS-RIS distance {} must exceed the center radius {}",
                self.bs_ris_distance, self.center_radius
            )));
        }
        if !(self.exponent > 2.0 && self.exponent.is_finite()) {
            return Err(Error::Domain(format!("path-loss exponent must exceed 2 (got {})", self.exponent)));
        }
        Ok(())
    }

    /// Clearance between the center-disk boundary and the RIS.
    pub fn clearance(&self) -> f64 {
        self.bs_ris_distance - self.center_radius
    }

    pub fn region_radius(&self, region: Region) -> f64 {
        match region {
            Region::Center => self.center_radius,
            Region::Edge => self.edge_radius,
        }
    }

    /// Cartesian coordinates of the disk center for `region`.
    pub fn region_origin(&self, region: Region) -> (f64, f64) {
        match region {
            Region::Center => (0.0, 0.0),
            Region::Edge => (self.bs_ris_distance, 0.0),
        }
    }

    pub fn ris_position(&self) -> (f64, f64) {
        (self.bs_ris_distance, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Center,
    Edge,
}

/// A user drop in polar coordinates about its region's disk center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPosition {
    pub radius: f64,
    pub angle: f64,
    pub region: Region,
}

impl UserPosition {
    /// Absolute Cartesian position in the cell frame.
    pub fn cartesian(&self, geometry: &CellGeometry) -> (f64, f64) {
        let (ox, oy) = geometry.region_origin(self.region);
        (ox + self.radius * self.angle.cos(), oy + self.radius * self.angle.sin())
    }
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Draws a user uniformly over the disk of `region`.
///
/// The radius has density `2r/R^2` on `[0, R]`, obtained as `R * sqrt(U)`.
pub fn sample_user_position<R: Rng + ?Sized>(geometry: &CellGeometry, region: Region, rng: &mut R) -> UserPosition {
    let radius = geometry.region_radius(region) * rng.random::<f64>().sqrt();
    let angle = 2.0 * PI * rng.random::<f64>();
    UserPosition { radius, angle, region }
}

/// Bounded path loss `(1 + d)^-m`.
#[inline]
pub fn pathloss(distance: f64, exponent: f64) -> f64 {
    (1.0 + distance).powf(-exponent)
}

/// `E[(1 + r)^-m]` for `r` the distance of a uniform point in a disk of
/// radius `radius` from the disk center.
pub fn exp_pathloss_disk(radius: f64, exponent: f64) -> Result<f64> {
    if !(exponent > 2.0) {
        return Err(Error::Domain(format!(
            "disk path-loss expectation needs exponent > 2 (got {exponent})"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("disk radius must be positive (got {radius})")));
    }
    let m = exponent;
    if radius < SMALL_DISK_RADIUS {
        return Ok(disk_series(radius, m));
    }
    let r = radius;
    let lead = 2.0 * (1.0 + r).powf(-m) / ((m - 2.0) * (m - 1.0) * r * r);
    Ok(lead * (-1.0 + r * r - m * r * (1.0 + r) + (1.0 + r).powf(m)))
}

// 2 * sum_k binom(-m, k) r^k / (k + 2)
fn disk_series(r: f64, m: f64) -> f64 {
    let mut coeff = 1.0;
    let mut power = 1.0;
    let mut sum = 0.5;
    for k in 1..200 {
        let kf = k as f64;
        coeff *= (-m - kf + 1.0) / kf;
        power *= r;
        let term = coeff * power / (kf + 2.0);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    2.0 * sum
}

/// Expected path loss from the BS to a cell-center user.
pub fn exp_pathloss_center_disk(center_radius: f64, exponent: f64) -> Result<f64> {
    exp_pathloss_disk(center_radius, exponent)
}

/// Expected path loss from the RIS to a cell-edge user.
pub fn exp_pathloss_edge_disk(edge_radius: f64, exponent: f64) -> Result<f64> {
    exp_pathloss_disk(edge_radius, exponent)
}

/// Density of the distance between a fixed point and a uniform point in a
/// disk of radius `radius` whose boundary is `clearance` away from the point.
///
/// Supported on `[clearance, clearance + 2 radius]`.
pub fn fixed_point_distance_density(r: f64, clearance: f64, radius: f64) -> f64 {
    let lo = clearance;
    let hi = clearance + 2.0 * radius;
    if r <= lo || r >= hi {
        return 0.0;
    }
    let center = clearance + radius;
    let arg = ((r * r + center * center - radius * radius) / (2.0 * r * center)).clamp(-1.0, 1.0);
    2.0 * r * arg.acos() / (PI * radius * radius)
}

/// `E[(1 + r)^-m]` for the distance from an external point to a uniform point
/// in a disk, by `n_nodes`-point Gauss-Legendre on the distance support.
///
/// The rule is applied after a cosine substitution, since the density has
/// square-root zeros at both ends of its support.
pub fn exp_pathloss_fixed_point_to_disk(clearance: f64, radius: f64, exponent: f64, n_nodes: usize) -> Result<f64> {
    if !(clearance > 0.0 && clearance.is_finite()) {
        return Err(Error::Domain(format!("clearance must be positive (got {clearance})")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("disk radius must be positive (got {radius})")));
    }
    if !(exponent >= 0.0) {
        return Err(Error::Domain(format!("path-loss exponent must be non-negative (got {exponent})")));
    }
    if n_nodes < 8 {
        return Err(Error::Argument(format!("at least 8 quadrature nodes are required (got {n_nodes})")));
    }
    let rule = gauss_legendre(n_nodes);
    Ok(rule.integrate_cosine_mapped(clearance, clearance + 2.0 * radius, |r| {
        pathloss(r, exponent) * fixed_point_distance_density(r, clearance, radius)
    }))
}

/// Density of the distance between two independent uniform points in a disk
/// of radius `radius`, supported on `[0, 2 radius]`.
pub fn two_point_distance_density(r: f64, radius: f64) -> f64 {
    if r <= 0.0 || r >= 2.0 * radius {
        return 0.0;
    }
    let q = r / (2.0 * radius);
    4.0 * r / (PI * radius * radius) * (q.acos() - q * (1.0 - q * q).sqrt())
}

/// Hypergeometric closed form of the two-random-points expectation.
///
/// The series behind it only converges for `radius < 1/2`; larger radii
/// surface as [`Error::NonConvergence`].
pub fn two_point_series(radius: f64, exponent: f64) -> Result<f64> {
    let m = exponent;
    let r = radius;
    let z = 4.0 * r * r;
    let poly = m * m - 3.0 * m + 2.0;
    let f1 = hyper_pfq(&[0.5, m / 2.0 - 1.0, m / 2.0 - 0.5], &[-0.5, 1.0], z)?;
    let f2 = hyper_pfq(&[1.5, m / 2.0 + 0.5, m / 2.0], &[0.5, 3.0], z)?;
    let f3 = hyper_pfq(&[2.0, m / 2.0 + 0.5, m / 2.0 + 1.0], &[1.5, 3.5], z)?;
    let f4 = hyper_pfq(&[2.0, m / 2.0 + 0.5, m / 2.0 + 1.0], &[2.5, 2.5], z)?;
    Ok(2.0 / (poly * r * r) - 2.0 * f1 / (poly * r * r) - f2 + 64.0 * m * r * f3 / (15.0 * PI)
        - 64.0 * m * r * f4 / (9.0 * PI))
}

/// `E[(1 + r)^-m]` for the distance between two uniform points in one disk.
///
/// Uses [`two_point_series`] where it converges and falls back to quadrature
/// of the distance density otherwise.
pub fn exp_pathloss_two_random_points(radius: f64, exponent: f64) -> Result<f64> {
    if !(exponent > 2.0) {
        return Err(Error::Domain(format!(
            "two-point path-loss expectation needs exponent > 2 (got {exponent})"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("disk radius must be positive (got {radius})")));
    }
    match two_point_series(radius, exponent) {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        _ => Ok(two_point_quadrature(radius, exponent)),
    }
}

fn two_point_quadrature(radius: f64, exponent: f64) -> f64 {
    gauss_legendre(TWO_POINT_FALLBACK_NODES).integrate_cosine_mapped(0.0, 2.0 * radius, |r| {
        pathloss(r, exponent) * two_point_distance_density(r, radius)
    })
}
