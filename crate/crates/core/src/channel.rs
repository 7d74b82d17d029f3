//! Channel generation: array steering vectors, Rician RIS links, Rayleigh
//! direct links and the energy-splitting STAR-RIS state.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{distance, pathloss, sample_user_position, CellGeometry, Region, UserPosition};

/// Largest tolerated `|rho_t + rho_r - 1|` for an accepted state.
pub const ENERGY_SPLIT_TOL: f64 = 1e-9;

/// Arrival/departure direction at the RIS, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Direction {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }

    pub fn from_degrees(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth: azimuth.to_radians(), elevation: elevation.to_radians() }
    }

    /// The same path traversed the other way; its steering vector is the
    /// conjugate of this one's.
    pub fn reversed(self) -> Self {
        Self { azimuth: -self.azimuth, elevation: PI - self.elevation }
    }

    /// Horizontal phase-gradient factor `sin(az) sin(el)`.
    pub fn horizontal(&self) -> f64 {
        self.azimuth.sin() * self.elevation.sin()
    }

    /// Vertical phase-gradient factor `cos(el)`.
    pub fn vertical(&self) -> f64 {
        self.elevation.cos()
    }
}

/// Directions of every RIS link plus the element spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryAngles {
    pub bs_ris: Direction,
    pub ris_u1d: Direction,
    pub ris_u2d: Direction,
    pub ris_u1u: Direction,
    pub ris_u2u: Direction,
    /// Element spacing over wavelength.
    pub spacing: f64,
}

impl Default for GeometryAngles {
    fn default() -> Self {
        Self {
            bs_ris: Direction::from_degrees(40.0, 60.0),
            ris_u1d: Direction::from_degrees(-30.0, 100.0),
            ris_u2d: Direction::from_degrees(20.0, 75.0),
            ris_u1u: Direction::from_degrees(-50.0, 110.0),
            ris_u2u: Direction::from_degrees(65.0, 80.0),
            spacing: 0.5,
        }
    }
}

/// Grid coordinates `(x_n, y_n)` of element `n` (zero based).
///
/// Square element counts form a planar array; any other count is laid out
/// as a line along x.
pub fn element_coordinates(n_elements: usize, n: usize) -> (f64, f64) {
    let side = (n_elements as f64).sqrt().round() as usize;
    if side * side == n_elements {
        ((n % side) as f64, (n / side) as f64)
    } else {
        (n as f64, 0.0)
    }
}

/// Unit-modulus steering vector with entry phase
/// `2 pi (d/lambda) (x_n sin(az) sin(el) + y_n cos(el))`.
pub fn steering_vector(n_elements: usize, direction: Direction, spacing: f64) -> Vec<Complex64> {
    let (h, v) = (direction.horizontal(), direction.vertical());
    (0..n_elements)
        .map(|n| {
            let (x, y) = element_coordinates(n_elements, n);
            Complex64::from_polar(1.0, 2.0 * PI * spacing * (x * h + y * v))
        })
        .collect()
}

/// Draws one `CN(0, 1)` sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

#[derive(Debug, Clone, PartialEq)]
pub struct RicianSpec {
    pub kappa: f64,
    pub los: Vec<Complex64>,
}

/// `sqrt(k/(k+1)) los + sqrt(1/(k+1)) w` with `w` i.i.d. `CN(0, 1)`.
pub fn sample_rician<R: Rng + ?Sized>(spec: &RicianSpec, rng: &mut R) -> Vec<Complex64> {
    let los_amp = (spec.kappa / (spec.kappa + 1.0)).sqrt();
    let nlos_amp = (1.0 / (spec.kappa + 1.0)).sqrt();
    spec.los
        .iter()
        .map(|&l| l * los_amp + complex_gaussian(rng) * nlos_amp)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Transmission side, facing the BS and the cell-center users.
    Transmit,
    /// Reflection side, facing the cell-edge DL user.
    Reflect,
}

/// Per-element amplitude and phase of both STAR-RIS sides.
#[derive(Debug, Clone, PartialEq)]
pub struct StarRisState {
    pub rho_t: Vec<f64>,
    pub rho_r: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub phi_r: Vec<f64>,
}

impl StarRisState {
    /// Checked constructor. Phases are wrapped into `[0, 2 pi)`; amplitudes
    /// must satisfy the energy split exactly (to [`ENERGY_SPLIT_TOL`]).
    pub fn new(rho_t: Vec<f64>, rho_r: Vec<f64>, phi_t: Vec<f64>, phi_r: Vec<f64>) -> Result<Self> {
        let n = rho_t.len();
        if rho_r.len() != n || phi_t.len() != n || phi_r.len() != n {
            return Err(Error::Argument(format!(
                "STAR-RIS vectors differ in length ({}, {}, {}, {})",
                n,
                rho_r.len(),
                phi_t.len(),
                phi_r.len()
            )));
        }
        if n == 0 {
            return Err(Error::Argument("STAR-RIS needs at least one element".into()));
        }
        if phi_t.iter().chain(&phi_r).any(|p| !p.is_finite()) {
            return Err(Error::Argument("STAR-RIS phases must be finite".into()));
        }
        let state = Self {
            rho_t,
            rho_r,
            phi_t: phi_t.into_iter().map(wrap_phase).collect(),
            phi_r: phi_r.into_iter().map(wrap_phase).collect(),
        };
        if let Some(i) = (0..n).find(|&i| !(state.rho_t[i] >= 0.0 && state.rho_r[i] >= 0.0)) {
            return Err(Error::Argument(format!("negative amplitude at element {i}")));
        }
        let dev = state.check_energy_split();
        if !(dev <= ENERGY_SPLIT_TOL) {
            return Err(Error::Argument(format!(
                "energy split violated: max |rho_t + rho_r - 1| = {dev:e}"
            )));
        }
        Ok(state)
    }

    /// Equal split on every element with the given phases.
    pub fn with_phases(rho_t: f64, phi_t: Vec<f64>, phi_r: Vec<f64>) -> Result<Self> {
        let n = phi_t.len();
        Self::new(vec![rho_t; n], vec![1.0 - rho_t; n], phi_t, phi_r)
    }

    /// All phases zero, amplitudes `(rho_t, 1 - rho_t)`.
    pub fn uniform(n_elements: usize, rho_t: f64) -> Result<Self> {
        Self::with_phases(rho_t, vec![0.0; n_elements], vec![0.0; n_elements])
    }

    /// Uniform random phases on both sides with a fixed amplitude split.
    pub fn random_phases<R: Rng + ?Sized>(n_elements: usize, rho_t: f64, rng: &mut R) -> Result<Self> {
        let phi_t = (0..n_elements).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
        let phi_r = (0..n_elements).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
        Self::with_phases(rho_t, phi_t, phi_r)
    }

    /// Random phases and random per-element splits.
    pub fn random<R: Rng + ?Sized>(n_elements: usize, rng: &mut R) -> Result<Self> {
        let rho_t: Vec<f64> = (0..n_elements).map(|_| rng.random::<f64>()).collect();
        let rho_r = rho_t.iter().map(|t| 1.0 - t).collect();
        let phi_t = (0..n_elements).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
        let phi_r = (0..n_elements).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
        Self::new(rho_t, rho_r, phi_t, phi_r)
    }

    pub fn n_elements(&self) -> usize {
        self.rho_t.len()
    }

    /// `max_n |rho_t[n] + rho_r[n] - 1|`.
    pub fn check_energy_split(&self) -> f64 {
        self.rho_t
            .iter()
            .zip(&self.rho_r)
            .map(|(t, r)| (t + r - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn amplitudes(&self, side: Side) -> &[f64] {
        match side {
            Side::Transmit => &self.rho_t,
            Side::Reflect => &self.rho_r,
        }
    }

    pub fn phases(&self, side: Side) -> &[f64] {
        match side {
            Side::Transmit => &self.phi_t,
            Side::Reflect => &self.phi_r,
        }
    }

    /// Diagonal of the side's coefficient matrix, `rho_n e^{j phi_n}`.
    pub fn coefficients(&self, side: Side) -> Vec<Complex64> {
        self.amplitudes(side)
            .iter()
            .zip(self.phases(side))
            .map(|(&r, &p)| Complex64::from_polar(r, p))
            .collect()
    }

    /// `sum_n rho_n^2` on one side.
    pub fn sum_rho_sq(&self, side: Side) -> f64 {
        self.amplitudes(side).iter().map(|r| r * r).sum()
    }
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2 pi for tiny negative inputs
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// `sum_n g_out[n] rho_n e^{j phi_n} g_in[n]` for one STAR-RIS side.
pub fn star_cascade(g_out: &[Complex64], state: &StarRisState, side: Side, g_in: &[Complex64]) -> Result<Complex64> {
    let n = state.n_elements();
    if g_out.len() != n || g_in.len() != n {
        return Err(Error::Argument(format!(
            "cascade vectors have lengths {} and {}, surface has {} elements",
            g_out.len(),
            g_in.len(),
            n
        )));
    }
    Ok(cascade(g_out, &state.coefficients(side), g_in))
}

/// Cascade with precomputed side coefficients; lengths are not checked.
#[inline]
pub fn cascade(g_out: &[Complex64], coeffs: &[Complex64], g_in: &[Complex64]) -> Complex64 {
    g_out
        .iter()
        .zip(coeffs)
        .zip(g_in)
        .map(|((o, c), i)| o * c * i)
        .sum()
}

/// One user of each role.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserDrops {
    pub u1d: UserPosition,
    pub u2d: UserPosition,
    pub u1u: UserPosition,
    pub u2u: UserPosition,
}

impl UserDrops {
    pub fn sample<R: Rng + ?Sized>(geometry: &CellGeometry, rng: &mut R) -> Self {
        Self {
            u1d: sample_user_position(geometry, Region::Center, rng),
            u2d: sample_user_position(geometry, Region::Edge, rng),
            u1u: sample_user_position(geometry, Region::Center, rng),
            u2u: sample_user_position(geometry, Region::Edge, rng),
        }
    }

    /// Deterministic path losses of every link for these positions.
    pub fn link_gains(&self, geometry: &CellGeometry) -> LinkGains {
        let m = geometry.exponent;
        let bs = (0.0, 0.0);
        let ris = geometry.ris_position();
        let p1d = self.u1d.cartesian(geometry);
        let p2d = self.u2d.cartesian(geometry);
        let p1u = self.u1u.cartesian(geometry);
        let p2u = self.u2u.cartesian(geometry);
        LinkGains {
            br: pathloss(geometry.bs_ris_distance, m),
            b_u1d: pathloss(distance(bs, p1d), m),
            b_u1u: pathloss(distance(bs, p1u), m),
            r_u1d: pathloss(distance(ris, p1d), m),
            r_u1u: pathloss(distance(ris, p1u), m),
            r_u2d: pathloss(distance(ris, p2d), m),
            r_u2u: pathloss(distance(ris, p2u), m),
            u1d_u1u: pathloss(distance(p1d, p1u), m),
        }
    }
}

/// Large-scale gain of every link, either realised or averaged over drops.
///
/// For averaged gains, products of two RIS-user terms are exact because the
/// users are dropped independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains {
    pub br: f64,
    pub b_u1d: f64,
    pub b_u1u: f64,
    pub r_u1d: f64,
    pub r_u1u: f64,
    pub r_u2d: f64,
    pub r_u2u: f64,
    pub u1d_u1u: f64,
}

/// One random draw of every channel in the system.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_b_u1d: Complex64,
    pub h_b_u1u: Complex64,
    pub h_u1d_u1u: Complex64,
    pub g_br: Vec<Complex64>,
    pub g_r_u1d: Vec<Complex64>,
    pub g_r_u2d: Vec<Complex64>,
    pub g_r_u1u: Vec<Complex64>,
    pub g_r_u2u: Vec<Complex64>,
    pub drops: UserDrops,
    pub gains: LinkGains,
}

/// LoS components of the five RIS links.
///
/// The BS-RIS vector is an arrival steering vector; the RIS-user vectors are
/// departure vectors, i.e. conjugated steering vectors, used unchanged for
/// both link directions.
#[derive(Debug, Clone, PartialEq)]
pub struct LosVectors {
    pub br: Vec<Complex64>,
    pub u1d: Vec<Complex64>,
    pub u2d: Vec<Complex64>,
    pub u1u: Vec<Complex64>,
    pub u2u: Vec<Complex64>,
}

impl LosVectors {
    pub fn new(n_elements: usize, angles: &GeometryAngles) -> Self {
        let dep = |d: Direction| -> Vec<Complex64> {
            steering_vector(n_elements, d, angles.spacing).into_iter().map(|v| v.conj()).collect()
        };
        Self {
            br: steering_vector(n_elements, angles.bs_ris, angles.spacing),
            u1d: dep(angles.ris_u1d),
            u2d: dep(angles.ris_u2d),
            u1u: dep(angles.ris_u1u),
            u2u: dep(angles.ris_u2u),
        }
    }
}

/// Draws positions, path losses, direct Rayleigh links and Rician RIS links.
///
/// With fixed locations enabled the configured drops replace the random ones.
/// Draw order is fixed so a given RNG state always yields the same channels.
pub fn draw_realization<R: Rng + ?Sized>(config: &SystemConfig, los: &LosVectors, rng: &mut R) -> ChannelRealization {
    let drops = if config.simplifications.fixed_locations {
        config.fixed_drops
    } else {
        UserDrops::sample(&config.geometry, rng)
    };
    let gains = drops.link_gains(&config.geometry);
    let h_b_u1d = complex_gaussian(rng);
    let h_b_u1u = complex_gaussian(rng);
    let h_u1d_u1u = complex_gaussian(rng);
    let k = &config.kappa;
    let mut rician = |kappa: f64, l: &[Complex64]| sample_rician(&RicianSpec { kappa, los: l.to_vec() }, rng);
    let g_br = rician(k.bs_ris, &los.br);
    let g_r_u1d = rician(k.ris_u1d, &los.u1d);
    let g_r_u2d = rician(k.ris_u2d, &los.u2d);
    let g_r_u1u = rician(k.ris_u1u, &los.u1u);
    let g_r_u2u = rician(k.ris_u2u, &los.u2u);
    ChannelRealization { h_b_u1d, h_b_u1u, h_u1d_u1u, g_br, g_r_u1d, g_r_u2d, g_r_u1u, g_r_u2u, drops, gains }
}
