//! Scenario and power descriptions shared by every estimator and optimiser.

use std::f64::consts::PI;

use crate::channel::{GeometryAngles, UserDrops};
use crate::error::{Error, Result};
use crate::geometry::{CellGeometry, Region, UserPosition, DEFAULT_QUADRATURE_NODES};

/// Rician K-factors (linear) of the five RIS links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianFactors {
    pub bs_ris: f64,
    pub ris_u1d: f64,
    pub ris_u2d: f64,
    pub ris_u1u: f64,
    pub ris_u2u: f64,
}

impl RicianFactors {
    pub fn uniform(kappa: f64) -> Self {
        Self { bs_ris: kappa, ris_u1d: kappa, ris_u2d: kappa, ris_u1u: kappa, ris_u2u: kappa }
    }

    fn all(&self) -> [f64; 5] {
        [self.bs_ris, self.ris_u1d, self.ris_u2d, self.ris_u1u, self.ris_u2u]
    }
}

/// Receiver noise powers (W).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePowers {
    pub u1d: f64,
    pub u2d: f64,
    pub bs: f64,
}

impl NoisePowers {
    pub fn uniform(sigma2: f64) -> Self {
        Self { u1d: sigma2, u2d: sigma2, bs: sigma2 }
    }
}

/// Residual self-interference model `V = beta * P_b^lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfInterference {
    pub beta: f64,
    pub lambda: f64,
}

impl SelfInterference {
    pub fn variance(&self, bs_power: f64) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        self.beta * bs_power.max(0.0).powf(self.lambda)
    }
}

/// Objective weights per user and for the two bidirectional flows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub u1d: f64,
    pub u2d: f64,
    pub u1u: f64,
    pub u2u: f64,
    pub center_flow: f64,
    pub edge_flow: f64,
}

impl Weights {
    pub fn uniform(w: f64) -> Self {
        Self { u1d: w, u2d: w, u1u: w, u2u: w, center_flow: w, edge_flow: w }
    }

    fn all(&self) -> [f64; 6] {
        [self.u1d, self.u2d, self.u1u, self.u2u, self.center_flow, self.edge_flow]
    }
}

/// Edge-user rate targets (bit/s/Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRates {
    pub downlink: f64,
    pub uplink: f64,
}

/// Idealisations that reduce the closed forms to their simplified versions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Simplifications {
    /// Treat the SIC error factor as zero.
    pub perfect_sic: bool,
    /// Drop the RIS cascades into the cell-center users' own links.
    pub no_ris_to_center: bool,
    /// Use the configured drops instead of random positions.
    pub fixed_locations: bool,
    /// Remove residual and reflected self-interference at the BS.
    pub perfect_si: bool,
}

impl Simplifications {
    pub fn all() -> Self {
        Self { perfect_sic: true, no_ris_to_center: true, fixed_locations: true, perfect_si: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    NomaPair,
    Bidirectional,
}

/// Everything that describes one deployment, independent of power choices.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub geometry: CellGeometry,
    pub n_elements: usize,
    pub kappa: RicianFactors,
    pub angles: GeometryAngles,
    pub noise: NoisePowers,
    /// SIC error factor in `[0, 1]`.
    pub sic_error: f64,
    pub self_interference: SelfInterference,
    pub weights: Weights,
    pub targets: TargetRates,
    pub scenario: Scenario,
    pub simplifications: Simplifications,
    /// Drops used when `simplifications.fixed_locations` is set.
    pub fixed_drops: UserDrops,
    /// Gauss-Legendre nodes of the fixed-point-to-disk expectation.
    pub quadrature_nodes: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let geometry = CellGeometry { center_radius: 50.0, edge_radius: 30.0, bs_ris_distance: 80.0, exponent: 2.7 };
        Self {
            geometry,
            n_elements: 20,
            kappa: RicianFactors::uniform(3.0),
            angles: GeometryAngles::default(),
            noise: NoisePowers::uniform(1.0),
            sic_error: 0.0,
            self_interference: SelfInterference { beta: 0.001, lambda: 0.1 },
            weights: Weights::uniform(0.8),
            targets: TargetRates { downlink: 1.0, uplink: 1.0 },
            scenario: Scenario::NomaPair,
            simplifications: Simplifications::default(),
            fixed_drops: default_drops(),
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
        }
    }
}

fn default_drops() -> UserDrops {
    let at = |radius: f64, angle: f64, region: Region| UserPosition { radius, angle, region };
    UserDrops {
        u1d: at(25.0, 0.5 * PI, Region::Center),
        u2d: at(15.0, PI / 3.0, Region::Edge),
        u1u: at(25.0, 1.5 * PI, Region::Center),
        u2u: at(15.0, 5.0 * PI / 3.0, Region::Edge),
    }
}

impl SystemConfig {
    /// Collects every violated rule instead of stopping at the first.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if let Err(e) = self.geometry.validate() {
            errs.push(e.to_string());
        }
        if self.n_elements == 0 {
            errs.push("element count must be at least 1".into());
        }
        if self.kappa.all().iter().any(|k| !(*k >= 0.0) || !k.is_finite()) {
            errs.push("Rician factors must be finite and non-negative".into());
        }
        if !(self.angles.spacing > 0.0) {
            errs.push("element spacing must be positive".into());
        }
        let a = &self.angles;
        let dirs = [a.bs_ris, a.ris_u1d, a.ris_u2d, a.ris_u1u, a.ris_u2u];
        if dirs.iter().any(|d| !d.azimuth.is_finite() || !d.elevation.is_finite()) {
            errs.push("angles must be finite".into());
        }
        if [self.noise.u1d, self.noise.u2d, self.noise.bs].iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            errs.push("noise powers must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.sic_error) {
            errs.push(format!("SIC error factor must lie in [0, 1] (got {})", self.sic_error));
        }
        if !(self.self_interference.beta >= 0.0) {
            errs.push("self-interference beta must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.self_interference.lambda) {
            errs.push("self-interference lambda must lie in [0, 1]".into());
        }
        if self.weights.all().iter().any(|w| !(*w >= 0.0)) {
            errs.push("weights must be non-negative".into());
        }
        if !(self.targets.downlink >= 0.0 && self.targets.uplink >= 0.0) {
            errs.push("target rates must be non-negative".into());
        }
        if self.quadrature_nodes < 8 {
            errs.push("quadrature needs at least 8 nodes".into());
        }
        let d = &self.fixed_drops;
        for (name, p) in [("u1d", d.u1d), ("u2d", d.u2d), ("u1u", d.u1u), ("u2u", d.u2u)] {
            let limit = self.geometry.region_radius(p.region);
            if !(p.radius >= 0.0 && p.radius <= limit) {
                errs.push(format!("fixed position of {name} lies outside its disk"));
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.validation_errors();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Argument(errs.join("; ")))
        }
    }

    /// SIC error factor after applying the simplification switches.
    pub fn effective_sic_error(&self) -> f64 {
        if self.simplifications.perfect_sic {
            0.0
        } else {
            self.sic_error
        }
    }

    /// Residual self-interference variance for BS power `bs_power`.
    pub fn residual_si(&self, bs_power: f64) -> f64 {
        if self.simplifications.perfect_si {
            0.0
        } else {
            self.self_interference.variance(bs_power)
        }
    }

    /// Whether the BS hears its own signal through the RIS.
    pub fn self_reflection(&self) -> bool {
        !self.simplifications.perfect_si
    }
}

/// Transmit powers (W) of the four links plus the budget they were drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub total: f64,
    pub p_b1: f64,
    pub p_b2: f64,
    pub p_u1u: f64,
    pub p_u2u: f64,
}

impl PowerConfig {
    pub fn new(total: f64, p_b1: f64, p_b2: f64, p_u1u: f64, p_u2u: f64) -> Result<Self> {
        let p = Self { total, p_b1, p_b2, p_u1u, p_u2u };
        if [total, p_b1, p_b2, p_u1u, p_u2u].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Argument(format!("powers must be finite and non-negative: {p:?}")));
        }
        Ok(p)
    }

    /// `P_b = tau P_t` split `alpha1 : 1 - alpha1` between the DL users and
    /// `P_u = (1 - tau) P_t` split `ul_share_u1 : 1 - ul_share_u1` between the
    /// UL users.
    pub fn from_split(total: f64, tau: f64, alpha1: f64, ul_share_u1: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Argument(format!("tau must lie in (0, 1] (got {tau})")));
        }
        if !(0.0..0.5).contains(&alpha1) {
            return Err(Error::Argument(format!(
                "DL coefficients must satisfy alpha1 < alpha2 (got alpha1 = {alpha1})"
            )));
        }
        if !(0.0..=1.0).contains(&ul_share_u1) {
            return Err(Error::Argument(format!("UL share must lie in [0, 1] (got {ul_share_u1})")));
        }
        let bs = tau * total;
        let ue = total - bs;
        Self::new(total, alpha1 * bs, (1.0 - alpha1) * bs, ul_share_u1 * ue, (1.0 - ul_share_u1) * ue)
    }

    pub fn bs(&self) -> f64 {
        self.p_b1 + self.p_b2
    }

    pub fn users(&self) -> f64 {
        self.p_u1u + self.p_u2u
    }

    pub fn sum(&self) -> f64 {
        self.bs() + self.users()
    }

    /// Fraction of the budget spent at the BS.
    pub fn tau(&self) -> f64 {
        if self.total > 0.0 {
            self.bs() / self.total
        } else {
            0.0
        }
    }

    /// Every power multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            total: self.total * k,
            p_b1: self.p_b1 * k,
            p_b2: self.p_b2 * k,
            p_u1u: self.p_u1u * k,
            p_u2u: self.p_u2u * k,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
