//! Closed-form ergodic rates.
//!
//! Every rate has the form `log2(1 + P x1 / (... + p y1 + p y2 + noise))`
//! where `x1`, `y1`, `y2` are expectations of the corresponding instantaneous
//! gains over fading and user positions. Those expectations factor into a
//! large-scale part ([`LinkGains`]) and a small-scale RIS part
//! `varpi * xi + varpi_hat` per cascade.

use num_complex::Complex64;

use crate::channel::{LinkGains, LosVectors, Side, StarRisState};
use crate::config::{PowerConfig, Scenario, SystemConfig};
use crate::error::{Error, Result};
use crate::geometry::{exp_pathloss_disk, exp_pathloss_fixed_point_to_disk, exp_pathloss_two_random_points, pathloss};
use crate::rates_mc::{weighted_sum, Estimator, FlowRates, RateReport, UserRates};

/// Number of LoS cascades tracked (`xi_1` .. `xi_9`).
pub const N_CASCADES: usize = 9;

/// `(out, in, side)` of each cascade, indices into [`LosVectors`] order
/// `br, u1d, u2d, u1u, u2u`.
const CASCADES: [(usize, usize, Side); N_CASCADES] = [
    (1, 0, Side::Transmit), // u1d <- BS
    (1, 3, Side::Transmit), // u1d <- u1u
    (1, 4, Side::Transmit), // u1d <- u2u
    (2, 0, Side::Reflect),  // u2d <- BS
    (2, 3, Side::Reflect),  // u2d <- u1u
    (2, 4, Side::Reflect),  // u2d <- u2u
    (0, 3, Side::Transmit), // BS <- u1u
    (0, 4, Side::Transmit), // BS <- u2u
    (0, 0, Side::Transmit), // BS <- BS (conjugated input)
];

/// All deterministic quantities entering the closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    /// Expected path loss from the RIS to a cell-center user.
    pub upsilon: f64,
    /// Expected path loss between the two cell-center users.
    pub two_point: f64,
    /// Expected path loss from the BS to a cell-center user.
    pub center_disk: f64,
    /// Expected path loss from the RIS to a cell-edge user.
    pub edge_disk: f64,
    pub varpi: [f64; N_CASCADES],
    pub varpi_hat: [f64; N_CASCADES],
    /// Squared LoS cascade magnitudes.
    pub xi: [f64; N_CASCADES],
    /// LoS BS-RIS-BS cascade.
    pub zeta: Complex64,
    pub sum_rho_sq_t: f64,
    pub sum_rho_sq_r: f64,
    /// `sum_{n1 != n2} c_{n1} conj(c_{n2})` on the transmit side.
    pub cross_phase: Complex64,
}

impl MomentSet {
    /// Second moment `varpi_i xi_i + varpi_hat_i` of cascade `i` (zero based).
    pub fn cascade_power(&self, i: usize) -> f64 {
        self.varpi[i] * self.xi[i] + self.varpi_hat[i]
    }
}

/// `(x1, y1, y2)` of one user.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UserTerms {
    pub x1: f64,
    pub y1: f64,
    pub y2: f64,
}

/// Power-independent closed-form terms of every user.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CfTerms {
    pub u1d: UserTerms,
    pub u2d: UserTerms,
    pub u1u: UserTerms,
    pub u2u: UserTerms,
}

/// Averaged link gains: disk expectations for user links, exact path loss
/// for the BS-RIS link.
pub fn expected_link_gains(config: &SystemConfig) -> Result<LinkGains> {
    let g = &config.geometry;
    g.validate()?;
    let m = g.exponent;
    let center = exp_pathloss_disk(g.center_radius, m)?;
    let edge = exp_pathloss_disk(g.edge_radius, m)?;
    let upsilon = exp_pathloss_fixed_point_to_disk(g.clearance(), g.center_radius, m, config.quadrature_nodes)?;
    let two_point = exp_pathloss_two_random_points(g.center_radius, m)?;
    Ok(LinkGains {
        br: pathloss(g.bs_ris_distance, m),
        b_u1d: center,
        b_u1u: center,
        r_u1d: upsilon,
        r_u1u: upsilon,
        r_u2d: edge,
        r_u2u: edge,
        u1d_u1u: two_point,
    })
}

/// Configuration-level data reused across many surface states.
#[derive(Debug, Clone)]
pub struct CfModel {
    config: SystemConfig,
    gains: LinkGains,
    /// Elementwise LoS products `out[n] * in[n]` of each cascade.
    los_products: Vec<Vec<Complex64>>,
    kappa_frac: [f64; 5],
}

impl CfModel {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        let gains = if config.simplifications.fixed_locations {
            config.fixed_drops.link_gains(&config.geometry)
        } else {
            expected_link_gains(config)?
        };
        let los = LosVectors::new(config.n_elements, &config.angles);
        let vecs = [&los.br, &los.u1d, &los.u2d, &los.u1u, &los.u2u];
        let los_products = CASCADES
            .iter()
            .enumerate()
            .map(|(i, &(o, inp, _))| {
                vecs[o]
                    .iter()
                    .zip(vecs[inp].iter())
                    .map(|(a, b)| if i == 8 { a * b.conj() } else { a * b })
                    .collect()
            })
            .collect();
        let k = &config.kappa;
        let frac = |x: f64| x / (x + 1.0);
        Ok(Self {
            config: config.clone(),
            gains,
            los_products,
            kappa_frac: [frac(k.bs_ris), frac(k.ris_u1d), frac(k.ris_u2d), frac(k.ris_u1u), frac(k.ris_u2u)],
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn gains(&self) -> &LinkGains {
        &self.gains
    }

    fn check_state(&self, ris: &StarRisState) -> Result<()> {
        if ris.n_elements() != self.config.n_elements {
            return Err(Error::Argument(format!(
                "surface has {} elements, configuration expects {}",
                ris.n_elements(),
                self.config.n_elements
            )));
        }
        Ok(())
    }

    pub fn moments(&self, ris: &StarRisState) -> Result<MomentSet> {
        self.check_state(ris)?;
        let ct = ris.coefficients(Side::Transmit);
        let cr = ris.coefficients(Side::Reflect);
        let s_t = ris.sum_rho_sq(Side::Transmit);
        let s_r = ris.sum_rho_sq(Side::Reflect);

        let mut xi = [0.0; N_CASCADES];
        let mut varpi = [0.0; N_CASCADES];
        let mut varpi_hat = [0.0; N_CASCADES];
        let mut zeta = Complex64::new(0.0, 0.0);
        for (i, &(o, inp, side)) in CASCADES.iter().enumerate() {
            let c = if side == Side::Transmit { &ct } else { &cr };
            let s = if side == Side::Transmit { s_t } else { s_r };
            let v: Complex64 = self.los_products[i].iter().zip(c).map(|(w, c)| w * c).sum();
            xi[i] = v.norm_sqr();
            if i == 8 {
                zeta = v;
            }
            let (fx, fy) = (self.kappa_frac[o], self.kappa_frac[inp]);
            varpi[i] = fx * fy;
            varpi_hat[i] = s * (fx * (1.0 - fy) + fy * (1.0 - fx) + (1.0 - fx) * (1.0 - fy));
        }
        let total: Complex64 = ct.iter().sum();
        let cross_phase = Complex64::new(total.norm_sqr() - s_t, 0.0);

        let g = &self.gains;
        Ok(MomentSet {
            upsilon: g.r_u1d,
            two_point: g.u1d_u1u,
            center_disk: g.b_u1d,
            edge_disk: g.r_u2d,
            varpi,
            varpi_hat,
            xi,
            zeta,
            sum_rho_sq_t: s_t,
            sum_rho_sq_r: s_r,
            cross_phase,
        })
    }

    /// Second moment of the BS-RIS-BS loop (without path loss).
    pub fn self_loop_moment(&self, m: &MomentSet) -> f64 {
        let a2 = self.kappa_frac[0];
        let b2 = 1.0 - a2;
        let s = m.sum_rho_sq_t;
        // unit-modulus LoS makes zeta equal to the plain coefficient sum
        let assembled = Complex64::new(a2 * a2 * m.xi[8] + 2.0 * a2 * b2 * s, 0.0)
            + (Complex64::new(2.0 * s, 0.0) + m.cross_phase) * (b2 * b2)
            + m.zeta * m.zeta.conj() * (2.0 * a2 * b2);
        debug_assert!(assembled.im.abs() <= 1e-9 * assembled.norm().max(1e-300));
        assembled.re
    }

    pub fn terms(&self, ris: &StarRisState) -> Result<CfTerms> {
        let m = self.moments(ris)?;
        Ok(self.terms_from_moments(&m))
    }

    pub fn terms_from_moments(&self, m: &MomentSet) -> CfTerms {
        let g = &self.gains;
        let ris_center = if self.config.simplifications.no_ris_to_center { 0.0 } else { 1.0 };
        let e = |i: usize| m.cascade_power(i);

        let u1d = UserTerms {
            x1: g.b_u1d + ris_center * g.br * g.r_u1d * e(0),
            y1: g.u1d_u1u + ris_center * g.r_u1u * g.r_u1d * e(1),
            y2: g.r_u2u * g.r_u1d * e(2),
        };
        let u2d = UserTerms {
            x1: g.br * g.r_u2d * e(3),
            y1: g.r_u2d * g.r_u1u * e(4),
            y2: g.r_u2d * g.r_u2u * e(5),
        };
        let self_loop = if self.config.self_reflection() { g.br * g.br * self.self_loop_moment(m) } else { 0.0 };
        let u1u = UserTerms {
            x1: g.b_u1u + ris_center * g.br * g.r_u1u * e(6),
            y1: g.br * g.r_u2u * e(7),
            y2: self_loop,
        };
        let u2u = UserTerms { x1: u1u.y1, y1: u1u.x1, y2: u1u.y2 };
        CfTerms { u1d, u2d, u1u, u2u }
    }

    pub fn report(&self, ris: &StarRisState, pw: &PowerConfig) -> Result<RateReport> {
        let t = self.terms(ris)?;
        Ok(report_from_terms(&self.config, &t, pw))
    }

    /// Objective value (weighted sum for the configured scenario).
    pub fn objective(&self, ris: &StarRisState, pw: &PowerConfig) -> Result<f64> {
        Ok(self.report(ris, pw)?.weighted_sum)
    }
}

#[inline]
fn log_rate(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        (1.0 + num / den).log2()
    }
}

pub fn rate_dl_center(config: &SystemConfig, t: &CfTerms, pw: &PowerConfig) -> f64 {
    let xi = config.effective_sic_error();
    let u = &t.u1d;
    log_rate(pw.p_b1 * u.x1, xi * pw.p_b2 * u.x1 + pw.p_u1u * u.y1 + pw.p_u2u * u.y2 + config.noise.u1d)
}

pub fn rate_dl_edge(config: &SystemConfig, t: &CfTerms, pw: &PowerConfig) -> f64 {
    let u = &t.u2d;
    log_rate(pw.p_b2 * u.x1, pw.p_b1 * u.x1 + pw.p_u1u * u.y1 + pw.p_u2u * u.y2 + config.noise.u2d)
}

pub fn rate_ul_center(config: &SystemConfig, t: &CfTerms, pw: &PowerConfig) -> f64 {
    let u = &t.u1u;
    let v = config.residual_si(pw.bs());
    log_rate(pw.p_u1u * u.x1, pw.p_u2u * u.y1 + pw.bs() * u.y2 + v + config.noise.bs)
}

pub fn rate_ul_edge(config: &SystemConfig, t: &CfTerms, pw: &PowerConfig) -> f64 {
    let xi = config.effective_sic_error();
    let u = &t.u2u;
    let v = config.residual_si(pw.bs());
    log_rate(pw.p_u2u * u.x1, xi * pw.p_u1u * u.y1 + pw.bs() * u.y2 + v + config.noise.bs)
}

pub fn rate_strong_decodes_weak(config: &SystemConfig, t: &CfTerms, pw: &PowerConfig) -> f64 {
    let u = &t.u1d;
    log_rate(pw.p_b2 * u.x1, pw.p_b1 * u.x1 + pw.p_u1u * u.y1 + pw.p_u2u * u.y2 + config.noise.u1d)
}

/// Combined DL rates `(R_uc, R_ue)` of the bidirectional flows.
pub fn rates_combined(config: &SystemConfig, t: &CfTerms, pw: &PowerConfig) -> (f64, f64) {
    let xi = config.effective_sic_error();
    let (n1, n2) = (config.noise.u1d, config.noise.u2d);
    let c = &t.u1d;
    let e = &t.u2d;
    let frac = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let center = frac(pw.p_u2u * c.y2, pw.p_u1u * c.y1 + n1)
        + frac(pw.p_b1 * c.x1, xi * pw.p_b2 * c.x1 + pw.p_u1u * c.y1 + n1);
    let edge = frac(pw.p_u1u * e.y1, pw.p_u2u * e.y2 + n2)
        + frac(pw.p_b2 * e.x1, pw.p_b1 * e.x1 + pw.p_u2u * e.y2 + n2);
    ((1.0 + center).log2(), (1.0 + edge).log2())
}

pub fn report_from_terms(config: &SystemConfig, t: &CfTerms, pw: &PowerConfig) -> RateReport {
    let rates = UserRates {
        u1d: rate_dl_center(config, t, pw),
        u2d: rate_dl_edge(config, t, pw),
        u1u: rate_ul_center(config, t, pw),
        u2u: rate_ul_edge(config, t, pw),
    };
    let (center_combined, edge_combined) = rates_combined(config, t, pw);
    let flows = FlowRates { u1d_decodes_u2d: rate_strong_decodes_weak(config, t, pw), center_combined, edge_combined };
    RateReport {
        scenario: config.scenario,
        estimator: Estimator::ClosedForm,
        rates,
        flows: Some(flows),
        stderr: None,
        trials: 0,
        weighted_sum: weighted_sum(config.scenario, &config.weights, &rates, Some(&flows)),
    }
}

pub fn compute_moments(config: &SystemConfig, ris: &StarRisState) -> Result<MomentSet> {
    CfModel::new(config)?.moments(ris)
}

pub fn cf_terms(config: &SystemConfig, ris: &StarRisState) -> Result<CfTerms> {
    CfModel::new(config)?.terms(ris)
}

pub fn cf_rate_dl_center(config: &SystemConfig, ris: &StarRisState, pw: &PowerConfig) -> Result<f64> {
    Ok(rate_dl_center(config, &cf_terms(config, ris)?, pw))
}

pub fn cf_rate_dl_edge(config: &SystemConfig, ris: &StarRisState, pw: &PowerConfig) -> Result<f64> {
    Ok(rate_dl_edge(config, &cf_terms(config, ris)?, pw))
}

pub fn cf_rate_ul_center(config: &SystemConfig, ris: &StarRisState, pw: &PowerConfig) -> Result<f64> {
    Ok(rate_ul_center(config, &cf_terms(config, ris)?, pw))
}

pub fn cf_rate_ul_edge(config: &SystemConfig, ris: &StarRisState, pw: &PowerConfig) -> Result<f64> {
    Ok(rate_ul_edge(config, &cf_terms(config, ris)?, pw))
}

pub fn cf_rate_strong_decodes_weak(config: &SystemConfig, ris: &StarRisState, pw: &PowerConfig) -> Result<f64> {
    Ok(rate_strong_decodes_weak(config, &cf_terms(config, ris)?, pw))
}

/// Bidirectional end-to-end rates `(R_c, R_e)`.
pub fn cf_rates_bidirectional(config: &SystemConfig, ris: &StarRisState, pw: &PowerConfig) -> Result<(f64, f64)> {
    let t = cf_terms(config, ris)?;
    let (uc, ue) = rates_combined(config, &t, pw);
    Ok((rate_ul_edge(config, &t, pw).min(uc), rate_ul_center(config, &t, pw).min(ue)))
}

/// Rates under perfect SIC, no RIS path into the center users' own links,
/// fixed user locations and perfect self-interference cancellation.
///
/// Evaluated from the reduced expressions directly rather than by switching
/// terms off in the general evaluator.
pub fn cf_rates_simplified(config: &SystemConfig, ris: &StarRisState, pw: &PowerConfig) -> Result<RateReport> {
    config.validate()?;
    if ris.n_elements() != config.n_elements {
        return Err(Error::Argument("surface size does not match configuration".into()));
    }
    let l = config.fixed_drops.link_gains(&config.geometry);
    let los = LosVectors::new(config.n_elements, &config.angles);
    let k = &config.kappa;
    let xi = |out: &[Complex64], side: Side, inp: &[Complex64]| {
        crate::channel::star_cascade(out, ris, side, inp).map(|c| c.norm_sqr())
    };
    let pair = |kx: f64, ky: f64, x: f64, s: f64| {
        let (fx, fy) = (kx / (kx + 1.0), ky / (ky + 1.0));
        fx * fy * x + s * (fx / (ky + 1.0) + fy / (kx + 1.0) + 1.0 / ((kx + 1.0) * (ky + 1.0)))
    };
    let s_t = ris.sum_rho_sq(Side::Transmit);
    let s_r = ris.sum_rho_sq(Side::Reflect);
    let xi3 = xi(&los.u1d, Side::Transmit, &los.u2u)?;
    let xi4 = xi(&los.u2d, Side::Reflect, &los.br)?;
    let xi5 = xi(&los.u2d, Side::Reflect, &los.u1u)?;
    let xi6 = xi(&los.u2d, Side::Reflect, &los.u2u)?;
    let xi8 = xi(&los.br, Side::Transmit, &los.u2u)?;

    let y_u1d = pw.p_u2u * l.r_u2u * l.r_u1d * pair(k.ris_u1d, k.ris_u2u, xi3, s_t);
    let u1d = (1.0 + pw.p_b1 * l.b_u1d / (pw.p_u1u * l.u1d_u1u + y_u1d + config.noise.u1d)).log2();

    let x_u2d = l.br * l.r_u2d * pair(k.ris_u2d, k.bs_ris, xi4, s_r);
    let y2_u2d = pw.p_u1u * l.r_u2d * l.r_u1u * pair(k.ris_u2d, k.ris_u1u, xi5, s_r);
    let y3_u2d = pw.p_u2u * l.r_u2d * l.r_u2u * pair(k.ris_u2d, k.ris_u2u, xi6, s_r);
    let u2d = log_rate(pw.p_b2 * x_u2d, pw.p_b1 * x_u2d + y2_u2d + y3_u2d + config.noise.u2d);

    let y2_u1u = pw.p_u2u * l.br * l.r_u2u * pair(k.bs_ris, k.ris_u2u, xi8, s_t);
    let u1u = log_rate(pw.p_u1u * l.b_u1u, y2_u1u + config.noise.bs);

    let x_u2u = pw.p_u2u
        * l.br
        * l.r_u2u
        * (k.ris_u2u * k.bs_ris * xi8 + s_t * (k.ris_u2u + k.bs_ris + 1.0));
    let u2u = log_rate(x_u2u, config.noise.bs * (k.ris_u2u + 1.0) * (k.bs_ris + 1.0));

    let rates = UserRates { u1d, u2d, u1u, u2u };
    Ok(RateReport {
        scenario: Scenario::NomaPair,
        estimator: Estimator::ClosedForm,
        rates,
        flows: None,
        stderr: None,
        trials: 0,
        weighted_sum: weighted_sum(Scenario::NomaPair, &config.weights, &rates, None),
    })
}
