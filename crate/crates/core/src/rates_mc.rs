//! Instantaneous SINRs and the Monte-Carlo ergodic-rate estimator.
//!
//! Each trial draws fresh user positions, fading and a residual
//! self-interference sample. Trial `i` uses its own ChaCha stream keyed by
//! `(seed, i)`, and the reduction runs in trial order, so results do not
//! depend on the number of worker threads.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{cascade, complex_gaussian, draw_realization, ChannelRealization, LosVectors, Side, StarRisState};
use crate::config::{PowerConfig, Scenario, SystemConfig, Weights};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    ClosedForm,
    MonteCarlo,
}

/// Ergodic rate (bit/s/Hz) of each user in the NOMA pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UserRates {
    pub u1d: f64,
    pub u2d: f64,
    pub u1u: f64,
    pub u2u: f64,
}

/// Rates that only matter for SIC feasibility and the bidirectional flows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowRates {
    /// Rate at which the DL center user decodes the DL edge user's message.
    pub u1d_decodes_u2d: f64,
    /// Combined rate at the DL center user (direct UL-edge signal plus relay).
    pub center_combined: f64,
    /// Combined rate at the DL edge user (direct UL-center signal plus relay).
    pub edge_combined: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateErrors {
    pub rates: UserRates,
    pub flows: FlowRates,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub scenario: Scenario,
    pub estimator: Estimator,
    pub rates: UserRates,
    pub flows: Option<FlowRates>,
    /// Standard errors of the Monte-Carlo means.
    pub stderr: Option<RateErrors>,
    pub trials: usize,
    pub weighted_sum: f64,
}

impl RateReport {
    /// End-to-end rate of the UL-edge to DL-center flow.
    pub fn center_flow(&self) -> Option<f64> {
        self.flows.map(|f| self.rates.u2u.min(f.center_combined))
    }

    /// End-to-end rate of the UL-center to DL-edge flow.
    pub fn edge_flow(&self) -> Option<f64> {
        self.flows.map(|f| self.rates.u1u.min(f.edge_combined))
    }
}

/// Objective value for `scenario`: the weighted per-user sum for the NOMA
/// pair, the weighted combined rates for the bidirectional case.
pub fn weighted_sum(scenario: Scenario, weights: &Weights, rates: &UserRates, flows: Option<&FlowRates>) -> f64 {
    match (scenario, flows) {
        (Scenario::Bidirectional, Some(f)) => {
            weights.center_flow * f.center_combined + weights.edge_flow * f.edge_combined
        }
        _ => weights.u1d * rates.u1d + weights.u2d * rates.u2d + weights.u1u * rates.u1u + weights.u2u * rates.u2u,
    }
}

/// NOMA is worth using when `gamma_noma > sqrt(1 + gamma_oma) - 1`.
pub fn noma_beneficial(gamma_noma: f64, gamma_oma: f64) -> bool {
    gamma_noma > (1.0 + gamma_oma).sqrt() - 1.0
}

/// Squared-magnitude channel gains of one realization, path loss included.
///
/// Names follow the receiving user: `a_*` is the desired link, `c_*`/`d_*`
/// the interference from the UL center/edge user, `b_*` the other UL user
/// at the BS and `self_loop` the BS-RIS-BS reflection of the DL signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantGains {
    pub a_u1d: f64,
    pub c_u1d: f64,
    pub d_u1d: f64,
    pub a_u2d: f64,
    pub c_u2d: f64,
    pub d_u2d: f64,
    pub a_u1u: f64,
    pub b_u1u: f64,
    pub a_u2u: f64,
    pub b_u2u: f64,
    pub self_loop: f64,
}

impl InstantGains {
    pub fn new(config: &SystemConfig, ch: &ChannelRealization, ris: &StarRisState) -> Self {
        let ct = ris.coefficients(Side::Transmit);
        let cr = ris.coefficients(Side::Reflect);
        Self::from_coefficients(config, ch, &ct, &cr)
    }

    fn from_coefficients(config: &SystemConfig, ch: &ChannelRealization, ct: &[Complex64], cr: &[Complex64]) -> Self {
        let g = &ch.gains;
        let ris_center = !config.simplifications.no_ris_to_center;
        let zero = Complex64::new(0.0, 0.0);
        let via_ris = |scale: f64, out: &[Complex64], c: &[Complex64], inp: &[Complex64], on: bool| {
            if on {
                cascade(out, c, inp) * scale.sqrt()
            } else {
                zero
            }
        };

        let a_u1d = (ch.h_b_u1d * g.b_u1d.sqrt() + via_ris(g.br * g.r_u1d, &ch.g_r_u1d, ct, &ch.g_br, ris_center)).norm_sqr();
        let c_u1d = (ch.h_u1d_u1u * g.u1d_u1u.sqrt()
            + via_ris(g.r_u1u * g.r_u1d, &ch.g_r_u1d, ct, &ch.g_r_u1u, ris_center))
        .norm_sqr();
        let d_u1d = g.r_u2u * g.r_u1d * cascade(&ch.g_r_u1d, ct, &ch.g_r_u2u).norm_sqr();

        let a_u2d = g.br * g.r_u2d * cascade(&ch.g_r_u2d, cr, &ch.g_br).norm_sqr();
        let c_u2d = g.r_u2d * g.r_u1u * cascade(&ch.g_r_u2d, cr, &ch.g_r_u1u).norm_sqr();
        let d_u2d = g.r_u2d * g.r_u2u * cascade(&ch.g_r_u2d, cr, &ch.g_r_u2u).norm_sqr();

        let a_u1u = (ch.h_b_u1u * g.b_u1u.sqrt() + via_ris(g.br * g.r_u1u, &ch.g_br, ct, &ch.g_r_u1u, ris_center)).norm_sqr();
        let b_u1u = g.br * g.r_u2u * cascade(&ch.g_br, ct, &ch.g_r_u2u).norm_sqr();
        let self_loop = if config.self_reflection() {
            let s: Complex64 = ch.g_br.iter().zip(ct).map(|(h, c)| c * h.norm_sqr()).sum();
            g.br * g.br * s.norm_sqr()
        } else {
            0.0
        };

        Self { a_u1d, c_u1d, d_u1d, a_u2d, c_u2d, d_u2d, a_u1u, b_u1u, a_u2u: b_u1u, b_u2u: a_u1u, self_loop }
    }
}

/// Interference-free value is returned as 0 when the desired gain is 0.
#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn sinr_dl_center(config: &SystemConfig, g: &InstantGains, pw: &PowerConfig) -> f64 {
    let xi = config.effective_sic_error();
    ratio(
        pw.p_b1 * g.a_u1d,
        xi * pw.p_b2 * g.a_u1d + pw.p_u1u * g.c_u1d + pw.p_u2u * g.d_u1d + config.noise.u1d,
    )
}

pub fn sinr_dl_edge(config: &SystemConfig, g: &InstantGains, pw: &PowerConfig) -> f64 {
    ratio(
        pw.p_b2 * g.a_u2d,
        pw.p_b1 * g.a_u2d + pw.p_u1u * g.c_u2d + pw.p_u2u * g.d_u2d + config.noise.u2d,
    )
}

/// `si_draw` is the instantaneous residual self-interference power `|s|^2`.
pub fn sinr_ul_center(config: &SystemConfig, g: &InstantGains, pw: &PowerConfig, si_draw: f64) -> f64 {
    ratio(
        pw.p_u1u * g.a_u1u,
        pw.p_u2u * g.b_u1u + pw.bs() * g.self_loop + si_draw + config.noise.bs,
    )
}

pub fn sinr_ul_edge(config: &SystemConfig, g: &InstantGains, pw: &PowerConfig, si_draw: f64) -> f64 {
    let xi = config.effective_sic_error();
    ratio(
        pw.p_u2u * g.a_u2u,
        xi * pw.p_u1u * g.b_u2u + pw.bs() * g.self_loop + si_draw + config.noise.bs,
    )
}

/// Rate at which the DL center user decodes the DL edge user's message.
pub fn rate_strong_decodes_weak(config: &SystemConfig, g: &InstantGains, pw: &PowerConfig) -> f64 {
    let s = ratio(
        pw.p_b2 * g.a_u1d,
        pw.p_b1 * g.a_u1d + pw.p_u1u * g.c_u1d + pw.p_u2u * g.d_u1d + config.noise.u1d,
    );
    (1.0 + s).log2()
}

/// Combined (maximum-ratio) rates at the DL center and DL edge users in the
/// bidirectional scenario, before taking the minimum with the UL hop.
pub fn combined_rates(config: &SystemConfig, g: &InstantGains, pw: &PowerConfig) -> (f64, f64) {
    let xi = config.effective_sic_error();
    let n1 = config.noise.u1d;
    let n2 = config.noise.u2d;
    let center = ratio(pw.p_u2u * g.d_u1d, pw.p_u1u * g.c_u1d + n1)
        + ratio(pw.p_b1 * g.a_u1d, xi * pw.p_b2 * g.a_u1d + pw.p_u1u * g.c_u1d + n1);
    let edge = ratio(pw.p_u1u * g.c_u2d, pw.p_u2u * g.d_u2d + n2)
        + ratio(pw.p_b2 * g.a_u2d, pw.p_b1 * g.a_u2d + pw.p_u2u * g.d_u2d + n2);
    ((1.0 + center).log2(), (1.0 + edge).log2())
}

/// Bidirectional end-to-end rates `(R_c, R_e)` of one realization: each
/// combined DL rate capped by the rate of its UL hop.
pub fn rates_bidirectional(config: &SystemConfig, g: &InstantGains, pw: &PowerConfig, si_draw: f64) -> (f64, f64) {
    let (center, edge) = combined_rates(config, g, pw);
    let ul_edge = (1.0 + sinr_ul_edge(config, g, pw, si_draw)).log2();
    let ul_center = (1.0 + sinr_ul_center(config, g, pw, si_draw)).log2();
    (ul_edge.min(center), ul_center.min(edge))
}

const SAMPLE_LEN: usize = 7;

fn trial(config: &SystemConfig, los: &LosVectors, ct: &[Complex64], cr: &[Complex64], pw: &PowerConfig, seed: u64, index: u64) -> [f64; SAMPLE_LEN] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let ch = draw_realization(config, los, &mut rng);
    let si_draw = config.residual_si(pw.bs()) * complex_gaussian(&mut rng).norm_sqr();
    let g = InstantGains::from_coefficients(config, &ch, ct, cr);
    let rate = |s: f64| (1.0 + s).log2();
    let (center, edge) = combined_rates(config, &g, pw);
    [
        rate(sinr_dl_center(config, &g, pw)),
        rate(sinr_dl_edge(config, &g, pw)),
        rate(sinr_ul_center(config, &g, pw, si_draw)),
        rate(sinr_ul_edge(config, &g, pw, si_draw)),
        rate_strong_decodes_weak(config, &g, pw),
        center,
        edge,
    ]
}

/// Monte-Carlo ergodic rates over `trials` independent realizations.
pub fn ergodic_rate_mc(config: &SystemConfig, ris: &StarRisState, pw: &PowerConfig, trials: usize, seed: u64) -> Result<RateReport> {
    if trials == 0 {
        return Err(Error::Argument("Monte-Carlo needs at least one trial".into()));
    }
    config.validate()?;
    if ris.n_elements() != config.n_elements {
        return Err(Error::Argument(format!(
            "surface has {} elements, configuration expects {}",
            ris.n_elements(),
            config.n_elements
        )));
    }
    let los = LosVectors::new(config.n_elements, &config.angles);
    let ct = ris.coefficients(Side::Transmit);
    let cr = ris.coefficients(Side::Reflect);
    let samples: Vec<[f64; SAMPLE_LEN]> = (0..trials as u64)
        .into_par_iter()
        .map(|i| trial(config, &los, &ct, &cr, pw, seed, i))
        .collect();

    let mut sum = [0.0; SAMPLE_LEN];
    let mut sum_sq = [0.0; SAMPLE_LEN];
    for s in &samples {
        for k in 0..SAMPLE_LEN {
            sum[k] += s[k];
            sum_sq[k] += s[k] * s[k];
        }
    }
    let n = trials as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let se: Vec<f64> = (0..SAMPLE_LEN)
        .map(|k| {
            if trials < 2 {
                0.0
            } else {
                let var = ((sum_sq[k] - n * mean[k] * mean[k]) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            }
        })
        .collect();

    let pack = |v: &[f64]| {
        (
            UserRates { u1d: v[0], u2d: v[1], u1u: v[2], u2u: v[3] },
            FlowRates { u1d_decodes_u2d: v[4], center_combined: v[5], edge_combined: v[6] },
        )
    };
    let (rates, flows) = pack(&mean);
    let (err_rates, err_flows) = pack(&se);
    Ok(RateReport {
        scenario: config.scenario,
        estimator: Estimator::MonteCarlo,
        rates,
        flows: Some(flows),
        stderr: Some(RateErrors { rates: err_rates, flows: err_flows }),
        trials,
        weighted_sum: weighted_sum(config.scenario, &config.weights, &rates, Some(&flows)),
    })
}
