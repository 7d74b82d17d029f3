//! Surface design and power allocation.
//!
//! [`pgam`] runs projected gradient ascent on the closed-form objective over
//! phases and amplitudes. [`suboptimal_phases`] aligns each side to one
//! cascade. [`power_allocation_closed_form`] meets both edge-user targets and
//! the SIC condition with equality and gives the rest of the budget to the UL
//! center user.

use num_complex::Complex64;

use crate::channel::{Direction, GeometryAngles, StarRisState, ENERGY_SPLIT_TOL};
use crate::config::{PowerConfig, Scenario, SystemConfig};
use crate::error::{Error, Result};
use crate::rates_cf::{report_from_terms, CfModel, CfTerms};
use crate::rates_mc::{noma_beneficial, RateReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearch {
    /// Halve the step until the objective does not decrease.
    Backtracking,
    /// Always take the nominal step.
    FixedStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgamOptions {
    /// Nominal step size.
    pub step: f64,
    /// Ratio of the amplitude step to the phase step.
    pub amplitude_scale: f64,
    /// Stop once an iteration improves the objective by less than this.
    pub tolerance: f64,
    pub max_iters: usize,
    pub line_search: LineSearch,
    /// Central-difference step for phases (rad) and amplitudes.
    pub fd_step: f64,
}

impl Default for PgamOptions {
    fn default() -> Self {
        Self {
            step: 0.5,
            amplitude_scale: 1.0,
            tolerance: 1e-6,
            max_iters: 200,
            line_search: LineSearch::Backtracking,
            fd_step: 1e-6,
        }
    }
}

/// Halvings tried before a backtracking iteration gives up.
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub state: StarRisState,
    pub power: PowerConfig,
    /// Objective at the initial point followed by one value per iteration.
    pub trace: Vec<f64>,
    pub termination: Termination,
    pub constraints: ConstraintReport,
}

impl OptimizationResult {
    pub fn objective(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial value")
    }
}

/// Maps each entry to the unit circle; zero maps to phase 0.
pub fn project_phases(theta_raw: &[Complex64]) -> Vec<f64> {
    theta_raw
        .iter()
        .map(|t| if t.norm() == 0.0 { 0.0 } else { t.arg().rem_euclid(2.0 * std::f64::consts::PI) })
        .collect()
}

/// Euclidean projection of each `(t, r)` pair onto `{t + r = 1, t, r >= 0}`.
pub fn project_amplitudes(rho_t_raw: &[f64], rho_r_raw: &[f64]) -> (Vec<f64>, Vec<f64>) {
    rho_t_raw
        .iter()
        .zip(rho_r_raw)
        .map(|(&t, &r)| {
            let pt = (0.5 * (t - r + 1.0)).clamp(0.0, 1.0);
            (pt, 1.0 - pt)
        })
        .unzip()
}

/// Phases that co-phase the cascade `out <- RIS <- in`.
///
/// `incoming` is the arrival direction of the input link and `outgoing` the
/// departure direction of the output link; a user-side input is passed
/// reversed.
pub fn align_phases(n_elements: usize, spacing: f64, incoming: Direction, outgoing: Direction) -> Vec<f64> {
    let t = incoming.horizontal() - outgoing.horizontal();
    let l = incoming.vertical() - outgoing.vertical();
    (0..n_elements)
        .map(|n| {
            let (x, y) = crate::channel::element_coordinates(n_elements, n);
            (-2.0 * std::f64::consts::PI * spacing * (x * t + y * l)).rem_euclid(2.0 * std::f64::consts::PI)
        })
        .collect()
}

/// Edge-user alignment: the transmit side is co-phased for the UL edge user
/// into the BS, the reflect side for the BS into the DL edge user.
pub fn suboptimal_phases(angles: &GeometryAngles, n_elements: usize) -> (Vec<f64>, Vec<f64>) {
    let phi_t = align_phases(n_elements, angles.spacing, angles.bs_ris, angles.ris_u2u);
    let phi_r = align_phases(n_elements, angles.spacing, angles.bs_ris, angles.ris_u2d);
    (phi_t, phi_r)
}

pub fn suboptimal_state(config: &SystemConfig, rho_t: f64) -> Result<StarRisState> {
    let (phi_t, phi_r) = suboptimal_phases(&config.angles, config.n_elements);
    StarRisState::with_phases(rho_t, phi_t, phi_r)
}

/// Bidirectional alignment: each side is co-phased either for the relayed
/// BS link or for the direct user-to-user link of the flow it serves,
/// whichever yields the larger SINR term. Ties go to the BS link.
pub fn suboptimal_state_bidirectional(config: &SystemConfig, pw: &PowerConfig, rho_t: f64) -> Result<StarRisState> {
    let a = &config.angles;
    let n = config.n_elements;
    let model = CfModel::new(config)?;
    let xi = config.effective_sic_error();

    let t_bs = align_phases(n, a.spacing, a.bs_ris, a.ris_u1d);
    let t_user = align_phases(n, a.spacing, a.ris_u2u.reversed(), a.ris_u1d);
    let r_bs = align_phases(n, a.spacing, a.bs_ris, a.ris_u2d);
    let r_user = align_phases(n, a.spacing, a.ris_u1u.reversed(), a.ris_u2d);

    let terms = |pt: &[f64], pr: &[f64]| -> Result<CfTerms> {
        model.terms(&StarRisState::with_phases(rho_t, pt.to_vec(), pr.to_vec())?)
    };
    let tb = terms(&t_bs, &r_bs)?;
    let tu = terms(&t_user, &r_user)?;
    let frac = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let n1 = config.noise.u1d;
    let n2 = config.noise.u2d;
    let center_relay = frac(pw.p_b1 * tb.u1d.x1, xi * pw.p_b2 * tb.u1d.x1 + pw.p_u1u * tb.u1d.y1 + n1);
    let center_direct = frac(pw.p_u2u * tu.u1d.y2, pw.p_u1u * tu.u1d.y1 + n1);
    let edge_relay = frac(pw.p_b2 * tb.u2d.x1, pw.p_b1 * tb.u2d.x1 + pw.p_u2u * tb.u2d.y2 + n2);
    let edge_direct = frac(pw.p_u1u * tu.u2d.y1, pw.p_u2u * tu.u2d.y2 + n2);

    let phi_t = if center_direct > center_relay { t_user } else { t_bs };
    let phi_r = if edge_direct > edge_relay { r_user } else { r_bs };
    StarRisState::with_phases(rho_t, phi_t, phi_r)
}

fn objective_at(model: &CfModel, s: &StarRisState, pw: &PowerConfig) -> f64 {
    model.objective(s, pw).unwrap_or(f64::NAN)
}

struct Gradient {
    phi_t: Vec<f64>,
    phi_r: Vec<f64>,
    rho_t: Vec<f64>,
    rho_r: Vec<f64>,
}

fn gradient(model: &CfModel, s: &StarRisState, pw: &PowerConfig, h: f64) -> Gradient {
    let n = s.n_elements();
    let mut g = Gradient { phi_t: vec![0.0; n], phi_r: vec![0.0; n], rho_t: vec![0.0; n], rho_r: vec![0.0; n] };
    let mut probe = s.clone();
    fn slot(p: &mut StarRisState, which: usize, i: usize) -> &mut f64 {
        match which {
            0 => &mut p.phi_t[i],
            1 => &mut p.phi_r[i],
            2 => &mut p.rho_t[i],
            _ => &mut p.rho_r[i],
        }
    }
    for which in 0..4 {
        for i in 0..n {
            let orig = *slot(&mut probe, which, i);
            *slot(&mut probe, which, i) = orig + h;
            let up = objective_at(model, &probe, pw);
            *slot(&mut probe, which, i) = orig - h;
            let down = objective_at(model, &probe, pw);
            *slot(&mut probe, which, i) = orig;
            let d = (up - down) / (2.0 * h);
            match which {
                0 => g.phi_t[i] = d,
                1 => g.phi_r[i] = d,
                2 => g.rho_t[i] = d,
                _ => g.rho_r[i] = d,
            }
        }
    }
    g
}

fn step(s: &StarRisState, g: &Gradient, mu: f64, alpha: f64) -> StarRisState {
    let rotate = |phi: &[f64], grad: &[f64]| -> Vec<f64> {
        let raw: Vec<Complex64> = phi
            .iter()
            .zip(grad)
            .map(|(&p, &d)| Complex64::from_polar(1.0, p) * Complex64::new(1.0, mu * d))
            .collect();
        project_phases(&raw)
    };
    let rt: Vec<f64> = s.rho_t.iter().zip(&g.rho_t).map(|(r, d)| r + alpha * mu * d).collect();
    let rr: Vec<f64> = s.rho_r.iter().zip(&g.rho_r).map(|(r, d)| r + alpha * mu * d).collect();
    let (rho_t, rho_r) = project_amplitudes(&rt, &rr);
    StarRisState { rho_t, rho_r, phi_t: rotate(&s.phi_t, &g.phi_t), phi_r: rotate(&s.phi_r, &g.phi_r) }
}

/// Projected gradient ascent on the closed-form objective with fixed powers.
pub fn pgam(config: &SystemConfig, pw: &PowerConfig, init: &StarRisState, opts: &PgamOptions) -> Result<OptimizationResult> {
    if !(opts.step > 0.0 && opts.tolerance > 0.0 && opts.max_iters >= 1 && opts.fd_step > 0.0) {
        return Err(Error::Argument(format!("invalid PGAM options: {opts:?}")));
    }
    let model = CfModel::new(config)?;
    let mut state = StarRisState::new(init.rho_t.clone(), init.rho_r.clone(), init.phi_t.clone(), init.phi_r.clone())?;
    let mut f = model.objective(&state, pw)?;
    if !f.is_finite() {
        return Err(Error::Argument("objective is not finite at the initial point".into()));
    }
    let mut trace = vec![f];
    let mut termination = Termination::MaxIterations;

    for _ in 0..opts.max_iters {
        let g = gradient(&model, &state, pw, opts.fd_step);
        let mut mu = opts.step;
        let mut accepted = None;
        match opts.line_search {
            LineSearch::FixedStep => {
                let cand = step(&state, &g, mu, opts.amplitude_scale);
                let fc = objective_at(&model, &cand, pw);
                accepted = Some((cand, fc));
            }
            LineSearch::Backtracking => {
                for _ in 0..MAX_HALVINGS {
                    let cand = step(&state, &g, mu, opts.amplitude_scale);
                    let fc = objective_at(&model, &cand, pw);
                    if fc >= f {
                        accepted = Some((cand, fc));
                        break;
                    }
                    mu *= 0.5;
                }
            }
        }
        let Some((cand, fc)) = accepted else {
            termination = Termination::Converged;
            break;
        };
        if !fc.is_finite() {
            termination = Termination::Converged;
            break;
        }
        let improvement = fc - f;
        state = cand;
        f = fc;
        trace.push(f);
        if improvement < opts.tolerance {
            termination = Termination::Converged;
            break;
        }
    }

    let report = model.report(&state, pw)?;
    let constraints = validate_constraints(config, &state, pw, &report)?;
    Ok(OptimizationResult { state, power: *pw, trace, termination, constraints })
}

/// Converts a rate target (bit/s/Hz) to its SINR threshold.
pub fn sinr_threshold(rate: f64) -> f64 {
    rate.exp2() - 1.0
}

/// Bracket expansions and bisection steps allowed when resolving the BS
/// power against its own residual self-interference.
const SI_ROOT_ITERS: usize = 2_200;

/// Smallest non-negative root of `gap(P) = P - a - c P^lambda` (`c = b beta`).
///
/// `gap` is convex when `c > 0` and increasing when `c <= 0`; without a root
/// the value at zero is returned so the caller reports the negative power.
fn bs_power_root(gap: impl Fn(f64) -> f64, lambda: f64, c: f64) -> Result<f64> {
    let g0 = gap(0.0);
    if g0 == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi;
    if g0 > 0.0 {
        if c <= 0.0 || lambda >= 1.0 {
            return Ok(-g0);
        }
        // a root exists only if the convex gap dips below zero at its minimum
        let p_min = (c * lambda).powf(1.0 / (1.0 - lambda));
        if gap(p_min) > 0.0 {
            return Ok(-g0);
        }
        hi = p_min;
        std::mem::swap(&mut lo, &mut hi);
        // gap(lo) <= 0 < gap(hi) with lo > hi; search the left branch
        for _ in 0..SI_ROOT_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                return Ok(lo);
            }
            if gap(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    } else {
        hi = 1.0_f64.max(-g0);
        let mut expanded = 0;
        while gap(hi) <= 0.0 {
            lo = hi;
            hi *= 2.0;
            expanded += 1;
            if expanded > SI_ROOT_ITERS || !hi.is_finite() {
                return Err(Error::NonConvergence {
                    what: "BS power under residual self-interference",
                    terms: expanded,
                    last_term: gap(lo),
                });
            }
        }
        for _ in 0..SI_ROOT_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                return Ok(hi);
            }
            if gap(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Err(Error::NonConvergence { what: "BS power under residual self-interference", terms: SI_ROOT_ITERS, last_term: hi - lo })
}

/// Powers meeting the DL edge target, the UL edge target and the SIC
/// condition with equality under total budget `total`.
///
/// The three conditions are linear in `(P_b1, P_b2, p_u2u)` once the residual
/// self-interference `V` is fixed; `V = beta P_b^lambda` is then resolved as
/// a scalar root in the BS power.
pub fn power_allocation_closed_form(
    config: &SystemConfig,
    terms: &CfTerms,
    total: f64,
    dl_target: f64,
    ul_target: f64,
) -> Result<PowerConfig> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Argument(format!("power budget must be positive (got {total})")));
    }
    if !(dl_target >= 0.0 && ul_target >= 0.0) {
        return Err(Error::Argument("target rates must be non-negative".into()));
    }
    let gd = sinr_threshold(dl_target);
    let gu = sinr_threshold(ul_target);
    let sic = config.effective_sic_error();
    let ue = &terms.u2u;
    if !(ue.x1 > 0.0) {
        return Err(Error::Degenerate("UL edge user has no effective channel".into()));
    }
    let ul_coupling = gu * sic * ue.y1 / ue.x1;
    let k = (gu * ue.y2 / ue.x1 - ul_coupling) / (1.0 + ul_coupling);
    let h = ul_coupling / (1.0 + ul_coupling);

    // Y = b1 X + b2 P_t + b3 for a DL equation with terms `t` and noise `n`
    let dl_row = |t: &crate::rates_cf::UserTerms, n: f64, w: f64| -> Result<(f64, f64, f64)> {
        if !(t.x1 > 0.0) {
            return Err(Error::Degenerate("DL user has no effective channel".into()));
        }
        let e = t.y1 / t.x1;
        let f = t.y2 / t.x1;
        let s = n / t.x1;
        let den = 1.0 + gd * e - gd * (f - e) * k;
        if den.abs() < 1e-300 {
            return Err(Error::Degenerate("DL elimination denominator vanished".into()));
        }
        Ok((gd * (1.0 - e + (f - e) * k) / den, gd * (e + (f - e) * h) / den, gd * ((f - e) * w + s) / den))
    };

    let solve = |v: f64| -> Result<(f64, f64, f64, f64)> {
        let w = gu * (v + config.noise.bs) / (ue.x1 * (1.0 + ul_coupling));
        let (b1, b2, b3) = dl_row(&terms.u2d, config.noise.u2d, w)?;
        let (c1, c2, c3) = dl_row(&terms.u1d, config.noise.u1d, w)?;
        let gap = b1 - c1;
        if gap.abs() <= 1e-14 * b1.abs().max(c1.abs()).max(f64::MIN_POSITIVE) {
            return Err(Error::Degenerate(
                "edge and SIC conditions are parallel (zero targets or identical channels)".into(),
            ));
        }
        let pb1 = ((c2 - b2) * total + (c3 - b3)) / gap;
        let pb2 = b1 * pb1 + b2 * total + b3;
        let pu2 = k * (pb1 + pb2) + h * total + w;
        let pu1 = total - pb1 - pb2 - pu2;
        Ok((pb1, pb2, pu1, pu2))
    };

    // every power is affine in V, so P_b = a + b V and the self-interference
    // model leaves one scalar equation P = a + b V(P)
    let bs_sum = |v: f64| solve(v).map(|s| s.0 + s.1);
    let a = bs_sum(0.0)?;
    let b = bs_sum(1.0)? - a;
    let gap = |p: f64| p - a - b * config.residual_si(p);
    let pb = bs_power_root(gap, config.self_interference.lambda, b * config.self_interference.beta)?;
    let sol = solve(config.residual_si(pb))?;

    let (pb1, pb2, pu1, pu2) = sol;
    for (power, binding, value) in [
        ("P_b1", "SIC condition", pb1),
        ("P_b2", "DL edge target", pb2),
        ("p_u2u", "UL edge target", pu2),
        ("p_u1u", "power budget", pu1),
    ] {
        if !(value >= 0.0) {
            return Err(Error::Infeasible { power, binding, value });
        }
    }
    Ok(PowerConfig { total, p_b1: pb1, p_b2: pb2, p_u1u: pu1, p_u2u: pu2 })
}

/// Splits `tau * total` at the BS and `(1 - tau) * total` among the UL users,
/// giving each edge user just enough power for its target (capped by its
/// side's budget) and the rest to the center user of that side.
pub fn target_split_allocation(
    config: &SystemConfig,
    terms: &CfTerms,
    total: f64,
    tau: f64,
    dl_target: f64,
    ul_target: f64,
) -> Result<PowerConfig> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Argument(format!("tau must lie in (0, 1] (got {tau})")));
    }
    if !(total > 0.0) {
        return Err(Error::Argument(format!("power budget must be positive (got {total})")));
    }
    let gd = sinr_threshold(dl_target);
    let gu = sinr_threshold(ul_target);
    let sic = config.effective_sic_error();
    let p_dl = tau * total;
    let p_ul = total - p_dl;

    let ue = &terms.u2u;
    let v = config.residual_si(p_dl);
    let pu2 = if ue.x1 > 0.0 {
        let need = gu * (sic * p_ul * ue.y1 + p_dl * ue.y2 + v + config.noise.bs) / (ue.x1 + gu * sic * ue.y1);
        need.clamp(0.0, p_ul)
    } else {
        p_ul
    };
    let pu1 = p_ul - pu2;

    let de = &terms.u2d;
    let pb2 = if de.x1 > 0.0 {
        let interference = pu1 * de.y1 + pu2 * de.y2 + config.noise.u2d;
        (gd * (p_dl * de.x1 + interference) / (de.x1 * (1.0 + gd))).clamp(0.0, p_dl)
    } else {
        p_dl
    };
    PowerConfig::new(total, p_dl - pb2, pb2, pu1, pu2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub satisfied: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NomaBenefit {
    pub u1d: Check,
    pub u2d: Check,
    pub u1u: Check,
    pub u2u: Check,
}

/// Constraint status with signed slack; for `energy_split` and
/// `unit_modulus` the margin is the largest violation instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    pub budget: Check,
    pub sic: Check,
    pub dl_target: Check,
    pub ul_target: Check,
    pub energy_split: Check,
    pub unit_modulus: Check,
    pub noma_benefit: NomaBenefit,
}

impl ConstraintReport {
    /// Whether the hard constraints hold (NOMA benefit is advisory).
    pub fn feasible(&self) -> bool {
        self.budget.satisfied
            && self.sic.satisfied
            && self.dl_target.satisfied
            && self.ul_target.satisfied
            && self.energy_split.satisfied
            && self.unit_modulus.satisfied
    }
}

/// Slack tolerated on rate and power comparisons.
const CONSTRAINT_SLACK: f64 = 1e-9;

pub fn validate_constraints(config: &SystemConfig, ris: &StarRisState, pw: &PowerConfig, report: &RateReport) -> Result<ConstraintReport> {
    let model = CfModel::new(config)?;
    let terms = model.terms(ris)?;
    let flows = match report.flows {
        Some(f) => f,
        None => report_from_terms(config, &terms, pw).flows.expect("closed form reports flows"),
    };
    let at_least = |value: f64, bound: f64| {
        let margin = value - bound;
        Check { satisfied: margin >= -CONSTRAINT_SLACK * bound.abs().max(1.0), margin }
    };

    let nonneg = [pw.p_b1, pw.p_b2, pw.p_u1u, pw.p_u2u].iter().all(|p| *p >= 0.0);
    let budget_margin = pw.total - pw.sum();
    let budget = Check { satisfied: nonneg && budget_margin >= -CONSTRAINT_SLACK * pw.total.max(1.0), margin: budget_margin };

    let split_dev = ris.check_energy_split();
    let amps_ok = ris.rho_t.iter().chain(&ris.rho_r).all(|r| *r >= 0.0);
    let energy_split = Check { satisfied: amps_ok && split_dev <= ENERGY_SPLIT_TOL, margin: split_dev };
    let modulus_dev = ris
        .phi_t
        .iter()
        .chain(&ris.phi_r)
        .map(|p| if p.is_finite() { (Complex64::from_polar(1.0, *p).norm() - 1.0).abs() } else { f64::INFINITY })
        .fold(0.0, f64::max);
    let unit_modulus = Check { satisfied: modulus_dev <= 1e-12, margin: modulus_dev };

    let noma = |rate: f64, oma: f64| {
        let gamma = rate.exp2() - 1.0;
        let margin = gamma - ((1.0 + oma).sqrt() - 1.0);
        Check { satisfied: noma_beneficial(gamma, oma), margin }
    };
    let v = config.residual_si(pw.bs());
    let t = &terms;
    let frac = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let oma_u1d = frac(pw.bs() * t.u1d.x1, pw.p_u1u * t.u1d.y1 + pw.p_u2u * t.u1d.y2 + config.noise.u1d);
    let oma_u2d = frac(pw.bs() * t.u2d.x1, pw.p_u1u * t.u2d.y1 + pw.p_u2u * t.u2d.y2 + config.noise.u2d);
    let oma_u1u = frac(pw.users() * t.u1u.x1, pw.bs() * t.u1u.y2 + v + config.noise.bs);
    let oma_u2u = frac(pw.users() * t.u2u.x1, pw.bs() * t.u2u.y2 + v + config.noise.bs);

    Ok(ConstraintReport {
        budget,
        sic: at_least(flows.u1d_decodes_u2d, report.rates.u2d),
        dl_target: at_least(report.rates.u2d, config.targets.downlink),
        ul_target: at_least(report.rates.u2u, config.targets.uplink),
        energy_split,
        unit_modulus,
        noma_benefit: NomaBenefit {
            u1d: noma(report.rates.u1d, oma_u1d),
            u2d: noma(report.rates.u2d, oma_u2d),
            u1u: noma(report.rates.u1u, oma_u1u),
            u2u: noma(report.rates.u2u, oma_u2u),
        },
    })
}

/// Scenario-appropriate aligned design.
pub fn aligned_state(config: &SystemConfig, pw: &PowerConfig, rho_t: f64) -> Result<StarRisState> {
    match config.scenario {
        Scenario::NomaPair => suboptimal_state(config, rho_t),
        Scenario::Bidirectional => suboptimal_state_bidirectional(config, pw, rho_t),
    }
}
